use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::neighbors::{overlap_pairs, HullBounds};
use super::region::Region;
use super::similarity::{similarity, SceneExtent};
use super::strategy::{Similarity, Strategy};
use crate::error::{Error, Result};
use crate::geometry::{hulls_overlap, ConvexHull};
use crate::types::Box3;

/// A proposal box with its provenance. `step` is 0 for initial regions and
/// `k` for the box produced by the k-th merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    #[serde(flatten)]
    pub bbox: Box3,
    pub strategy: usize,
    pub step: usize,
}

/// Every box produced by one HAC run, initial regions first, then merges in
/// order. `merges[k]` holds the node ids joined at step `k + 1`; initial
/// regions are nodes `0..R`, the k-th merge creates node `R + k - 1`.
#[derive(Debug, Clone, Default)]
pub struct ProposalPool {
    pub proposals: Vec<Proposal>,
    pub merges: Vec<(usize, usize)>,
}

impl ProposalPool {
    pub fn boxes(&self) -> Vec<Box3> {
        self.proposals.iter().map(|p| p.bbox).collect()
    }

    pub fn len(&self) -> usize {
        self.proposals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proposals.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    s: f64,
    i: usize,
    j: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Candidate {
    // max-heap: highest similarity first, then the smallest (i, j)
    fn cmp(&self, o: &Self) -> Ordering {
        self.s.total_cmp(&o.s).then_with(|| (o.i, o.j).cmp(&(self.i, self.j)))
    }
}

fn check_inputs(regions: &[Region], strategy: &Strategy) -> Result<()> {
    strategy.validate()?;
    if regions.is_empty() {
        return Err(Error::InvalidInput("grouping needs at least one region".into()));
    }
    if strategy.uses(Similarity::Seg) && regions.iter().any(|r| r.class_hist().is_none()) {
        return Err(Error::InvalidInput(format!(
            "strategy {strategy} uses segmentation similarity but no segmentation scores were given"
        )));
    }
    if strategy.uses(Similarity::Color) && regions.iter().any(|r| r.color_hist().is_none()) {
        return Err(Error::InvalidInput(format!(
            "strategy {strategy} uses color similarity but the cloud has no colors"
        )));
    }
    Ok(())
}

/// Greedy agglomerative grouping. `neighbor_hulls[i]` is the (possibly
/// jittered) hull deciding adjacency of region `i`; a merged node's hull is
/// the hull of both parents' hulls.
pub fn run_hac(
    regions: &[Region],
    neighbor_hulls: &[ConvexHull],
    strategy: &Strategy,
    strategy_id: usize,
    extent: &SceneExtent,
) -> Result<ProposalPool> {
    check_inputs(regions, strategy)?;
    if neighbor_hulls.len() != regions.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} neighbour hulls for {} regions",
            neighbor_hulls.len(),
            regions.len()
        )));
    }
    let mut nodes: Vec<Region> = regions.to_vec();
    let mut hulls: Vec<ConvexHull> = neighbor_hulls.to_vec();
    let mut hull_bounds: Vec<HullBounds> = hulls.iter().map(HullBounds::of).collect();
    let mut alive = vec![true; nodes.len()];
    let mut pool = ProposalPool::default();
    for r in &nodes {
        pool.proposals.push(Proposal {
            bbox: *r.aabb(),
            strategy: strategy_id,
            step: 0,
        });
    }

    let mut heap = BinaryHeap::new();
    for (i, j) in overlap_pairs(&hulls) {
        heap.push(Candidate {
            s: similarity(&nodes[i], &nodes[j], strategy, extent)?,
            i,
            j,
        });
    }

    while let Some(Candidate { i, j, .. }) = heap.pop() {
        if !alive[i] || !alive[j] {
            continue;
        }
        alive[i] = false;
        alive[j] = false;
        let merged = nodes[i].merge(&nodes[j]);
        let hull = hulls[i].merge(&hulls[j]);
        let k = nodes.len();
        pool.merges.push((i, j));
        pool.proposals.push(Proposal {
            bbox: *merged.aabb(),
            strategy: strategy_id,
            step: pool.merges.len(),
        });
        let hb = HullBounds::of(&hull);
        let touching: BTreeSet<usize> = (0..k)
            .filter(|&m| alive[m] && hb.may_touch(&hull_bounds[m]) && hulls_overlap(&hull, &hulls[m]))
            .collect();
        for m in touching {
            heap.push(Candidate {
                s: similarity(&nodes[m], &merged, strategy, extent)?,
                i: m,
                j: k,
            });
        }
        nodes.push(merged);
        hulls.push(hull);
        hull_bounds.push(hb);
        alive.push(true);
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::convex_hull;
    use crate::types::Vec3;

    fn block(x0: f64, len: f64) -> Region {
        let pts: Vec<Vec3> = (0..8)
            .map(|k| {
                Vec3::new(
                    x0 + if k & 1 == 0 { 0.0 } else { len },
                    if k & 2 == 0 { 0.0 } else { 1.0 },
                    if k & 4 == 0 { 0.0 } else { 1.0 },
                )
            })
            .collect();
        let bbox = Box3::enclosing(pts.iter()).unwrap();
        Region::from_parts(vec![0], bbox, convex_hull(&pts).unwrap(), None, None)
    }

    fn run(regions: &[Region], name: &str) -> ProposalPool {
        let hulls: Vec<ConvexHull> = regions.iter().map(|r| r.hull().clone()).collect();
        let extent = SceneExtent {
            size: 1000.0,
            volume: 1000.0,
        };
        run_hac(regions, &hulls, &Strategy::parse(name, 0.0).unwrap(), 0, &extent).unwrap()
    }

    #[test]
    fn single_region() {
        let r = block(0.0, 1.0);
        let pool = run(std::slice::from_ref(&r), "SZ");
        assert_eq!(pool.boxes(), vec![*r.aabb()]);
    }

    #[test]
    fn two_neighbours_merge_once() {
        let regions = [block(0.0, 1.0), block(1.0, 2.0)];
        let pool = run(&regions, "SZ+V");
        assert_eq!(pool.len(), 3);
        assert_eq!(pool.merges, vec![(0, 1)]);
        assert_eq!(pool.proposals[2].bbox, Box3::new([0.0; 3], [3.0, 1.0, 1.0]).unwrap());
        assert_eq!(pool.proposals[2].step, 1);
    }

    #[test]
    fn disconnected_regions_never_merge() {
        let regions = [block(0.0, 1.0), block(5.0, 1.0)];
        assert_eq!(run(&regions, "SZ").len(), 2);
    }

    #[test]
    fn smallest_pair_merges_first() {
        // chain of touching blocks with lengths 3, 1, 1, 4: SZ prefers (1, 2)
        let regions = [block(0.0, 3.0), block(3.0, 1.0), block(4.0, 1.0), block(5.0, 4.0)];
        let pool = run(&regions, "SZ");
        assert_eq!(pool.merges[0], (1, 2));
        assert_eq!(pool.len(), 7);
        assert_eq!(
            pool.proposals.last().unwrap().bbox,
            Box3::new([0.0; 3], [9.0, 1.0, 1.0]).unwrap()
        );
    }

    #[test]
    fn ties_take_smallest_pair() {
        let regions = [block(0.0, 1.0), block(1.0, 1.0), block(2.0, 1.0)];
        let pool = run(&regions, "SZ");
        assert_eq!(pool.merges, vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn seg_without_scores_fails() {
        let regions = [block(0.0, 1.0)];
        let hulls = vec![regions[0].hull().clone()];
        let extent = SceneExtent { size: 1.0, volume: 1.0 };
        let st = Strategy::parse("SG", 0.0).unwrap();
        assert!(run_hac(&regions, &hulls, &st, 0, &extent).is_err());
        assert!(run_hac(&[], &[], &st, 0, &extent).is_err());
    }
}
