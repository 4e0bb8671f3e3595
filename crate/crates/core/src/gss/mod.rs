//! Geometric selective search: grouping detected planes into box proposals.

mod hac;
mod neighbors;
mod postprocess;
mod region;
mod similarity;
mod strategy;

pub use hac::{run_hac, Proposal, ProposalPool};
pub use neighbors::{jitter_points, jittered_hulls, neighbor_graph, overlap_pairs};
pub use postprocess::{ensemble, postprocess, PostprocessConfig};
pub use region::{color_histogram, point_classes, rgb_to_hsv, Region, HSV_BINS};
pub use similarity::{s_color, s_fill, s_seg, s_size, s_volume, similarity, SceneExtent};
pub use strategy::{Similarity, Strategy};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::convex_hull;
use crate::rng::Rng;
use crate::shape_detect::PlaneRegion;
use crate::types::{PointCloud, ScoreMatrix};

/// Result of a full search: each strategy's post-processed boxes and the ensemble.
#[derive(Debug, Clone)]
pub struct SearchOutput {
    pub runs: Vec<Vec<Proposal>>,
    pub proposals: Vec<Proposal>,
}

/// AABB volume and hull volume of the whole cloud.
pub fn scene_extent(cloud: &PointCloud) -> Result<SceneExtent> {
    Ok(SceneExtent {
        size: cloud.bounds().volume(),
        volume: convex_hull(cloud.positions())?.volume(),
    })
}

/// Initial regions from detected planes; class histograms are attached when
/// segmentation scores are supplied.
pub fn initial_regions(
    cloud: &PointCloud,
    planes: &[PlaneRegion],
    seg_scores: Option<&ScoreMatrix>,
) -> Result<Vec<Region>> {
    let classes = seg_scores.map(|s| point_classes(s, cloud.len())).transpose()?;
    let num_classes = seg_scores.map_or(0, |s| s.cols());
    planes
        .par_iter()
        .map(|p| Region::from_points(cloud, &p.point_indices, classes.as_deref().map(|c| (c, num_classes))))
        .collect()
}

/// Runs every strategy on its own rng stream (`seed` forked by strategy
/// index), post-processes each run, and ensembles them.
pub fn search(
    cloud: &PointCloud,
    regions: &[Region],
    strategies: &[Strategy],
    cfg: &PostprocessConfig,
    seed: u64,
) -> Result<SearchOutput> {
    if strategies.is_empty() {
        return Err(Error::InvalidInput("no grouping strategy given".into()));
    }
    if regions.is_empty() {
        return Err(Error::InvalidInput("no regions to group".into()));
    }
    cfg.validate()?;
    let extent = scene_extent(cloud)?;
    let base = Rng::new(seed);
    let runs = strategies
        .par_iter()
        .enumerate()
        .map(|(id, strategy)| {
            let mut rng = base.fork(id as u64);
            let hulls = jittered_hulls(regions, cloud, strategy.jitter_delta, &mut rng)?;
            let pool = run_hac(regions, &hulls, strategy, id, &extent)?;
            log::debug!("strategy {strategy}: {} boxes in pool", pool.len());
            postprocess(&pool.proposals, cfg, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let proposals = ensemble(&runs, cfg, &mut base.fork(u64::MAX))?;
    Ok(SearchOutput { runs, proposals })
}
