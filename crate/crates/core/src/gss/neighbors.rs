use std::collections::BTreeSet;

use rayon::prelude::*;

use super::region::Region;
use crate::error::{Error, Result};
use crate::geometry::{convex_hull, hulls_overlap, ConvexHull};
use crate::rng::Rng;
use crate::types::{PointCloud, Vec3};

/// Scales each point about the centroid by an independent per-coordinate
/// multiplier drawn from `[1 - delta/2, 1 + delta/2]`.
pub fn jitter_points(points: &[Vec3], delta: f64, rng: &mut Rng) -> Vec<Vec3> {
    if points.is_empty() {
        return Vec::new();
    }
    let centroid = points.iter().sum::<Vec3>() / points.len() as f64;
    let (lo, hi) = (1.0 - delta / 2.0, 1.0 + delta / 2.0);
    points
        .iter()
        .map(|p| {
            let mut q = *p;
            for k in 0..3 {
                q[k] = centroid[k] + (p[k] - centroid[k]) * rng.uniform_range(lo, hi);
            }
            q
        })
        .collect()
}

/// Convex hulls of jittered region points, drawn region by region from `rng`.
/// With `delta == 0` the true hulls are returned and `rng` is untouched.
pub fn jittered_hulls(regions: &[Region], cloud: &PointCloud, delta: f64, rng: &mut Rng) -> Result<Vec<ConvexHull>> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("jitter delta {delta} must be >= 0")));
    }
    if delta == 0.0 {
        return Ok(regions.iter().map(|r| r.hull().clone()).collect());
    }
    let jittered: Vec<Vec<Vec3>> = regions
        .iter()
        .map(|r| {
            let pts: Vec<Vec3> = r.point_indices().iter().map(|&i| cloud.positions()[i]).collect();
            jitter_points(&pts, delta, rng)
        })
        .collect();
    jittered.par_iter().map(|pts| convex_hull(pts)).collect()
}

fn bounds(h: &ConvexHull) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in h.vertices() {
        for k in 0..3 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    (lo, hi)
}

/// Cheap rejection before the exact hull test.
pub(crate) struct HullBounds {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl HullBounds {
    pub(crate) fn of(h: &ConvexHull) -> Self {
        let (lo, hi) = bounds(h);
        HullBounds { lo, hi }
    }

    pub(crate) fn may_touch(&self, o: &HullBounds) -> bool {
        let scale = (0..3)
            .map(|k| (self.hi[k] - self.lo[k]).max(o.hi[k] - o.lo[k]))
            .fold(1e-3, f64::max);
        let tol = 1e-6 * scale;
        (0..3).all(|k| self.lo[k] <= o.hi[k] + tol && o.lo[k] <= self.hi[k] + tol)
    }
}

/// All index pairs `(i, j)`, `i < j`, whose hulls overlap or touch.
pub fn overlap_pairs(hulls: &[ConvexHull]) -> BTreeSet<(usize, usize)> {
    let bounds: Vec<HullBounds> = hulls.iter().map(HullBounds::of).collect();
    (0..hulls.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let bounds = &bounds;
            ((i + 1)..hulls.len())
                .filter(move |&j| bounds[i].may_touch(&bounds[j]) && hulls_overlap(&hulls[i], &hulls[j]))
                .map(move |j| (i, j))
        })
        .collect()
}

/// Neighbourhood graph over regions: pairs whose jittered hulls overlap.
pub fn neighbor_graph(
    regions: &[Region],
    cloud: &PointCloud,
    delta: f64,
    rng: &mut Rng,
) -> Result<BTreeSet<(usize, usize)>> {
    Ok(overlap_pairs(&jittered_hulls(regions, cloud, delta, rng)?))
}
