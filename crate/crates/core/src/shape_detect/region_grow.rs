use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::knn::KdTree;
use super::normals::fit_plane;
use crate::error::{Error, Result};
use crate::types::{PointCloud, Vec3};

/// Region-growing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionGrowParams {
    /// Neighbourhood size searched around every region member.
    pub k_neighbors: usize,
    /// Largest accepted point-to-plane distance, in meters.
    pub max_point_plane_dist: f64,
    /// Largest accepted angle between a point normal and the plane normal, in degrees.
    pub max_normal_angle: f64,
    /// Regions with fewer points are discarded.
    pub min_region_size: usize,
}

impl Default for RegionGrowParams {
    fn default() -> Self {
        Self {
            k_neighbors: 12,
            max_point_plane_dist: 0.12,
            max_normal_angle: 20.0,
            min_region_size: 50,
        }
    }
}

impl RegionGrowParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 || self.min_region_size == 0 {
            return Err(Error::InvalidInput(
                "k_neighbors and min_region_size must be positive".into(),
            ));
        }
        if self.max_point_plane_dist.is_nan() || self.max_point_plane_dist <= 0.0 {
            return Err(Error::InvalidInput("max_point_plane_dist must be positive".into()));
        }
        if !(self.max_normal_angle > 0.0 && self.max_normal_angle < 90.0) {
            return Err(Error::InvalidInput(
                "max_normal_angle must lie in (0, 90) degrees".into(),
            ));
        }
        Ok(())
    }
}

/// A detected plane and the points assigned to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneRegion {
    /// Sorted, unique indices into the source cloud.
    pub point_indices: Vec<usize>,
    pub normal: [f64; 3],
    pub offset: f64,
    #[serde(default)]
    pub inlier_rms: f64,
}

impl PlaneRegion {
    pub fn len(&self) -> usize {
        self.point_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_indices.is_empty()
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        (Vec3::from(self.normal).dot(p) - self.offset).abs()
    }
}

impl AsRef<[usize]> for PlaneRegion {
    fn as_ref(&self) -> &[usize] {
        &self.point_indices
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Free,
    Growing,
    Taken,
}

const MAX_FINAL_REFITS: usize = 10;

/// Detects planar regions by growing from seeds visited in ascending index
/// order.
///
/// A neighbour joins the growing region when it lies within
/// `max_point_plane_dist` of the current plane and its normal is within
/// `max_normal_angle` of the plane normal (orientation ignored). The plane
/// is refit by least squares each time the region doubles in size. After
/// growth the plane is refit and points beyond the distance bound are
/// released until the fit is stable. Output is sorted by descending size.
pub fn detect_planes(cloud: &PointCloud, params: &RegionGrowParams) -> Result<Vec<PlaneRegion>> {
    params.validate()?;
    let normals = cloud
        .normals()
        .ok_or_else(|| Error::InvalidInput("plane detection needs point normals".into()))?;
    let pts = cloud.positions();
    if pts.len() < params.min_region_size {
        return Ok(Vec::new());
    }
    let tree = KdTree::new(pts);
    let neighbors: Vec<Vec<usize>> = (0..pts.len())
        .into_par_iter()
        .map(|i| tree.nearest(&pts[i], params.k_neighbors, Some(i)))
        .collect();

    let cos_limit = params.max_normal_angle.to_radians().cos();
    let max_dist = params.max_point_plane_dist;
    let mut state = vec![State::Free; pts.len()];
    let mut regions = Vec::new();
    let mut region: Vec<usize> = Vec::new();

    for seed in 0..pts.len() {
        if state[seed] != State::Free {
            continue;
        }
        region.clear();
        region.push(seed);
        state[seed] = State::Growing;
        let mut normal = normals[seed];
        let mut offset = normal.dot(&pts[seed]);
        let mut fitted_at = 1;
        let mut head = 0;
        while head < region.len() {
            let q = region[head];
            head += 1;
            for &nb in &neighbors[q] {
                if state[nb] != State::Free {
                    continue;
                }
                if (normal.dot(&pts[nb]) - offset).abs() <= max_dist && normal.dot(&normals[nb]).abs() >= cos_limit {
                    state[nb] = State::Growing;
                    region.push(nb);
                }
            }
            if region.len() >= 2 * fitted_at {
                if let Some((n, d)) = fit_plane(region.iter().map(|&i| &pts[i])) {
                    (normal, offset) = orient(n, d, &normal);
                }
                fitted_at = region.len();
            }
        }

        // Final refit; release points the refit plane no longer explains.
        for round in 0..=MAX_FINAL_REFITS {
            if round < MAX_FINAL_REFITS {
                if let Some((n, d)) = fit_plane(region.iter().map(|&i| &pts[i])) {
                    (normal, offset) = orient(n, d, &normal);
                }
            }
            let before = region.len();
            region.retain(|&i| {
                let keep = (normal.dot(&pts[i]) - offset).abs() <= max_dist;
                if !keep {
                    state[i] = State::Free;
                }
                keep
            });
            if region.len() == before || region.len() < params.min_region_size {
                break;
            }
        }

        if region.len() < params.min_region_size {
            for &i in &region {
                state[i] = State::Free;
            }
            continue;
        }
        for &i in &region {
            state[i] = State::Taken;
        }
        let mut indices = region.clone();
        indices.sort_unstable();
        let rms = (indices
            .iter()
            .map(|&i| (normal.dot(&pts[i]) - offset).powi(2))
            .sum::<f64>()
            / indices.len() as f64)
            .sqrt();
        regions.push(PlaneRegion {
            point_indices: indices,
            normal: normal.into(),
            offset,
            inlier_rms: rms,
        });
    }
    regions.sort_by(|a, b| b.len().cmp(&a.len()).then(a.point_indices[0].cmp(&b.point_indices[0])));
    Ok(regions)
}

fn orient(n: Vec3, d: f64, reference: &Vec3) -> (Vec3, f64) {
    if n.dot(reference) < 0.0 {
        (-n, -d)
    } else {
        (n, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn plane_cloud(rng: &mut Rng, n: usize, z: f64) -> (Vec<Vec3>, Vec<Vec3>) {
        let pts = (0..n)
            .map(|_| Vec3::new(rng.uniform() * 2.0, rng.uniform() * 2.0, z))
            .collect();
        (pts, vec![Vec3::z(); n])
    }

    #[test]
    fn single_plane_is_one_region() {
        let mut rng = Rng::new(8);
        let (p, n) = plane_cloud(&mut rng, 1000, 0.0);
        let cloud = PointCloud::new(p, None, Some(n)).unwrap();
        let regions = detect_planes(&cloud, &RegionGrowParams::default()).unwrap();
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].point_indices, (0..1000).collect::<Vec<_>>());
        assert!(regions[0].inlier_rms < 1e-12);
    }

    #[test]
    fn parallel_planes_are_separated() {
        let mut rng = Rng::new(9);
        let (mut p, mut n) = plane_cloud(&mut rng, 500, 0.0);
        let (p2, n2) = plane_cloud(&mut rng, 500, 1.0);
        p.extend(p2);
        n.extend(n2);
        let cloud = PointCloud::new(p, None, Some(n)).unwrap();
        let regions = detect_planes(&cloud, &RegionGrowParams::default()).unwrap();
        assert_eq!(regions.len(), 2);
        for r in &regions {
            assert_eq!(r.len(), 500);
            let lower = r.point_indices[0] < 500;
            assert!(r.point_indices.iter().all(|&i| (i < 500) == lower));
        }
    }

    #[test]
    fn isolated_points_yield_nothing() {
        let mut rng = Rng::new(10);
        let pts: Vec<Vec3> = (0..40)
            .map(|_| Vec3::new(rng.uniform() * 50.0, rng.uniform() * 50.0, rng.uniform() * 50.0))
            .collect();
        let normals = vec![Vec3::z(); 40];
        let cloud = PointCloud::new(pts, None, Some(normals)).unwrap();
        assert!(detect_planes(&cloud, &RegionGrowParams::default()).unwrap().is_empty());
    }

    #[test]
    fn normals_are_required() {
        let cloud = PointCloud::from_positions(vec![Vec3::zeros(); 60]).unwrap();
        assert!(detect_planes(&cloud, &RegionGrowParams::default()).is_err());
    }

    #[test]
    fn invalid_params() {
        let p = RegionGrowParams {
            max_normal_angle: 95.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}
