use crate::error::{Error, Result};
use crate::geometry::{convex_hull, ConvexHull};
use crate::types::{Box3, PointCloud, ScoreMatrix, Vec3};

/// Bins per HSV channel; the color histogram has three times as many.
pub const HSV_BINS: usize = 25;

/// A group of points and the descriptors grouping decisions need.
#[derive(Debug, Clone)]
pub struct Region {
    point_indices: Vec<usize>,
    aabb: Box3,
    hull: ConvexHull,
    color_hist: Option<Vec<f64>>,
    class_hist: Option<Vec<f64>>,
}

impl Region {
    /// Builds a region from point indices. `point_classes` (per-point class
    /// ids) and `num_classes` enable the class histogram.
    pub fn from_points(
        cloud: &PointCloud,
        indices: &[usize],
        point_classes: Option<(&[usize], usize)>,
    ) -> Result<Region> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("region without points".into()));
        }
        let mut point_indices = indices.to_vec();
        point_indices.sort_unstable();
        point_indices.dedup();
        if let Some(&bad) = point_indices.iter().find(|&&i| i >= cloud.len()) {
            return Err(Error::InvalidInput(format!(
                "point index {bad} outside cloud of {}",
                cloud.len()
            )));
        }
        let pts: Vec<Vec3> = point_indices.iter().map(|&i| cloud.positions()[i]).collect();
        let aabb = Box3::enclosing(pts.iter()).expect("non-empty");
        let hull = convex_hull(&pts)?;
        let color_hist = cloud
            .colors()
            .map(|colors| color_histogram(point_indices.iter().map(|&i| &colors[i])));
        let class_hist = point_classes.map(|(classes, c)| {
            let mut h = vec![0.0; c];
            for &i in &point_indices {
                h[classes[i]] += 1.0;
            }
            let n = point_indices.len() as f64;
            h.iter_mut().for_each(|v| *v /= n);
            h
        });
        Ok(Region {
            point_indices,
            aabb,
            hull,
            color_hist,
            class_hist,
        })
    }

    /// Region with externally supplied descriptors.
    pub fn from_parts(
        point_indices: Vec<usize>,
        aabb: Box3,
        hull: ConvexHull,
        color_hist: Option<Vec<f64>>,
        class_hist: Option<Vec<f64>>,
    ) -> Region {
        Region {
            point_indices,
            aabb,
            hull,
            color_hist,
            class_hist,
        }
    }

    pub fn point_indices(&self) -> &[usize] {
        &self.point_indices
    }

    pub fn len(&self) -> usize {
        self.point_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_indices.is_empty()
    }

    pub fn aabb(&self) -> &Box3 {
        &self.aabb
    }

    /// Volume of the axis-aligned box ("size").
    pub fn aabb_volume(&self) -> f64 {
        self.aabb.volume()
    }

    pub fn hull(&self) -> &ConvexHull {
        &self.hull
    }

    /// Volume of the convex hull ("volume").
    pub fn hull_volume(&self) -> f64 {
        self.hull.volume()
    }

    pub fn color_hist(&self) -> Option<&[f64]> {
        self.color_hist.as_deref()
    }

    pub fn class_hist(&self) -> Option<&[f64]> {
        self.class_hist.as_deref()
    }

    /// Union of two regions. Histograms are the point-count weighted mean of
    /// the parents, which equals recomputing them from the merged points.
    pub fn merge(&self, other: &Region) -> Region {
        let mut point_indices = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.point_indices, &other.point_indices);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            point_indices.push(next);
        }
        let (wa, wb) = (self.len() as f64, other.len() as f64);
        let blend = |x: Option<&Vec<f64>>, y: Option<&Vec<f64>>| match (x, y) {
            (Some(x), Some(y)) => {
                let mut h: Vec<f64> = x.iter().zip(y).map(|(p, q)| wa * p + wb * q).collect();
                let total: f64 = h.iter().sum();
                if total > 0.0 {
                    h.iter_mut().for_each(|v| *v /= total);
                }
                Some(h)
            }
            _ => None,
        };
        Region {
            point_indices,
            aabb: self.aabb.union(&other.aabb),
            hull: self.hull.merge(&other.hull),
            color_hist: blend(self.color_hist.as_ref(), other.color_hist.as_ref()),
            class_hist: blend(self.class_hist.as_ref(), other.class_hist.as_ref()),
        }
    }
}

/// Converts RGB in `[0, 1]` to HSV with every channel in `[0, 1]`.
pub fn rgb_to_hsv(rgb: &Vec3) -> Vec3 {
    let (r, g, b) = (rgb.x, rgb.y, rgb.z);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let hue = if delta <= 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    } / 6.0;
    let sat = if max > 0.0 { delta / max } else { 0.0 };
    Vec3::new(hue, sat, max)
}

/// 75-bin HSV histogram (25 per channel), L1-normalized over all bins.
pub fn color_histogram<'a>(colors: impl Iterator<Item = &'a Vec3>) -> Vec<f64> {
    let mut h = vec![0.0; 3 * HSV_BINS];
    let mut n = 0usize;
    for c in colors {
        let hsv = rgb_to_hsv(c);
        for ch in 0..3 {
            let bin = ((hsv[ch].clamp(0.0, 1.0) * HSV_BINS as f64) as usize).min(HSV_BINS - 1);
            h[ch * HSV_BINS + bin] += 1.0;
        }
        n += 1;
    }
    if n > 0 {
        let total = 3.0 * n as f64;
        h.iter_mut().for_each(|v| *v /= total);
    }
    h
}

/// Per-point argmax class of a segmentation score matrix whose rows match the cloud.
pub fn point_classes(seg_scores: &ScoreMatrix, num_points: usize) -> Result<Vec<usize>> {
    if seg_scores.rows() != num_points || seg_scores.cols() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "segmentation scores are {}x{}, cloud has {num_points} points",
            seg_scores.rows(),
            seg_scores.cols()
        )));
    }
    Ok((0..num_points).map(|r| seg_scores.row_argmax(r)).collect())
}
