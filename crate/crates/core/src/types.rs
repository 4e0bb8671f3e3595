//! Domain types shared by every subsystem.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

const NORMAL_TOLERANCE: f64 = 1e-6;

/// A point cloud with per-point position, RGB color in `[0, 1]` and an
/// optional unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    positions: Vec<Vec3>,
    colors: Option<Vec<Vec3>>,
    normals: Option<Vec<Vec3>>,
}

impl PointCloud {
    pub fn new(positions: Vec<Vec3>, colors: Option<Vec<Vec3>>, normals: Option<Vec<Vec3>>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidInput(
                "point cloud must contain at least one point".into(),
            ));
        }
        if let Some(i) = positions.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::Validation {
                index: i,
                message: "non-finite position".into(),
            });
        }
        if let Some(c) = &colors {
            if c.len() != positions.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} colors for {} points",
                    c.len(),
                    positions.len()
                )));
            }
        }
        if let Some(n) = &normals {
            if n.len() != positions.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} normals for {} points",
                    n.len(),
                    positions.len()
                )));
            }
            if let Some(i) = n.iter().position(|v| (v.norm() - 1.0).abs() > NORMAL_TOLERANCE) {
                return Err(Error::Validation {
                    index: i,
                    message: format!("normal is not unit length (norm {})", n[i].norm()),
                });
            }
        }
        Ok(Self {
            positions,
            colors,
            normals,
        })
    }

    /// Builds a cloud from positions only.
    pub fn from_positions(positions: Vec<Vec3>) -> Result<Self> {
        Self::new(positions, None, None)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn colors(&self) -> Option<&[Vec3]> {
        self.colors.as_deref()
    }

    pub fn normals(&self) -> Option<&[Vec3]> {
        self.normals.as_deref()
    }

    pub fn has_normals(&self) -> bool {
        self.normals.is_some()
    }

    /// Returns a copy with the given normals attached (normalizing them).
    pub fn with_normals(&self, normals: Vec<Vec3>) -> Result<Self> {
        let normals = normals
            .into_iter()
            .map(|n| {
                let len = n.norm();
                if len > 0.0 {
                    n / len
                } else {
                    Vec3::z()
                }
            })
            .collect();
        Self::new(self.positions.clone(), self.colors.clone(), Some(normals))
    }

    pub fn with_colors(&self, colors: Vec<Vec3>) -> Result<Self> {
        Self::new(self.positions.clone(), Some(colors), self.normals.clone())
    }

    /// Axis-aligned bounds of every point.
    pub fn bounds(&self) -> Box3 {
        Box3::enclosing(self.positions.iter()).expect("cloud is non-empty")
    }
}

/// Scene-level class presence tags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SceneTags(Vec<u8>);

impl SceneTags {
    pub fn new(tags: Vec<u8>) -> Result<Self> {
        if let Some(i) = tags.iter().position(|&t| t > 1) {
            return Err(Error::Validation {
                index: i,
                message: format!("tag value {} is not 0 or 1", tags[i]),
            });
        }
        Ok(Self(tags))
    }

    pub fn from_bools(tags: &[bool]) -> Self {
        Self(tags.iter().map(|&t| t as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, class: usize) -> bool {
        self.0[class] == 1
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn positive_classes(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &t)| t == 1).map(|(c, _)| c)
    }

    pub fn any_positive(&self) -> bool {
        self.0.contains(&1)
    }

    /// Tags extended with a trailing background slot.
    pub fn with_background(&self, background: bool) -> Vec<f64> {
        self.0
            .iter()
            .map(|&t| t as f64)
            .chain(std::iter::once(if background { 1.0 } else { 0.0 }))
            .collect()
    }
}

/// Dense row-major matrix of finite reals: one row per point or proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation {
                index: i / cols.max(1),
                message: "non-finite matrix entry".into(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} entries, expected {cols}",
                rows[i].len()
            )));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |r| self.get(r, c))
    }

    /// Index of the largest entry of row `r`; ties go to the lower column.
    pub fn row_argmax(&self, r: usize) -> usize {
        argmax(self.row(r))
    }

    pub(crate) fn expect_shape(&self, rows: Option<usize>, cols: usize, what: &str) -> Result<()> {
        if self.cols != cols || rows.is_some_and(|r| r != self.rows) {
            return Err(Error::DimensionMismatch(format!(
                "{what}: got {}x{}, expected {}x{cols}",
                self.rows,
                self.cols,
                rows.map_or("_".to_string(), |r| r.to_string())
            )));
        }
        Ok(())
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Axis-aligned box stored as inclusive min/max corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Box3 {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        let b = Self { min, max };
        b.validate(0)?;
        Ok(b)
    }

    pub(crate) fn validate(&self, index: usize) -> Result<()> {
        for k in 0..3 {
            if !(self.min[k].is_finite() && self.max[k].is_finite()) {
                return Err(Error::Validation {
                    index,
                    message: "non-finite box coordinate".into(),
                });
            }
            if self.min[k] > self.max[k] {
                return Err(Error::Validation {
                    index,
                    message: format!(
                        "min {} exceeds max {} on axis {}",
                        self.min[k],
                        self.max[k],
                        ["x", "y", "z"][k]
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn from_center_size(center: [f64; 3], size: [f64; 3]) -> Result<Self> {
        let min = std::array::from_fn(|k| center[k] - size[k] / 2.0);
        let max = std::array::from_fn(|k| center[k] + size[k] / 2.0);
        Self::new(min, max)
    }

    pub fn center(&self) -> [f64; 3] {
        std::array::from_fn(|k| (self.min[k] + self.max[k]) / 2.0)
    }

    pub fn size(&self) -> [f64; 3] {
        std::array::from_fn(|k| self.max[k] - self.min[k])
    }

    pub fn volume(&self) -> f64 {
        let [x, y, z] = self.size();
        x * y * z
    }

    pub fn union(&self, other: &Box3) -> Box3 {
        Box3 {
            min: std::array::from_fn(|k| self.min[k].min(other.min[k])),
            max: std::array::from_fn(|k| self.max[k].max(other.max[k])),
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    /// Tightest box around the given points, `None` when empty.
    pub fn enclosing<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Option<Box3> {
        let mut iter = points.into_iter();
        let first = iter.next()?;
        let mut b = Box3 {
            min: [first.x, first.y, first.z],
            max: [first.x, first.y, first.z],
        };
        for p in iter {
            for k in 0..3 {
                b.min[k] = b.min[k].min(p[k]);
                b.max[k] = b.max[k].max(p[k]);
            }
        }
        Some(b)
    }
}

/// A box with a class and an optional confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledBox {
    pub class_id: usize,
    #[serde(flatten)]
    pub bbox: Box3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl LabeledBox {
    pub fn new(bbox: Box3, class_id: usize, score: Option<f64>) -> Self {
        Self { class_id, bbox, score }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_unit_normals() {
        let pts = vec![Vec3::zeros()];
        let err = PointCloud::new(pts, None, Some(vec![Vec3::new(0.0, 0.0, 2.0)]));
        assert!(matches!(err, Err(Error::Validation { index: 0, .. })));
    }

    #[test]
    fn center_size_round_trip() {
        let b = Box3::new([0.0, 1.0, 2.0], [1.0, 3.0, 5.0]).unwrap();
        let c = Box3::from_center_size(b.center(), b.size()).unwrap();
        assert_eq!(b, c);
    }

    #[test]
    fn argmax_prefers_lower_index_on_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0]), 0);
    }

    #[test]
    fn background_slot_is_appended() {
        let t = SceneTags::new(vec![1, 0]).unwrap();
        assert_eq!(t.with_background(true), vec![1.0, 0.0, 1.0]);
        assert!(SceneTags::new(vec![2]).is_err());
    }
}
