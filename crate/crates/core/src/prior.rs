//! External object priors: aspect-ratio statistics per class and a floor
//! height estimate.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pseudolabel::DetPseudoLabels;
use crate::types::{Box3, PointCloud, ScoreMatrix};

const DEFAULT_TABLE: &str = include_str!("../data/prior_table.json");

/// Mean and standard deviation of length:width and length:height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AspectStats {
    pub mu_lw: f64,
    pub sigma_lw: f64,
    pub mu_lh: f64,
    pub sigma_lh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapePriorTable {
    /// Class names; a class id is its position here.
    pub classes: Vec<String>,
    pub stats: BTreeMap<String, AspectStats>,
    /// Classes borrowing another class's statistics.
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
    /// Floor for the lower interval bounds `mu - 2 sigma`.
    #[serde(default)]
    pub min_lower: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
    /// Zero width or height: ratios are undefined.
    RejectDegenerate,
    /// No statistics for the class.
    Unfiltered,
}

impl Verdict {
    pub fn keeps(self) -> bool {
        matches!(self, Verdict::Accept | Verdict::Unfiltered)
    }
}

/// Length (longer XY edge), width (shorter XY edge) and height of a box.
pub fn box_dimensions(b: &Box3) -> (f64, f64, f64) {
    let [dx, dy, dz] = b.size();
    (dx.max(dy), dx.min(dy), dz)
}

impl ShapePriorTable {
    /// The bundled table of per-class statistics.
    pub fn builtin() -> Self {
        let t: ShapePriorTable = serde_json::from_str(DEFAULT_TABLE).expect("bundled prior table parses");
        t.validate().expect("bundled prior table is valid");
        t
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: ShapePriorTable = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, s) in &self.stats {
            if !self.classes.contains(name) {
                return Err(Error::InvalidInput(format!(
                    "prior statistics for unknown class '{name}'"
                )));
            }
            let vals = [s.mu_lw, s.sigma_lw, s.mu_lh, s.sigma_lh];
            if vals.iter().any(|v| !v.is_finite()) || s.sigma_lw <= 0.0 || s.sigma_lh <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "class '{name}' needs finite stats and sigma > 0"
                )));
            }
        }
        for (from, to) in &self.aliases {
            if !self.classes.contains(from) {
                return Err(Error::InvalidInput(format!("alias for unknown class '{from}'")));
            }
            if !self.stats.contains_key(to) {
                return Err(Error::InvalidInput(format!(
                    "alias '{from}' -> '{to}' points at a class without stats"
                )));
            }
        }
        if !self.min_lower.is_finite() {
            return Err(Error::InvalidInput("min_lower must be finite".into()));
        }
        Ok(())
    }

    pub fn class_id(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    /// Statistics for a class after alias resolution.
    pub fn stats_for(&self, class_id: usize) -> Option<&AspectStats> {
        let name = self.classes.get(class_id)?;
        self.stats
            .get(name)
            .or_else(|| self.aliases.get(name).and_then(|a| self.stats.get(a)))
    }

    fn interval(&self, mu: f64, sigma: f64) -> (f64, f64) {
        ((mu - 2.0 * sigma).max(self.min_lower), mu + 2.0 * sigma)
    }

    /// Closed intervals `(l:w, l:h)` accepted for a class.
    pub fn bounds(&self, class_id: usize) -> Option<((f64, f64), (f64, f64))> {
        self.stats_for(class_id)
            .map(|s| (self.interval(s.mu_lw, s.sigma_lw), self.interval(s.mu_lh, s.sigma_lh)))
    }

    /// Accepts a box for `class_id` when both aspect ratios fall inside
    /// `[mu - 2 sigma, mu + 2 sigma]`.
    pub fn aspect_filter(&self, b: &Box3, class_id: usize) -> Verdict {
        let Some(((lw_lo, lw_hi), (lh_lo, lh_hi))) = self.bounds(class_id) else {
            return Verdict::Unfiltered;
        };
        let (l, w, h) = box_dimensions(b);
        if w <= 0.0 || h <= 0.0 {
            return Verdict::RejectDegenerate;
        }
        let (lw, lh) = (l / w, l / h);
        if (lw_lo..=lw_hi).contains(&lw) && (lh_lo..=lh_hi).contains(&lh) {
            Verdict::Accept
        } else {
            Verdict::Reject
        }
    }

    /// Class-agnostic proposal test: kept if any class with statistics
    /// accepts it.
    pub fn filter_proposal(&self, b: &Box3) -> Verdict {
        let mut any_stats = false;
        for c in 0..self.classes.len() {
            match self.aspect_filter(b, c) {
                Verdict::Accept => return Verdict::Accept,
                Verdict::RejectDegenerate => return Verdict::RejectDegenerate,
                Verdict::Reject => any_stats = true,
                Verdict::Unfiltered => {}
            }
        }
        if any_stats {
            Verdict::Reject
        } else {
            Verdict::Unfiltered
        }
    }

    /// Drops confident boxes whose shape contradicts their class.
    pub fn filter_pseudo_labels(&self, labels: &DetPseudoLabels, proposals: &[Box3]) -> DetPseudoLabels {
        let mut out = labels.clone();
        for (c, kept) in out.r_star.iter_mut().enumerate() {
            kept.retain(|&r| {
                let ok = self.aspect_filter(&proposals[r], c).keeps();
                if !ok {
                    out.y.set(r, c, 0.0);
                }
                ok
            });
        }
        out
    }
}

/// Linear-interpolation percentile (`q` in `[0, 1]`) at rank `q (n - 1)`.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("percentile of an empty set".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidInput(format!("percentile {q} outside [0, 1]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Ok(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

/// Floor height: the 1st percentile of point heights.
pub fn floor_prior(cloud: &PointCloud) -> f64 {
    if cloud.len() < 100 {
        log::warn!("floor height from only {} points", cloud.len());
    }
    let z: Vec<f64> = cloud.positions().iter().map(|p| p.z).collect();
    percentile(&z, 0.01).expect("clouds are non-empty")
}

/// Points at or below `floor_height` become floor; floor labels above it are
/// moved to the best non-floor class when scores are given, else to
/// `ignore_label`.
pub fn apply_floor_prior(
    labels: &[i64],
    cloud: &PointCloud,
    floor_height: f64,
    floor_class: usize,
    scores: Option<&ScoreMatrix>,
    ignore_label: i64,
) -> Result<Vec<i64>> {
    if labels.len() != cloud.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} points",
            labels.len(),
            cloud.len()
        )));
    }
    if let Some(s) = scores {
        s.expect_shape(Some(cloud.len()), s.cols(), "scores vs cloud")?;
        if floor_class >= s.cols() || s.cols() < 2 {
            return Err(Error::InvalidInput(format!(
                "floor class {floor_class} needs a score column and an alternative"
            )));
        }
    }
    let floor = floor_class as i64;
    Ok(labels
        .iter()
        .zip(cloud.positions())
        .enumerate()
        .map(|(i, (&l, p))| {
            if p.z <= floor_height {
                floor
            } else if l == floor {
                scores.map_or(ignore_label, |s| {
                    let row = s.row(i);
                    let mut best = if floor_class == 0 { 1 } else { 0 };
                    for c in 0..row.len() {
                        if c != floor_class && row[c] > row[best] {
                            best = c;
                        }
                    }
                    best as i64
                })
            } else {
                l
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Vec3;
    use approx::assert_relative_eq;

    fn sized(l: f64, w: f64, h: f64) -> Box3 {
        Box3::new([0.0; 3], [w, l, h]).unwrap()
    }

    #[test]
    fn builtin_table() {
        let t = ShapePriorTable::builtin();
        assert_eq!(t.classes.len(), 18);
        let bed = t.stats_for(t.class_id("bed").unwrap()).unwrap();
        assert_eq!(
            (bed.mu_lw, bed.sigma_lw, bed.mu_lh, bed.sigma_lh),
            (1.58, 0.45, 2.12, 0.95)
        );
        let window = t.class_id("window").unwrap();
        assert_eq!(t.stats_for(window), t.stats_for(t.class_id("door").unwrap()));
        assert!(t.stats_for(t.class_id("garbage bin").unwrap()).is_none());
    }

    #[test]
    fn bed_and_chair_cases() {
        let t = ShapePriorTable::builtin();
        let bed = t.class_id("bed").unwrap();
        assert_eq!(t.aspect_filter(&sized(2.0, 2.0 / 1.5, 1.0), bed), Verdict::Accept);
        assert_eq!(t.aspect_filter(&sized(3.0, 1.0, 1.5), bed), Verdict::Reject);
        let chair = t.class_id("chair").unwrap();
        assert_eq!(t.aspect_filter(&sized(1.0, 1.0, 1.0), chair), Verdict::Accept);
        assert_eq!(t.aspect_filter(&sized(1.0, 1.0, 0.0), chair), Verdict::RejectDegenerate);
        let bin = t.class_id("garbage bin").unwrap();
        assert_eq!(t.aspect_filter(&sized(9.0, 0.1, 0.1), bin), Verdict::Unfiltered);
    }

    #[test]
    fn xy_swap_invariant() {
        let t = ShapePriorTable::builtin();
        let a = Box3::new([0.0; 3], [2.0, 1.0, 1.0]).unwrap();
        let b = Box3::new([0.0; 3], [1.0, 2.0, 1.0]).unwrap();
        for c in 0..t.classes.len() {
            assert_eq!(t.aspect_filter(&a, c), t.aspect_filter(&b, c));
        }
    }

    #[test]
    fn proposal_filter_any_class() {
        let t = ShapePriorTable::builtin();
        assert_eq!(t.filter_proposal(&sized(1.0, 1.0, 1.0)), Verdict::Accept);
        // l:w = 100 exceeds every class's upper bound (largest is cabinet, 16.26)
        assert_eq!(t.filter_proposal(&sized(100.0, 1.0, 50.0)), Verdict::Reject);
    }

    #[test]
    fn table_validation() {
        assert!(ShapePriorTable::from_json(
            r#"{"classes": ["a"], "stats": {"a": {"mu_lw": 1, "sigma_lw": 0, "mu_lh": 1, "sigma_lh": 1}}}"#
        )
        .is_err());
        assert!(ShapePriorTable::from_json(r#"{"classes": ["a", "b"], "stats": {}, "aliases": {"b": "a"}}"#).is_err());
        assert!(ShapePriorTable::from_json(r#"{"classes": ["a"], "stats": {}}"#).is_ok());
    }

    #[test]
    fn floor_percentile() {
        let pts: Vec<Vec3> = (0..100).map(|i| Vec3::new(0.0, 0.0, i as f64 / 100.0)).collect();
        let cloud = PointCloud::from_positions(pts).unwrap();
        assert_relative_eq!(floor_prior(&cloud), 0.0099, epsilon = 1e-12);
        let flat = PointCloud::from_positions(vec![Vec3::new(1.0, 2.0, 0.3); 120]).unwrap();
        let h = floor_prior(&flat);
        assert_eq!(h, 0.3);
        let out = apply_floor_prior(&vec![2; 120], &flat, h, 0, None, -1).unwrap();
        assert!(out.iter().all(|&l| l == 0));
    }

    #[test]
    fn floor_reassignment() {
        let pts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, 2.0),
        ];
        let cloud = PointCloud::from_positions(pts).unwrap();
        let labels = [1, 0, 0];
        let scores = ScoreMatrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![9.0, 1.0, 2.0], vec![9.0, 3.0, 2.0]]).unwrap();
        let out = apply_floor_prior(&labels, &cloud, 0.5, 0, Some(&scores), -1).unwrap();
        assert_eq!(out, vec![0, 2, 1]);
        assert_eq!(apply_floor_prior(&out, &cloud, 0.5, 0, Some(&scores), -1).unwrap(), out);
        assert_eq!(
            apply_floor_prior(&labels, &cloud, 0.5, 0, None, -1).unwrap(),
            vec![0, -1, -1]
        );
    }
}
