//! Hard pseudo labels for self-training, derived from teacher score matrices.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::iou3d;
use crate::types::{Box3, SceneTags, ScoreMatrix};

pub const DEFAULT_P1: f64 = 0.1;
pub const DEFAULT_P2: f64 = 0.15;
pub const DEFAULT_TAU: f64 = 0.25;

// Guards floor(p * n) against p * n landing a hair below an integer.
const COUNT_EPS: f64 = 1e-9;

fn fraction_count(p: f64, n: usize) -> usize {
    ((p * n as f64 + COUNT_EPS).floor() as usize).min(n)
}

fn check_fraction(p: f64, name: &str, upper_inclusive: bool) -> Result<()> {
    let ok = p >= 0.0 && if upper_inclusive { p <= 1.0 } else { p < 1.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} = {p} outside its valid range")))
    }
}

/// Per-point hard labels; `None` marks an ignored point.
#[derive(Debug, Clone, PartialEq)]
pub struct SegPseudoLabels {
    pub labels: Vec<Option<usize>>,
    pub num_classes: usize,
}

impl SegPseudoLabels {
    /// Binary N x C matrix with at most one 1 per row.
    pub fn to_matrix(&self) -> ScoreMatrix {
        let mut y = ScoreMatrix::zeros(self.labels.len(), self.num_classes);
        for (p, l) in self.labels.iter().enumerate() {
            if let Some(c) = *l {
                y.set(p, c, 1.0);
            }
        }
        y
    }
}

/// Binary |R| x (C+1) labels and, per class, the kept proposals in the order
/// they were accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct DetPseudoLabels {
    pub y: ScoreMatrix,
    pub r_star: Vec<Vec<usize>>,
}

impl DetPseudoLabels {
    /// Union of the per-class kept proposals, ascending and without repeats.
    pub fn confident(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.r_star.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }
}

/// Each point takes its best-scoring tagged class; then, per class, the
/// lowest-scoring `p1` fraction of its points is dropped (ties: lower index
/// dropped first).
pub fn seg_pseudo_labels(tags: &SceneTags, u_seg: &ScoreMatrix, p1: f64) -> Result<SegPseudoLabels> {
    check_fraction(p1, "p1", false)?;
    u_seg.expect_shape(None, tags.len(), "segmentation scores vs tags")?;
    let tagged: Vec<usize> = tags.positive_classes().collect();
    if tagged.is_empty() {
        return Err(Error::InvalidInput("scene has no positive tag".into()));
    }
    let mut labels: Vec<Option<usize>> = (0..u_seg.rows())
        .map(|p| {
            let row = u_seg.row(p);
            let mut best = tagged[0];
            for &c in &tagged[1..] {
                if row[c] > row[best] {
                    best = c;
                }
            }
            Some(best)
        })
        .collect();
    for &c in &tagged {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&p| labels[p] == Some(c)).collect();
        members.sort_by(|&a, &b| u_seg.get(a, c).total_cmp(&u_seg.get(b, c)).then(a.cmp(&b)));
        for &p in members.iter().take(fraction_count(p1, members.len())) {
            labels[p] = None;
        }
    }
    Ok(SegPseudoLabels {
        labels,
        num_classes: tags.len(),
    })
}

/// For each tagged class, walks the top `p2` fraction of proposals by score
/// and keeps those whose IoU with every kept box stays below `tau`. The
/// background column is never labeled.
pub fn det_pseudo_labels(
    tags: &SceneTags,
    u_det: &ScoreMatrix,
    proposals: &[Box3],
    tau: f64,
    p2: f64,
) -> Result<DetPseudoLabels> {
    check_fraction(p2, "p2", true)?;
    check_fraction(tau, "tau", true)?;
    if proposals.is_empty() {
        return Err(Error::InvalidInput("no proposals to label".into()));
    }
    u_det.expect_shape(
        Some(proposals.len()),
        tags.len() + 1,
        "detection scores vs proposals and tags",
    )?;
    let n = proposals.len();
    let take = fraction_count(p2, n).max(1);
    let mut y = ScoreMatrix::zeros(n, tags.len() + 1);
    let mut r_star = vec![Vec::new(); tags.len()];
    for c in tags.positive_classes() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| match u_det.get(b, c).total_cmp(&u_det.get(a, c)) {
            Ordering::Equal => a.cmp(&b),
            o => o,
        });
        let kept = &mut r_star[c];
        for &r in order.iter().take(take) {
            if kept.iter().all(|&k| iou3d(&proposals[r], &proposals[k]) < tau) {
                kept.push(r);
            }
        }
        for &r in kept.iter() {
            y.set(r, c, 1.0);
        }
    }
    Ok(DetPseudoLabels { y, r_star })
}
