//! Forward evaluators for the segmentation and detection objectives, with
//! analytic gradients for the two multiple-instance terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::types::{Box3, SceneTags, ScoreMatrix, Vec3};

/// Probabilities are clamped to this before taking logs.
pub const LOG_CLAMP: f64 = 1e-12;

fn ln_clamped(x: f64) -> f64 {
    x.max(LOG_CLAMP).ln()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn binary_ce(y: f64, p: f64) -> f64 {
    -y * ln_clamped(p) - (1.0 - y) * ln_clamped(1.0 - p)
}

/// Numerically stable softmax of one row of logits.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Clamped log-probabilities of one row: `ln(max(softmax, 1e-12))`.
fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&v| (v - lse).max(LOG_CLAMP.ln())).collect()
}

/// `KL(p || q)` over probability vectors with `0 log 0 = 0`; rounding
/// residue below zero is clipped.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (ln_clamped(pi) - ln_clamped(qi)))
        .sum::<f64>()
        .max(0.0)
}

fn same_shape(a: &ScoreMatrix, b: &ScoreMatrix, what: &str) -> Result<()> {
    a.expect_shape(Some(b.rows()), b.cols(), what)
}

fn non_empty(m: &ScoreMatrix, what: &str) -> Result<()> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::InvalidInput(format!("{what} is empty")));
    }
    Ok(())
}

/// Scene-level BCE on sigmoid-of-mean-pooled point logits. Returns the value
/// and its gradient with respect to every logit.
pub fn mil_seg(tags: &SceneTags, u_seg: &ScoreMatrix) -> Result<(f64, ScoreMatrix)> {
    non_empty(u_seg, "segmentation scores")?;
    u_seg.expect_shape(None, tags.len(), "segmentation scores vs tags")?;
    let n = u_seg.rows() as f64;
    let mut grad = ScoreMatrix::zeros(u_seg.rows(), u_seg.cols());
    let mut value = 0.0;
    for c in 0..u_seg.cols() {
        let phi = sigmoid(u_seg.column(c).sum::<f64>() / n);
        let y = if tags.get(c) { 1.0 } else { 0.0 };
        value += binary_ce(y, phi);
        let g = (phi - y) / n;
        for p in 0..u_seg.rows() {
            grad.set(p, c, g);
        }
    }
    Ok((value, grad))
}

// Cross-entropy of hard (or soft) targets against row-softmax of logits,
// divided by the number of rows.
fn self_training(y: &ScoreMatrix, logits: &ScoreMatrix, what: &str) -> Result<f64> {
    same_shape(y, logits, what)?;
    if y.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "{what}: pseudo labels must be non-negative"
        )));
    }
    if logits.rows() == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for r in 0..logits.rows() {
        let targets = y.row(r);
        if targets.iter().all(|&t| t == 0.0) {
            continue;
        }
        let logp = log_softmax(logits.row(r));
        total -= targets.iter().zip(&logp).map(|(t, l)| t * l).sum::<f64>();
    }
    Ok(total / logits.rows() as f64)
}

/// Self-training loss against N x C pseudo labels; ignored points (zero
/// rows) still count in the divisor.
pub fn self_seg(y_hat: &ScoreMatrix, s_seg: &ScoreMatrix) -> Result<f64> {
    self_training(y_hat, s_seg, "segmentation pseudo labels vs logits")
}

/// Mean KL between point distributions of the original and transformed
/// cloud over corresponding `(original, transformed)` index pairs.
pub fn cst_seg(s_seg: &ScoreMatrix, s_seg_t: &ScoreMatrix, correspondence: &[(usize, usize)]) -> Result<f64> {
    if correspondence.is_empty() {
        return Err(Error::InvalidInput(
            "no corresponding points between the two views".into(),
        ));
    }
    if s_seg.cols() != s_seg_t.cols() {
        return Err(Error::DimensionMismatch(format!(
            "logits have {} and {} classes",
            s_seg.cols(),
            s_seg_t.cols()
        )));
    }
    let mut total = 0.0;
    for &(a, b) in correspondence {
        if a >= s_seg.rows() || b >= s_seg_t.rows() {
            return Err(Error::InvalidInput(format!("correspondence ({a}, {b}) out of range")));
        }
        total += kl_divergence(&softmax(s_seg.row(a)), &softmax(s_seg_t.row(b)));
    }
    Ok(total / correspondence.len() as f64)
}

/// Indices of the points inside each box (closed bounds).
pub fn box_membership(points: &[Vec3], boxes: &[Box3]) -> Vec<Vec<usize>> {
    boxes
        .iter()
        .map(|b| (0..points.len()).filter(|&i| b.contains(&points[i])).collect())
        .collect()
}

/// Detection-to-segmentation consistency: each confident box's class
/// distribution is a soft target for the points it contains. `membership`
/// is indexed by proposal; `r_star` lists the confident proposals. With no
/// confident boxes the term is 0.
pub fn cross_task_d2s(
    r_star: &[usize],
    s_det: &ScoreMatrix,
    s_seg: &ScoreMatrix,
    membership: &[Vec<usize>],
) -> Result<f64> {
    if r_star.is_empty() {
        log::warn!("no confident boxes; detection-to-segmentation term is 0");
        return Ok(0.0);
    }
    if s_det.cols() != s_seg.cols() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "detection logits need {} columns (classes + background), got {}",
            s_seg.cols() + 1,
            s_det.cols()
        )));
    }
    if membership.len() != s_det.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} membership lists for {} proposals",
            membership.len(),
            s_det.rows()
        )));
    }
    let classes = s_seg.cols();
    let mut total = 0.0;
    for &r in r_star {
        let members = membership
            .get(r)
            .ok_or_else(|| Error::InvalidInput(format!("confident proposal {r} out of range")))?;
        if members.is_empty() {
            return Err(Error::InvalidInput(format!(
                "confident proposal {r} contains no points"
            )));
        }
        let xi = softmax(s_det.row(r));
        let mut box_sum = 0.0;
        for &p in members {
            if p >= s_seg.rows() {
                return Err(Error::InvalidInput(format!("member point {p} out of range")));
            }
            let logp = log_softmax(s_seg.row(p));
            box_sum -= (0..classes).map(|c| xi[c] * logp[c]).sum::<f64>();
        }
        total += box_sum / members.len() as f64;
    }
    Ok(total / r_star.len() as f64)
}

/// Draws up to `k` planes without replacement, keeping their input order.
pub fn sample_planes<P: Clone>(planes: &[P], k: usize, rng: &mut Rng) -> Vec<P> {
    rng.sample_indices(planes.len(), k.min(planes.len()))
        .into_iter()
        .map(|i| planes[i].clone())
        .collect()
}

/// Plane smoothness: cross-entropy of each point's distribution against
/// its plane's mean distribution, averaged within a plane and summed over
/// planes.
pub fn smooth<P: AsRef<[usize]>>(planes: &[P], s_seg: &ScoreMatrix) -> Result<f64> {
    if planes.is_empty() {
        return Err(Error::InvalidInput("smoothness term needs at least one plane".into()));
    }
    let mut total = 0.0;
    for (i, plane) in planes.iter().enumerate() {
        let members = plane.as_ref();
        if members.is_empty() {
            return Err(Error::InvalidInput(format!("plane {i} has no points")));
        }
        if let Some(&p) = members.iter().find(|&&p| p >= s_seg.rows()) {
            return Err(Error::InvalidInput(format!(
                "plane {i} references point {p} outside the scores"
            )));
        }
        let probs: Vec<Vec<f64>> = members.iter().map(|&p| softmax(s_seg.row(p))).collect();
        let mut mean = vec![0.0; s_seg.cols()];
        for row in &probs {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        let m = members.len() as f64;
        mean.iter_mut().for_each(|v| *v /= m);
        let ce: f64 = probs
            .iter()
            .map(|row| -mean.iter().zip(row).map(|(a, b)| a * ln_clamped(*b)).sum::<f64>())
            .sum();
        total += ce / m;
    }
    Ok(total)
}

/// Row-softmax of the classification logits times column-softmax of the
/// objectness logits.
pub fn softmax_pair(s_cls: &ScoreMatrix, s_obj: &ScoreMatrix) -> Result<ScoreMatrix> {
    same_shape(s_obj, s_cls, "objectness vs classification logits")?;
    non_empty(s_cls, "classification logits")?;
    let (rows, cols) = (s_cls.rows(), s_cls.cols());
    let mut out = ScoreMatrix::zeros(rows, cols);
    for r in 0..rows {
        out.row_mut(r).copy_from_slice(&softmax(s_cls.row(r)));
    }
    for c in 0..cols {
        let col: Vec<f64> = s_obj.column(c).collect();
        for (r, p) in softmax(&col).into_iter().enumerate() {
            out.set(r, c, out.get(r, c) * p);
        }
    }
    Ok(out)
}

/// Scene-level BCE on sum-pooled proposal scores over C classes plus the
/// background slot. Returns value and gradient.
pub fn mil_det(tags: &SceneTags, background: bool, u_det: &ScoreMatrix) -> Result<(f64, ScoreMatrix)> {
    non_empty(u_det, "detection scores")?;
    u_det.expect_shape(None, tags.len() + 1, "detection scores vs tags")?;
    if let Some(v) = u_det.as_slice().iter().find(|&&v| v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "detection scores must be probabilities, found {v}"
        )));
    }
    let y = tags.with_background(background);
    let mut grad = ScoreMatrix::zeros(u_det.rows(), u_det.cols());
    let mut value = 0.0;
    for (c, &yc) in y.iter().enumerate() {
        let mu: f64 = u_det.column(c).sum();
        if mu > 1.0 + 1e-6 {
            return Err(Error::InvalidInput(format!(
                "pooled score {mu} for class {c} exceeds 1; were the scores normalized?"
            )));
        }
        let mu = mu.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
        value += binary_ce(yc, mu);
        let g = -yc / mu + (1.0 - yc) / (1.0 - mu);
        for r in 0..u_det.rows() {
            grad.set(r, c, g);
        }
    }
    Ok((value, grad))
}

/// Self-training loss against |R| x (C+1) pseudo labels.
pub fn self_det(y_hat: &ScoreMatrix, s_det: &ScoreMatrix) -> Result<f64> {
    self_training(y_hat, s_det, "detection pseudo labels vs logits")
}

/// Mean KL between proposal distributions before and after the transform;
/// row `r` of both matrices describes the same proposal.
pub fn cst_det(s_det: &ScoreMatrix, s_det_t: &ScoreMatrix) -> Result<f64> {
    same_shape(s_det_t, s_det, "transformed vs original detection logits")?;
    non_empty(s_det, "detection logits")?;
    let pairs: Vec<(usize, usize)> = (0..s_det.rows()).map(|r| (r, r)).collect();
    cst_seg(s_det, s_det_t, &pairs)
}

/// Per-term coefficients of the two totals; all 1 by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub seg_mil: f64,
    pub seg_self: f64,
    pub seg_cst: f64,
    pub d2s: f64,
    pub smooth: f64,
    pub det_mil: f64,
    pub det_self: f64,
    pub det_cst: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            seg_mil: 1.0,
            seg_self: 1.0,
            seg_cst: 1.0,
            d2s: 1.0,
            smooth: 1.0,
            det_mil: 1.0,
            det_self: 1.0,
            det_cst: 1.0,
        }
    }
}

/// Individual terms (absent when not evaluated) and the weighted totals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub seg_mil: Option<f64>,
    pub seg_self: Option<f64>,
    pub seg_cst: Option<f64>,
    pub d2s: Option<f64>,
    pub smooth: Option<f64>,
    pub det_mil: Option<f64>,
    pub det_self: Option<f64>,
    pub det_cst: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    #[serde(flatten)]
    pub terms: LossTerms,
    pub weights: LossWeights,
    pub total_seg: f64,
    pub total_det: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl LossReport {
    /// Totals are weighted sums of the present terms, accumulated in the
    /// declaration order of the fields.
    pub fn new(terms: LossTerms, weights: LossWeights) -> Self {
        let sum = |pairs: &[(Option<f64>, f64)]| pairs.iter().map(|(t, w)| t.map_or(0.0, |v| w * v)).sum();
        let total_seg = sum(&[
            (terms.seg_mil, weights.seg_mil),
            (terms.seg_self, weights.seg_self),
            (terms.seg_cst, weights.seg_cst),
            (terms.d2s, weights.d2s),
            (terms.smooth, weights.smooth),
        ]);
        let total_det = sum(&[
            (terms.det_mil, weights.det_mil),
            (terms.det_self, weights.det_self),
            (terms.det_cst, weights.det_cst),
        ]);
        LossReport {
            terms,
            weights,
            total_seg,
            total_det,
            warnings: Vec::new(),
        }
    }
}
