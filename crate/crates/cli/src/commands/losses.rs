use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gss3d::losses::{
    box_membership, cross_task_d2s, cst_det, cst_seg, mil_det, mil_seg, sample_planes, self_det, self_seg, smooth,
    softmax_pair, LossReport, LossTerms, LossWeights,
};
use gss3d::pseudolabel::{det_pseudo_labels, seg_pseudo_labels, DEFAULT_P1, DEFAULT_P2, DEFAULT_TAU};
use gss3d::{Box3, Rng, ScoreMatrix};

use crate::failure::{require, CliResult, Failure};
use crate::output::{write_json, Provenance};
use crate::{inputs, LossesArgs};

fn yes() -> bool {
    true
}
fn ten() -> usize {
    10
}
fn p1() -> f64 {
    DEFAULT_P1
}
fn p2() -> f64 {
    DEFAULT_P2
}
fn tau() -> f64 {
    DEFAULT_TAU
}

/// Which inputs feed which terms. Paths are relative to the spec file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LossSpec {
    tags: PathBuf,
    #[serde(default = "yes")]
    background: bool,
    #[serde(default)]
    weights: LossWeights,
    /// Point cloud used to find the points inside confident boxes.
    cloud: Option<PathBuf>,
    /// Planes sampled for the smoothness term.
    #[serde(default = "ten")]
    num_planes: usize,
    seg: Option<SegInputs>,
    det: Option<DetInputs>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegInputs {
    /// Teacher logits (MIL term; pseudo labels when none are given).
    u: Option<PathBuf>,
    /// Final logits.
    s: Option<PathBuf>,
    pseudo_labels: Option<PathBuf>,
    #[serde(default = "p1")]
    p1: f64,
    /// Final logits on the transformed cloud.
    s_t: Option<PathBuf>,
    /// Two-column CSV of (original, transformed) point indices; identity if absent.
    correspondence: Option<PathBuf>,
    planes: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetInputs {
    /// Proposal probabilities; or give `s_cls` and `s_obj`.
    u: Option<PathBuf>,
    s_cls: Option<PathBuf>,
    s_obj: Option<PathBuf>,
    s: Option<PathBuf>,
    s_t: Option<PathBuf>,
    pseudo_labels: Option<PathBuf>,
    proposals: Option<PathBuf>,
    #[serde(default = "p2")]
    p2: f64,
    #[serde(default = "tau")]
    tau: f64,
}

fn correspondence(path: &Path) -> CliResult<Vec<(usize, usize)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(require(path)?)
        .map_err(|e| Failure::compute("csv", format!("{}: {e}", path.display())))?;
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let bad = || Failure::compute("csv", format!("{} row {}: expected two indices", path.display(), i + 2));
            let rec = rec.map_err(|_| bad())?;
            let a = rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(bad)?;
            let b = rec.get(1).and_then(|v| v.parse().ok()).ok_or_else(bad)?;
            Ok((a, b))
        })
        .collect()
}

pub fn run(args: &LossesArgs) -> CliResult<()> {
    let spec: LossSpec = inputs::config(&args.spec)?;
    let base = args.spec.parent().unwrap_or(Path::new("."));
    let at = |p: &PathBuf| base.join(p);
    let tags = inputs::tags(&at(&spec.tags))?;
    let mut terms = LossTerms::default();
    let mut warnings = Vec::new();
    let mut rng = Rng::new(args.seed);

    let mut s_seg: Option<ScoreMatrix> = None;
    if let Some(seg) = &spec.seg {
        let u = seg.u.as_ref().map(|p| inputs::scores(&at(p))).transpose()?;
        s_seg = seg.s.as_ref().map(|p| inputs::scores(&at(p))).transpose()?;
        if let Some(u) = &u {
            terms.seg_mil = Some(mil_seg(&tags, u)?.0);
        }
        if let Some(s) = &s_seg {
            let y = match (&seg.pseudo_labels, &u) {
                (Some(p), _) => Some(inputs::scores(&at(p))?),
                (None, Some(u)) => Some(seg_pseudo_labels(&tags, u, seg.p1)?.to_matrix()),
                (None, None) => None,
            };
            if let Some(y) = y {
                terms.seg_self = Some(self_seg(&y, s)?);
            }
            if let Some(p) = &seg.s_t {
                let s_t = inputs::scores(&at(p))?;
                let pairs = match &seg.correspondence {
                    Some(c) => correspondence(&at(c))?,
                    None if s_t.rows() == s.rows() => (0..s.rows()).map(|i| (i, i)).collect(),
                    None => {
                        return Err(Failure::usage(
                            "transformed logits differ in length; give seg.correspondence",
                        ))
                    }
                };
                terms.seg_cst = Some(cst_seg(s, &s_t, &pairs)?);
            }
            if let Some(p) = &seg.planes {
                let planes = inputs::regions(&at(p))?;
                let sampled = sample_planes(&planes, spec.num_planes, &mut rng);
                terms.smooth = Some(smooth(&sampled, s)?);
            }
        }
    }

    if let Some(det) = &spec.det {
        let u = match (&det.u, &det.s_cls, &det.s_obj) {
            (Some(p), _, _) => Some(inputs::scores(&at(p))?),
            (None, Some(c), Some(o)) => Some(softmax_pair(&inputs::scores(&at(c))?, &inputs::scores(&at(o))?)?),
            _ => None,
        };
        let proposals: Option<Vec<Box3>> = det.proposals.as_ref().map(|p| inputs::proposals(&at(p))).transpose()?;
        if let Some(u) = &u {
            terms.det_mil = Some(mil_det(&tags, spec.background, u)?.0);
        }
        let labels = match (&det.pseudo_labels, &u, &proposals) {
            (Some(p), _, _) => {
                let y = inputs::scores(&at(p))?;
                let confident: Vec<usize> = (0..y.rows())
                    .filter(|&r| y.row(r)[..y.cols().saturating_sub(1)].iter().any(|&v| v > 0.0))
                    .collect();
                Some((y, confident))
            }
            (None, Some(u), Some(boxes)) => {
                let l = det_pseudo_labels(&tags, u, boxes, det.tau, det.p2)?;
                let confident = l.confident();
                Some((l.y, confident))
            }
            _ => None,
        };
        if let Some(s) = det.s.as_ref().map(|p| inputs::scores(&at(p))).transpose()? {
            if let Some((y, _)) = &labels {
                terms.det_self = Some(self_det(y, &s)?);
            }
            if let Some(p) = &det.s_t {
                terms.det_cst = Some(cst_det(&s, &inputs::scores(&at(p))?)?);
            }
            if let (Some((_, confident)), Some(s_seg), Some(boxes), Some(cloud)) =
                (&labels, &s_seg, &proposals, &spec.cloud)
            {
                let cloud = inputs::cloud(&at(cloud))?;
                if confident.is_empty() {
                    warnings.push("no confident boxes; d2s term is 0".to_string());
                }
                let membership = box_membership(cloud.positions(), boxes);
                terms.d2s = Some(cross_task_d2s(confident, &s, s_seg, &membership)?);
            }
        }
    }

    let mut report = LossReport::new(terms, spec.weights);
    report.warnings = warnings;
    write_json(&args.out, &Provenance::new(&spec, Some(args.seed)).wrap(&report))
}
