//! Segmentation, proposal and detection evaluation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou3d, nms};
use crate::losses::softmax;
use crate::types::{Box3, LabeledBox, ScoreMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassIou {
    pub class: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegEval {
    /// Only classes that occur in the prediction or the ground truth.
    pub per_class: Vec<ClassIou>,
    pub miou: f64,
}

/// Point-level IoU per class and their mean. Points whose ground truth is
/// `ignore_label` are skipped.
pub fn miou(pred: &[i64], gt: &[i64], num_classes: usize, ignore_label: i64) -> Result<SegEval> {
    if pred.len() != gt.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predicted labels for {} ground-truth labels",
            pred.len(),
            gt.len()
        )));
    }
    let check = |v: i64, what: &str, i: usize| -> Result<Option<usize>> {
        if v == ignore_label {
            Ok(None)
        } else if v >= 0 && (v as usize) < num_classes {
            Ok(Some(v as usize))
        } else {
            Err(Error::Validation {
                index: i,
                message: format!("{what} label {v} outside 0..{num_classes}"),
            })
        }
    };
    let (mut tp, mut fp, mut fn_) = (
        vec![0u64; num_classes],
        vec![0u64; num_classes],
        vec![0u64; num_classes],
    );
    for (i, (&p, &g)) in pred.iter().zip(gt).enumerate() {
        let Some(g) = check(g, "ground-truth", i)? else {
            continue;
        };
        match check(p, "predicted", i)? {
            Some(p) if p == g => tp[g] += 1,
            Some(p) => {
                fp[p] += 1;
                fn_[g] += 1;
            }
            None => fn_[g] += 1,
        }
    }
    let per_class: Vec<ClassIou> = (0..num_classes)
        .filter_map(|c| {
            let denom = tp[c] + fp[c] + fn_[c];
            (denom > 0).then(|| ClassIou {
                class: c,
                iou: tp[c] as f64 / denom as f64,
            })
        })
        .collect();
    let miou = if per_class.is_empty() {
        0.0
    } else {
        per_class.iter().map(|c| c.iou).sum::<f64>() / per_class.len() as f64
    };
    Ok(SegEval { per_class, miou })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRecall {
    pub class: usize,
    pub num_gt: usize,
    pub abo: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalEval {
    pub iou_thresh: f64,
    pub per_class: Vec<ClassRecall>,
    pub mabo: f64,
    pub ar: f64,
}

/// Best-overlap statistics of class-agnostic proposals against labelled
/// ground truth. Means run over classes present in the ground truth.
pub fn proposal_metrics(proposals: &[Box3], gt: &[LabeledBox], iou_thresh: f64) -> Result<ProposalEval> {
    if gt.is_empty() {
        return Err(Error::InvalidInput("no ground-truth boxes to evaluate against".into()));
    }
    let mut by_class: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for g in gt {
        let best = proposals.iter().map(|p| iou3d(&g.bbox, p)).fold(0.0, f64::max);
        by_class.entry(g.class_id).or_default().push(best);
    }
    let per_class: Vec<ClassRecall> = by_class
        .into_iter()
        .map(|(class, best)| {
            let n = best.len() as f64;
            ClassRecall {
                class,
                num_gt: best.len(),
                abo: best.iter().sum::<f64>() / n,
                recall: best.iter().filter(|&&b| b >= iou_thresh).count() as f64 / n,
            }
        })
        .collect();
    let k = per_class.len() as f64;
    Ok(ProposalEval {
        iou_thresh,
        mabo: per_class.iter().map(|c| c.abo).sum::<f64>() / k,
        ar: per_class.iter().map(|c| c.recall).sum::<f64>() / k,
        per_class,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApInterpolation {
    #[default]
    AllPoint,
    ElevenPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub class: usize,
    pub num_gt: usize,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEval {
    pub iou_thresh: f64,
    pub per_class: Vec<ClassAp>,
    pub map: f64,
}

/// Area under the precision/recall curve of a ranked TP/FP sequence.
pub fn average_precision(tp: &[bool], num_gt: usize, interp: ApInterpolation) -> f64 {
    if num_gt == 0 {
        return 0.0;
    }
    let mut recall = Vec::with_capacity(tp.len());
    let mut precision = Vec::with_capacity(tp.len());
    let mut hits = 0usize;
    for (i, &t) in tp.iter().enumerate() {
        hits += t as usize;
        recall.push(hits as f64 / num_gt as f64);
        precision.push(hits as f64 / (i + 1) as f64);
    }
    match interp {
        ApInterpolation::AllPoint => {
            // precision envelope, then sum over recall steps
            for i in (0..precision.len().saturating_sub(1)).rev() {
                precision[i] = precision[i].max(precision[i + 1]);
            }
            let mut ap = 0.0;
            let mut prev = 0.0;
            for (r, p) in recall.iter().zip(&precision) {
                ap += (r - prev) * p;
                prev = *r;
            }
            ap
        }
        ApInterpolation::ElevenPoint => {
            (0..=10)
                .map(|t| {
                    let t = t as f64 / 10.0;
                    recall
                        .iter()
                        .zip(&precision)
                        .filter(|(r, _)| **r >= t - 1e-12)
                        .map(|(_, p)| *p)
                        .fold(0.0, f64::max)
                })
                .sum::<f64>()
                / 11.0
        }
    }
}

/// AP per class over several scenes: detections are ranked jointly, matched
/// within their own scene.
pub fn map_at_scenes(
    scenes: &[(&[LabeledBox], &[LabeledBox])],
    iou_thresh: f64,
    interp: ApInterpolation,
) -> Result<DetectionEval> {
    let mut num_gt: BTreeMap<usize, usize> = BTreeMap::new();
    // (score, scene, detection index) per class
    let mut ranked: BTreeMap<usize, Vec<(f64, usize, usize)>> = BTreeMap::new();
    for (s, (dets, gts)) in scenes.iter().enumerate() {
        for g in gts.iter() {
            *num_gt.entry(g.class_id).or_default() += 1;
        }
        for (i, d) in dets.iter().enumerate() {
            let score = d.score.ok_or_else(|| Error::Validation {
                index: i,
                message: "detection without a score".into(),
            })?;
            ranked.entry(d.class_id).or_default().push((score, s, i));
        }
    }
    let mut per_class = Vec::new();
    for (&class, &n) in &num_gt {
        let mut dets = ranked.remove(&class).unwrap_or_default();
        dets.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        let mut matched: Vec<Vec<bool>> = scenes.iter().map(|(_, g)| vec![false; g.len()]).collect();
        let tp: Vec<bool> = dets
            .iter()
            .map(|&(_, s, i)| {
                let d = &scenes[s].0[i];
                let mut best: Option<(f64, usize)> = None;
                for (j, g) in scenes[s].1.iter().enumerate() {
                    if g.class_id != class || matched[s][j] {
                        continue;
                    }
                    let iou = iou3d(&d.bbox, &g.bbox);
                    if iou >= iou_thresh && best.is_none_or(|(b, _)| iou > b) {
                        best = Some((iou, j));
                    }
                }
                match best {
                    Some((_, j)) => {
                        matched[s][j] = true;
                        true
                    }
                    None => false,
                }
            })
            .collect();
        per_class.push(ClassAp {
            class,
            num_gt: n,
            ap: average_precision(&tp, n, interp),
        });
    }
    let map = if per_class.is_empty() {
        0.0
    } else {
        per_class.iter().map(|c| c.ap).sum::<f64>() / per_class.len() as f64
    };
    Ok(DetectionEval {
        iou_thresh,
        per_class,
        map,
    })
}

/// Single-scene AP with all-point interpolation.
pub fn map_at(detections: &[LabeledBox], gt: &[LabeledBox], iou_thresh: f64) -> Result<DetectionEval> {
    map_at_scenes(&[(detections, gt)], iou_thresh, ApInterpolation::AllPoint)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionPostprocess {
    pub score_thresh: f64,
    pub nms_iou: f64,
}

impl Default for DetectionPostprocess {
    fn default() -> Self {
        DetectionPostprocess {
            score_thresh: 0.01,
            nms_iou: 0.25,
        }
    }
}

/// Turns |R| x (C+1) detection logits into scored boxes: row softmax,
/// score threshold, class-wise NMS. The last column is background and is
/// never emitted. Output is grouped by class, highest score first.
pub fn detection_postprocess(
    s_det: &ScoreMatrix,
    proposals: &[Box3],
    cfg: &DetectionPostprocess,
) -> Result<Vec<LabeledBox>> {
    if s_det.rows() != proposals.len() || s_det.cols() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "detection logits are {}x{}, expected {} rows and at least 2 columns",
            s_det.rows(),
            s_det.cols(),
            proposals.len()
        )));
    }
    let mut boxes = Vec::new();
    let mut scores = Vec::new();
    let mut classes = Vec::new();
    for (r, b) in proposals.iter().enumerate() {
        let probs = softmax(s_det.row(r));
        for (c, &p) in probs[..probs.len() - 1].iter().enumerate() {
            if p >= cfg.score_thresh {
                boxes.push(*b);
                scores.push(p);
                classes.push(c);
            }
        }
    }
    let mut keep = nms(&boxes, &scores, Some(&classes), cfg.nms_iou);
    keep.sort_by_key(|&i| classes[i]);
    Ok(keep
        .into_iter()
        .map(|i| LabeledBox::new(boxes[i], classes[i], Some(scores[i])))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(x: f64) -> Box3 {
        Box3::new([x, 0.0, 0.0], [x + 1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn miou_examples() {
        let e = miou(&[0, 1, 1], &[0, 1, 1], 3, -1).unwrap();
        assert_eq!(e.miou, 1.0);
        assert_eq!(e.per_class.len(), 2);
        let e = miou(&[0, 1, 1, 1], &[0, 0, 1, 1], 2, -1).unwrap();
        assert_relative_eq!(e.per_class[0].iou, 0.5);
        assert_relative_eq!(e.per_class[1].iou, 2.0 / 3.0);
        assert_relative_eq!(e.miou, 7.0 / 12.0);
        assert_eq!(miou(&[1, 1, 0], &[0, 0, 1], 2, -1).unwrap().miou, 0.0);
        // ignored ground truth is skipped entirely
        assert_eq!(miou(&[0, 1], &[0, -1], 2, -1).unwrap().miou, 1.0);
        assert!(miou(&[0], &[0, 1], 2, -1).is_err());
        assert!(miou(&[5], &[0], 2, -1).is_err());
    }

    #[test]
    fn proposal_examples() {
        let gt = vec![LabeledBox::new(unit(0.0), 0, None), LabeledBox::new(unit(5.0), 1, None)];
        let e = proposal_metrics(&[unit(0.0), unit(5.0)], &gt, 0.25).unwrap();
        assert_eq!((e.mabo, e.ar), (1.0, 1.0));
        let g = [LabeledBox::new(Box3::new([0.0; 3], [1.0; 3]).unwrap(), 0, None)];
        let p = Box3::new([0.5, 0.5, 0.5], [1.5, 1.5, 1.5]).unwrap();
        let e = proposal_metrics(&[p], &g, 0.25).unwrap();
        assert_relative_eq!(e.mabo, 1.0 / 15.0, epsilon = 1e-12);
        assert_eq!(e.ar, 0.0);
        let e = proposal_metrics(&[], &g, 0.25).unwrap();
        assert_eq!((e.mabo, e.ar), (0.0, 0.0));
        assert!(proposal_metrics(&[p], &[], 0.25).is_err());
    }

    #[test]
    fn ap_examples() {
        let gt = vec![LabeledBox::new(unit(0.0), 0, None), LabeledBox::new(unit(3.0), 2, None)];
        let dets: Vec<LabeledBox> = gt
            .iter()
            .map(|g| LabeledBox::new(g.bbox, g.class_id, Some(0.3)))
            .collect();
        let e = map_at(&dets, &gt, 0.25).unwrap();
        assert_eq!(e.map, 1.0);
        assert_eq!(e.per_class.len(), 2);

        let g = [LabeledBox::new(unit(0.0), 0, None)];
        let dup = [
            LabeledBox::new(unit(0.0), 0, Some(0.9)),
            LabeledBox::new(unit(0.1), 0, Some(0.8)),
        ];
        assert_eq!(map_at(&dup, &g, 0.25).unwrap().map, 1.0);
        // a top-scoring false positive halves precision at full recall
        let fp_first = [
            LabeledBox::new(unit(9.0), 0, Some(0.95)),
            LabeledBox::new(unit(0.0), 0, Some(0.9)),
        ];
        assert_relative_eq!(map_at(&fp_first, &g, 0.25).unwrap().map, 0.5);
        assert!(map_at(&[LabeledBox::new(unit(0.0), 0, None)], &g, 0.25).is_err());
    }

    #[test]
    fn eleven_point() {
        // TP, FP, TP over 2 GT: recall 0.5 at precision 1, recall 1 at 2/3
        let ap = average_precision(&[true, false, true], 2, ApInterpolation::ElevenPoint);
        assert_relative_eq!(ap, (6.0 + 5.0 * 2.0 / 3.0) / 11.0);
        let ap = average_precision(&[true, false, true], 2, ApInterpolation::AllPoint);
        assert_relative_eq!(ap, 0.5 + 0.5 * 2.0 / 3.0);
    }

    #[test]
    fn postprocess_examples() {
        let all_bg = ScoreMatrix::from_rows(&[vec![0.0, 0.0, 30.0]]).unwrap();
        let cfg = DetectionPostprocess::default();
        assert!(detection_postprocess(&all_bg, &[unit(0.0)], &cfg).unwrap().is_empty());

        // softmax([a, 0]) with probability 0.009 on class 0
        let a = (0.009f64 / 0.991).ln();
        let low = ScoreMatrix::from_rows(&[vec![a, 0.0]]).unwrap();
        assert!(detection_postprocess(&low, &[unit(0.0)], &cfg).unwrap().is_empty());

        let two = ScoreMatrix::from_rows(&[vec![(0.8f64 / 0.2).ln(), 0.0], vec![(0.6f64 / 0.4).ln(), 0.0]]).unwrap();
        let out = detection_postprocess(&two, &[unit(0.0), unit(0.0)], &cfg).unwrap();
        assert_eq!(out.len(), 1);
        assert_relative_eq!(out[0].score.unwrap(), 0.8, epsilon = 1e-12);
    }
}
