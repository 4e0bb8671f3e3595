use super::aabb::iou3d;
use crate::error::{Error, Result};
use crate::types::{Box3, LabeledBox};

/// Greedy non-maximum suppression.
///
/// Boxes are visited by descending score, ties by ascending index. A box is
/// suppressed when its IoU with an already kept box exceeds `iou_thresh`;
/// with `classes` given, only boxes of the same class suppress each other.
/// Returns kept indices in visiting order.
pub fn nms(boxes: &[Box3], scores: &[f64], classes: Option<&[usize]>, iou_thresh: f64) -> Vec<usize> {
    assert_eq!(boxes.len(), scores.len(), "one score per box");
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let suppressed = kept
            .iter()
            .any(|&k| classes.is_none_or(|c| c[k] == c[i]) && iou3d(&boxes[k], &boxes[i]) > iou_thresh);
        if !suppressed {
            kept.push(i);
        }
    }
    kept
}

/// NMS over scored labeled boxes.
pub fn nms_labeled(boxes: &[LabeledBox], iou_thresh: f64, class_agnostic: bool) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&iou_thresh) {
        return Err(Error::InvalidInput(format!(
            "IoU threshold {iou_thresh} outside [0, 1]"
        )));
    }
    let scores = boxes
        .iter()
        .enumerate()
        .map(|(i, b)| {
            b.score.ok_or_else(|| Error::Validation {
                index: i,
                message: "box has no score".into(),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let geoms: Vec<Box3> = boxes.iter().map(|b| b.bbox).collect();
    let classes: Vec<usize> = boxes.iter().map(|b| b.class_id).collect();
    Ok(nms(
        &geoms,
        &scores,
        (!class_agnostic).then_some(&classes[..]),
        iou_thresh,
    ))
}
