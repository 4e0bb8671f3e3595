use serde::Serialize;

use gss3d::metrics::{
    detection_postprocess, map_at_scenes, miou, proposal_metrics, ApInterpolation, DetectionPostprocess,
};

use crate::failure::{CliResult, Failure};
use crate::output::{write_json, Provenance};
use crate::{inputs, EvalDetectionsArgs, EvalProposalsArgs, EvalSegArgs};

#[derive(Serialize)]
struct SegConfig {
    num_classes: usize,
    ignore_label: i64,
}

pub fn seg(args: &EvalSegArgs) -> CliResult<()> {
    let pred = inputs::labels(&args.pred)?;
    let gt = inputs::labels(&args.gt)?;
    let report = miou(&pred, &gt, args.num_classes, args.ignore_label)?;
    let config = SegConfig {
        num_classes: args.num_classes,
        ignore_label: args.ignore_label,
    };
    write_json(&args.out, &Provenance::new(&config, None).wrap(&report))
}

#[derive(Serialize)]
struct IouConfig {
    iou: f64,
}

fn check_iou(iou: f64) -> CliResult<()> {
    if (0.0..=1.0).contains(&iou) {
        Ok(())
    } else {
        Err(Failure::usage(format!("--iou {iou} outside [0, 1]")))
    }
}

pub fn proposals(args: &EvalProposalsArgs) -> CliResult<()> {
    check_iou(args.iou)?;
    let proposals = inputs::proposals(&args.proposals)?;
    let gt = inputs::boxes(&args.gt)?;
    let report = proposal_metrics(&proposals, &gt, args.iou)?;
    write_json(
        &args.out,
        &Provenance::new(&IouConfig { iou: args.iou }, None).wrap(&report),
    )
}

#[derive(Serialize)]
struct DetConfig {
    iou: f64,
    interpolation: ApInterpolation,
    from_logits: Option<DetectionPostprocess>,
}

pub fn detections(args: &EvalDetectionsArgs) -> CliResult<()> {
    check_iou(args.iou)?;
    let (detections, from_logits) = match (&args.detections, &args.logits, &args.proposals) {
        (Some(path), None, None) => (inputs::boxes(path)?, None),
        (None, Some(logits), Some(proposals)) => {
            let cfg = DetectionPostprocess::default();
            let boxes = inputs::proposals(proposals)?;
            (
                detection_postprocess(&inputs::scores(logits)?, &boxes, &cfg)?,
                Some(cfg),
            )
        }
        _ => return Err(Failure::usage("pass either --detections, or --logits with --proposals")),
    };
    let gt = inputs::boxes(&args.gt)?;
    let interpolation = if args.eleven_point {
        ApInterpolation::ElevenPoint
    } else {
        ApInterpolation::AllPoint
    };
    let report = map_at_scenes(&[(&detections, &gt)], args.iou, interpolation)?;
    let config = DetConfig {
        iou: args.iou,
        interpolation,
        from_logits,
    };
    write_json(&args.out, &Provenance::new(&config, None).wrap(&report))
}
