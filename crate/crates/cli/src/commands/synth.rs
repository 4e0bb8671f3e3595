use gss3d::io::{boxes_to_json, write_ply, ColorEncoding, PlyEncoding};
use gss3d::synth::{generate, SynthSpec};

use crate::failure::CliResult;
use crate::output::write_atomic;
use crate::{inputs, SynthArgs};

pub fn run(args: &SynthArgs) -> CliResult<()> {
    let mut spec: SynthSpec = match &args.spec {
        Some(p) => inputs::config(p)?,
        None => SynthSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let scene = generate(&spec)?;
    let dir = &args.out_dir;
    write_atomic(
        &dir.join("scene.ply"),
        &write_ply(&scene.cloud, PlyEncoding::BinaryLittleEndian, ColorEncoding::Uchar),
    )?;
    write_atomic(&dir.join("gt_boxes.json"), boxes_to_json(&scene.gt_boxes).as_bytes())?;
    write_atomic(&dir.join("gt_labels.csv"), scene.labels_csv().as_bytes())?;
    log::info!(
        "wrote {} points and {} boxes to {}",
        scene.cloud.len(),
        scene.gt_boxes.len(),
        dir.display()
    );
    Ok(())
}
