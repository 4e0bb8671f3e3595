use gss3d::shape_detect::{detect_planes, estimate_normals, PlaneRegion, RegionGrowParams};
use gss3d::PointCloud;

use crate::failure::{CliResult, Failure};
use crate::output::write_json;
use crate::{inputs, DetectShapesArgs};

/// Estimates normals when missing, then grows planes.
pub fn detect(cloud: &PointCloud, params: &RegionGrowParams, normals_k: usize) -> CliResult<Vec<PlaneRegion>> {
    params.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let with_normals = estimate_normals(cloud, normals_k)?;
    let planes = detect_planes(&with_normals, params)?;
    log::info!(
        "{} planes cover {} of {} points",
        planes.len(),
        planes.iter().map(|p| p.len()).sum::<usize>(),
        cloud.len()
    );
    Ok(planes)
}

pub fn run(args: &DetectShapesArgs) -> CliResult<()> {
    let params: RegionGrowParams = match &args.params {
        Some(p) => inputs::config(p)?,
        None => RegionGrowParams::default(),
    };
    let cloud = inputs::cloud(&args.input)?;
    let planes = detect(&cloud, &params, args.normals_k)?;
    write_json(&args.out, &planes)
}
