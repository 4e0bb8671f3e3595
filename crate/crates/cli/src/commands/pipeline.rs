use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use gss3d::gss::{PostprocessConfig, Strategy};
use gss3d::metrics::{proposal_metrics, ProposalEval};
use gss3d::prior::ShapePriorTable;
use gss3d::shape_detect::RegionGrowParams;

use super::propose::search_scene;
use super::shapes::detect;
use crate::failure::{CliResult, Failure};
use crate::output::{write_json, Provenance};
use crate::{inputs, PipelineArgs};

fn default_k() -> usize {
    12
}
fn default_iou() -> f64 {
    0.25
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineConfig {
    #[serde(default)]
    region_grow: RegionGrowParams,
    #[serde(default = "default_k")]
    normals_k: usize,
    strategies: Vec<Strategy>,
    #[serde(default)]
    postprocess: PostprocessConfig,
    /// Apply the bundled aspect-ratio prior to proposals.
    #[serde(default)]
    prior: bool,
    /// A custom prior table instead of the bundled one.
    prior_table: Option<PathBuf>,
    #[serde(default = "default_iou")]
    eval_iou: f64,
}

#[derive(Serialize)]
struct SceneReport {
    scene: String,
    num_points: usize,
    num_planes: usize,
    planar_points: usize,
    num_proposals: usize,
    rejected_by_prior: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    proposal_eval: Option<ProposalEval>,
}

fn load_config(path: &Path) -> CliResult<PipelineConfig> {
    let config: PipelineConfig = inputs::config(path)?;
    let bad = |e: gss3d::Error| Failure::usage(format!("{}: {e}", path.display()));
    if config.strategies.is_empty() {
        return Err(Failure::usage(format!("{}: 'strategies' is empty", path.display())));
    }
    for s in &config.strategies {
        s.validate().map_err(bad)?;
    }
    config.region_grow.validate().map_err(bad)?;
    config.postprocess.validate().map_err(bad)?;
    if !(0.0..=1.0).contains(&config.eval_iou) {
        return Err(Failure::usage(format!("{}: eval_iou outside [0, 1]", path.display())));
    }
    Ok(config)
}

fn scene_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "scene".into(), |s| s.to_string_lossy().into_owned())
}

// Output directory per scene: the file stem, or `<parent>-<stem>` when
// several scenes share a stem (e.g. `a/scene.ply`, `b/scene.ply`).
fn scene_names(paths: &[PathBuf]) -> CliResult<Vec<String>> {
    let stems: Vec<String> = paths.iter().map(|p| scene_name(p)).collect();
    let names: Vec<String> = paths
        .iter()
        .zip(&stems)
        .map(|(p, stem)| {
            if stems.iter().filter(|s| *s == stem).count() == 1 {
                return stem.clone();
            }
            let parent = p.canonicalize().ok().and_then(|c| {
                c.parent()
                    .and_then(|d| d.file_name())
                    .map(|d| d.to_string_lossy().into_owned())
            });
            parent.map_or_else(|| stem.clone(), |d| format!("{d}-{stem}"))
        })
        .collect();
    let mut seen = HashSet::new();
    for n in &names {
        if !seen.insert(n) {
            return Err(Failure::usage(format!("two scenes would both write to '{n}'")));
        }
    }
    Ok(names)
}

struct SceneJob<'a> {
    path: &'a Path,
    name: &'a str,
    gt: Option<&'a PathBuf>,
}

fn run_scene(
    job: SceneJob,
    config: &PipelineConfig,
    prior: Option<&ShapePriorTable>,
    provenance: &Provenance,
    seed: u64,
    out_dir: &Path,
) -> CliResult<()> {
    let SceneJob { path: scene, name, gt } = job;
    let cloud = inputs::cloud(scene)?;
    let planes = detect(&cloud, &config.region_grow, config.normals_k)?;
    let dir = out_dir.join(name);
    write_json(&dir.join("regions.json"), &planes)?;
    let set = search_scene(
        &cloud,
        &planes,
        None,
        &config.strategies,
        &config.postprocess,
        prior,
        seed,
    )?;
    write_json(&dir.join("proposals.json"), &provenance.wrap(&set))?;
    let proposal_eval = match gt {
        Some(path) => {
            let boxes: Vec<_> = set.proposals.iter().map(|p| p.bbox).collect();
            Some(proposal_metrics(&boxes, &inputs::boxes(path)?, config.eval_iou)?)
        }
        None => None,
    };
    let report = SceneReport {
        scene: name.to_string(),
        num_points: cloud.len(),
        num_planes: planes.len(),
        planar_points: planes.iter().map(|p| p.len()).sum(),
        num_proposals: set.proposals.len(),
        rejected_by_prior: set.rejected_by_prior,
        proposal_eval,
    };
    write_json(&dir.join("report.json"), &provenance.wrap(&report))
}

pub fn run(args: &PipelineArgs) -> CliResult<()> {
    let config = load_config(&args.config)?;
    if !args.gt.is_empty() && args.gt.len() != args.scenes.len() {
        return Err(Failure::usage(format!(
            "{} --gt files for {} scenes",
            args.gt.len(),
            args.scenes.len()
        )));
    }
    for s in &args.scenes {
        crate::failure::require(s)?;
    }
    let names = scene_names(&args.scenes)?;
    if args.jobs == 0 {
        return Err(Failure::usage("--jobs must be at least 1"));
    }
    let prior = match (&config.prior_table, config.prior) {
        (Some(p), _) => Some(super::prior_table(&p.to_string_lossy())?),
        (None, true) => Some(ShapePriorTable::builtin()),
        (None, false) => None,
    };
    let provenance = Provenance::new(&config, Some(args.seed));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Failure::compute("cli", e))?;
    let results: Vec<CliResult<()>> = pool.install(|| {
        args.scenes
            .par_iter()
            .enumerate()
            .map(|(i, scene)| {
                run_scene(
                    SceneJob {
                        path: scene,
                        name: &names[i],
                        gt: args.gt.get(i),
                    },
                    &config,
                    prior.as_ref(),
                    &provenance,
                    args.seed,
                    &args.out_dir,
                )
            })
            .collect()
    });
    results.into_iter().collect()
}
