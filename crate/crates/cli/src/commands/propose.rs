use serde::Serialize;

use gss3d::gss::{initial_regions, search, PostprocessConfig, Proposal, Strategy};
use gss3d::prior::ShapePriorTable;
use gss3d::shape_detect::PlaneRegion;
use gss3d::{PointCloud, ScoreMatrix};

use crate::failure::{CliResult, Failure};
use crate::output::{write_json, Provenance};
use crate::{inputs, ProposeArgs};

/// Jitter used by the built-in strategy set.
pub const DEFAULT_JITTER: f64 = 0.4;

#[derive(Debug, Serialize)]
pub struct ProposalSet {
    pub num_regions: usize,
    pub strategies: Vec<Strategy>,
    pub rejected_by_prior: usize,
    pub proposals: Vec<Proposal>,
}

pub fn search_scene(
    cloud: &PointCloud,
    planes: &[PlaneRegion],
    seg: Option<&ScoreMatrix>,
    strategies: &[Strategy],
    post: &PostprocessConfig,
    prior: Option<&ShapePriorTable>,
    seed: u64,
) -> CliResult<ProposalSet> {
    if planes.is_empty() {
        return Err(Failure::compute("gss", "no planar regions to group"));
    }
    let regions = initial_regions(cloud, planes, seg)?;
    let out = search(cloud, &regions, strategies, post, seed)?;
    let before = out.proposals.len();
    let proposals: Vec<Proposal> = match prior {
        Some(t) => out
            .proposals
            .into_iter()
            .filter(|p| t.filter_proposal(&p.bbox).keeps())
            .collect(),
        None => out.proposals,
    };
    Ok(ProposalSet {
        num_regions: regions.len(),
        strategies: strategies.to_vec(),
        rejected_by_prior: before - proposals.len(),
        proposals,
    })
}

#[derive(Serialize)]
struct ProposeConfig<'a> {
    strategies: &'a [Strategy],
    postprocess: &'a PostprocessConfig,
    segmentation: bool,
    prior: Option<&'a str>,
}

pub fn run(args: &ProposeArgs) -> CliResult<()> {
    let strategies = match &args.strategies {
        Some(p) => inputs::strategies(p)?,
        None => Strategy::default_set(args.seg.is_some(), DEFAULT_JITTER),
    };
    let post = PostprocessConfig {
        max_proposals: args.max_proposals,
        ..Default::default()
    };
    post.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let prior = args.prior.as_deref().map(super::prior_table).transpose()?;
    let cloud = inputs::cloud(&args.input)?;
    let planes = inputs::regions(&args.regions)?;
    let seg = args.seg.as_deref().map(inputs::scores).transpose()?;
    let set = search_scene(
        &cloud,
        &planes,
        seg.as_ref(),
        &strategies,
        &post,
        prior.as_ref(),
        args.seed,
    )?;
    let config = ProposeConfig {
        strategies: &strategies,
        postprocess: &post,
        segmentation: seg.is_some(),
        prior: args.prior.as_deref(),
    };
    write_json(&args.out, &Provenance::new(&config, Some(args.seed)).wrap(&set))
}
