use serde::Serialize;

use gss3d::io::score_matrix_to_csv;
use gss3d::prior::{apply_floor_prior, floor_prior};
use gss3d::pseudolabel::{det_pseudo_labels, seg_pseudo_labels, SegPseudoLabels};

use crate::failure::{CliResult, Failure};
use crate::output::{write_atomic, write_json, Provenance};
use crate::{inputs, PseudoLabelArgs, Task};

const IGNORE: i64 = -1;

#[derive(Serialize)]
struct PseudoConfig<'a> {
    task: &'static str,
    p1: f64,
    p2: f64,
    tau: f64,
    prior: Option<&'a str>,
    floor_class: Option<usize>,
}

#[derive(Serialize)]
struct RStar<'a> {
    r_star: &'a [Vec<usize>],
}

pub fn run(args: &PseudoLabelArgs) -> CliResult<()> {
    let tags = inputs::tags(&args.tags)?;
    let scores = inputs::scores(&args.scores)?;
    let y = match args.task {
        Task::Seg => {
            let mut labels = seg_pseudo_labels(&tags, &scores, args.p1)?;
            match (&args.cloud, args.floor_class) {
                (Some(path), Some(floor)) => {
                    let cloud = inputs::cloud(path)?;
                    let as_ints: Vec<i64> = labels.labels.iter().map(|l| l.map_or(IGNORE, |c| c as i64)).collect();
                    let fixed = apply_floor_prior(&as_ints, &cloud, floor_prior(&cloud), floor, Some(&scores), IGNORE)?;
                    labels = SegPseudoLabels {
                        labels: fixed.into_iter().map(|l| (l >= 0).then_some(l as usize)).collect(),
                        num_classes: labels.num_classes,
                    };
                }
                (None, None) => {}
                _ => return Err(Failure::usage("the floor prior needs both --cloud and --floor-class")),
            }
            labels.to_matrix()
        }
        Task::Det => {
            let path = args
                .proposals
                .as_deref()
                .ok_or_else(|| Failure::usage("--task det needs --proposals"))?;
            let proposals = inputs::proposals(path)?;
            let mut labels = det_pseudo_labels(&tags, &scores, &proposals, args.tau, args.p2)?;
            if let Some(arg) = &args.prior {
                labels = super::prior_table(arg)?.filter_pseudo_labels(&labels, &proposals);
            }
            if let Some(out) = &args.r_star {
                let config = PseudoConfig {
                    task: "det",
                    p1: args.p1,
                    p2: args.p2,
                    tau: args.tau,
                    prior: args.prior.as_deref(),
                    floor_class: None,
                };
                write_json(
                    out,
                    &Provenance::new(&config, None).wrap(&RStar { r_star: &labels.r_star }),
                )?;
            }
            labels.y
        }
    };
    write_atomic(&args.out, score_matrix_to_csv(&y).as_bytes())
}
