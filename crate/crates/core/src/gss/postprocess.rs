use serde::{Deserialize, Serialize};

use super::hac::Proposal;
use crate::error::{Error, Result};
use crate::geometry::nms;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostprocessConfig {
    pub nms_iou: f64,
    pub max_proposals: usize,
    pub remove_largest: bool,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        PostprocessConfig {
            nms_iou: 0.75,
            max_proposals: 1000,
            remove_largest: true,
        }
    }
}

impl PostprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.nms_iou) {
            return Err(Error::InvalidInput(format!(
                "proposal NMS threshold {} not in [0, 1]",
                self.nms_iou
            )));
        }
        if self.max_proposals == 0 {
            return Err(Error::InvalidInput("max_proposals must be at least 1".into()));
        }
        Ok(())
    }
}

// NMS ranked by merge step, earliest first; survivors keep input order.
fn suppress(proposals: &[Proposal], iou: f64) -> Vec<Proposal> {
    let boxes: Vec<_> = proposals.iter().map(|p| p.bbox).collect();
    let scores: Vec<f64> = proposals.iter().map(|p| -(p.step as f64)).collect();
    let mut keep = nms(&boxes, &scores, None, iou);
    keep.sort_unstable();
    keep.into_iter().map(|i| proposals[i].clone()).collect()
}

fn sample(proposals: Vec<Proposal>, max: usize, rng: &mut Rng) -> Vec<Proposal> {
    if proposals.len() <= max {
        return proposals;
    }
    rng.sample_indices(proposals.len(), max)
        .into_iter()
        .map(|i| proposals[i].clone())
        .collect()
}

/// Cleans one HAC pool: NMS, drop the single largest box (when more than
/// one survives), then random subsampling.
pub fn postprocess(pool: &[Proposal], cfg: &PostprocessConfig, rng: &mut Rng) -> Result<Vec<Proposal>> {
    cfg.validate()?;
    let mut kept = suppress(pool, cfg.nms_iou);
    if cfg.remove_largest && kept.len() > 1 {
        let largest = (0..kept.len())
            .max_by(|&a, &b| kept[a].bbox.volume().total_cmp(&kept[b].bbox.volume()).then(b.cmp(&a)))
            .unwrap();
        kept.remove(largest);
    }
    Ok(sample(kept, cfg.max_proposals, rng))
}

/// Combines post-processed runs: concatenation, NMS, subsampling.
pub fn ensemble(runs: &[Vec<Proposal>], cfg: &PostprocessConfig, rng: &mut Rng) -> Result<Vec<Proposal>> {
    cfg.validate()?;
    if runs.is_empty() {
        return Err(Error::InvalidInput("ensemble needs at least one run".into()));
    }
    let all: Vec<Proposal> = runs.iter().flatten().cloned().collect();
    Ok(sample(suppress(&all, cfg.nms_iou), cfg.max_proposals, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Box3;

    fn p(x: f64, len: f64, step: usize) -> Proposal {
        Proposal {
            bbox: Box3::new([x, 0.0, 0.0], [x + len, 1.0, 1.0]).unwrap(),
            strategy: 0,
            step,
        }
    }

    fn disjoint(n: usize, strategy: usize) -> Vec<Proposal> {
        (0..n)
            .map(|i| Proposal {
                strategy,
                ..p(2.0 * i as f64 + 10_000.0 * strategy as f64, 1.0, i)
            })
            .collect()
    }

    #[test]
    fn duplicates_collapse() {
        let cfg = PostprocessConfig {
            remove_largest: false,
            ..Default::default()
        };
        let out = postprocess(&[p(0.0, 1.0, 0), p(0.0, 1.0, 1)], &cfg, &mut Rng::new(0)).unwrap();
        assert_eq!(out, vec![p(0.0, 1.0, 0)]);
    }

    #[test]
    fn scene_spanning_box_removed() {
        let pool = vec![
            p(0.0, 1.0, 0),
            p(3.0, 1.0, 0),
            p(6.0, 1.0, 0),
            Proposal {
                bbox: Box3::new([-1.0, -50.0, -50.0], [50.0, 50.0, 50.0]).unwrap(),
                strategy: 0,
                step: 3,
            },
        ];
        let out = postprocess(&pool, &PostprocessConfig::default(), &mut Rng::new(0)).unwrap();
        assert_eq!(out, pool[..3].to_vec());
        // a lone box survives
        let one = postprocess(&pool[..1], &PostprocessConfig::default(), &mut Rng::new(0)).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn sampling_caps_at_1000() {
        let pool = disjoint(2000, 0);
        let out = postprocess(&pool, &PostprocessConfig::default(), &mut Rng::new(3)).unwrap();
        assert_eq!(out.len(), 1000);
        assert!(out.iter().all(|b| pool.contains(b)));
        assert!(out.windows(2).all(|w| w[0].step < w[1].step));
    }

    #[test]
    fn ensemble_examples() {
        let cfg = PostprocessConfig::default();
        let run = postprocess(&disjoint(30, 0), &cfg, &mut Rng::new(1)).unwrap();
        assert_eq!(
            ensemble(std::slice::from_ref(&run), &cfg, &mut Rng::new(2)).unwrap(),
            run
        );

        let twin: Vec<Proposal> = run
            .iter()
            .map(|x| Proposal {
                strategy: 1,
                ..x.clone()
            })
            .collect();
        assert_eq!(ensemble(&[run.clone(), twin], &cfg, &mut Rng::new(2)).unwrap(), run);

        let out = ensemble(&[disjoint(800, 0), disjoint(800, 1)], &cfg, &mut Rng::new(2)).unwrap();
        assert_eq!(out.len(), 1000);
        assert!(ensemble(&[], &cfg, &mut Rng::new(0)).is_err());
    }
}
