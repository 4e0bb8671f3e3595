use gss3d::losses::{
    cross_task_d2s, cst_det, cst_seg, kl_divergence, mil_det, mil_seg, self_det, self_seg, smooth, softmax,
    softmax_pair, LossReport, LossTerms, LossWeights,
};
use gss3d::{Rng, SceneTags, ScoreMatrix};
use proptest::prelude::*;

fn random_matrix(rng: &mut Rng, rows: usize, cols: usize, scale: f64) -> ScoreMatrix {
    ScoreMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.normal(0.0, scale)).collect()).unwrap()
}

fn random_tags(rng: &mut Rng, c: usize) -> SceneTags {
    SceneTags::from_bools(&(0..c).map(|_| rng.below(2) == 1).collect::<Vec<_>>())
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

#[test]
fn mil_seg_gradient_matches_central_differences() {
    let mut rng = Rng::new(1);
    let h = 1e-4;
    for _ in 0..50 {
        let (n, c) = (1 + rng.below(6), 1 + rng.below(5));
        let tags = random_tags(&mut rng, c);
        let u = random_matrix(&mut rng, n, c, 2.0);
        let (_, grad) = mil_seg(&tags, &u).unwrap();
        for p in 0..n {
            for k in 0..c {
                let mut up = u.clone();
                up.set(p, k, u.get(p, k) + h);
                let mut dn = u.clone();
                dn.set(p, k, u.get(p, k) - h);
                let fd = (mil_seg(&tags, &up).unwrap().0 - mil_seg(&tags, &dn).unwrap().0) / (2.0 * h);
                assert!(rel_err(fd, grad.get(p, k)) < 1e-4, "{fd} vs {}", grad.get(p, k));
            }
        }
    }
}

// Probabilities whose column sums stay well inside (0, 1).
fn pooled_probs(rng: &mut Rng, rows: usize, cols: usize) -> ScoreMatrix {
    let mut u = ScoreMatrix::zeros(rows, cols);
    for c in 0..cols {
        let total = rng.uniform_range(0.1, 0.9);
        let w: Vec<f64> = (0..rows).map(|_| rng.uniform_range(0.1, 1.0)).collect();
        let s: f64 = w.iter().sum();
        for (r, wr) in w.iter().enumerate() {
            u.set(r, c, total * wr / s);
        }
    }
    u
}

#[test]
fn mil_det_gradient_matches_central_differences() {
    let mut rng = Rng::new(2);
    let h = 1e-4;
    for _ in 0..50 {
        let (n, c) = (1 + rng.below(6), 1 + rng.below(4));
        let tags = random_tags(&mut rng, c);
        let background = rng.below(2) == 1;
        let u = pooled_probs(&mut rng, n, c + 1);
        let (_, grad) = mil_det(&tags, background, &u).unwrap();
        for r in 0..n {
            for k in 0..=c {
                let mut up = u.clone();
                up.set(r, k, u.get(r, k) + h);
                let mut dn = u.clone();
                dn.set(r, k, u.get(r, k) - h);
                let fd = (mil_det(&tags, background, &up).unwrap().0 - mil_det(&tags, background, &dn).unwrap().0)
                    / (2.0 * h);
                assert!(rel_err(fd, grad.get(r, k)) < 1e-4, "{fd} vs {}", grad.get(r, k));
            }
        }
    }
}

fn one_hot_rows(rng: &mut Rng, rows: usize, cols: usize) -> ScoreMatrix {
    let mut y = ScoreMatrix::zeros(rows, cols);
    for r in 0..rows {
        if rng.below(4) > 0 {
            y.set(r, rng.below(cols), 1.0);
        }
    }
    y
}

#[test]
fn every_term_is_non_negative() {
    let mut rng = Rng::new(3);
    for _ in 0..1000 {
        let (n, r, c) = (1 + rng.below(12), 1 + rng.below(8), 1 + rng.below(5));
        let tags = random_tags(&mut rng, c);
        let s_seg = random_matrix(&mut rng, n, c, 3.0);
        let s_det = random_matrix(&mut rng, r, c + 1, 3.0);
        let u_det = softmax_pair(&s_det, &random_matrix(&mut rng, r, c + 1, 3.0)).unwrap();
        let corr: Vec<(usize, usize)> = (0..n).map(|p| (p, rng.below(n))).collect();
        let membership: Vec<Vec<usize>> = (0..r).map(|_| (0..n).filter(|_| rng.below(2) == 0).collect()).collect();
        let confident: Vec<usize> = (0..r)
            .filter(|&i| !membership[i].is_empty() && rng.below(2) == 0)
            .collect();
        let planes: Vec<Vec<usize>> = (0..3).map(|_| (0..n).filter(|_| rng.below(3) == 0).collect()).collect();
        let planes: Vec<Vec<usize>> = planes.into_iter().filter(|p| !p.is_empty()).collect();

        let mut terms = vec![
            mil_seg(&tags, &s_seg).unwrap().0,
            self_seg(&one_hot_rows(&mut rng, n, c), &s_seg).unwrap(),
            cst_seg(&s_seg, &random_matrix(&mut rng, n, c, 3.0), &corr).unwrap(),
            cross_task_d2s(&confident, &s_det, &s_seg, &membership).unwrap(),
            mil_det(&tags, rng.below(2) == 0, &u_det).unwrap().0,
            self_det(&one_hot_rows(&mut rng, r, c + 1), &s_det).unwrap(),
            cst_det(&s_det, &random_matrix(&mut rng, r, c + 1, 3.0)).unwrap(),
        ];
        if !planes.is_empty() {
            terms.push(smooth(&planes, &s_seg).unwrap());
        }
        for (i, t) in terms.iter().enumerate() {
            assert!(t.is_finite() && *t >= 0.0, "term {i} = {t}");
        }
    }
}

#[test]
fn consistency_terms_vanish_on_identical_inputs() {
    let mut rng = Rng::new(4);
    for _ in 0..200 {
        let (n, c) = (1 + rng.below(10), 1 + rng.below(6));
        let s = random_matrix(&mut rng, n, c, 5.0);
        let corr: Vec<(usize, usize)> = (0..n).map(|p| (p, p)).collect();
        assert_eq!(cst_seg(&s, &s, &corr).unwrap(), 0.0);
        assert_eq!(cst_det(&s, &s).unwrap(), 0.0);
        for p in 0..n {
            let d = softmax(s.row(p));
            assert_eq!(kl_divergence(&d, &d), 0.0);
        }
    }
}

proptest! {
    #[test]
    fn totals_are_weighted_sums(
        t in prop::array::uniform8(prop::option::of(0.0..10.0f64)),
        w in prop::array::uniform8(0.0..3.0f64),
    ) {
        let terms = LossTerms {
            seg_mil: t[0], seg_self: t[1], seg_cst: t[2], d2s: t[3], smooth: t[4],
            det_mil: t[5], det_self: t[6], det_cst: t[7],
        };
        let weights = LossWeights {
            seg_mil: w[0], seg_self: w[1], seg_cst: w[2], d2s: w[3], smooth: w[4],
            det_mil: w[5], det_self: w[6], det_cst: w[7],
        };
        let report = LossReport::new(terms, weights);
        let part = |i: usize| t[i].map_or(0.0, |v| w[i] * v);
        prop_assert_eq!(report.total_seg, (0..5).map(part).fold(0.0, |a, b| a + b));
        prop_assert_eq!(report.total_det, (5..8).map(part).fold(0.0, |a, b| a + b));
    }

    #[test]
    fn softmax_pair_columns_sum_to_at_most_one(
        rows in 1usize..10, cols in 1usize..6, seed in 0u64..10_000,
    ) {
        let mut rng = Rng::new(seed);
        let u = softmax_pair(&random_matrix(&mut rng, rows, cols, 4.0), &random_matrix(&mut rng, rows, cols, 4.0)).unwrap();
        for c in 0..cols {
            let s: f64 = u.column(c).sum();
            prop_assert!(s > 0.0 && s <= 1.0 + 1e-12);
        }
    }
}
