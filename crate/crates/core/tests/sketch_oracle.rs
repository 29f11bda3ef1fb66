mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use streaming_sdp::sketch::{self, SketchSeed};

fn fast_vs_dense(n: usize, s: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let slack = random_pd(&mut r, n);
    let a = random_symmetric(&mut r, n);
    let root = inv_sqrt(&slack);
    let sk = SketchSeed::with_size(n, s, seed).unwrap();
    let ws = sketch::refresh_workspace(&sk, &root).unwrap();
    let fast = sketch::sketch_constraint(&ws, &sk, &a).unwrap();

    let padded = pad_rows(&root, sk.n_pad);
    let dense = dense_pi(&sk) * kron(&padded, &padded) * vec_of(&a);
    (fast - &dense).norm() / dense.norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn fast_sketch_matches_dense_operator(n in 1usize..=9, s in 1usize..=40, seed in any::<u64>()) {
        prop_assert!(fast_vs_dense(n, s, seed) <= 1e-9);
    }

    #[test]
    fn apply_matches_dense_operator(n in 1usize..=8, s in 1usize..=40, seed in any::<u64>()) {
        let sk = SketchSeed::with_size(n, s, seed).unwrap();
        let mut r = rng(seed ^ 1);
        let len = sk.n_pad * sk.n_pad;
        let x = DVector::from_fn(len, |_, _| r.random::<f64>() - 0.5);
        let fast = sk.apply(x.as_slice()).unwrap();
        let dense = dense_pi(&sk) * &x;
        prop_assert!((fast - &dense).norm() <= 1e-10 * dense.norm().max(1.0));
    }

    #[test]
    fn sketch_is_linear_in_the_constraint(n in 1usize..=8, seed in any::<u64>(), t in -3.0f64..3.0) {
        let mut r = rng(seed);
        let root = inv_sqrt(&random_pd(&mut r, n));
        let (a, b) = (random_symmetric(&mut r, n), random_symmetric(&mut r, n));
        let sk = SketchSeed::with_size(n, 16, seed).unwrap();
        let ws = sketch::refresh_workspace(&sk, &root).unwrap();
        let q = |m: &DMatrix<f64>| sketch::sketch_constraint(&ws, &sk, m).unwrap();
        let lhs = q(&(&a * t + &b));
        let rhs = q(&a) * t + q(&b);
        prop_assert!((lhs - &rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }
}

use rand::Rng;

#[test]
fn exhaustive_sketch_is_an_isometry() {
    for n in [1, 3, 4, 5] {
        let sk = SketchSeed::exhaustive(n, 9).unwrap();
        let pi = dense_pi(&sk);
        let gram = pi.transpose() * &pi;
        let eye = DMatrix::identity(gram.nrows(), gram.ncols());
        assert!((gram - eye).amax() < 1e-12, "n={n}");
    }
}

#[test]
fn squared_norm_is_unbiased() {
    let n_pad = 16;
    let mut r = rng(77);
    let x: Vec<f64> = (0..n_pad * n_pad).map(|_| r.random::<f64>() - 0.5).collect();
    let target: f64 = x.iter().map(|v| v * v).sum();
    let trials = 2000;
    let samples: Vec<f64> = (0..trials)
        .map(|t| {
            let sk = SketchSeed::with_size(n_pad, 32, 1000 + t).unwrap();
            sk.apply(&x).unwrap().norm_squared()
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
    let se = (var / trials as f64).sqrt();
    assert!((mean - target).abs() <= 3.0 * se, "mean {mean}, target {target}, se {se}");
}

#[test]
fn subspace_embedding_on_a_random_subspace() {
    let (n_pad, m, s, eps) = (32usize, 4usize, 512usize, 0.5);
    let mut r = rng(5);
    let g = DMatrix::from_fn(n_pad * n_pad, m, |_, _| r.random::<f64>() - 0.5);
    let u = g.qr().q();
    let mut good = 0;
    for t in 0..100 {
        let sk = SketchSeed::with_size(n_pad, s, 500 + t).unwrap();
        let mut pu = DMatrix::zeros(s, m);
        for j in 0..m {
            let col: Vec<f64> = u.column(j).iter().copied().collect();
            pu.set_column(j, &sk.apply(&col).unwrap());
        }
        let sv = pu.singular_values();
        if sv.iter().all(|v| (1.0 - eps..=1.0 + eps).contains(v)) {
            good += 1;
        }
    }
    assert!(good >= 95, "{good}/100 trials embedded the subspace");
}
