#![allow(dead_code)]

pub mod checks;

use mkc::kernel::{compute_kernel, KernelKind, ViewMask};
use mkc::{Dataset64, KernelMatrix};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random `n`-sample, `views`-view dataset with ground truth and features.
/// The first `anchors` samples are observed everywhere; every other sample
/// misses at most `views − 1` views.
pub fn random_dataset(seed: u64, n: usize, views: usize, anchors: usize) -> Dataset64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::new();
    let mut kinds = Vec::new();
    let mut truth = Vec::new();
    for _ in 0..views {
        let d = rng.gen_range(2..5);
        let x = DMatrix::from_fn(n, d, |_, _| rng.gen_range(-1.0..1.0));
        let kind = if rng.gen_bool(0.5) {
            KernelKind::Linear
        } else {
            KernelKind::Gaussian { width: 1.0 }
        };
        truth.push(compute_kernel(kind, &x).unwrap());
        features.push(x);
        kinds.push(kind);
    }
    let mut known = vec![vec![true; n]; views];
    for i in anchors..n {
        if rng.gen_bool(0.5) {
            let mut order: Vec<usize> = (0..views).collect();
            order.shuffle(&mut rng);
            let drop = rng.gen_range(1..views);
            for &v in &order[..drop] {
                known[v][i] = false;
            }
        }
    }
    let masks = known
        .iter()
        .map(|flags| ViewMask::new(n, (0..n).filter(|&i| flags[i]).collect()).unwrap())
        .collect();
    Dataset64::from_truth(truth, masks)
        .unwrap()
        .with_features(features, kinds)
        .unwrap()
}

pub fn min_eigenvalue(k: &KernelMatrix<f64>) -> f64 {
    nalgebra::SymmetricEigen::new(k.values().clone()).eigenvalues.min()
}
