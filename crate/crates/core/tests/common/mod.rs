#![allow(dead_code)]

use plmm::synth::sample_epoch;
use plmm::{CountVector, MixtureModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dirichlet(1) row, floored away from the simplex boundary.
pub fn simplex_row<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..d)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            e + 1e-3
        })
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

pub fn random_model<R: Rng>(k: usize, d: usize, rng: &mut R) -> MixtureModel<f64> {
    let w = simplex_row(k, rng);
    let rows = (0..k).map(|_| simplex_row(d, rng)).collect();
    MixtureModel::new(w, rows).unwrap()
}

pub fn sample<R: Rng>(
    model: &MixtureModel<f64>,
    n: usize,
    order: f64,
    rng: &mut R,
) -> (Vec<CountVector>, Vec<usize>) {
    sample_epoch(model, n, &vec![order; model.k()], rng).unwrap()
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

pub fn assert_on_simplex(model: &MixtureModel<f64>) {
    let ws: f64 = model.weights().iter().sum();
    assert!((ws - 1.0).abs() < 1e-9, "weights sum {ws}");
    for row in model.components() {
        let s: f64 = row.iter().sum();
        assert!((s - 1.0).abs() < 1e-9, "row sum {s}");
        assert!(row.iter().all(|&v| v > 0.0 && v < 1.0));
    }
}

pub fn empirical_frequencies(data: &[CountVector], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let d = data[0].dim();
    let mut sums = vec![vec![0.0; d]; k];
    for (x, &z) in data.iter().zip(labels) {
        for (s, &c) in sums[z].iter_mut().zip(x.counts()) {
            *s += c as f64;
        }
    }
    for row in &mut sums {
        let t: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= t);
    }
    sums
}
