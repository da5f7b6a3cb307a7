//! Clustering and fit metrics: ARI, held-out perplexity, sub-model selection rates.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PlmmError, Result};
use crate::evolve::{fit_transition, EpochResult, PlmmConfig};
use crate::link::SubModel;
use crate::mm::{fit_mm_em, mixture_log_likelihood_with, CountVector, EmConfig, MixtureModel};
use crate::scalar::Real;

fn pairs(n: u64) -> i128 {
    let n = n as i128;
    n * (n - 1) / 2
}

/// ARI as an exact fraction `(numerator, denominator)`.
///
/// Both are scaled by `2·C(n, 2)` relative to the usual contingency-table
/// expression. A zero denominator means both partitions are trivial in the same
/// way and is reported as `(1, 1)`.
pub fn ari_fraction(labels_a: &[usize], labels_b: &[usize]) -> Result<(i128, i128)> {
    if labels_a.len() != labels_b.len() {
        return Err(PlmmError::DimensionMismatch {
            expected: labels_a.len(),
            found: labels_b.len(),
        });
    }
    if labels_a.len() < 2 {
        return Err(PlmmError::TooFewSamples {
            needed: 2,
            got: labels_a.len(),
        });
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&a, &b) in labels_a.iter().zip(labels_b) {
        *table.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    let index: i128 = table.values().map(|&c| pairs(c)).sum();
    let sum_a: i128 = rows.values().map(|&c| pairs(c)).sum();
    let sum_b: i128 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(labels_a.len() as u64);
    let num = 2 * (index * total - sum_a * sum_b);
    let den = (sum_a + sum_b) * total - 2 * sum_a * sum_b;
    if den == 0 {
        Ok((1, 1))
    } else {
        Ok((num, den))
    }
}

/// Adjusted Rand Index in `[-1, 1]`; 1 for identical partitions up to relabeling.
pub fn adjusted_rand_index(labels_a: &[usize], labels_b: &[usize]) -> Result<f64> {
    let (num, den) = ari_fraction(labels_a, labels_b)?;
    Ok(num as f64 / den as f64)
}

/// ARI per epoch from the second epoch on, with mean and sample standard deviation.
pub fn ari_over_epochs(
    truth: &[Vec<usize>],
    fitted: &[Vec<usize>],
) -> Result<(Vec<f64>, f64, f64)> {
    if truth.len() != fitted.len() {
        return Err(PlmmError::DimensionMismatch {
            expected: truth.len(),
            found: fitted.len(),
        });
    }
    let values = truth
        .iter()
        .zip(fitted)
        .skip(1)
        .map(|(a, b)| adjusted_rand_index(a, b))
        .collect::<Result<Vec<_>>>()?;
    let (mean, std) = mean_std(&values);
    Ok((values, mean, std))
}

/// Mean and sample standard deviation; NaN mean for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// `exp(-L / Σ V_i)` on held-out data, multinomial coefficient included.
pub fn perplexity<T: Real>(test: &[CountVector], model: &MixtureModel<T>) -> Result<f64> {
    perplexity_with(test, model, true)
}

pub fn perplexity_with<T: Real>(
    test: &[CountVector],
    model: &MixtureModel<T>,
    include_coefficient: bool,
) -> Result<f64> {
    let total: u64 = test.iter().map(CountVector::order).sum();
    if total == 0 {
        return Err(PlmmError::EmptyData("held-out samples carry no counts"));
    }
    let ll = mixture_log_likelihood_with(test, model, include_coefficient)?;
    Ok((-ll.as_f64() / total as f64).exp())
}

/// How the training part of each fold is fitted.
#[derive(Debug, Clone, Copy)]
pub enum Trainer<'a, T> {
    /// Static mixture EM with small-EM start.
    Static,
    /// Full transition fit from the previous epoch's model.
    Transition {
        previous: &'a MixtureModel<T>,
        config: &'a PlmmConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFoldPerplexity {
    pub per_fold: Vec<f64>,
    pub mean: f64,
}

/// Shuffled fold membership; the first `N mod folds` folds get one extra sample.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / folds, n % folds);
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(idx[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Held-out perplexity for each of `folds` train/test splits.
pub fn kfold_perplexity<T: Real>(
    data: &[CountVector],
    k: usize,
    folds: usize,
    em: &EmConfig,
    seed: u64,
    trainer: Trainer<'_, T>,
) -> Result<KFoldPerplexity> {
    if folds < 2 {
        return Err(PlmmError::InvalidConfig(
            "k-fold evaluation needs at least 2 folds".into(),
        ));
    }
    if data.len() < folds * k {
        return Err(PlmmError::TooFewSamples {
            needed: folds * k,
            got: data.len(),
        });
    }
    let assignment = fold_assignment(data.len(), folds, seed);
    let per_fold = assignment
        .par_iter()
        .map(|test_idx| {
            let mut held_out = vec![false; data.len()];
            for &i in test_idx {
                held_out[i] = true;
            }
            let train: Vec<CountVector> = data
                .iter()
                .zip(&held_out)
                .filter(|(_, &h)| !h)
                .map(|(x, _)| x.clone())
                .collect();
            let test: Vec<CountVector> = test_idx.iter().map(|&i| data[i].clone()).collect();
            let model: MixtureModel<T> = match trainer {
                Trainer::Static => fit_mm_em(&train, k, em)?.model,
                Trainer::Transition { previous, config } => {
                    fit_transition(&train, previous, config)?.model
                }
            };
            perplexity_with(&test, &model, em.include_coefficient)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = per_fold.iter().sum::<f64>() / per_fold.len() as f64;
    Ok(KFoldPerplexity { per_fold, mean })
}

/// Percentage of transitions selecting each sub-model; every sub-model is listed.
pub fn rates_from_selections(
    selected: impl IntoIterator<Item = SubModel>,
) -> Result<BTreeMap<SubModel, f64>> {
    let mut counts: BTreeMap<SubModel, usize> = SubModel::ALL.iter().map(|&m| (m, 0)).collect();
    let mut total = 0usize;
    for m in selected {
        *counts.get_mut(&m).expect("all sub-models present") += 1;
        total += 1;
    }
    if total == 0 {
        return Err(PlmmError::EmptyData("no transitions to count"));
    }
    Ok(counts
        .into_iter()
        .map(|(m, c)| (m, 100.0 * c as f64 / total as f64))
        .collect())
}

/// Selection rates over every transition of every run.
pub fn model_selection_rates<T: Real>(
    runs: &[Vec<EpochResult<T>>],
) -> Result<BTreeMap<SubModel, f64>> {
    rates_from_selections(runs.iter().flatten().filter_map(|e| e.selected_submodel))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub ari_per_epoch: Vec<f64>,
    pub ari_mean: Option<f64>,
    pub ari_std: Option<f64>,
    pub perplexity_per_fold: Vec<f64>,
    pub perplexity_mean: Option<f64>,
    pub submodel_rates: BTreeMap<SubModel, f64>,
    pub include_coefficient: bool,
}
