//! Multinomial densities and static multinomial-mixture EM.
//!
//! Labels are zero-based throughout the crate: component `k` of a `K`-component
//! model is addressed as `0..K`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PlmmError, Result};
use crate::scalar::{clamp_simplex, log_probs, log_sum_exp, on_simplex, Real};

/// A `D`-dimensional vector of non-negative counts. Its order `V` is the total count.
#[derive(Debug, Clone, PartialEq)]
pub struct CountVector {
    counts: Vec<u32>,
    order: u64,
    log_coefficient: f64,
}

impl CountVector {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(PlmmError::InvalidValue(format!(
                "count vectors need at least 2 categories, got {}",
                counts.len()
            )));
        }
        let order: u64 = counts.iter().map(|&c| c as u64).sum();
        let log_coefficient =
            ln_factorial(order) - counts.iter().map(|&c| ln_factorial(c as u64)).sum::<f64>();
        Ok(Self {
            counts,
            order,
            log_coefficient,
        })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    /// Total count `V`.
    pub fn order(&self) -> u64 {
        self.order
    }

    /// `ln(V! / Π x_d!)`.
    pub fn log_coefficient(&self) -> f64 {
        self.log_coefficient
    }
}

fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// Count vectors grouped into an ordered sequence of epochs sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalDataset {
    epochs: Vec<Vec<CountVector>>,
    dim: usize,
}

impl TemporalDataset {
    pub fn new(epochs: Vec<Vec<CountVector>>) -> Result<Self> {
        let first = epochs
            .first()
            .and_then(|e| e.first())
            .ok_or(PlmmError::EmptyData("dataset has no epochs"))?;
        let dim = first.dim();
        for epoch in &epochs {
            if epoch.is_empty() {
                return Err(PlmmError::EmptyData(
                    "every epoch needs at least one sample",
                ));
            }
            if let Some(x) = epoch.iter().find(|x| x.dim() != dim) {
                return Err(PlmmError::DimensionMismatch {
                    expected: dim,
                    found: x.dim(),
                });
            }
        }
        Ok(Self { epochs, dim })
    }

    pub fn epochs(&self) -> &[Vec<CountVector>] {
        &self.epochs
    }

    pub fn epoch(&self, t: usize) -> &[CountVector] {
        &self.epochs[t]
    }

    pub fn num_epochs(&self) -> usize {
        self.epochs.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epoch_sizes(&self) -> Vec<usize> {
        self.epochs.iter().map(Vec::len).collect()
    }
}

/// Mixture `Σ_k π_k M(x | μ_k)` of `K` multinomials over `D` categories.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel<T> {
    weights: Vec<T>,
    components: Vec<Vec<T>>,
}

impl<T: Real> MixtureModel<T> {
    pub fn new(weights: Vec<T>, components: Vec<Vec<T>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(PlmmError::InvalidValue(
                "mixture needs at least one component".into(),
            ));
        }
        if weights.len() != components.len() {
            return Err(PlmmError::DimensionMismatch {
                expected: weights.len(),
                found: components.len(),
            });
        }
        if !on_simplex(&weights, T::SIMPLEX_TOL) {
            return Err(PlmmError::NotOnSimplex(format!(
                "mixture weights {weights:?}"
            )));
        }
        let dim = components[0].len();
        if dim < 2 {
            return Err(PlmmError::InvalidValue("components need D >= 2".into()));
        }
        for (k, row) in components.iter().enumerate() {
            if row.len() != dim {
                return Err(PlmmError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            if !on_simplex(row, T::SIMPLEX_TOL) {
                return Err(PlmmError::NotOnSimplex(format!("component {k}: {row:?}")));
            }
        }
        Ok(Self {
            weights,
            components,
        })
    }

    /// Equal weights over the given rows.
    pub fn with_uniform_weights(components: Vec<Vec<T>>) -> Result<Self> {
        let k = components.len().max(1);
        Self::new(
            vec![T::one() / T::of_usize(k); components.len()],
            components,
        )
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn components(&self) -> &[Vec<T>] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &[T] {
        &self.components[k]
    }

    pub fn into_parts(self) -> (Vec<T>, Vec<Vec<T>>) {
        (self.weights, self.components)
    }
}

/// Posterior membership probabilities `ρ_{i,k}`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponsibilityMatrix<T> {
    n: usize,
    k: usize,
    values: Vec<T>,
}

impl<T: Real> ResponsibilityMatrix<T> {
    pub fn new(n: usize, k: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != n * k {
            return Err(PlmmError::DimensionMismatch {
                expected: n * k,
                found: values.len(),
            });
        }
        let m = Self { n, k, values };
        for i in 0..n {
            if !on_simplex(m.row(i), T::SIMPLEX_TOL) {
                return Err(PlmmError::NotOnSimplex(format!("responsibility row {i}")));
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        let values = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(rows.len(), k, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.values.chunks(self.k.max(1))
    }

    /// `Σ_i ρ_{i,k}` for every component.
    pub fn column_sums(&self) -> Vec<T> {
        let mut sums = vec![T::zero(); self.k];
        for row in self.rows() {
            for (s, &r) in sums.iter_mut().zip(row) {
                *s += r;
            }
        }
        sums
    }
}

/// Static EM settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmConfig {
    pub max_iterations: usize,
    pub loglik_tolerance: f64,
    pub small_em_runs: usize,
    pub small_em_iterations: usize,
    pub rng_seed: u64,
    /// Include the multinomial coefficient in reported log-likelihoods.
    pub include_coefficient: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            loglik_tolerance: 1e-4,
            small_em_runs: 10,
            small_em_iterations: 10,
            rng_seed: 0,
            include_coefficient: true,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(PlmmError::InvalidConfig(
                "max_iterations must be >= 1".into(),
            ));
        }
        if !(self.loglik_tolerance > 0.0) {
            return Err(PlmmError::InvalidConfig(
                "loglik_tolerance must be > 0".into(),
            ));
        }
        if self.small_em_runs == 0 {
            return Err(PlmmError::InvalidConfig(
                "small_em_runs must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of an EM run.
#[derive(Debug, Clone, PartialEq)]
pub struct EmFit<T> {
    pub model: MixtureModel<T>,
    pub resp: ResponsibilityMatrix<T>,
    pub loglik: T,
    /// Observed-data log-likelihood before the first M-step and after each one.
    pub trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Number of empty components that were re-seeded.
    pub repairs: usize,
}

/// `ln M(x | V, μ)`. Without the coefficient only `Σ_d x_d ln μ_d` is returned.
pub fn multinomial_log_pmf<T: Real>(
    x: &CountVector,
    mu: &[T],
    with_coefficient: bool,
) -> Result<T> {
    if x.dim() != mu.len() {
        return Err(PlmmError::DimensionMismatch {
            expected: mu.len(),
            found: x.dim(),
        });
    }
    if !on_simplex(mu, T::INPUT_TOL) {
        return Err(PlmmError::NotOnSimplex(format!("{mu:?}")));
    }
    let log_mu = log_probs(mu);
    let kernel = dot_counts(x, &log_mu);
    Ok(if with_coefficient {
        kernel + T::of(x.log_coefficient())
    } else {
        kernel
    })
}

#[inline]
fn dot_counts<T: Real>(x: &CountVector, log_mu: &[T]) -> T {
    x.counts()
        .iter()
        .zip(log_mu)
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &l)| T::of(c as f64) * l)
        .sum()
}

fn check_data<T: Real>(data: &[CountVector], dim: usize) -> Result<()> {
    if data.is_empty() {
        return Err(PlmmError::EmptyData("epoch has no samples"));
    }
    if let Some(x) = data.iter().find(|x| x.dim() != dim) {
        return Err(PlmmError::DimensionMismatch {
            expected: dim,
            found: x.dim(),
        });
    }
    Ok(())
}

/// Result of one E-step evaluated in log space.
pub(crate) struct Expectation<T> {
    pub resp: ResponsibilityMatrix<T>,
    /// Per-sample `ln Σ_k π_k Π_d μ_{k,d}^{x_d}` (coefficient excluded).
    pub sample_kernel: Vec<T>,
    pub loglik: T,
}

/// E-step against arbitrary weights and component rows.
pub(crate) fn expectation<T: Real>(
    data: &[CountVector],
    weights: &[T],
    components: &[Vec<T>],
    with_coefficient: bool,
) -> Result<Expectation<T>> {
    let k = weights.len();
    let log_w: Vec<T> = weights.iter().map(|&w| w.ln()).collect();
    let log_mu: Vec<Vec<T>> = components.iter().map(|r| log_probs(r)).collect();
    let rows: Vec<Result<(Vec<T>, T)>> = data
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let joint: Vec<T> = (0..k)
                .map(|j| log_w[j] + dot_counts(x, &log_mu[j]))
                .collect();
            let total = log_sum_exp(&joint);
            if !total.is_finite() {
                return Err(PlmmError::ZeroLikelihood { sample: i });
            }
            Ok((
                joint.into_iter().map(|l| (l - total).exp()).collect(),
                total,
            ))
        })
        .collect();
    let mut values = Vec::with_capacity(data.len() * k);
    let mut sample_kernel = Vec::with_capacity(data.len());
    for row in rows {
        let (r, total) = row?;
        values.extend(r);
        sample_kernel.push(total);
    }
    let mut loglik: T = sample_kernel.iter().copied().sum();
    if with_coefficient {
        loglik += T::of(data.iter().map(CountVector::log_coefficient).sum());
    }
    Ok(Expectation {
        resp: ResponsibilityMatrix {
            n: data.len(),
            k,
            values,
        },
        sample_kernel,
        loglik,
    })
}

/// Observed-data log-likelihood `Σ_i ln Σ_k π_k M(x_i | μ_k)`, coefficient included.
pub fn mixture_log_likelihood<T: Real>(data: &[CountVector], model: &MixtureModel<T>) -> Result<T> {
    mixture_log_likelihood_with(data, model, true)
}

pub fn mixture_log_likelihood_with<T: Real>(
    data: &[CountVector],
    model: &MixtureModel<T>,
    with_coefficient: bool,
) -> Result<T> {
    check_data::<T>(data, model.dim())?;
    Ok(expectation(data, model.weights(), model.components(), with_coefficient)?.loglik)
}

/// Posterior responsibilities. The multinomial coefficient cancels and is never computed.
pub fn e_step<T: Real>(
    data: &[CountVector],
    model: &MixtureModel<T>,
) -> Result<ResponsibilityMatrix<T>> {
    check_data::<T>(data, model.dim())?;
    Ok(expectation(data, model.weights(), model.components(), false)?.resp)
}

/// Responsibility-weighted category counts `Σ_i ρ_{i,k} x_{i,d}` per component.
pub(crate) fn weighted_counts<T: Real>(
    data: &[CountVector],
    resp: &ResponsibilityMatrix<T>,
) -> Vec<Vec<T>> {
    let dim = data[0].dim();
    let mut stats = vec![vec![T::zero(); dim]; resp.k()];
    for (x, row) in data.iter().zip(resp.rows()) {
        for (k, &r) in row.iter().enumerate() {
            for (s, &c) in stats[k].iter_mut().zip(x.counts()) {
                if c > 0 {
                    *s += r * T::of(c as f64);
                }
            }
        }
    }
    stats
}

fn empirical_row<T: Real>(x: &CountVector) -> Vec<T> {
    if x.order() == 0 {
        return vec![T::one() / T::of_usize(x.dim()); x.dim()];
    }
    let v = T::of(x.order() as f64);
    clamp_simplex(
        &x.counts()
            .iter()
            .map(|&c| T::of(c as f64) / v)
            .collect::<Vec<_>>(),
    )
}

/// M-step on which components are empty; `None` marks an empty component.
fn m_step_rows<T: Real>(
    data: &[CountVector],
    resp: &ResponsibilityMatrix<T>,
) -> (Vec<T>, Vec<Option<Vec<T>>>) {
    let n = T::of_usize(data.len());
    let mass = resp.column_sums();
    let stats = weighted_counts(data, resp);
    let min_mass = T::of(1e-8) * n;
    let weights: Vec<T> = mass.iter().map(|&m| m / n).collect();
    let rows = stats
        .into_iter()
        .zip(&mass)
        .map(|(s, &m)| {
            let total: T = s.iter().copied().sum();
            if m < min_mass || !(total > T::zero()) {
                None
            } else {
                Some(clamp_simplex(
                    &s.iter().map(|&v| v / total).collect::<Vec<_>>(),
                ))
            }
        })
        .collect();
    (weights, rows)
}

fn normalize<T: Real>(mut v: Vec<T>) -> Vec<T> {
    let total: T = v.iter().copied().sum();
    v.iter_mut().for_each(|w| *w /= total);
    v
}

/// Closed-form M-step: `π_k` is the mean responsibility and `μ_k` the
/// responsibility-weighted category frequencies (clamped away from 0 and 1).
pub fn m_step_static<T: Real>(
    data: &[CountVector],
    resp: &ResponsibilityMatrix<T>,
) -> Result<MixtureModel<T>> {
    if data.len() != resp.n() {
        return Err(PlmmError::DimensionMismatch {
            expected: resp.n(),
            found: data.len(),
        });
    }
    check_data::<T>(data, data[0].dim())?;
    let (weights, rows) = m_step_rows(data, resp);
    let components = rows
        .into_iter()
        .enumerate()
        .map(|(k, r)| r.ok_or(PlmmError::EmptyComponent { component: k }))
        .collect::<Result<Vec<_>>>()?;
    MixtureModel::new(normalize(weights), components)
}

/// M-step that re-seeds empty components from the worst-explained samples.
fn m_step_repairing<T: Real>(
    data: &[CountVector],
    resp: &ResponsibilityMatrix<T>,
    sample_kernel: &[T],
) -> Result<(MixtureModel<T>, usize)> {
    let (mut weights, rows) = m_step_rows(data, resp);
    let empty: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.is_none().then_some(k))
        .collect();
    let mut order: Vec<usize> = (0..data.len()).collect();
    if !empty.is_empty() {
        // Per-sample log-likelihood including the coefficient, ascending.
        let ll: Vec<f64> = sample_kernel
            .iter()
            .zip(data)
            .map(|(&s, x)| s.as_f64() + x.log_coefficient())
            .collect();
        order.sort_by(|&a, &b| ll[a].total_cmp(&ll[b]).then(a.cmp(&b)));
    }
    let inv_n = T::one() / T::of_usize(data.len());
    let mut seeds = order.into_iter();
    let components = rows
        .into_iter()
        .enumerate()
        .map(|(k, r)| {
            r.unwrap_or_else(|| {
                weights[k] = inv_n;
                let i = seeds.next().unwrap_or(0);
                empirical_row(&data[i])
            })
        })
        .collect();
    Ok((
        MixtureModel::new(normalize(weights), components)?,
        empty.len(),
    ))
}

/// Runs EM from `init` for up to `max_iterations` M-steps.
///
/// Stops once successive log-likelihoods differ by less than the configured
/// tolerance. With `max_iterations == 0` the initial model is returned as is.
pub fn run_em<T: Real>(
    data: &[CountVector],
    init: MixtureModel<T>,
    config: &EmConfig,
    max_iterations: usize,
) -> Result<EmFit<T>> {
    check_data::<T>(data, init.dim())?;
    let coef = config.include_coefficient;
    let tol = T::of(config.loglik_tolerance);
    let mut model = init;
    let mut state = expectation(data, model.weights(), model.components(), coef)?;
    let mut trace = vec![state.loglik];
    let mut converged = false;
    let mut repairs = 0;
    let mut iterations = 0;
    while iterations < max_iterations {
        let (next, repaired) = m_step_repairing(data, &state.resp, &state.sample_kernel)?;
        repairs += repaired;
        let next_state = expectation(data, next.weights(), next.components(), coef)?;
        iterations += 1;
        let delta = (next_state.loglik - state.loglik).abs();
        trace.push(next_state.loglik);
        model = next;
        state = next_state;
        if delta < tol {
            converged = true;
            break;
        }
    }
    Ok(EmFit {
        model,
        resp: state.resp,
        loglik: state.loglik,
        trace,
        iterations,
        converged,
        repairs,
    })
}

/// Random starting model: Dirichlet(1) rows and uniform weights.
pub(crate) fn random_model<T: Real, R: Rng>(k: usize, dim: usize, rng: &mut R) -> MixtureModel<T> {
    let components = (0..k).map(|_| dirichlet_ones(dim, rng)).collect();
    MixtureModel::with_uniform_weights(components).expect("Dirichlet rows lie on the simplex")
}

/// Symmetric Dirichlet(1) draw via normalized unit exponentials.
pub(crate) fn dirichlet_ones<T: Real, R: Rng>(dim: usize, rng: &mut R) -> Vec<T> {
    let draws: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    let row: Vec<T> = draws.iter().map(|&g| T::of(g / total)).collect();
    clamp_simplex(&row)
}

/// Generator for small-EM run `run` under `seed`; runs are independent streams.
fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

/// Best of `small_em_runs` short EM runs from random starts (highest log-likelihood,
/// earliest run on ties).
pub fn small_em_init<T: Real>(
    data: &[CountVector],
    k: usize,
    config: &EmConfig,
) -> Result<MixtureModel<T>> {
    let (model, _) = small_em_candidates(data, k, config)?;
    Ok(model)
}

/// Small-EM winner together with every candidate's final log-likelihood.
pub fn small_em_candidates<T: Real>(
    data: &[CountVector],
    k: usize,
    config: &EmConfig,
) -> Result<(MixtureModel<T>, Vec<T>)> {
    config.validate()?;
    if k == 0 {
        return Err(PlmmError::InvalidValue("K must be >= 1".into()));
    }
    check_data::<T>(data, data.first().map_or(0, CountVector::dim))?;
    let dim = data[0].dim();
    let runs: Vec<Result<EmFit<T>>> = (0..config.small_em_runs)
        .into_par_iter()
        .map(|r| {
            let init = random_model(k, dim, &mut run_rng(config.rng_seed, r));
            run_em(data, init, config, config.small_em_iterations)
        })
        .collect();
    let mut best: Option<EmFit<T>> = None;
    let mut scores = Vec::with_capacity(runs.len());
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(fit) => {
                scores.push(fit.loglik);
                if best.as_ref().is_none_or(|b| fit.loglik > b.loglik) {
                    best = Some(fit);
                }
            }
            Err(e) => {
                scores.push(T::neg_infinity());
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(fit) => Ok((fit.model, scores)),
        None => Err(first_err.expect("at least one run")),
    }
}

/// Full EM from a small-EM start.
pub fn fit_mm_em<T: Real>(data: &[CountVector], k: usize, config: &EmConfig) -> Result<EmFit<T>> {
    config.validate()?;
    if k == 0 {
        return Err(PlmmError::InvalidValue("K must be >= 1".into()));
    }
    if data.len() < k {
        return Err(PlmmError::TooFewSamples {
            needed: k,
            got: data.len(),
        });
    }
    let init = small_em_init(data, k, config)?;
    run_em(data, init, config, config.max_iterations)
}

/// Symmetrized Kullback-Leibler divergence `(KL(a‖b) + KL(b‖a)) / 2`.
pub fn skld<T: Real>(mu_a: &[T], mu_b: &[T]) -> Result<T> {
    if mu_a.len() != mu_b.len() {
        return Err(PlmmError::DimensionMismatch {
            expected: mu_a.len(),
            found: mu_b.len(),
        });
    }
    let a = clamp_simplex(mu_a);
    let b = clamp_simplex(mu_b);
    let half = T::of(0.5);
    // Summing (a - b)·ln(a/b) term by term keeps skld(a, b) == skld(b, a) bit for bit.
    let total: T = a
        .iter()
        .zip(&b)
        .map(|(&p, &q)| (p - q) * (p.ln() - q.ln()))
        .sum();
    Ok(half * total)
}

/// MAP labels; ties resolve to the lowest component index.
pub fn map_assign<T: Real>(resp: &ResponsibilityMatrix<T>) -> Vec<usize> {
    resp.rows()
        .map(|row| {
            let mut best = 0;
            for (k, &r) in row.iter().enumerate() {
                if r > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(c: &[u32]) -> CountVector {
        CountVector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn log_pmf_examples() {
        let v = multinomial_log_pmf(&cv(&[1, 0]), &[0.5f64, 0.5], true).unwrap();
        assert!((v - 0.5f64.ln()).abs() < 1e-15);
        let corner = multinomial_log_pmf(&cv(&[2, 0]), &[1.0f64, 0.0], true).unwrap();
        assert!(corner.abs() < 1e-6);
        let v = multinomial_log_pmf(&cv(&[2, 1]), &[0.6f64, 0.4], true).unwrap();
        assert!((v - (-0.839_329_690_738_026_7)).abs() < 1e-12);
        let kernel = multinomial_log_pmf(&cv(&[2, 1]), &[0.6f64, 0.4], false).unwrap();
        assert!((v - kernel - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_pmf_rejects_bad_inputs() {
        assert!(matches!(
            multinomial_log_pmf(&cv(&[1, 0, 0]), &[0.5f64, 0.5], true),
            Err(PlmmError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            multinomial_log_pmf(&cv(&[1, 0]), &[0.5f64, 0.6], true),
            Err(PlmmError::NotOnSimplex(_))
        ));
    }

    #[test]
    fn count_vector_needs_two_categories() {
        assert!(CountVector::new(vec![3]).is_err());
        assert_eq!(cv(&[2, 3, 0]).order(), 5);
    }

    #[test]
    fn mixture_loglik_examples() {
        let m = MixtureModel::new(vec![1.0f64], vec![vec![0.5, 0.5]]).unwrap();
        let l = mixture_log_likelihood(&[cv(&[1, 0])], &m).unwrap();
        assert!((l - 0.5f64.ln()).abs() < 1e-15);

        let single = MixtureModel::new(vec![1.0f64], vec![vec![0.3, 0.7]]).unwrap();
        let doubled =
            MixtureModel::new(vec![0.2f64, 0.8], vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let data = [cv(&[2, 1]), cv(&[0, 3]), cv(&[4, 4])];
        let a = mixture_log_likelihood(&data, &single).unwrap();
        let b = mixture_log_likelihood(&data, &doubled).unwrap();
        assert!((a - b).abs() < 1e-12);

        let m = MixtureModel::new(vec![1.0f64], vec![vec![0.6, 0.4]]).unwrap();
        let data = [cv(&[2, 1]), cv(&[0, 3])];
        let oracle = (3.0 * 0.6f64 * 0.6 * 0.4).ln() + (0.4f64 * 0.4 * 0.4).ln();
        assert!((mixture_log_likelihood(&data, &m).unwrap() - oracle).abs() < 1e-12);

        assert!(mixture_log_likelihood::<f64>(&[], &m).is_err());
    }

    #[test]
    fn e_step_examples() {
        let data = [cv(&[1, 0]), cv(&[3, 4])];
        let one = MixtureModel::new(vec![1.0f64], vec![vec![0.2, 0.8]]).unwrap();
        assert!(e_step(&data, &one).unwrap().rows().all(|r| r == [1.0]));

        let same =
            MixtureModel::new(vec![0.3f64, 0.7], vec![vec![0.2, 0.8], vec![0.2, 0.8]]).unwrap();
        for row in e_step(&data, &same).unwrap().rows() {
            assert!((row[0] - 0.3).abs() < 1e-12 && (row[1] - 0.7).abs() < 1e-12);
        }

        let sep =
            MixtureModel::new(vec![0.5f64, 0.5], vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let r = e_step(&[cv(&[1, 0])], &sep).unwrap();
        assert!((r.row(0)[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn m_step_examples() {
        let data = [cv(&[2, 1]), cv(&[1, 4])];
        let resp = ResponsibilityMatrix::from_rows(&[vec![1.0f64], vec![1.0]]).unwrap();
        let m = m_step_static(&data, &resp).unwrap();
        assert_eq!(m.weights(), &[1.0]);
        assert!((m.component(0)[0] - 3.0 / 8.0).abs() < 1e-12);

        let data = [cv(&[2, 0]), cv(&[0, 2])];
        let resp = ResponsibilityMatrix::from_rows(&[vec![1.0f64, 0.0], vec![0.0, 1.0]]).unwrap();
        let m = m_step_static(&data, &resp).unwrap();
        assert_eq!(m.weights(), &[0.5, 0.5]);
        assert!((m.component(0)[0] - 1.0).abs() < 1e-9 && m.component(0)[1] > 0.0);
        assert!((m.component(1)[1] - 1.0).abs() < 1e-9 && m.component(1)[0] > 0.0);
    }

    #[test]
    fn m_step_flags_empty_component() {
        let data = [cv(&[2, 0]), cv(&[0, 2])];
        let resp = ResponsibilityMatrix::from_rows(&[vec![1.0f64, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            m_step_static(&data, &resp),
            Err(PlmmError::EmptyComponent { component: 1 })
        ));
    }

    #[test]
    fn repaired_m_step_reseeds_from_worst_sample() {
        let data = [cv(&[5, 0]), cv(&[5, 0]), cv(&[0, 5])];
        let resp =
            ResponsibilityMatrix::from_rows(&[vec![1.0f64, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]])
                .unwrap();
        let ex = expectation(&data, &[1.0f64], &[vec![0.6, 0.4]], false).unwrap();
        let (m, repaired) = m_step_repairing(&data, &resp, &ex.sample_kernel).unwrap();
        assert_eq!(repaired, 1);
        assert!(m.component(1)[1] > 0.99);
        assert!(m.weights()[1] > 0.0);
    }

    #[test]
    fn fit_single_component_reaches_empirical_frequencies() {
        let data = [cv(&[2, 1, 0]), cv(&[1, 1, 3])];
        let fit = fit_mm_em::<f64>(&data, 1, &EmConfig::default()).unwrap();
        let expected = [3.0 / 8.0, 2.0 / 8.0, 3.0 / 8.0];
        for (a, b) in fit.model.component(0).iter().zip(expected) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(fit.converged);
        assert!(fit_mm_em::<f64>(&data, 3, &EmConfig::default()).is_err());
    }

    #[test]
    fn single_component_em_is_a_fixed_point() {
        let data = [cv(&[3, 1, 2]), cv(&[1, 4, 1])];
        let m = m_step_static(
            &data,
            &ResponsibilityMatrix::from_rows(&[vec![1.0f64], vec![1.0]]).unwrap(),
        )
        .unwrap();
        let again = m_step_static(&data, &e_step(&data, &m).unwrap()).unwrap();
        for (a, b) in m.component(0).iter().zip(again.component(0)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn small_em_single_run_equals_short_em() {
        let data: Vec<_> = [[5, 1, 0], [4, 2, 1], [0, 1, 6], [1, 0, 5]]
            .iter()
            .map(|c| cv(c))
            .collect();
        let config = EmConfig {
            small_em_runs: 1,
            rng_seed: 9,
            ..EmConfig::default()
        };
        let init = random_model::<f64, _>(2, 3, &mut run_rng(9, 0));
        let short = run_em(&data, init, &config, config.small_em_iterations).unwrap();
        assert_eq!(
            small_em_init::<f64>(&data, 2, &config).unwrap(),
            short.model
        );
    }

    #[test]
    fn small_em_keeps_the_best_candidate() {
        let data: Vec<_> = [[5, 1, 0], [4, 2, 1], [0, 1, 6], [1, 0, 5], [3, 3, 0]]
            .iter()
            .map(|c| cv(c))
            .collect();
        let config = EmConfig {
            small_em_iterations: 2,
            rng_seed: 4,
            ..EmConfig::default()
        };
        let (model, scores) = small_em_candidates::<f64>(&data, 2, &config).unwrap();
        let ll = mixture_log_likelihood(&data, &model).unwrap();
        assert!(scores.iter().all(|&s| ll >= s - 1e-12));
    }

    #[test]
    fn skld_examples() {
        let a = [0.5f64, 0.5];
        let b = [0.9f64, 0.1];
        assert_eq!(skld(&a, &a).unwrap(), 0.0);
        assert!((skld(&a, &b).unwrap() - 0.439_444_915_467_243_9).abs() < 1e-12);
        assert_eq!(skld(&a, &b).unwrap(), skld(&b, &a).unwrap());
        assert!(skld(&a, &[0.2, 0.3, 0.5]).is_err());
    }

    #[test]
    fn map_examples() {
        let resp = ResponsibilityMatrix::from_rows(&[
            vec![1.0f64, 0.0, 0.0],
            vec![0.5, 0.5, 0.0],
            vec![0.2, 0.3, 0.5],
        ])
        .unwrap();
        assert_eq!(map_assign(&resp), vec![0, 0, 2]);
    }

    #[test]
    fn works_in_single_precision() {
        let data = [cv(&[2, 1, 0]), cv(&[1, 1, 3])];
        let fit = fit_mm_em::<f32>(&data, 1, &EmConfig::default()).unwrap();
        assert!((fit.model.component(0)[0] - 0.375).abs() < 1e-5);
    }
}
