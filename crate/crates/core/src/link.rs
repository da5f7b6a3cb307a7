//! Probit-space parametric link between consecutive multinomial mixtures.
//!
//! Row `k` of the next-epoch components is obtained from the current one as
//!
//! ```text
//! μ'_{k,d} = Φ(δ_{k,d} Φ⁻¹(μ_{k,d}) + γ_{k,d}) / Σ_r Φ(δ_{k,r} Φ⁻¹(μ_{k,r}) + γ_{k,r})
//! ```
//!
//! and the four sub-models constrain `(δ, γ)`:
//!
//! | sub-model | δ       | γ       | free parameters |
//! |-----------|---------|---------|-----------------|
//! | M1        | 1       | 0       | 0               |
//! | M2        | 0       | free    | K·D             |
//! | M3        | free    | 0       | K·D             |
//! | M4        | 1       | free    | K·D             |

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PlmmError, Result};
use crate::mm::{
    expectation, weighted_counts, CountVector, EmConfig, MixtureModel, ResponsibilityMatrix,
};
use crate::optim::{componentwise_alternate, BlockMode, Bounds, OptimizerConfig};
use crate::probit::{clamped_quantile, log_std_normal_cdf};
use crate::scalar::{clamp_simplex, log_probs, log_sum_exp, on_simplex, Real};

/// Smallest admissible δ for the free-δ sub-model.
pub const DELTA_MIN: f64 = 1e-3;
/// Largest admissible δ.
pub const DELTA_MAX: f64 = 50.0;
/// γ lives in `[-GAMMA_LIMIT, GAMMA_LIMIT]`.
pub const GAMMA_LIMIT: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubModel {
    /// `1/0`: no evolution.
    M1,
    /// `0/γ_{k,d}`: refit without history.
    M2,
    /// `δ_{k,d}/0`: multiplicative change in probit space.
    M3,
    /// `1/γ_{k,d}`: additive shift in probit space.
    M4,
}

impl SubModel {
    pub const ALL: [SubModel; 4] = [SubModel::M1, SubModel::M2, SubModel::M3, SubModel::M4];

    /// `ν`, the number of free link parameters.
    pub fn free_params(self, k: usize, d: usize) -> usize {
        match self {
            SubModel::M1 => 0,
            _ => k * d,
        }
    }

    /// Position in the BIC tie-break order `M1 < M3 < M4 < M2`.
    pub fn tie_rank(self) -> u8 {
        match self {
            SubModel::M1 => 0,
            SubModel::M3 => 1,
            SubModel::M4 => 2,
            SubModel::M2 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SubModel::M1 => "M1",
            SubModel::M2 => "M2",
            SubModel::M3 => "M3",
            SubModel::M4 => "M4",
        }
    }
}

impl fmt::Display for SubModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SubModel {
    type Err = PlmmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M1" => Ok(SubModel::M1),
            "M2" => Ok(SubModel::M2),
            "M3" => Ok(SubModel::M3),
            "M4" => Ok(SubModel::M4),
            other => Err(PlmmError::InvalidValue(format!(
                "unknown sub-model {other:?}"
            ))),
        }
    }
}

/// `K×D` matrices of δ and γ.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParameters<T> {
    delta: Vec<Vec<T>>,
    gamma: Vec<Vec<T>>,
}

impl<T: Real> LinkParameters<T> {
    /// δ = 1, γ = 0: the identity link.
    pub fn identity(k: usize, d: usize) -> Self {
        Self {
            delta: vec![vec![T::one(); d]; k],
            gamma: vec![vec![T::zero(); d]; k],
        }
    }

    /// Shape-checked constructor; see [`LinkParameters::validate`] for value checks.
    pub fn new(delta: Vec<Vec<T>>, gamma: Vec<Vec<T>>) -> Result<Self> {
        if delta.is_empty() || delta.len() != gamma.len() {
            return Err(PlmmError::DimensionMismatch {
                expected: delta.len(),
                found: gamma.len(),
            });
        }
        let d = delta[0].len();
        for row in delta.iter().chain(&gamma) {
            if row.len() != d {
                return Err(PlmmError::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
        }
        Ok(Self { delta, gamma })
    }

    pub fn k(&self) -> usize {
        self.delta.len()
    }

    pub fn dim(&self) -> usize {
        self.delta[0].len()
    }

    pub fn delta(&self) -> &[Vec<T>] {
        &self.delta
    }

    pub fn gamma(&self) -> &[Vec<T>] {
        &self.gamma
    }

    /// Checks bounds and the constraint pattern of `submodel`.
    pub fn validate(&self, submodel: SubModel) -> Result<()> {
        let (dmin, dmax, g) = (T::of(DELTA_MIN), T::of(DELTA_MAX), T::of(GAMMA_LIMIT));
        for (k, (drow, grow)) in self.delta.iter().zip(&self.gamma).enumerate() {
            for (d, (&dv, &gv)) in drow.iter().zip(grow).enumerate() {
                let delta_ok = match submodel {
                    SubModel::M2 => dv == T::zero(),
                    SubModel::M1 | SubModel::M4 => dv == T::one(),
                    SubModel::M3 => dv >= dmin && dv <= dmax,
                };
                let gamma_ok = match submodel {
                    SubModel::M1 | SubModel::M3 => gv == T::zero(),
                    SubModel::M2 | SubModel::M4 => gv >= -g && gv <= g,
                };
                if !delta_ok || !gamma_ok {
                    return Err(PlmmError::InvalidValue(format!(
                        "link ({k},{d}) = (δ {dv}, γ {gv}) violates {submodel}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Forces the constraint pattern of `submodel` and clips free entries into
    /// their bounds. Returns the projected links and how many free entries were clipped.
    pub fn constrained(&self, submodel: SubModel) -> (Self, usize) {
        let (dmin, dmax, g) = (T::of(DELTA_MIN), T::of(DELTA_MAX), T::of(GAMMA_LIMIT));
        let mut clipped = 0;
        let mut clip = |v: T, lo: T, hi: T| {
            let c = if v.is_nan() {
                T::one().max(lo).min(hi)
            } else {
                v.max(lo).min(hi)
            };
            if c != v {
                clipped += 1;
            }
            c
        };
        let (k, d) = (self.k(), self.dim());
        let mut out = Self::identity(k, d);
        for i in 0..k {
            for j in 0..d {
                let (dv, gv) = (self.delta[i][j], self.gamma[i][j]);
                let (nd, ng) = match submodel {
                    SubModel::M1 => (T::one(), T::zero()),
                    SubModel::M2 => (T::zero(), clip(gv, -g, g)),
                    SubModel::M3 => (clip(dv, dmin, dmax), T::zero()),
                    SubModel::M4 => (T::one(), clip(gv, -g, g)),
                };
                out.delta[i][j] = nd;
                out.gamma[i][j] = ng;
            }
        }
        (out, clipped)
    }
}

/// Log-probabilities of one linked row given the probits of the source row.
fn linked_log_row<T: Real>(probits: &[T], delta: &[T], gamma: &[T]) -> Vec<T> {
    let logs: Vec<T> = probits
        .iter()
        .zip(delta)
        .zip(gamma)
        .map(|((&q, &d), &g)| log_std_normal_cdf(d * q + g))
        .collect();
    let total = log_sum_exp(&logs);
    logs.into_iter().map(|l| l - total).collect()
}

fn linked_row<T: Real>(probits: &[T], delta: &[T], gamma: &[T]) -> Vec<T> {
    clamp_simplex(
        &linked_log_row(probits, delta, gamma)
            .into_iter()
            .map(|l| l.exp())
            .collect::<Vec<_>>(),
    )
}

fn probit_rows<T: Real>(rows: &[Vec<T>]) -> Vec<Vec<T>> {
    rows.iter()
        .map(|r| clamp_simplex(r).into_iter().map(clamped_quantile).collect())
        .collect()
}

fn check_rows<T: Real>(rows: &[Vec<T>], k: usize, d: usize) -> Result<()> {
    if rows.len() != k {
        return Err(PlmmError::DimensionMismatch {
            expected: k,
            found: rows.len(),
        });
    }
    for row in rows {
        if row.len() != d {
            return Err(PlmmError::DimensionMismatch {
                expected: d,
                found: row.len(),
            });
        }
        if !on_simplex(row, T::INPUT_TOL) {
            return Err(PlmmError::NotOnSimplex(format!("{row:?}")));
        }
    }
    Ok(())
}

/// Applies the link to every row of `mu_t`. Output rows lie on the simplex.
///
/// Rows whose link is neutral (`δ = 1`, `γ = 0` throughout) are returned
/// unchanged rather than pushed through the probit round trip.
pub fn apply_link<T: Real>(mu_t: &[Vec<T>], links: &LinkParameters<T>) -> Result<Vec<Vec<T>>> {
    check_rows(mu_t, links.k(), links.dim())?;
    Ok(linked_components(mu_t, &probit_rows(mu_t), links))
}

fn is_neutral<T: Real>(delta: &[T], gamma: &[T]) -> bool {
    delta.iter().all(|&d| d == T::one()) && gamma.iter().all(|&g| g == T::zero())
}

/// Starting links together with how many entries had to be clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkInit<T> {
    pub links: LinkParameters<T>,
    pub clamp_events: usize,
}

/// Closed-form starting links that map `mu_t` onto `mu_pred` when the link
/// denominator equals one.
///
/// M2 takes `γ = Φ⁻¹(μ_pred)`, M3 the probit ratio `Φ⁻¹(μ_pred)/Φ⁻¹(μ_t)` and
/// M4 the probit difference. A ratio with a near-zero denominator falls back to
/// δ = 1, a negative ratio to the lower δ bound.
pub fn init_link_params<T: Real>(
    mu_t: &[Vec<T>],
    mu_pred: &[Vec<T>],
    submodel: SubModel,
) -> Result<LinkInit<T>> {
    let k = mu_t.len();
    let d = mu_t.first().map_or(0, Vec::len);
    check_rows(mu_t, k, d)?;
    check_rows(mu_pred, k, d)?;
    let q_t = probit_rows(mu_t);
    let q_pred = probit_rows(mu_pred);
    let mut raw = LinkParameters::identity(k, d);
    let mut events = 0;
    let singular = T::of(1e-6);
    for i in 0..k {
        for j in 0..d {
            let (qt, qp) = (q_t[i][j], q_pred[i][j]);
            match submodel {
                SubModel::M1 => {}
                SubModel::M2 => raw.gamma[i][j] = qp,
                SubModel::M3 => {
                    raw.delta[i][j] = if qt.abs() < singular {
                        events += 1;
                        T::one()
                    } else {
                        let ratio = qp / qt;
                        if ratio <= T::zero() {
                            events += 1;
                            T::of(DELTA_MIN)
                        } else {
                            ratio
                        }
                    }
                }
                SubModel::M4 => raw.gamma[i][j] = qp - qt,
            }
        }
    }
    let (links, clipped) = raw.constrained(submodel);
    Ok(LinkInit {
        links,
        clamp_events: events + clipped,
    })
}

/// `BIC = -2 L + ν ln n`; lower is better.
pub fn bic<T: Real>(loglik: T, nu: usize, n: usize) -> T {
    -T::of(2.0) * loglik + T::of_usize(nu) * T::of_usize(n).ln()
}

/// A fitted transition under one sub-model.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkFit<T> {
    pub submodel: SubModel,
    pub links: LinkParameters<T>,
    pub weights_next: Vec<T>,
    pub model_next: MixtureModel<T>,
    pub loglik: T,
    pub bic: T,
    pub resp: ResponsibilityMatrix<T>,
    pub trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// M-steps in which the simplex search failed to improve any cluster block.
    pub optimizer_stalls: usize,
}

/// Free coordinates of row `k`: γ for M2/M4, ln δ for M3.
fn free_row<T: Real>(links: &LinkParameters<T>, k: usize, submodel: SubModel) -> Vec<T> {
    match submodel {
        SubModel::M3 => links.delta[k].iter().map(|d| d.ln()).collect(),
        _ => links.gamma[k].clone(),
    }
}

fn row_bounds<T: Real>(submodel: SubModel, d: usize) -> Bounds<T> {
    let (lo, hi) = match submodel {
        SubModel::M3 => (T::of(DELTA_MIN).ln(), T::of(DELTA_MAX).ln()),
        _ => (-T::of(GAMMA_LIMIT), T::of(GAMMA_LIMIT)),
    };
    Bounds::uniform(d, lo, hi).expect("static bounds are ordered")
}

/// Expected complete-data objective of one cluster, `-Σ_d s_d ln μ'_d(θ)`.
fn row_objective<T: Real>(submodel: SubModel, probits: &[T], stats: &[T], theta: &[T]) -> T {
    let d = probits.len();
    let row = match submodel {
        SubModel::M2 => linked_row(probits, &vec![T::zero(); d], theta),
        SubModel::M3 => {
            let delta: Vec<T> = theta.iter().map(|t| t.exp()).collect();
            linked_row(probits, &delta, &vec![T::zero(); d])
        }
        SubModel::M4 => linked_row(probits, &vec![T::one(); d], theta),
        SubModel::M1 => unreachable!("M1 has no free parameters"),
    };
    -log_probs(&row)
        .into_iter()
        .zip(stats)
        .map(|(l, &s)| s * l)
        .sum::<T>()
}

/// Maximizes the expected complete-data log-likelihood over the free link
/// parameters of row `k`. Returns the new free vector and whether it improved.
fn optimize_row<T: Real>(
    submodel: SubModel,
    probits: &[T],
    stats: &[T],
    start: &[T],
    config: &OptimizerConfig,
) -> Result<(Vec<T>, bool)> {
    let d = probits.len();
    if !(stats.iter().copied().sum::<T>() > T::zero()) {
        return Ok((start.to_vec(), false));
    }
    let bounds = row_bounds::<T>(submodel, d);
    let blocks: Vec<Vec<usize>> = match config.block_mode {
        BlockMode::PerCoordinate => (0..d).map(|j| vec![j]).collect(),
        BlockMode::PerRow => vec![(0..d).collect()],
    };
    let f0 = row_objective(submodel, probits, stats, start);
    let found = componentwise_alternate(
        |theta: &[T]| row_objective(submodel, probits, stats, theta),
        start,
        &blocks,
        &bounds,
        config,
    )?;
    if found.f < f0 {
        Ok((found.x, true))
    } else {
        Ok((start.to_vec(), false))
    }
}

fn set_free_row<T: Real>(
    links: &mut LinkParameters<T>,
    k: usize,
    submodel: SubModel,
    theta: Vec<T>,
) {
    match submodel {
        SubModel::M3 => {
            links.delta[k] = theta
                .into_iter()
                .map(|t| t.exp().max(T::of(DELTA_MIN)).min(T::of(DELTA_MAX)))
                .collect()
        }
        _ => links.gamma[k] = theta,
    }
}

fn linked_components<T: Real>(
    mu_t: &[Vec<T>],
    probits: &[Vec<T>],
    links: &LinkParameters<T>,
) -> Vec<Vec<T>> {
    mu_t.iter()
        .zip(probits)
        .zip(links.delta.iter().zip(&links.gamma))
        .map(|((mu, q), (d, g))| {
            if is_neutral(d, g) {
                mu.clone()
            } else {
                linked_row(q, d, g)
            }
        })
        .collect()
}

/// EM over the mixture weights and the free link parameters of `submodel`.
///
/// The E-step evaluates posteriors under `μ' = link(μ_t)`. The M-step updates the
/// weights in closed form, then maximizes the expected complete-data
/// log-likelihood cluster by cluster with componentwise simplex searches started
/// from the current links. M1 only updates the weights.
pub fn estimate_link_em<T: Real>(
    data_next: &[CountVector],
    mu_t: &[Vec<T>],
    init_weights: &[T],
    init_links: &LinkParameters<T>,
    submodel: SubModel,
    em: &EmConfig,
    optimizer: &OptimizerConfig,
) -> Result<LinkFit<T>> {
    if data_next.is_empty() {
        return Err(PlmmError::EmptyData("transition epoch has no samples"));
    }
    let k = mu_t.len();
    let d = data_next[0].dim();
    check_rows(mu_t, k, d)?;
    if init_links.k() != k || init_links.dim() != d {
        return Err(PlmmError::DimensionMismatch {
            expected: k * d,
            found: init_links.k() * init_links.dim(),
        });
    }
    if !on_simplex(init_weights, T::INPUT_TOL) || init_weights.len() != k {
        return Err(PlmmError::NotOnSimplex(format!(
            "initial weights {init_weights:?}"
        )));
    }
    if let Some(x) = data_next.iter().find(|x| x.dim() != d) {
        return Err(PlmmError::DimensionMismatch {
            expected: d,
            found: x.dim(),
        });
    }
    optimizer.validate()?;

    let coef = em.include_coefficient;
    let tol = T::of(em.loglik_tolerance);
    let probits = probit_rows(mu_t);
    let (mut links, _) = init_links.constrained(submodel);
    let mut components = linked_components(mu_t, &probits, &links);
    let mut weights = clamp_weights(init_weights);
    let mut state = expectation(data_next, &weights, &components, coef)?;
    let mut trace = vec![state.loglik];
    let mut converged = false;
    let mut iterations = 0;
    let mut stalls = 0;

    while iterations < em.max_iterations {
        let n = T::of_usize(data_next.len());
        weights = clamp_weights(
            &state
                .resp
                .column_sums()
                .into_iter()
                .map(|m| m / n)
                .collect::<Vec<_>>(),
        );
        if submodel != SubModel::M1 {
            let stats = weighted_counts(data_next, &state.resp);
            let updates: Vec<Result<(Vec<T>, bool)>> = (0..k)
                .into_par_iter()
                .map(|c| {
                    optimize_row(
                        submodel,
                        &probits[c],
                        &stats[c],
                        &free_row(&links, c, submodel),
                        optimizer,
                    )
                })
                .collect();
            let mut improved = false;
            for (c, update) in updates.into_iter().enumerate() {
                let (theta, better) = update?;
                improved |= better;
                if better {
                    set_free_row(&mut links, c, submodel, theta);
                }
            }
            if !improved {
                stalls += 1;
            }
            components = linked_components(mu_t, &probits, &links);
        }
        let next = expectation(data_next, &weights, &components, coef)?;
        iterations += 1;
        let delta = (next.loglik - state.loglik).abs();
        trace.push(next.loglik);
        state = next;
        if delta < tol {
            converged = true;
            break;
        }
    }

    let model_next = MixtureModel::new(weights.clone(), components)?;
    let nu = submodel.free_params(k, d);
    Ok(LinkFit {
        submodel,
        links,
        weights_next: weights,
        model_next,
        loglik: state.loglik,
        bic: bic(state.loglik, nu, data_next.len()),
        resp: state.resp,
        trace,
        iterations,
        converged,
        optimizer_stalls: stalls,
    })
}

/// Keeps weights strictly positive so later logs stay finite.
fn clamp_weights<T: Real>(weights: &[T]) -> Vec<T> {
    let floor = T::of(T::PROB_FLOOR);
    let w: Vec<T> = weights.iter().map(|&v| v.max(floor)).collect();
    let total: T = w.iter().copied().sum();
    w.into_iter().map(|v| v / total).collect()
}
