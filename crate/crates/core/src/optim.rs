//! Box-constrained Nelder-Mead and block-wise (componentwise) alternation.
//!
//! Trial points leaving the box are projected back onto it, so every evaluated
//! point is feasible. There is no internal randomness.

use serde::{Deserialize, Serialize};

use crate::error::{PlmmError, Result};
use crate::scalar::Real;

/// How the free link parameters of one cluster are split into optimization blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockMode {
    /// One block per coordinate.
    #[default]
    PerCoordinate,
    /// One block per parameter row.
    PerRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Evaluation budget for one Nelder-Mead run (one block).
    pub max_evals: usize,
    pub x_tolerance: f64,
    pub f_tolerance: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Cap on full passes over the blocks in [`componentwise_alternate`].
    pub max_cycles: usize,
    pub block_mode: BlockMode,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            x_tolerance: 1e-6,
            f_tolerance: 1e-8,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            max_cycles: 20,
            block_mode: BlockMode::PerCoordinate,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.reflection > 0.0
            && self.expansion > 1.0
            && self.expansion > self.reflection
            && self.contraction > 0.0
            && self.contraction < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.x_tolerance > 0.0
            && self.f_tolerance > 0.0
            && self.max_evals > 0
            && self.max_cycles > 0;
        if ok {
            Ok(())
        } else {
            Err(PlmmError::InvalidConfig(format!(
                "optimizer settings out of range: {self:?}"
            )))
        }
    }
}

/// Per-coordinate `[lo, hi]` box. Infinite ends are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds<T> {
    lo: Vec<T>,
    hi: Vec<T>,
}

impl<T: Real> Bounds<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(PlmmError::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] < hi[i])) {
            return Err(PlmmError::InvalidConfig(format!(
                "bound {i}: lo must be < hi"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn uniform(n: usize, lo: T, hi: T) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn unbounded(n: usize) -> Self {
        Self {
            lo: vec![T::neg_infinity(); n],
            hi: vec![T::infinity(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn lo(&self) -> &[T] {
        &self.lo
    }

    pub fn hi(&self) -> &[T] {
        &self.hi
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.len()
            && x.iter()
                .zip(&self.lo)
                .zip(&self.hi)
                .all(|((&v, &l), &h)| v >= l && v <= h)
    }

    fn project(&self, x: &mut [T]) {
        for ((v, &l), &h) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.max(l).min(h);
        }
    }

    /// Restriction to the coordinates in `idx`.
    fn select(&self, idx: &[usize]) -> Self {
        Self {
            lo: idx.iter().map(|&i| self.lo[i]).collect(),
            hi: idx.iter().map(|&i| self.hi[i]).collect(),
        }
    }

    fn check(&self, x: &[T]) -> Result<()> {
        if x.len() != self.len() {
            return Err(PlmmError::DimensionMismatch {
                expected: self.len(),
                found: x.len(),
            });
        }
        for (i, &v) in x.iter().enumerate() {
            if !(v >= self.lo[i] && v <= self.hi[i]) {
                return Err(PlmmError::OutOfBounds {
                    index: i,
                    value: v.as_f64(),
                    lo: self.lo[i].as_f64(),
                    hi: self.hi[i].as_f64(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub f: T,
    pub evals: usize,
    /// Full block passes; 1 for a plain Nelder-Mead run.
    pub cycles: usize,
    pub converged: bool,
}

fn eval<T: Real, F: FnMut(&[T]) -> T>(f: &mut F, x: &[T], evals: &mut usize) -> T {
    *evals += 1;
    let v = f(x);
    if v.is_nan() {
        T::infinity()
    } else {
        v
    }
}

/// Minimizes `f` over the box starting from `x0`.
///
/// Converges when the simplex diameter (max-norm distance of every vertex to
/// the best) is below `x_tolerance` and the spread of its values is below
/// `f_tolerance`; otherwise stops after `max_evals` evaluations. NaN values are
/// treated as `+∞`.
pub fn nelder_mead_minimize<T, F>(
    mut f: F,
    x0: &[T],
    bounds: &Bounds<T>,
    config: &OptimizerConfig,
) -> Result<Minimum<T>>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    bounds.check(x0)?;
    let n = x0.len();
    let mut evals = 0;
    let f0 = eval(&mut f, x0, &mut evals);
    if !f0.is_finite() {
        return Err(PlmmError::NonFiniteObjective);
    }
    if n == 0 {
        return Ok(Minimum {
            x: Vec::new(),
            f: f0,
            evals,
            cycles: 1,
            converged: true,
        });
    }

    let c = |v: f64| T::of(v);
    let (alpha, gamma, rho, sigma) = (
        c(config.reflection),
        c(config.expansion),
        c(config.contraction),
        c(config.shrink),
    );
    let x_tol = c(config.x_tolerance);
    let f_tol = c(config.f_tolerance);

    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let step = c(0.05).max(c(0.05) * x0[i].abs());
        let mut x = x0.to_vec();
        x[i] = if x0[i] + step <= bounds.hi[i] {
            x0[i] + step
        } else if x0[i] - step >= bounds.lo[i] {
            x0[i] - step
        } else if bounds.hi[i] - x0[i] >= x0[i] - bounds.lo[i] {
            bounds.hi[i]
        } else {
            bounds.lo[i]
        };
        let fx = eval(&mut f, &x, &mut evals);
        simplex.push((x, fx));
    }

    let mut converged = false;
    let mut centroid = vec![T::zero(); n];
    let mut trial = vec![T::zero(); n];
    let mut second = vec![T::zero(); n];
    let inv_n = T::one() / T::of_usize(n);
    loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = &simplex[0];
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&best.0).map(|(&a, &b)| (a - b).abs()))
            .fold(T::zero(), T::max);
        let spread = (simplex[n].1 - best.1).abs();
        if diameter <= x_tol && spread <= f_tol {
            converged = true;
            break;
        }
        if evals >= config.max_evals {
            break;
        }

        centroid.iter_mut().for_each(|v| *v = T::zero());
        for (x, _) in &simplex[..n] {
            for (cv, &xv) in centroid.iter_mut().zip(x) {
                *cv += xv * inv_n;
            }
        }
        let worst_f = simplex[n].1;
        let second_worst_f = simplex[n - 1].1;
        let best_f = simplex[0].1;

        for j in 0..n {
            trial[j] = centroid[j] + alpha * (centroid[j] - simplex[n].0[j]);
        }
        bounds.project(&mut trial);
        let fr = eval(&mut f, &trial, &mut evals);

        if fr < best_f {
            for j in 0..n {
                second[j] = centroid[j] + gamma * (trial[j] - centroid[j]);
            }
            bounds.project(&mut second);
            let fe = eval(&mut f, &second, &mut evals);
            if fe < fr {
                simplex[n] = (second.clone(), fe);
            } else {
                simplex[n] = (trial.clone(), fr);
            }
            continue;
        }
        if fr < second_worst_f {
            simplex[n] = (trial.clone(), fr);
            continue;
        }
        // Contraction: outside when the reflection beat the worst vertex, inside otherwise.
        let outside = fr < worst_f;
        for j in 0..n {
            let toward = if outside { trial[j] } else { simplex[n].0[j] };
            second[j] = centroid[j] + rho * (toward - centroid[j]);
        }
        bounds.project(&mut second);
        let fc = eval(&mut f, &second, &mut evals);
        let accept = if outside { fc <= fr } else { fc < worst_f };
        if accept {
            simplex[n] = (second.clone(), fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for (x, fx) in simplex.iter_mut().skip(1) {
            for (v, &a) in x.iter_mut().zip(&anchor) {
                *v = a + sigma * (*v - a);
            }
            bounds.project(x);
            *fx = eval(&mut f, x, &mut evals);
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (x, fx) = simplex.swap_remove(0);
    Ok(Minimum {
        x,
        f: fx,
        evals,
        cycles: 1,
        converged,
    })
}

/// Cycles over `blocks`, minimizing one block at a time with the rest frozen.
///
/// Stops when a full cycle improves `f` by less than `f_tolerance` or after
/// `max_cycles` cycles.
pub fn componentwise_alternate<T, F>(
    mut f: F,
    x0: &[T],
    blocks: &[Vec<usize>],
    bounds: &Bounds<T>,
    config: &OptimizerConfig,
) -> Result<Minimum<T>>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    bounds.check(x0)?;
    let mut seen = vec![false; x0.len()];
    for &i in blocks.iter().flatten() {
        if i >= x0.len() || seen[i] {
            return Err(PlmmError::InvalidConfig(
                "blocks must partition the coordinates".into(),
            ));
        }
        seen[i] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(PlmmError::InvalidConfig(
            "blocks must partition the coordinates".into(),
        ));
    }

    let f_tol = T::of(config.f_tolerance);
    let mut x = x0.to_vec();
    let mut evals = 1;
    let mut fx = f(&x);
    if !fx.is_finite() {
        return Err(PlmmError::NonFiniteObjective);
    }
    let mut cycles = 0;
    let mut converged = false;
    let mut full = x.clone();
    while cycles < config.max_cycles {
        cycles += 1;
        let start = fx;
        for block in blocks {
            let sub_bounds = bounds.select(block);
            let sub_x0: Vec<T> = block.iter().map(|&i| x[i]).collect();
            full.copy_from_slice(&x);
            let found = nelder_mead_minimize(
                |sub: &[T]| {
                    for (&i, &v) in block.iter().zip(sub) {
                        full[i] = v;
                    }
                    f(&full)
                },
                &sub_x0,
                &sub_bounds,
                config,
            )?;
            evals += found.evals;
            if found.f < fx {
                for (&i, &v) in block.iter().zip(&found.x) {
                    x[i] = v;
                }
                fx = found.f;
            }
        }
        if start - fx < f_tol {
            converged = true;
            break;
        }
    }
    Ok(Minimum {
        x,
        f: fx,
        evals,
        cycles,
        converged,
    })
}
