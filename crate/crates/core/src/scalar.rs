//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! The mixture, link and optimizer code is written once against [`Real`] and
//! instantiated for `f64` (the default everywhere) and `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by the PLMM routines.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Probabilities are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]` before logs and probits.
    const PROB_FLOOR: f64;
    /// Absolute tolerance for the sum-to-one invariant of stored probability vectors.
    const SIMPLEX_TOL: f64;
    /// Looser tolerance applied to caller-supplied probability vectors.
    const INPUT_TOL: f64;
    /// Below this argument the Gaussian log-CDF switches to its asymptotic expansion.
    const LOG_CDF_SWITCH: f64;

    /// Complementary error function.
    fn erfc(self) -> Self;

    /// Converts an `f64` literal.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 value representable in scalar type")
    }

    /// Converts a count.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const PROB_FLOOR: f64 = 1e-10;
    const SIMPLEX_TOL: f64 = 1e-9;
    const INPUT_TOL: f64 = 1e-6;
    const LOG_CDF_SWITCH: f64 = -20.0;

    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Real for f32 {
    // 1 - 1e-10 is not representable in f32.
    const PROB_FLOOR: f64 = 1e-6;
    const SIMPLEX_TOL: f64 = 1e-5;
    const INPUT_TOL: f64 = 1e-4;
    const LOG_CDF_SWITCH: f64 = -9.0;

    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

/// `ln Σ exp(v)`, stable for large magnitudes. Returns `-inf` when every entry is `-inf`.
pub fn log_sum_exp<T: Real>(values: &[T]) -> T {
    let max = values
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    if !max.is_finite() {
        return max;
    }
    let sum: T = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Clamps every entry into `[floor, 1 - floor]` and renormalizes the row.
pub fn clamp_simplex<T: Real>(row: &[T]) -> Vec<T> {
    let floor = T::of(T::PROB_FLOOR);
    let ceil = T::one() - floor;
    let clamped: Vec<T> = row.iter().map(|&p| p.max(floor).min(ceil)).collect();
    let total: T = clamped.iter().copied().sum();
    clamped.into_iter().map(|p| p / total).collect()
}

/// Natural logs of a clamped, renormalized probability row.
pub(crate) fn log_probs<T: Real>(row: &[T]) -> Vec<T> {
    clamp_simplex(row).into_iter().map(|p| p.ln()).collect()
}

/// Checks `row` lies on the probability simplex within `tol`.
pub(crate) fn on_simplex<T: Real>(row: &[T], tol: f64) -> bool {
    let tol = T::of(tol);
    let total: T = row.iter().copied().sum();
    row.iter()
        .all(|&p| p.is_finite() && p >= -tol && p <= T::one() + tol)
        && (total - T::one()).abs() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let v = [0.1f64.ln(), 0.2f64.ln(), 0.7f64.ln()];
        assert!((log_sum_exp(&v)).abs() < 1e-15);
        let big = [1000.0f64, 1000.0];
        assert!((log_sum_exp(&big) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 2]), f64::NEG_INFINITY);
    }

    #[test]
    fn clamping_keeps_rows_on_simplex() {
        let row = clamp_simplex(&[1.0f64, 0.0, 0.0]);
        assert!(row.iter().all(|&p| p >= 1e-10 * 0.999));
        assert!(on_simplex(&row, 1e-12));
        let row32 = clamp_simplex(&[1.0f32, 0.0]);
        assert!(row32[1] > 0.0 && row32[0] < 1.0);
    }
}
