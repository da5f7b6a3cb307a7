//! Standard normal CDF, its logarithm and its inverse.

use crate::error::{PlmmError, Result};
use crate::scalar::Real;

/// `Φ(x) = erfc(-x/√2) / 2`.
#[inline]
pub fn std_normal_cdf<T: Real>(x: T) -> T {
    T::of(0.5) * (-x * T::FRAC_1_SQRT_2()).erfc()
}

/// `ln Φ(x)`, finite for every finite `x`.
///
/// Deep in the lower tail the asymptotic Mills-ratio expansion replaces the
/// direct form, which would underflow to `ln 0`.
pub fn log_std_normal_cdf<T: Real>(x: T) -> T {
    if x.as_f64() > T::LOG_CDF_SWITCH {
        return std_normal_cdf(x).ln();
    }
    let z2 = (x * x).recip();
    let series = T::one()
        - z2 * (T::one()
            - T::of(3.0) * z2 * (T::one() - T::of(5.0) * z2 * (T::one() - T::of(7.0) * z2)));
    -T::of(0.5) * x * x - (-x).ln() - T::of(0.5) * (T::TAU()).ln() + series.ln()
}

// Acklam's rational approximation; refined below with Halley steps.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const P_LOW: f64 = 0.02425;

fn poly<T: Real>(coeffs: &[f64], x: T) -> T {
    coeffs.iter().fold(T::zero(), |acc, &c| acc * x + T::of(c))
}

/// Quantile on the lower half, `p <= 0.5`.
fn lower_quantile<T: Real>(p: T) -> T {
    let mut x = if p.as_f64() < P_LOW {
        let q = (-T::of(2.0) * p.ln()).sqrt();
        poly(&C, q) / (poly(&D, q) * q + T::one())
    } else {
        let q = p - T::of(0.5);
        let r = q * q;
        poly(&A, r) * q / (poly(&B, r) * r + T::one())
    };
    let sqrt_2pi = T::TAU().sqrt();
    for _ in 0..2 {
        let e = std_normal_cdf(x) - p;
        let u = e * sqrt_2pi * (T::of(0.5) * x * x).exp();
        x = x - u / (T::one() + T::of(0.5) * x * u);
    }
    x
}

/// `Φ⁻¹(p)` after clamping `p` into `[PROB_FLOOR, 1 - PROB_FLOOR]`. NaN is rejected.
pub fn std_normal_quantile<T: Real>(p: T) -> Result<T> {
    if p.is_nan() {
        return Err(PlmmError::InvalidValue("quantile of NaN".into()));
    }
    Ok(clamped_quantile(p))
}

/// Infallible variant for already-validated probabilities.
pub(crate) fn clamped_quantile<T: Real>(p: T) -> T {
    let floor = T::of(T::PROB_FLOOR);
    let p = p.max(floor).min(T::one() - floor);
    let half = T::of(0.5);
    if p <= half {
        lower_quantile(p)
    } else {
        -lower_quantile(T::one() - p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // 40-digit reference values of Φ.
    const CDF_ORACLE: [(f64, f64); 8] = [
        (1.959964, 0.975_000_000_903_557_6),
        (-8.0, 6.220_960_574_271_784e-16),
        (-3.0, 0.001_349_898_031_630_094_5),
        (2.5, 0.993_790_334_674_223_9),
        (0.5, 0.691_462_461_274_013_1),
        (-1.2, 0.115_069_670_221_708_27),
        (6.0, 0.999_999_999_013_412_3),
        (-6.0, 9.865_876_450_376_981e-10),
    ];

    const QUANTILE_ORACLE: [(f64, f64); 8] = [
        (0.975, 1.959_963_984_540_054_2),
        (0.7, 0.524_400_512_708_040_8),
        (0.8, 0.841_621_233_572_914_2),
        (0.1, -1.281_551_565_544_600_5),
        (1e-10, -6.361_340_902_404_056),
        (0.025, -1.959_963_984_540_054_2),
        (0.99, 2.326_347_874_040_841),
        (0.001, -3.090_232_306_167_813_5),
    ];

    #[test]
    fn cdf_matches_reference() {
        assert_eq!(std_normal_cdf(0.0f64), 0.5);
        for (x, want) in CDF_ORACLE {
            assert!((std_normal_cdf(x) - want).abs() < 1e-12, "Φ({x})");
        }
        let tail = std_normal_cdf(-8.0f64);
        assert!(tail > 0.0 && tail < 1e-14);
    }

    #[test]
    fn cdf_symmetry() {
        for i in -80..=80 {
            let x = i as f64 / 10.0;
            assert!((std_normal_cdf(-x) - (1.0 - std_normal_cdf(x))).abs() < 1e-12);
        }
    }

    #[test]
    fn quantile_matches_reference() {
        assert_eq!(std_normal_quantile(0.5f64).unwrap(), 0.0);
        for (p, want) in QUANTILE_ORACLE {
            let got = std_normal_quantile(p).unwrap();
            assert!(
                (got - want).abs() < 1e-9 * want.abs().max(1.0),
                "Φ⁻¹({p}) = {got}"
            );
        }
        assert!(std_normal_quantile(f64::NAN).is_err());
        assert_eq!(
            std_normal_quantile(0.0f64).unwrap(),
            std_normal_quantile(1e-10).unwrap()
        );
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let x = std_normal_quantile(p).unwrap();
            assert!((std_normal_cdf(x) - p).abs() < 1e-9);
            assert!((std_normal_quantile(1.0 - p).unwrap() + x).abs() < 1e-9);
        }
    }

    #[test]
    fn log_cdf_is_continuous_across_the_switch() {
        let s = f64::LOG_CDF_SWITCH;
        let below = log_std_normal_cdf(s - 1e-9);
        let above = log_std_normal_cdf(s + 1e-9);
        assert!((below - above).abs() < 1e-8 * above.abs());
        assert!(log_std_normal_cdf(-400.0f64).is_finite());
        assert!((log_std_normal_cdf(1.0f64) - std_normal_cdf(1.0f64).ln()).abs() < 1e-15);
    }

    #[test]
    fn single_precision_round_trip() {
        for i in 1..100 {
            let p = i as f32 / 100.0;
            let x = std_normal_quantile(p).unwrap();
            assert!((std_normal_cdf(x) - p).abs() < 1e-5);
        }
    }
}
