//! Principal branch of the Lambert W function.
//!
//! `W0(x)` is the unique `w >= -1` with `w e^w = x`, defined for
//! `x >= -1/e`. The DC convergence rate evaluates it at small negative
//! arguments `b e^{-z}`, frequently right at the branch point, so the
//! evaluation has to stay accurate where the derivative of `w e^w` vanishes.

use std::f64::consts::E;

use crate::error::{Error, Result};

/// `-1/e`, the branch point of `W0`.
pub const BRANCH_POINT: f64 = -1.0 / E;

/// Inputs within this distance below the branch point are clamped onto it.
pub const DOMAIN_SLACK: f64 = 1e-12;

const MAX_ITER: usize = 50;
const STEP_TOL: f64 = 1e-15;

/// A value checked to lie in the real domain of `W0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LambertArgument(f64);

impl LambertArgument {
    /// Validates `x`, snapping values in `[-1/e - slack, -1/e]` onto the branch point.
    pub fn new(x: f64) -> Result<Self> {
        if x.is_nan() {
            return Err(Error::Domain("W0 argument is NaN".into()));
        }
        if x < BRANCH_POINT - DOMAIN_SLACK {
            return Err(Error::Domain(format!(
                "W0 argument {x:e} is below the branch point -1/e"
            )));
        }
        Ok(Self(x.max(BRANCH_POINT)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Principal branch `W0(x)`.
///
/// Halley iteration on `w e^w - x` from a region-specific starting point:
/// the branch-point series on `[-1/e, -0.25]`, `w = x` near the origin and
/// `ln x - ln ln x` above `e`.
pub fn w0(x: f64) -> Result<f64> {
    let x = LambertArgument::new(x)?.value();
    Ok(w0_unchecked(x))
}

fn w0_unchecked(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x <= BRANCH_POINT {
        return -1.0;
    }
    if x == f64::INFINITY {
        return f64::INFINITY;
    }

    let mut w = initial_guess(x);
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            // Sitting exactly on the branch point; the series guess is already exact to rounding.
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        if !step.is_finite() {
            break;
        }
        let next = (w - step).max(-1.0);
        let moved = (next - w).abs();
        w = next;
        if moved <= STEP_TOL * (1.0 + w.abs()) {
            break;
        }
    }
    w
}

fn initial_guess(x: f64) -> f64 {
    if x <= -0.25 {
        // Series in p = sqrt(2(e x + 1)) about the branch point.
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)))
    } else if x < 0.25 {
        x
    } else if x <= E {
        x.ln_1p() * 0.75
    } else {
        let l = x.ln();
        l - l.ln()
    }
}

/// The enclosure `ln z - ln ln z < W0(z) < ln z`, valid for `z > e`.
pub fn w0_log_enclosure(z: f64) -> Result<(f64, f64)> {
    if !(z > E) {
        return Err(Error::Domain(format!(
            "log enclosure of W0 needs z > e, got {z}"
        )));
    }
    let l = z.ln();
    Ok((l - l.ln(), l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Bisection on `w e^w = x` over a bracket known to contain W0(x).
    fn bisect_w0(x: f64) -> f64 {
        let (mut lo, mut hi) = if x < 0.0 { (-1.0, 0.0) } else { (0.0, x.max(1.0)) };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() < x {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn residual(x: f64) -> f64 {
        let w = w0(x).unwrap();
        (w * w.exp() - x).abs() / x.abs().max(1.0)
    }

    #[test]
    fn anchor_values() {
        assert_eq!(w0(0.0).unwrap(), 0.0);
        assert!((w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(w0(BRANCH_POINT).unwrap(), -1.0);
    }

    #[test]
    fn negative_tenth_matches_bisection() {
        let oracle = bisect_w0(-0.1);
        assert!((oracle - (-0.111_832_559_158_962_9)).abs() < 1e-12);
        assert!((w0(-0.1).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn matches_bisection_on_sample_points() {
        for &x in &[-0.36, -0.3, -0.2, -1e-3, 1e-8, 0.1, 0.5, 1.0, 2.0, 10.0, 1e3, 1e6] {
            let oracle = bisect_w0(x);
            let w = w0(x).unwrap();
            assert!(
                (w - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()),
                "x={x}: {w} vs {oracle}"
            );
        }
    }

    #[test]
    fn clamps_just_below_branch_point() {
        assert_eq!(w0(BRANCH_POINT - 5e-13).unwrap(), -1.0);
        assert!(matches!(w0(BRANCH_POINT - 1e-9), Err(Error::Domain(_))));
        assert!(matches!(w0(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn near_branch_point_is_accurate() {
        for k in 1..=15 {
            let x = BRANCH_POINT + 10f64.powi(-k);
            assert!(residual(x) <= 1e-12, "x=-1/e+1e-{k}");
            let w = w0(x).unwrap();
            assert!(w > -1.0 && w < x);
        }
    }

    #[test]
    fn enclosure_examples() {
        let (lo, hi) = w0_log_enclosure(E * E).unwrap();
        assert!((lo - (2.0 - 2f64.ln())).abs() < 1e-15);
        assert!((hi - 2.0).abs() < 1e-15);

        let (lo, hi) = w0_log_enclosure(10.0).unwrap();
        assert!((lo - 1.468_552_647_746).abs() < 1e-9);
        assert!((hi - 10f64.ln()).abs() < 1e-15);
        let w = w0(10.0).unwrap();
        assert!((w - bisect_w0(10.0)).abs() < 1e-12);
        assert!((w - 1.745_528).abs() < 1e-6);
        assert!(lo < w && w < hi);

        assert!(matches!(w0_log_enclosure(E), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn defining_identity(x in BRANCH_POINT..1e6) {
            prop_assert!(residual(x) <= 1e-12);
        }

        #[test]
        fn strictly_increasing(a in BRANCH_POINT..1e4, b in BRANCH_POINT..1e4) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(w0(lo).unwrap() < w0(hi).unwrap());
        }

        #[test]
        fn negative_ordering(x in BRANCH_POINT..0.0) {
            prop_assume!(x > BRANCH_POINT);
            let w = w0(x).unwrap();
            prop_assert!(x > w && w >= -1.0);
        }

        #[test]
        fn sign_follows_argument(x in -0.36f64..1e3) {
            prop_assume!(x != 0.0);
            prop_assert_eq!(w0(x).unwrap() > 0.0, x > 0.0);
        }

        #[test]
        fn enclosure_contains_w0(z in (E + 1e-6)..1e8) {
            let (lo, hi) = w0_log_enclosure(z).unwrap();
            let w = w0(z).unwrap();
            prop_assert!(lo > 0.0);
            prop_assert!(lo < w && w < hi);
        }
    }
}
