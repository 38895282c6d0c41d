//! Property suites behind `dc-optlab verify`.
//!
//! Each suite returns a serializable report with a `passed` flag, counts and
//! worst-case figures, so CI can gate on the exit code and still see margins.

use std::f64::consts::E;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::convergence::{corollary_probe, verify_theorem, ShiftReport, VerificationReport};
use crate::data::Dataset;
use crate::dc_loss::DCParams;
use crate::error::Result;
use crate::lambert_w::{w0, w0_log_enclosure, BRANCH_POINT};
use crate::neuron::{empirical_loss, loss_gradient, WeightVector};
use crate::rng::{derive_seed, seeded};

pub const LAMBERT_POINTS: usize = 10_000;
pub const LAMBERT_RESIDUAL_TOL: f64 = 1e-12;
pub const LAMBERT_ANCHOR_TOL: f64 = 1e-6;
pub const THEOREM_B_GRID: [f64; 9] = [-20.0, -10.0, -5.0, -2.0, -1.0, -0.5, -0.1, -0.01, -0.001];
pub const THEOREM_Z_POINTS: usize = 200;
pub const THEOREM_Z_MAX: f64 = 50.0;
pub const THEOREM_MIN_CHECKED: usize = 1000;
pub const GRADIENT_TRIPLES: usize = 100;
pub const GRADIENT_REL_TOL: f64 = 1e-6;

/// `x_k = -1/e + δ_k` with `δ` log-spaced from `1e-9` to `1e6 + 1/e`.
pub fn lambert_grid(points: usize) -> Vec<f64> {
    let lo = 1e-9f64.ln();
    let hi = (1e6 - BRANCH_POINT).ln();
    (0..points)
        .map(|k| {
            let f = k as f64 / (points - 1) as f64;
            BRANCH_POINT + (lo + f * (hi - lo)).exp()
        })
        .collect()
}

/// `points` values log-spaced in `(e, z_max]`, excluding `e` itself.
pub fn theorem_z_grid(points: usize, z_max: f64) -> Vec<f64> {
    let hi = z_max.ln();
    (1..=points)
        .map(|k| {
            if k == points {
                z_max
            } else {
                (1.0 + (hi - 1.0) * k as f64 / points as f64).exp()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LambertReport {
    pub passed: bool,
    pub points: usize,
    pub max_relative_residual: f64,
    pub worst_x: f64,
    pub monotone: bool,
    pub w0_at_e: f64,
    pub w0_at_branch_point: f64,
    pub enclosure_checked: usize,
    pub enclosure_failed: usize,
}

pub fn lambert_suite() -> Result<LambertReport> {
    let xs = lambert_grid(LAMBERT_POINTS);
    let ws = xs.iter().map(|&x| w0(x)).collect::<Result<Vec<_>>>()?;
    let mut max_res = 0.0;
    let mut worst_x = xs[0];
    for (&x, &w) in xs.iter().zip(&ws) {
        let res = (w * w.exp() - x).abs() / x.abs().max(1.0);
        if res > max_res {
            max_res = res;
            worst_x = x;
        }
    }
    let monotone = ws.windows(2).all(|p| p[0] < p[1]);
    let at_e = w0(E)?;
    let at_branch = w0(BRANCH_POINT)?;

    let mut enclosure_checked = 0;
    let mut enclosure_failed = 0;
    for &x in xs.iter().filter(|&&x| x > E) {
        let (lo, hi) = w0_log_enclosure(x)?;
        let w = w0(x)?;
        enclosure_checked += 1;
        if !(lo < w && w < hi) {
            enclosure_failed += 1;
        }
    }

    Ok(LambertReport {
        passed: max_res <= LAMBERT_RESIDUAL_TOL
            && monotone
            && (at_e - 1.0).abs() <= LAMBERT_ANCHOR_TOL
            && (at_branch + 1.0).abs() <= LAMBERT_ANCHOR_TOL
            && enclosure_failed == 0,
        points: xs.len(),
        max_relative_residual: max_res,
        worst_x,
        monotone,
        w0_at_e: at_e,
        w0_at_branch_point: at_branch,
        enclosure_checked,
        enclosure_failed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub passed: bool,
    pub b_grid: Vec<f64>,
    pub z_points: usize,
    pub report: VerificationReport,
}

pub fn theorem_suite() -> Result<TheoremReport> {
    let zs = theorem_z_grid(THEOREM_Z_POINTS, THEOREM_Z_MAX);
    let report = verify_theorem(&THEOREM_B_GRID, &zs)?;
    Ok(TheoremReport {
        passed: report.all_passed() && report.checked >= THEOREM_MIN_CHECKED,
        b_grid: THEOREM_B_GRID.to_vec(),
        z_points: zs.len(),
        report,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CorollaryReport {
    pub passed: bool,
    /// Largest `|g(z; d) - g(z; 0) - d|` over the probed difficulties.
    pub max_shift_error: f64,
    pub probe: ShiftReport,
}

pub fn corollary_suite() -> Result<CorollaryReport> {
    let base = DCParams::new(1.0, 0.0, 0.0, (-1.0f64).exp())?;
    let probe = corollary_probe(&base, 5.0, &[0.5, 1.0, 2.0, 4.0, 8.0], &[0.0, 1.0, 2.0, 5.0])?;
    let g0 = probe.g_over_d[0];
    let max_shift_error = probe
        .d_values
        .iter()
        .zip(&probe.g_over_d)
        .map(|(d, g)| (g - g0 - d).abs())
        .fold(0.0, f64::max);
    Ok(CorollaryReport {
        passed: probe.decreasing_in_r && probe.increasing_in_d && max_shift_error == 0.0,
        max_shift_error,
        probe,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientReport {
    pub passed: bool,
    pub triples: usize,
    pub skipped_uncertified: usize,
    pub coordinates_checked: usize,
    pub failures: usize,
    pub max_relative_error: f64,
    /// Draw index of the worst triple.
    pub worst_triple: usize,
}

/// Random `(params, θ, dataset)` triple used by the gradient suite.
pub fn gradient_triple(seed: u64) -> Result<(DCParams, WeightVector, Dataset)> {
    let mut rng = seeded(seed);
    let params = DCParams::new(
        rng.random_range(0.1..12.0),
        rng.random_range(0.0..12.0),
        rng.random_range(0.0..5.0),
        rng.random_range(0.1..0.9),
    )?;
    let theta = WeightVector((0..2).map(|_| rng.sample(StandardNormal)).collect());
    let m = 10;
    let features: Vec<f64> = (0..2 * m).map(|_| rng.sample(StandardNormal)).collect();
    let labels: Vec<i8> = (0..m)
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect();
    Ok((params, theta, Dataset::new(2, features, labels)?))
}

/// Central-difference estimate of one gradient coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdEstimate {
    /// Richardson combination `(4 D(h/2) - D(h)) / 3` of central differences
    /// at the base step `h = 1e-6 (1 + |θ_j|)`.
    pub value: f64,
    /// Rounding noise of the estimate, `ε Σ|ℓ_i| / h` scaled for the half step.
    pub roundoff: f64,
}

impl FdEstimate {
    /// True when rounding noise alone cannot exceed `ORACLE_CERTIFY` relative
    /// error. A loss that underflowed to zero certifies nothing.
    pub fn certified(&self) -> bool {
        self.value.is_normal() && self.roundoff <= ORACLE_CERTIFY * self.value.abs()
    }
}

/// Relative accuracy the difference oracle must certify before a coordinate is checked.
pub const ORACLE_CERTIFY: f64 = 1e-7;

pub fn central_difference(
    params: &DCParams,
    theta: &WeightVector,
    data: &Dataset,
    j: usize,
) -> Result<FdEstimate> {
    let h = 1e-6 * (1.0 + theta.0[j].abs());
    let quotient = |step: f64| -> Result<f64> {
        let mut plus = theta.clone();
        plus.0[j] += step;
        let mut minus = theta.clone();
        minus.0[j] -= step;
        Ok((empirical_loss(params, &plus, data)? - empirical_loss(params, &minus, data)?)
            / (plus.0[j] - minus.0[j]))
    };
    let coarse = quotient(h)?;
    let fine = quotient(0.5 * h)?;
    let magnitude: f64 = crate::neuron::margins(theta, data)?
        .into_iter()
        .map(|t| crate::dc_loss::per_sample_loss(params, t).abs())
        .sum();
    Ok(FdEstimate {
        value: (4.0 * fine - coarse) / 3.0,
        // |4/3 · noise(h/2)| + |1/3 · noise(h)| with noise(s) = 2ε Σ|ℓ| / (2s)
        roundoff: 3.0 * f64::EPSILON * magnitude / h,
    })
}

pub fn relative_error(analytic: f64, oracle: f64) -> f64 {
    let scale = analytic.abs().max(oracle.abs());
    if scale == 0.0 {
        0.0
    } else {
        (analytic - oracle).abs() / scale
    }
}

/// Checks `GRADIENT_TRIPLES` random triples whose difference oracle is
/// certified on every coordinate. Uncertifiable draws (saturated losses where
/// the gradient sits below the rounding noise of the loss) are skipped and
/// counted.
pub fn gradient_suite(seed: u64) -> Result<GradientReport> {
    let mut report = GradientReport {
        passed: true,
        triples: 0,
        skipped_uncertified: 0,
        coordinates_checked: 0,
        failures: 0,
        max_relative_error: 0.0,
        worst_triple: 0,
    };
    let mut draw = 0u64;
    while report.triples < GRADIENT_TRIPLES {
        // Draw candidates in parallel batches; consume them in draw order.
        let batch: Vec<Result<Option<Vec<f64>>>> = (draw..draw + 64)
            .into_par_iter()
            .map(|k| {
                let (params, theta, data) = gradient_triple(derive_seed(seed, &[k]))?;
                let grad = loss_gradient(&params, &theta, &data)?;
                let mut errs = Vec::with_capacity(grad.len());
                for (j, &g) in grad.iter().enumerate() {
                    let fd = central_difference(&params, &theta, &data, j)?;
                    if !fd.certified() {
                        return Ok(None);
                    }
                    errs.push(relative_error(g, fd.value));
                }
                Ok(Some(errs))
            })
            .collect();
        for (offset, outcome) in batch.into_iter().enumerate() {
            if report.triples == GRADIENT_TRIPLES {
                break;
            }
            let Some(errs) = outcome? else {
                report.skipped_uncertified += 1;
                continue;
            };
            for e in errs {
                report.coordinates_checked += 1;
                if !(e <= GRADIENT_REL_TOL) {
                    report.failures += 1;
                }
                if e > report.max_relative_error || e.is_nan() {
                    report.max_relative_error = e;
                    report.worst_triple = (draw + offset as u64) as usize;
                }
            }
            report.triples += 1;
        }
        draw += 64;
    }
    report.passed = report.failures == 0;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Lambert,
    Theorem,
    Corollary,
    Gradient,
    All,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SuiteReport {
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambert: Option<LambertReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem: Option<TheoremReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corollary: Option<CorollaryReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gradient: Option<GradientReport>,
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let want = |s: Suite| suite == Suite::All || suite == s;
    let mut out = SuiteReport::default();
    if want(Suite::Lambert) {
        out.lambert = Some(lambert_suite()?);
    }
    if want(Suite::Theorem) {
        out.theorem = Some(theorem_suite()?);
    }
    if want(Suite::Corollary) {
        out.corollary = Some(corollary_suite()?);
    }
    if want(Suite::Gradient) {
        out.gradient = Some(gradient_suite(seed)?);
    }
    out.passed = out.lambert.as_ref().is_none_or(|r| r.passed)
        && out.theorem.as_ref().is_none_or(|r| r.passed)
        && out.corollary.as_ref().is_none_or(|r| r.passed)
        && out.gradient.as_ref().is_none_or(|r| r.passed);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_have_expected_shape() {
        let xs = lambert_grid(LAMBERT_POINTS);
        assert_eq!(xs.len(), LAMBERT_POINTS);
        assert!((xs[0] - (BRANCH_POINT + 1e-9)).abs() < 1e-15);
        assert!((xs[LAMBERT_POINTS - 1] - 1e6).abs() < 1e-6);
        let zs = theorem_z_grid(200, 50.0);
        assert_eq!(zs.len(), 200);
        assert!(zs[0] > E);
        assert_eq!(zs[199], 50.0);
    }

    #[test]
    fn suites_pass() {
        let rep = run_suite(Suite::All, 0).unwrap();
        let json = serde_json::to_string_pretty(&rep).unwrap();
        assert!(rep.passed, "{json}");
        assert!(rep.theorem.unwrap().report.checked >= THEOREM_MIN_CHECKED);
    }
}
