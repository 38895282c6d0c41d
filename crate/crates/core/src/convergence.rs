//! Convergence rate of the DC loss and numerical checks of its bounds.
//!
//! Inverting the margin transform `f` gives the rate
//!
//! ```text
//! g_dc(z) = d + (W0(b e^{-z}) + z) / r
//! ```
//!
//! under the substitution `z = ln t`, to be compared with the default rate
//! `g(z) = z`. `W0` only has a real value while `b e^{-z} >= -1/e`, so the
//! curve starts at `z_min = ln(-b) + 1`.
//!
//! For `z >= e` the quantity `W0(b e^{-z}) + z` sits inside
//!
//! ```text
//! b/z + z  <=  W0(b e^{-z}) + z  <=  b (ln z - z) / (z ln z) + z
//! ```
//!
//! and the two ends straddle `z`. [`verify_theorem`] checks this bracket on
//! grids and [`corollary_probe`] checks how `r` and `d` shift the rate.

use std::f64::consts::E;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dc_loss::DCParams;
use crate::error::{Error, Result};
use crate::lambert_w::w0;

/// Margin added to `z_min` when filtering verification grids, keeping the
/// W0 argument strictly inside the domain.
pub const ONSET_MARGIN: f64 = 1e-9;

/// `ln(-b) + 1`, the smallest `z` for which the DC rate is real.
pub fn rate_onset(b: f64) -> f64 {
    (-b).ln() + 1.0
}

fn w0_shifted(b: f64, z: f64) -> Result<f64> {
    w0(b * (-z).exp()).map_err(|_| {
        Error::Domain(format!(
            "rate undefined at z = {z}: b e^(-z) < -1/e, real values start at z_min = {}",
            rate_onset(b)
        ))
    })
}

/// `g_dc(z) = d + (W0(b e^{-z}) + z) / r`.
///
/// Any `z` with `b e^{-z} >= -1/e` is accepted, including non-positive `z`
/// when `-b < 1/e`.
pub fn dc_rate(params: &DCParams, z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain(format!("z must be finite, got {z}")));
    }
    let w = w0_shifted(params.b(), z)?;
    Ok(params.d() + (w + z) / params.r())
}

pub fn default_rate(z: f64) -> f64 {
    z
}

/// Lower and upper bound around `W0(b e^{-z}) + z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundBracket {
    pub lower: f64,
    pub upper: f64,
    pub z: f64,
    pub value: f64,
}

impl BoundBracket {
    pub fn contains_value(&self) -> bool {
        self.lower <= self.value && self.value <= self.upper
    }

    pub fn straddles_default(&self) -> bool {
        self.lower < self.z && self.z < self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Bracket for `W0(b e^{-z}) + z`, defined for `b < 0` and `z >= e`.
pub fn theorem_bracket(b: f64, z: f64) -> Result<BoundBracket> {
    if !(b < 0.0) {
        return Err(Error::validation(format!("b must be < 0, got {b}")));
    }
    if !(z >= E) || !z.is_finite() {
        return Err(Error::Domain(format!("bracket needs z >= e, got {z}")));
    }
    let value = w0_shifted(b, z)? + z;
    let ln_z = z.ln();
    Ok(BoundBracket {
        lower: b / z + z,
        upper: b * (ln_z - z) / (z * ln_z) + z,
        z,
        value,
    })
}

/// Sampled `g_dc` over an increasing list of `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub params: DCParams,
    pub z_values: Vec<f64>,
    pub g_values: Vec<f64>,
}

impl RateCurve {
    /// Evaluates the rate at every point of `z_values` inside the real domain;
    /// points below the onset are dropped.
    pub fn sample(params: DCParams, z_values: &[f64]) -> Result<Self> {
        if z_values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::validation("z values must be strictly increasing"));
        }
        let mut kept_z = Vec::with_capacity(z_values.len());
        let mut g = Vec::with_capacity(z_values.len());
        for &z in z_values {
            if let Ok(v) = dc_rate(&params, z) {
                if v.is_finite() {
                    kept_z.push(z);
                    g.push(v);
                }
            }
        }
        if kept_z.is_empty() {
            return Err(Error::Domain(format!(
                "no sampled z lies in the rate domain z >= {}",
                rate_onset(params.b())
            )));
        }
        Ok(RateCurve {
            params,
            z_values: kept_z,
            g_values: g,
        })
    }

    pub fn z_min(&self) -> f64 {
        rate_onset(self.params.b())
    }

    /// One row per sample: `z, g_dc, g_default, lower, upper`.
    ///
    /// `lower` and `upper` bound `g_dc` itself, i.e. the `W0(b e^{-z}) + z`
    /// bracket mapped through `d + (.)/r`. They are empty below `z = e`.
    pub fn rows(&self) -> Vec<RateRow> {
        let (r, d, b) = (self.params.r(), self.params.d(), self.params.b());
        self.z_values
            .iter()
            .zip(&self.g_values)
            .map(|(&z, &g)| {
                let bracket = theorem_bracket(b, z).ok();
                RateRow {
                    z,
                    g_dc: g,
                    g_default: default_rate(z),
                    lower: bracket.map(|br| d + br.lower / r),
                    upper: bracket.map(|br| d + br.upper / r),
                }
            })
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W, with_onset: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Format {
            line: 0,
            message: e.to_string(),
        };
        let mut header = vec!["z", "g_dc", "g_default", "lower", "upper"];
        if with_onset {
            header.push("z_min");
        }
        w.write_record(&header).map_err(csv_err)?;
        let z_min = self.z_min();
        for row in self.rows() {
            let mut rec = vec![
                row.z.to_string(),
                row.g_dc.to_string(),
                row.g_default.to_string(),
                row.lower.map(|v| v.to_string()).unwrap_or_default(),
                row.upper.map(|v| v.to_string()).unwrap_or_default(),
            ];
            if with_onset {
                rec.push(z_min.to_string());
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<rate csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file), false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub z: f64,
    pub g_dc: f64,
    pub g_default: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// Smallest slack seen for one inequality, and where.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub margin: f64,
    pub b: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityStats {
    pub name: String,
    pub checked: usize,
    pub passed: usize,
    pub failed: usize,
    pub worst: Option<WorstCase>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailingPair {
    pub b: f64,
    pub z: f64,
    pub bracket: BoundBracket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Number of `(b, z)` pairs that survived the domain filter.
    pub checked: usize,
    pub passed: usize,
    pub failed: usize,
    /// `lower <= value`, `value <= upper`, `lower < z < upper`.
    pub inequalities: Vec<InequalityStats>,
    pub failures: Vec<FailingPair>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

const INEQUALITY_NAMES: [&str; 3] = ["lower <= value", "value <= upper", "lower < z < upper"];

/// Evaluates the bracket on every `(b, z)` pair of the two grids.
///
/// Pairs with `z <= e` or `z < ln(-b) + 1 + 1e-9` are skipped. Evaluation
/// runs in parallel; the reduction walks pairs in `(b, z)` grid order so the
/// report is identical for any thread count. Ties on the worst margin go to
/// the lexicographically smallest `(b, z)`.
pub fn verify_theorem(b_grid: &[f64], z_grid: &[f64]) -> Result<VerificationReport> {
    if let Some(&b) = b_grid.iter().find(|&&b| !(b < 0.0)) {
        return Err(Error::validation(format!("every b must be < 0, got {b}")));
    }
    let pairs: Vec<(f64, f64)> = b_grid
        .iter()
        .flat_map(|&b| {
            z_grid
                .iter()
                .filter(move |&&z| z > E && z >= rate_onset(b) + ONSET_MARGIN)
                .map(move |&z| (b, z))
        })
        .collect();

    let evaluated: Vec<(f64, f64, Result<BoundBracket>)> = pairs
        .par_iter()
        .map(|&(b, z)| (b, z, theorem_bracket(b, z)))
        .collect();

    let mut stats: Vec<InequalityStats> = INEQUALITY_NAMES
        .iter()
        .map(|name| InequalityStats {
            name: (*name).to_string(),
            checked: 0,
            passed: 0,
            failed: 0,
            worst: None,
        })
        .collect();
    let mut report = VerificationReport {
        checked: 0,
        passed: 0,
        failed: 0,
        inequalities: Vec::new(),
        failures: Vec::new(),
    };

    for (b, z, bracket) in evaluated {
        let bracket = bracket?;
        let margins = [
            bracket.value - bracket.lower,
            bracket.upper - bracket.value,
            (bracket.z - bracket.lower).min(bracket.upper - bracket.z),
        ];
        let oks = [margins[0] >= 0.0, margins[1] >= 0.0, margins[2] > 0.0];
        for ((stat, &margin), &ok) in stats.iter_mut().zip(&margins).zip(&oks) {
            stat.checked += 1;
            if ok {
                stat.passed += 1;
            } else {
                stat.failed += 1;
            }
            let candidate = WorstCase { margin, b, z };
            stat.worst = Some(match stat.worst {
                Some(cur) if !worse(&candidate, &cur) => cur,
                _ => candidate,
            });
        }
        report.checked += 1;
        if oks.iter().all(|&ok| ok) {
            report.passed += 1;
        } else {
            report.failed += 1;
            report.failures.push(FailingPair { b, z, bracket });
        }
    }
    report.inequalities = stats;
    Ok(report)
}

fn worse(candidate: &WorstCase, current: &WorstCase) -> bool {
    use std::cmp::Ordering;
    match candidate.margin.total_cmp(&current.margin) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => (candidate.b, candidate.z) < (current.b, current.z),
    }
}

/// `g_dc(z)` swept over `r` (fixed `d`) and over `d` (fixed `r`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub base: DCParams,
    pub z: f64,
    pub r_values: Vec<f64>,
    pub g_over_r: Vec<f64>,
    pub d_values: Vec<f64>,
    pub g_over_d: Vec<f64>,
    pub decreasing_in_r: bool,
    pub increasing_in_d: bool,
}

pub fn corollary_probe(
    base: &DCParams,
    z: f64,
    r_values: &[f64],
    d_values: &[f64],
) -> Result<ShiftReport> {
    if base.c() != 0.0 {
        return Err(Error::validation(format!(
            "corollary probe needs c = 0 so that b does not depend on r, got c = {}",
            base.c()
        )));
    }
    for (name, values) in [("r_values", r_values), ("d_values", d_values)] {
        if values.len() < 2 {
            return Err(Error::validation(format!("{name} needs at least 2 entries")));
        }
        if values.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::validation(format!("{name} must be sorted ascending")));
        }
    }
    let g_over_r = r_values
        .iter()
        .map(|&r| dc_rate(&base.with_r(r)?, z))
        .collect::<Result<Vec<_>>>()?;
    let g_over_d = d_values
        .iter()
        .map(|&d| dc_rate(&base.with_d(d)?, z))
        .collect::<Result<Vec<_>>>()?;
    Ok(ShiftReport {
        base: *base,
        z,
        decreasing_in_r: g_over_r.windows(2).all(|w| w[1] < w[0]),
        increasing_in_d: g_over_d.windows(2).all(|w| w[1] > w[0]),
        r_values: r_values.to_vec(),
        g_over_r,
        d_values: d_values.to_vec(),
        g_over_d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dc_loss::margin_transform;
    use proptest::prelude::*;

    fn bisect_w0(x: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0f64, 0.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn unit_b() -> DCParams {
        // b = ln(e^-1) - 0 = -1 (to rounding).
        DCParams::new(1.0, 0.0, 0.0, (-1.0f64).exp()).unwrap()
    }

    #[test]
    fn dc_rate_examples() {
        let p = unit_b();
        let oracle = 3.0 + bisect_w0(-(-3.0f64).exp());
        assert!((oracle - 2.947_530_902_542_285).abs() < 1e-12);
        let g = dc_rate(&p, 3.0).unwrap();
        assert!((g - oracle).abs() < 1e-12);

        let shifted = dc_rate(&p.with_d(5.0).unwrap(), 3.0).unwrap();
        assert!((shifted - (g + 5.0)).abs() < 1e-14);

        let err = dc_rate(&p, 0.5).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(err.to_string().contains("z_min"));
    }

    #[test]
    fn default_rate_is_identity() {
        for z in [1.0, E, 42.0] {
            assert_eq!(default_rate(z), z);
        }
    }

    #[test]
    fn bracket_at_e() {
        let br = theorem_bracket(-1.0, E).unwrap();
        assert!((br.lower - (E - 1.0 / E)).abs() < 1e-15);
        assert!((br.upper - (E + (E - 1.0) / E)).abs() < 1e-15);
        let oracle = E + bisect_w0(-(-E).exp());
        assert!((oracle - 2.647_450_242_049_966).abs() < 1e-12);
        assert!((br.value - oracle).abs() < 1e-12);
        assert!(br.contains_value());
        assert!(br.straddles_default());
    }

    #[test]
    fn bracket_narrows_towards_z() {
        let mut prev_width = f64::INFINITY;
        for z in [5.0, 20.0, 100.0, 1e3, 1e5] {
            let br = theorem_bracket(-1.0, z).unwrap();
            assert!(br.straddles_default() && br.contains_value());
            assert!(br.width() < prev_width);
            assert!((br.value - z).abs() < 2.0 / z);
            prev_width = br.width();
        }
        // upper - z ~ 1/ln z, so the bracket closes only logarithmically.
        assert!(prev_width < 0.1);
    }

    #[test]
    fn bracket_errors() {
        assert!(matches!(theorem_bracket(-1.0, 2.0), Err(Error::Domain(_))));
        assert!(matches!(theorem_bracket(1.0, 5.0), Err(Error::Validation(_))));
        // b = -100: onset ln 100 + 1 ~ 5.6
        assert!(matches!(theorem_bracket(-100.0, 4.0), Err(Error::Domain(_))));
    }

    #[test]
    fn verify_examples() {
        let rep = verify_theorem(&[-1.0], &[3.0, 4.0, 5.0]).unwrap();
        assert_eq!((rep.checked, rep.failed), (3, 0));
        assert!(rep.all_passed());
        assert_eq!(rep.inequalities.len(), 3);
        assert!(rep.inequalities.iter().all(|s| s.checked == 3 && s.failed == 0));

        let rep = verify_theorem(&[-20.0], &[3.0]).unwrap();
        assert_eq!(rep.checked, 0);
        assert!(rep.inequalities[0].worst.is_none());

        assert!(matches!(verify_theorem(&[1.0], &[5.0]), Err(Error::Validation(_))));
        assert!(matches!(verify_theorem(&[-1.0, 0.0], &[5.0]), Err(Error::Validation(_))));
    }

    #[test]
    fn verify_is_thread_count_independent() {
        let bs: Vec<f64> = (1..=30).map(|k| -0.37 * k as f64).collect();
        let zs: Vec<f64> = (0..100).map(|k| E + 0.3 * k as f64 + 0.01).collect();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| verify_theorem(&bs, &zs).unwrap())
        };
        let one = serde_json::to_string(&run(1)).unwrap();
        let four = serde_json::to_string(&run(4)).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn corollary_examples() {
        let base = unit_b();
        let rep = corollary_probe(&base, 5.0, &[1.0, 2.0, 4.0], &[0.0, 1.0, 2.0]).unwrap();
        let w = bisect_w0(-(-5.0f64).exp());
        assert!((w - (-0.006_783_811_352_097)).abs() < 1e-9);
        for (g, r) in rep.g_over_r.iter().zip([1.0, 2.0, 4.0]) {
            assert!((g - (w + 5.0) / r).abs() < 1e-12);
        }
        assert!((rep.g_over_r[0] - 4.993_216_188_647_903).abs() < 1e-12);
        assert!(rep.decreasing_in_r);
        for (k, g) in rep.g_over_d.iter().enumerate() {
            assert!((g - rep.g_over_d[0] - k as f64).abs() < 1e-14);
        }
        assert!(rep.increasing_in_d);

        let with_c = DCParams::new(1.0, 1.0, 0.0, 0.5).unwrap();
        assert!(matches!(
            corollary_probe(&with_c, 5.0, &[1.0, 2.0], &[0.0, 1.0]),
            Err(Error::Validation(_))
        ));
        assert!(corollary_probe(&base, 5.0, &[2.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(corollary_probe(&base, 5.0, &[1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn rate_curve_drops_points_below_onset() {
        let curve = RateCurve::sample(unit_b(), &[0.5, 1.5, 3.0, 10.0]).unwrap();
        assert_eq!(curve.z_values, vec![1.5, 3.0, 10.0]);
        let rows = curve.rows();
        assert!(rows[0].lower.is_none());
        let r3 = rows[1];
        assert!(r3.lower.unwrap() < r3.g_dc && r3.g_dc < r3.g_default);
        assert!(r3.g_default < r3.upper.unwrap());
        assert!(RateCurve::sample(unit_b(), &[0.1, 0.2]).is_err());
        assert!(RateCurve::sample(unit_b(), &[3.0, 2.0]).is_err());

        let mut buf = Vec::new();
        curve.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("z,g_dc,g_default,lower,upper,z_min\n"));
        assert_eq!(text.lines().count(), 4);
    }

    fn valid_pair() -> impl Strategy<Value = (DCParams, f64)> {
        (0.1f64..12.0, 0.0f64..12.0, 0.0f64..5.0, 0.1f64..0.9, 0.1f64..20.0).prop_map(
            |(r, c, d, p, dz)| {
                let params = DCParams::new(r, c, d, p).unwrap();
                (params, rate_onset(params.b()) + dz)
            },
        )
    }

    proptest! {
        #[test]
        fn rate_inverts_margin_transform((params, z) in valid_pair()) {
            let g = dc_rate(&params, z).unwrap();
            let back = margin_transform(&params, g);
            prop_assert!((back - z).abs() <= 1e-9 * (1.0 + z.abs()));
        }

        #[test]
        fn rate_approaches_linear_asymptote(r in 0.1f64..12.0, d in 0.0f64..5.0, p in 0.1f64..0.9) {
            let params = DCParams::new(r, 0.0, d, p).unwrap();
            let z = 40.0;
            let gap = dc_rate(&params, z).unwrap() - (d + z / r);
            prop_assert!(gap <= 0.0 && gap.abs() < 1e-15 / r + 1e-12);
        }

        #[test]
        fn bracket_holds_on_random_pairs(b in -20.0f64..-1e-3, dz in 0.0f64..50.0) {
            let z = (rate_onset(b) + ONSET_MARGIN).max(E + 1e-12) + dz;
            let br = theorem_bracket(b, z).unwrap();
            prop_assert!(br.contains_value());
            prop_assert!(br.straddles_default());
        }
    }
}
