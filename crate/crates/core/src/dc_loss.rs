//! The differential-capability loss family.
//!
//! A Gompertz curve replaces the 2PL logistic response:
//!
//! ```text
//! P(t) = a * exp(b * exp(-r (t - d))),   eps = c / r,  a = e^eps,  b = ln(p_d) - eps
//! ```
//!
//! where `t = y θᵀx` is the margin. `r` is the growth rate of differential
//! capability, `c` its decay rate, `d` the difficulty and `p_d` the response
//! probability at `t = d`.
//!
//! The curve is increasing in `t`, so the trained objective is its negation,
//! [`per_sample_loss`]`(t) = -P(t)`. Its derivative is `a b r e^{-f(t)}` with
//! `f(t) = r (t - d) - b e^{-r (t - d)}`, a member of the monotone family
//! `-e^{-f}` up to the constant factor `a (-b) r`.
//!
//! Note that `P` is strictly increasing for every valid parameter set (`b < 0`,
//! `r > 0`) and approaches `a = e^{c/r} > 1` when `c > 0`. Both facts follow
//! from the closed form; the "decaying" configurations change the scale and
//! steepness of the curve but never make it non-monotone.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used to decide whether `r == 1` when classifying a configuration.
pub const UNIT_RATE_TOL: f64 = 1e-12;

/// Parameter bundle of the DC loss. Derived fields are recomputed on
/// construction and never serialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct DCParams {
    r: f64,
    c: f64,
    d: f64,
    p_d: f64,
    eps: f64,
    a: f64,
    b: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    r: f64,
    c: f64,
    d: f64,
    p_d: f64,
}

impl TryFrom<RawParams> for DCParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        DCParams::new(raw.r, raw.c, raw.d, raw.p_d)
    }
}

impl From<DCParams> for RawParams {
    fn from(p: DCParams) -> Self {
        RawParams {
            r: p.r,
            c: p.c,
            d: p.d,
            p_d: p.p_d,
        }
    }
}

impl DCParams {
    pub fn new(r: f64, c: f64, d: f64, p_d: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::validation(format!("r must be > 0, got {r}")));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::validation(format!("c must be >= 0, got {c}")));
        }
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::validation(format!("d must be >= 0, got {d}")));
        }
        if !(p_d > 0.0 && p_d < 1.0) {
            return Err(Error::validation(format!(
                "p_d must lie in (0, 1), got {p_d}"
            )));
        }
        let eps = c / r;
        Ok(DCParams {
            r,
            c,
            d,
            p_d,
            eps,
            a: eps.exp(),
            b: p_d.ln() - eps,
        })
    }

    /// The sigmoid-like reference configuration: `r = 1, c = 0, d = 0, p_d = 0.5`.
    pub fn no_dc() -> Self {
        DCParams::new(1.0, 0.0, 0.0, 0.5).expect("valid constants")
    }

    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn p_d(&self) -> f64 {
        self.p_d
    }
    /// `c / r`, the balance between decay and growth.
    pub fn eps(&self) -> f64 {
        self.eps
    }
    /// `e^{c/r}`, the supremum of the response curve.
    pub fn a(&self) -> f64 {
        self.a
    }
    /// `ln(p_d) - c/r`, always negative.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Same parameters with a different difficulty.
    pub fn with_d(&self, d: f64) -> Result<Self> {
        DCParams::new(self.r, self.c, d, self.p_d)
    }

    /// Same parameters with a different growth rate.
    pub fn with_r(&self, r: f64) -> Result<Self> {
        DCParams::new(r, self.c, self.d, self.p_d)
    }

    pub fn kind(&self) -> LossConfigKind {
        classify_config(self)
    }
}

/// The four shapes of the DC loss, keyed on whether `r = 1` and `c = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossConfigKind {
    NoDC,
    GrowingDC,
    DecayingDC,
    GrowDecayDC,
}

impl LossConfigKind {
    pub const ALL: [LossConfigKind; 4] = [
        LossConfigKind::NoDC,
        LossConfigKind::GrowingDC,
        LossConfigKind::DecayingDC,
        LossConfigKind::GrowDecayDC,
    ];

    pub fn label(self) -> &'static str {
        match self {
            LossConfigKind::NoDC => "no-DC",
            LossConfigKind::GrowingDC => "growing-DC",
            LossConfigKind::DecayingDC => "decaying-DC",
            LossConfigKind::GrowDecayDC => "grow+decay-DC",
        }
    }
}

impl fmt::Display for LossConfigKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn classify_config(params: &DCParams) -> LossConfigKind {
    let unit_rate = (params.r - 1.0).abs() <= UNIT_RATE_TOL;
    let decays = params.c != 0.0;
    match (unit_rate, decays) {
        (true, false) => LossConfigKind::NoDC,
        (false, false) => LossConfigKind::GrowingDC,
        (true, true) => LossConfigKind::DecayingDC,
        (false, true) => LossConfigKind::GrowDecayDC,
    }
}

/// `a exp(b exp(-r (t - d)))`, the probability of a correct response at margin `t`.
pub fn response_probability(params: &DCParams, t: f64) -> f64 {
    // a * e^{b e^{-u}} folded into one exponential so that t = d returns p_d to rounding.
    log_response_probability(params, t).exp()
}

/// `ln P(t) = c/r + b e^{-r (t - d)}`.
///
/// Finite wherever `e^{-r(t-d)}` is, whereas `P` itself underflows to zero
/// a few units of `1/r` below the difficulty.
pub fn log_response_probability(params: &DCParams, t: f64) -> f64 {
    params.eps + params.b * (-params.r * (t - params.d)).exp()
}

pub fn per_sample_loss(params: &DCParams, t: f64) -> f64 {
    -response_probability(params, t)
}

/// Derivative of [`per_sample_loss`] with respect to the margin: `a b r e^{-f(t)}`.
pub fn loss_derivative(params: &DCParams, t: f64) -> f64 {
    let f = margin_transform(params, t);
    params.a * params.b * params.r * (-f).exp()
}

/// `f(t) = r (t - d) - b e^{-r (t - d)}`.
pub fn margin_transform(params: &DCParams, t: f64) -> f64 {
    let u = params.r * (t - params.d);
    u - params.b * (-u).exp()
}

/// Two-parameter logistic response `1 / (1 + e^{-r (omega - d)})`.
pub fn two_pl(omega: f64, r: f64, d: f64) -> f64 {
    1.0 / (1.0 + (-r * (omega - d)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn central_difference(params: &DCParams, t: f64, h: f64) -> f64 {
        (per_sample_loss(params, t + h) - per_sample_loss(params, t - h)) / (2.0 * h)
    }

    fn params_strategy() -> impl Strategy<Value = DCParams> {
        (0.1f64..12.0, 0.0f64..12.0, 0.0f64..5.0, 0.1f64..0.9)
            .prop_map(|(r, c, d, p)| DCParams::new(r, c, d, p).unwrap())
    }

    #[test]
    fn derived_fields() {
        let p = DCParams::new(1.0, 0.0, 0.0, 0.5).unwrap();
        assert_eq!(p.eps(), 0.0);
        assert_eq!(p.a(), 1.0);
        assert_eq!(p.b(), 0.5f64.ln());

        let p = DCParams::new(2.0, 1.0, 1.0, 0.7).unwrap();
        assert_eq!(p.eps(), 0.5);
        assert_eq!(p.a(), 0.5f64.exp());
        assert_eq!(p.b(), 0.7f64.ln() - 0.5);
    }

    #[test]
    fn rejects_out_of_range() {
        for (r, c, d, p) in [
            (0.0, 0.0, 0.0, 0.5),
            (-1.0, 0.0, 0.0, 0.5),
            (1.0, -0.1, 0.0, 0.5),
            (1.0, 0.0, -1.0, 0.5),
            (1.0, 0.0, 0.0, 0.0),
            (1.0, 0.0, 0.0, 1.0),
            (f64::NAN, 0.0, 0.0, 0.5),
        ] {
            assert!(matches!(DCParams::new(r, c, d, p), Err(Error::Validation(_))));
        }
        let msg = DCParams::new(0.0, 0.0, 0.0, 0.5).unwrap_err().to_string();
        assert!(msg.contains("r must be > 0"), "{msg}");
    }

    #[test]
    fn json_carries_only_the_four_inputs() {
        let p = DCParams::new(2.0, 1.0, 1.0, 0.7).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"r":2.0,"c":1.0,"d":1.0,"p_d":0.7}"#);
        let back: DCParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<DCParams>(r#"{"r":0,"c":0,"d":0,"p_d":0.5}"#).is_err());
    }

    #[test]
    fn probability_examples() {
        let p = DCParams::new(2.0, 1.0, 1.0, 0.7).unwrap();
        assert!((response_probability(&p, 1.0) - 0.7).abs() < 1e-15);
        assert!((per_sample_loss(&p, 1.0) + 0.7).abs() < 1e-15);

        let p = DCParams::new(1.0, 0.0, 0.0, (-1.0f64).exp()).unwrap();
        assert!((response_probability(&p, 0.0) - (-1.0f64).exp()).abs() < 1e-15);

        // 0.5^(e^-2), evaluated directly.
        let p = DCParams::new(1.0, 0.0, 0.0, 0.5).unwrap();
        let oracle = 0.5f64.powf((-2.0f64).exp());
        assert!((oracle - 0.910_458_217_939_553_6).abs() < 1e-15);
        assert!((response_probability(&p, 2.0) - oracle).abs() < 1e-15);
    }

    #[test]
    fn loss_limits() {
        let p = DCParams::new(2.0, 1.0, 1.0, 0.7).unwrap();
        assert!((per_sample_loss(&p, 60.0) + p.a()).abs() < 1e-12);
        assert!(per_sample_loss(&p, -60.0).abs() < 1e-300);
        assert!(per_sample_loss(&p, -60.0) <= 0.0);
    }

    #[test]
    fn derivative_examples() {
        let p = DCParams::new(1.0, 0.0, 0.0, (-1.0f64).exp()).unwrap();
        assert!((loss_derivative(&p, 0.0) + (-1.0f64).exp()).abs() < 1e-15);

        let p = DCParams::new(1.0, 0.0, 0.0, 0.5).unwrap();
        let fd = central_difference(&p, 2.0, 1e-6);
        assert!((fd - (-0.085_407_599_879)).abs() < 1e-9);
        assert!((loss_derivative(&p, 2.0) - fd).abs() <= 1e-6 * fd.abs());
    }

    #[test]
    fn margin_transform_examples() {
        let p = DCParams::new(2.0, 1.0, 1.0, 0.7).unwrap();
        assert_eq!(margin_transform(&p, p.d()), -p.b());
        let p = DCParams::new(1.0, 0.0, 0.0, (-1.0f64).exp()).unwrap();
        assert!((margin_transform(&p, 1.0) - (1.0 + (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn two_pl_examples() {
        assert_eq!(two_pl(3.0, 7.0, 3.0), 0.5);
        assert_eq!(two_pl(0.0, 1.0, 0.0), 0.5);
        assert!((two_pl(50.0, 1.0, 0.0) - 1.0).abs() < 1e-15);
        for k in -20..=20 {
            let w = k as f64 * 0.37;
            let sigmoid = 1.0 / (1.0 + (-w).exp());
            assert_eq!(two_pl(w, 1.0, 0.0), sigmoid);
        }
    }

    #[test]
    fn classification() {
        let kind = |r, c| DCParams::new(r, c, 0.0, 0.5).unwrap().kind();
        assert_eq!(kind(1.0, 0.0), LossConfigKind::NoDC);
        assert_eq!(kind(3.0, 0.0), LossConfigKind::GrowingDC);
        assert_eq!(kind(1.0, 2.0), LossConfigKind::DecayingDC);
        assert_eq!(kind(2.0, 2.0), LossConfigKind::GrowDecayDC);
        assert_eq!(kind(1.0 + 1e-13, 0.0), LossConfigKind::NoDC);
        assert_eq!(kind(1.0 + 1e-9, 0.0), LossConfigKind::GrowingDC);
        assert_eq!(kind(1.0, 1e-300), LossConfigKind::DecayingDC);
    }

    proptest! {
        #[test]
        fn invariants_hold(p in params_strategy()) {
            prop_assert!(p.b() < 0.0);
            prop_assert!(p.a() >= 1.0);
            prop_assert_eq!(p.a() == 1.0, p.c() == 0.0);
        }

        #[test]
        fn anchor_at_difficulty(p in params_strategy()) {
            let got = response_probability(&p, p.d());
            prop_assert!((got - p.p_d()).abs() <= 1e-12 * p.p_d());
        }

        #[test]
        fn probability_range_and_monotone(p in params_strategy()) {
            let span = 10.0 / p.r();
            let mut prev = f64::NEG_INFINITY;
            let mut prev_log = f64::NEG_INFINITY;
            for k in 0..100 {
                let t = p.d() - span + 2.0 * span * k as f64 / 99.0;
                let v = response_probability(&p, t);
                prop_assert!(v >= 0.0 && v < p.a());
                prop_assert!(v >= prev, "decreasing at t={}", t);
                if prev > 0.0 {
                    prop_assert!(v > prev, "not strictly increasing at t={}", t);
                }
                prev = v;
                let lv = log_response_probability(&p, t);
                prop_assert!(lv > prev_log);
                prev_log = lv;
            }
        }

        #[test]
        fn derivative_matches_central_difference(p in params_strategy(), t in -3.0f64..8.0) {
            let h = 1e-6 * (1.0 + t.abs());
            let fd = central_difference(&p, t, h);
            let an = loss_derivative(&p, t);
            prop_assert!(an < 0.0 || an == 0.0 && fd.abs() < 1e-300);
            // Roundoff in the difference quotient is ~eps * |loss| / h.
            let noise = 4.0 * f64::EPSILON * p.a() / h;
            prop_assert!((an - fd).abs() <= 1e-6 * an.abs() + noise, "an={} fd={}", an, fd);
        }

        #[test]
        fn derivative_is_shifted_family_member(p in params_strategy(), t in -1.0f64..6.0) {
            let deriv = loss_derivative(&p, t);
            prop_assume!(deriv < 0.0 && deriv.is_normal());
            // deriv = -exp(-(f(t) - ln(a (-b) r)))
            let shift = (p.a() * (-p.b()) * p.r()).ln();
            let reconstructed = -(-(margin_transform(&p, t) - shift)).exp();
            prop_assert!((reconstructed - deriv).abs() <= 1e-12 * deriv.abs());
        }
    }

    #[test]
    fn derivative_strictly_negative_on_grid() {
        for &(r, c, d, pd) in &[(1.0, 0.0, 0.0, 0.5), (12.0, 12.0, 5.0, 0.1), (0.1, 0.0, 0.0, 0.9)] {
            let p = DCParams::new(r, c, d, pd).unwrap();
            for k in -20..=20 {
                let t = d + k as f64 * 0.25 / r;
                assert!(loss_derivative(&p, t) < 0.0);
            }
        }
        let p = DCParams::new(1.0, 0.0, 0.0, E.recip()).unwrap();
        assert_eq!(p.b(), -1.0);
    }
}
