//! Smoothing measures: signed measures `λ` on `(0,1]` with total mass zero
//! and unit log-moment, which weight the log-spacings of the estimators.
//!
//! Two families are provided. The beta measure has cumulative function
//! `λ(t) = t^(α-1) (1-t)^(β-1) / Beta(α-1, β)`; the point-spacing measure
//! `(ε_1 - ε_v) / log v` reproduces the two-spacing Pickands form. A general
//! discrete measure exists mostly for oracles and negative tests.
//!
//! The admissible box for beta parameters is `α ∈ [1.55, 12]`,
//! `β ∈ [1.05, 12]`: `β > 1` gives `λ(1) = 0`, and `α > 3/2` keeps
//! `∫ t^(-1/2-ε) |λ|(dt)` finite, which the asymptotic theory needs.

use crate::error::{Error, Result};
use crate::numeric::ln_beta;
use crate::quadrature::{self, Node};
use std::fmt;
use std::str::FromStr;

pub const ALPHA_MIN: f64 = 1.55;
pub const ALPHA_MAX: f64 = 12.0;
pub const BETA_MIN: f64 = 1.05;
pub const BETA_MAX: f64 = 12.0;

/// Default absolute tolerance of [`integrate_against`].
pub const INTEGRATION_TOL: f64 = 1e-10;
/// Tolerance on the unit log-moment condition.
pub const LOG_MOMENT_TOL: f64 = 1e-8;

/// Beta measure with shape parameters `alpha`, `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaMeasure {
    alpha: f64,
    beta: f64,
    ln_norm: f64,
}

impl BetaMeasure {
    /// Construct a beta measure inside the admissible box.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !in_box(alpha, beta) {
            return Err(Error::MeasureDomain(format!(
                "alpha={alpha} beta={beta} outside [{ALPHA_MIN},{ALPHA_MAX}]x[{BETA_MIN},{BETA_MAX}]"
            )));
        }
        Ok(Self::new_unchecked(alpha, beta))
    }

    /// Construct without the box check; the result may violate the
    /// measure-space conditions (see [`validate_lambda`]). Requires
    /// `alpha > 1` and `beta > 0` for the normalisation to exist.
    pub fn new_unchecked(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            ln_norm: ln_beta(alpha - 1.0, beta),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `ln Beta(α-1, β)`.
    pub fn ln_normalizer(&self) -> f64 {
        self.ln_norm
    }

    /// `λ(t)`; zero at both ends for admissible parameters.
    pub fn cumulative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let t = t.min(1.0);
        t.powf(self.alpha - 1.0) * (1.0 - t).powf(self.beta - 1.0) * (-self.ln_norm).exp()
    }

    /// Density `λ'(t)` given `t` and an accurate `1 - t`.
    #[inline]
    pub fn density_at(&self, t: f64, one_minus_t: f64) -> f64 {
        let a1 = self.alpha - 1.0;
        let b1 = self.beta - 1.0;
        let core = ((self.alpha - 2.0) * t.ln() + (self.beta - 2.0) * one_minus_t.ln() - self.ln_norm).exp();
        core * (a1 * one_minus_t - b1 * t)
    }

    /// `∫ t^p λ(dt) = -p Beta(α-1+p, β) / Beta(α-1, β)` for `p > 1-α`.
    pub fn power_moment(&self, p: f64) -> f64 {
        if p == 0.0 {
            return 0.0;
        }
        -p * (ln_beta(self.alpha - 1.0 + p, self.beta) - self.ln_norm).exp()
    }
}

fn in_box(alpha: f64, beta: f64) -> bool {
    (ALPHA_MIN..=ALPHA_MAX).contains(&alpha) && (BETA_MIN..=BETA_MAX).contains(&beta)
}

/// `λ(t)` of a beta measure, with the admissible-box check.
pub fn beta_cumulative(alpha: f64, beta: f64, t: f64) -> Result<f64> {
    let m = BetaMeasure::new(alpha, beta)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t={t} outside [0,1]")));
    }
    Ok(m.cumulative(t))
}

/// `λ'(t)` of a beta measure on the open interval.
pub fn beta_density(measure: &BetaMeasure, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("t={t} outside (0,1)")));
    }
    Ok(measure.density_at(t, 1.0 - t))
}

/// The point-spacing measure `(ε_1 - ε_v) / log v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSpacingMeasure {
    v: f64,
}

impl PointSpacingMeasure {
    pub fn new(v: f64) -> Result<Self> {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::MeasureDomain(format!("v={v} outside (0,1)")));
        }
        Ok(Self { v })
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    /// Atoms `(1, 1/log v)` and `(v, -1/log v)`.
    pub fn atoms(&self) -> [(f64, f64); 2] {
        let inv = 1.0 / self.v.ln();
        [(1.0, inv), (self.v, -inv)]
    }

    pub fn cumulative(&self, t: f64) -> f64 {
        let [(_, at_one), (_, at_v)] = self.atoms();
        if t >= 1.0 {
            at_v + at_one
        } else if t >= self.v {
            at_v
        } else {
            0.0
        }
    }
}

/// A finite signed combination of point masses.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    /// Atoms as `(location, mass)`; locations must lie in `(0,1]`.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(&(loc, _)) = atoms.iter().find(|(l, m)| !(*l > 0.0 && *l <= 1.0) || !m.is_finite()) {
            return Err(Error::MeasureDomain(format!("atom at {loc} outside (0,1]")));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn cumulative(&self, t: f64) -> f64 {
        self.atoms.iter().filter(|(l, _)| *l <= t).map(|(_, m)| m).sum()
    }
}

/// Any measure the estimators accept.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothingMeasure {
    Beta(BetaMeasure),
    Point(PointSpacingMeasure),
    Discrete(DiscreteMeasure),
}

impl From<BetaMeasure> for SmoothingMeasure {
    fn from(m: BetaMeasure) -> Self {
        SmoothingMeasure::Beta(m)
    }
}

impl From<PointSpacingMeasure> for SmoothingMeasure {
    fn from(m: PointSpacingMeasure) -> Self {
        SmoothingMeasure::Point(m)
    }
}

impl From<DiscreteMeasure> for SmoothingMeasure {
    fn from(m: DiscreteMeasure) -> Self {
        SmoothingMeasure::Discrete(m)
    }
}

impl SmoothingMeasure {
    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        Ok(BetaMeasure::new(alpha, beta)?.into())
    }

    pub fn point(v: f64) -> Result<Self> {
        Ok(PointSpacingMeasure::new(v)?.into())
    }

    /// `λ((0, t])`, right-continuous.
    pub fn cumulative(&self, t: f64) -> f64 {
        match self {
            SmoothingMeasure::Beta(m) => m.cumulative(t),
            SmoothingMeasure::Point(m) => m.cumulative(t),
            SmoothingMeasure::Discrete(m) => m.cumulative(t),
        }
    }

    /// Density of the absolutely continuous part, if any.
    pub fn density_at(&self, t: f64, one_minus_t: f64) -> Option<f64> {
        match self {
            SmoothingMeasure::Beta(m) => Some(m.density_at(t, one_minus_t)),
            _ => None,
        }
    }

    pub fn has_density(&self) -> bool {
        matches!(self, SmoothingMeasure::Beta(_))
    }

    /// Point masses as `(location, mass)`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            SmoothingMeasure::Beta(_) => Vec::new(),
            SmoothingMeasure::Point(m) => m.atoms().to_vec(),
            SmoothingMeasure::Discrete(m) => m.atoms().to_vec(),
        }
    }

    pub fn as_beta(&self) -> Option<&BetaMeasure> {
        match self {
            SmoothingMeasure::Beta(m) => Some(m),
            _ => None,
        }
    }
}

/// `∫ f dλ` with the default tolerance.
pub fn integrate_against<F: Fn(f64) -> f64>(measure: &SmoothingMeasure, f: F) -> Result<f64> {
    integrate_against_with(measure, &[], INTEGRATION_TOL, f)
}

/// `∫ f dλ`: atoms are summed directly, the density part is integrated by
/// adaptive tanh-sinh quadrature on `(0,1)` split at `breaks`.
pub fn integrate_against_with<F: Fn(f64) -> f64>(
    measure: &SmoothingMeasure,
    breaks: &[f64],
    tol: f64,
    f: F,
) -> Result<f64> {
    match measure {
        SmoothingMeasure::Point(p) => Ok((f(1.0) - f(p.v)) / p.v.ln()),
        SmoothingMeasure::Discrete(d) => Ok(d.atoms.iter().map(|&(l, m)| m * f(l)).sum()),
        SmoothingMeasure::Beta(b) => {
            let r = quadrature::integrate_pieces(0.0, 1.0, breaks, tol, |hi, nd: &Node| {
                let d = b.density_at(nd.x, nd.one_minus_x(hi));
                if d == 0.0 {
                    0.0
                } else {
                    f(nd.x) * d
                }
            })?;
            Ok(r.value)
        }
    }
}

/// Outcome of a single measure-space condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    pub passed: bool,
    pub residual: f64,
}

/// Per-condition report from [`validate_lambda`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    /// `λ(0,1] = 0`, read off the cumulative endpoints.
    pub mass_zero: ConditionCheck,
    /// `|∫ log(1/t) λ(dt) - 1|`.
    pub log_moment: ConditionCheck,
    /// `∫ log(1/t) |λ|(dt) < ∞`; the residual is the integral value.
    pub abs_log_moment_finite: ConditionCheck,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.mass_zero.passed && self.log_moment.passed && self.abs_log_moment_finite.passed
    }
}

/// Numerically check the three measure-space conditions.
pub fn validate_lambda(measure: &SmoothingMeasure) -> ValidationReport {
    let mass = measure.cumulative(1.0) - measure.cumulative(0.0);
    let mass_zero = ConditionCheck {
        passed: mass == 0.0,
        residual: mass,
    };
    let log_moment = match integrate_against(measure, |t| -t.ln()) {
        Ok(v) => ConditionCheck {
            passed: (v - 1.0).abs() <= LOG_MOMENT_TOL,
            residual: v - 1.0,
        },
        Err(_) => ConditionCheck {
            passed: false,
            residual: f64::INFINITY,
        },
    };
    let abs_integral = match measure {
        SmoothingMeasure::Beta(b) => {
            // the density changes sign once
            let root = (b.alpha - 1.0) / (b.alpha + b.beta - 2.0);
            quadrature::integrate_pieces(0.0, 1.0, &[root], 1e-8, |hi, nd| {
                let d = b.density_at(nd.x, nd.one_minus_x(hi));
                if d == 0.0 {
                    0.0
                } else {
                    -nd.x.ln() * d.abs()
                }
            })
            .map(|r| r.value)
        }
        _ => Ok(measure.atoms().iter().map(|(l, m)| -l.ln() * m.abs()).sum()),
    };
    let abs_log_moment_finite = match abs_integral {
        Ok(v) if v.is_finite() => ConditionCheck {
            passed: true,
            residual: v,
        },
        Ok(v) => ConditionCheck {
            passed: false,
            residual: v,
        },
        Err(_) => ConditionCheck {
            passed: false,
            residual: f64::INFINITY,
        },
    };
    ValidationReport {
        mass_zero,
        log_moment,
        abs_log_moment_finite,
    }
}

impl fmt::Display for SmoothingMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmoothingMeasure::Beta(b) => write!(f, "kind=beta alpha={} beta={}", b.alpha, b.beta),
            SmoothingMeasure::Point(p) => write!(f, "kind=point v={}", p.v),
            SmoothingMeasure::Discrete(d) => {
                write!(f, "kind=atoms atoms=")?;
                for (i, (l, m)) in d.atoms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{l}:{m}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for SmoothingMeasure {
    type Err = Error;

    /// Parses `kind=beta alpha=2.0 beta=2.0`, `kind=point v=0.5`, or
    /// `kind=atoms atoms=1:0.5;0.5:-0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let mut kind = None;
        let mut fields = std::collections::HashMap::new();
        for tok in s.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {tok:?}")))?;
            if k == "kind" {
                kind = Some(v.to_string());
            } else if fields.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Parse(format!("duplicate key {k:?}")));
            }
        }
        let num = |key: &str| -> Result<f64> {
            fields
                .get(key)
                .ok_or_else(|| Error::Parse(format!("missing {key}")))?
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("invalid {key}")))
        };
        match kind.as_deref() {
            Some("beta") => SmoothingMeasure::beta(num("alpha")?, num("beta")?),
            Some("point") => SmoothingMeasure::point(num("v")?),
            Some("atoms") => {
                let spec = fields.get("atoms").ok_or_else(|| Error::Parse("missing atoms".into()))?;
                let mut atoms = Vec::new();
                for pair in spec.split(';').filter(|p| !p.is_empty()) {
                    let (l, m) = pair
                        .split_once(':')
                        .ok_or_else(|| Error::Parse(format!("bad atom {pair:?}")))?;
                    let l: f64 = l.parse().map_err(|_| Error::Parse(format!("bad atom {pair:?}")))?;
                    let m: f64 = m.parse().map_err(|_| Error::Parse(format!("bad atom {pair:?}")))?;
                    atoms.push((l, m));
                }
                Ok(DiscreteMeasure::new(atoms)?.into())
            }
            Some(other) => Err(Error::Parse(format!("unknown measure kind {other:?}"))),
            None => Err(Error::Parse("missing kind".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::function::gamma::gamma;

    #[test]
    fn beta_cumulative_values() {
        assert_eq!(beta_cumulative(2.0, 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(beta_cumulative(2.0, 2.0, 0.0).unwrap(), 0.0);
        // Beta(1,2) = Γ(1)Γ(2)/Γ(3) = 1/2, so λ(t) = 2t(1-t)
        let norm = gamma(1.0) * gamma(2.0) / gamma(3.0);
        assert!((norm - 0.5).abs() < 1e-14);
        assert!((beta_cumulative(2.0, 2.0, 0.5).unwrap() - 0.5).abs() < 1e-14);
        assert!(matches!(beta_cumulative(1.2, 2.0, 0.5), Err(Error::MeasureDomain(_))));
        assert!(BetaMeasure::new(2.0, 1.0).unwrap_err().to_string().starts_with("measure parameters out of domain"));
    }

    #[test]
    fn beta_density_values() {
        let m = BetaMeasure::new(2.0, 2.0).unwrap();
        assert!(beta_density(&m, 0.5).unwrap().abs() < 1e-15);
        assert!((beta_density(&m, 0.25).unwrap() - 1.0).abs() < 1e-14);
        assert!(beta_density(&m, 0.0).is_err());
        assert!(beta_density(&m, 1.0).is_err());
        // density integrates to λ(1) - λ(0) = 0
        for &(a, b) in &[(2.0, 2.0), (1.55, 1.05), (7.0, 3.5), (12.0, 12.0)] {
            let m: SmoothingMeasure = BetaMeasure::new(a, b).unwrap().into();
            let total = integrate_against(&m, |_| 1.0).unwrap();
            assert!(total.abs() < 1e-9, "({a},{b}) -> {total}");
        }
    }

    #[test]
    fn integrate_against_examples() {
        let m = SmoothingMeasure::beta(2.0, 2.0).unwrap();
        assert!(integrate_against(&m, |_| 3.7).unwrap().abs() < 1e-10);
        assert!((integrate_against(&m, |t| -t.ln()).unwrap() - 1.0).abs() < 1e-10);
        assert!((integrate_against(&m, |t| t).unwrap() + 1.0 / 3.0).abs() < 1e-10);
        let p = SmoothingMeasure::point(0.5).unwrap();
        assert!(integrate_against(&p, |_| 3.7).unwrap().abs() < 1e-15);
        assert!((integrate_against(&p, |t| -t.ln()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn point_measure_integral_is_two_term_difference() {
        let p = SmoothingMeasure::point(0.3).unwrap();
        let f = |t: f64| t.sin() + t * t;
        let want = (f(1.0) - f(0.3)) / 0.3f64.ln();
        assert_eq!(integrate_against(&p, f).unwrap(), want);
    }

    #[test]
    fn validation_reports() {
        let r = validate_lambda(&SmoothingMeasure::beta(2.0, 2.0).unwrap());
        assert!(r.all_passed(), "{r:?}");
        let r = validate_lambda(&SmoothingMeasure::point(0.5).unwrap());
        assert!(r.all_passed());
        assert_eq!(r.mass_zero.residual, 0.0);
        assert!(r.log_moment.residual.abs() < 1e-15);
        // β = 1 puts λ(1) = α - 1 ≠ 0
        let bad: SmoothingMeasure = BetaMeasure::new_unchecked(2.5, 1.0).into();
        let r = validate_lambda(&bad);
        assert!(!r.mass_zero.passed);
        assert!((r.mass_zero.residual - 1.5).abs() < 1e-12);
        // an unnormalised discrete measure fails the log-moment condition
        let d: SmoothingMeasure = DiscreteMeasure::new(vec![(1.0, -1.0), (0.5, 1.0)]).unwrap().into();
        let r = validate_lambda(&d);
        assert!(r.mass_zero.passed && !r.log_moment.passed);
    }

    #[test]
    fn serialization_round_trip() {
        let cases = ["kind=beta alpha=2 beta=2", "kind=point v=0.5", "kind=atoms atoms=1:0.5;0.25:-0.5"];
        for s in cases {
            let m: SmoothingMeasure = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
            assert_eq!(m.to_string().parse::<SmoothingMeasure>().unwrap(), m);
        }
        let m: SmoothingMeasure = "kind=beta alpha=2.5 beta=3.25".parse().unwrap();
        assert_eq!(m, SmoothingMeasure::beta(2.5, 3.25).unwrap());
        assert!("kind=beta alpha=2".parse::<SmoothingMeasure>().is_err());
        assert!("kind=gauss".parse::<SmoothingMeasure>().is_err());
        assert!("kind=beta alpha=0.5 beta=2".parse::<SmoothingMeasure>().is_err());
    }

    #[test]
    fn power_moment_matches_quadrature() {
        let b = BetaMeasure::new(3.0, 2.0).unwrap();
        let m: SmoothingMeasure = b.into();
        for p in [0.5, 1.0, 2.3, -0.4] {
            let q = integrate_against(&m, |t| t.powf(p)).unwrap();
            assert!((q - b.power_moment(p)).abs() < 1e-10, "p={p}");
        }
    }

    fn admissible() -> impl Strategy<Value = (f64, f64)> {
        (ALPHA_MIN..=ALPHA_MAX, BETA_MIN..=BETA_MAX)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lambda_conditions_hold_on_box((a, b) in admissible()) {
            let m = BetaMeasure::new(a, b).unwrap();
            prop_assert_eq!(m.cumulative(0.0), 0.0);
            prop_assert_eq!(m.cumulative(1.0), 0.0);
            let lm = integrate_against(&m.into(), |t| -t.ln()).unwrap();
            prop_assert!((lm - 1.0).abs() <= 1e-8, "log moment {}", lm);
        }

        #[test]
        fn density_matches_finite_difference((a, b) in admissible(), t in 0.01f64..0.99) {
            let m = BetaMeasure::new(a, b).unwrap();
            let h = 1e-6;
            let fd = (m.cumulative(t + h) - m.cumulative(t - h)) / (2.0 * h);
            let d = m.density_at(t, 1.0 - t);
            prop_assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0), "fd={} d={}", fd, d);
        }

        #[test]
        fn integration_is_linear(
            (a, b) in admissible(),
            c1 in proptest::collection::vec(-3.0f64..3.0, 4),
            c2 in proptest::collection::vec(-3.0f64..3.0, 4),
            x in -2.0f64..2.0,
            y in -2.0f64..2.0,
        ) {
            let m: SmoothingMeasure = BetaMeasure::new(a, b).unwrap().into();
            let poly = |c: &[f64], t: f64| c.iter().rev().fold(0.0, |acc, k| acc * t + k);
            let i1 = integrate_against(&m, |t| poly(&c1, t)).unwrap();
            let i2 = integrate_against(&m, |t| poly(&c2, t)).unwrap();
            let i12 = integrate_against(&m, |t| x * poly(&c1, t) + y * poly(&c2, t)).unwrap();
            prop_assert!((i12 - x * i1 - y * i2).abs() <= 1e-9);
        }
    }
}
