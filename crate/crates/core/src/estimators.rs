//! Extreme value index estimators built on log-spacings of order statistics.
//!
//! The smoothed estimators take a signed smoothing measure `λ` and evaluate
//! `Σ_j w_j log(Z_{⌊cj⌋} - Z_j)` with `w_j = λ(j/m) - λ((j-1)/m)`, where `Z`
//! is either the CVaR sequence or the descending sample itself. Weights of
//! the leading terms with `⌊cj⌋ = 0` are merged into the first term with a
//! valid spacing, which keeps `Σ w_j = 0` and hence scale invariance.
//! Exactly-zero spacings contribute `log 0 := 0`.

use crate::core_stats::{cvar_from_raw, CvarSequence, OrderedSample};
use crate::error::{Error, Result};
use crate::evt_kernels::{Kernel, TailContext};
use crate::measure_opt::{MeasureTable, ObjectiveSpec};
use crate::measures::{validate_lambda, BetaMeasure, SmoothingMeasure};
use std::fmt;
use std::str::FromStr;

/// `⌊x⌋` for a non-negative index product, robust to products like
/// `0.7 * 10 = 6.999...` that should land on an integer.
#[inline]
pub(crate) fn index_floor(x: f64) -> usize {
    (x + 1e-9 * x.max(1.0)).floor() as usize
}

/// Which estimator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    CvarSmoothed,
    VarSmoothed,
    CvarPickandsYun,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::CvarSmoothed => "cvar_smoothed",
            EstimatorKind::VarSmoothed => "var_smoothed",
            EstimatorKind::CvarPickandsYun => "cvar_pickands_yun",
        })
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "cvar_smoothed" | "cvar" => Ok(EstimatorKind::CvarSmoothed),
            "var_smoothed" | "var" => Ok(EstimatorKind::VarSmoothed),
            "cvar_pickands_yun" | "yun" | "pickands" => Ok(EstimatorKind::CvarPickandsYun),
            _ => Err(Error::Parse(format!("unknown estimator kind {s:?}"))),
        }
    }
}

/// Discrete weights `w_j = λ(j/m) - λ((j-1)/m)`, `j = 1..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingWeights {
    weights: Vec<f64>,
}

impl SpacingWeights {
    pub fn new(measure: &SmoothingMeasure, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        let mf = m as f64;
        let mut prev = measure.cumulative(0.0);
        let weights = (1..=m)
            .map(|j| {
                let cur = measure.cumulative(j as f64 / mf);
                let w = cur - prev;
                prev = cur;
                w
            })
            .collect();
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn sum(&self) -> f64 {
        crate::numeric::compensated_sum(&self.weights)
    }
}

/// Estimator parameters. Smoothed kinds use `c`, `m` and `measure`; the
/// Yun form uses `m`, `yun_u` and `yun_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    pub c: f64,
    pub m: usize,
    pub measure: Option<SmoothingMeasure>,
    pub yun_u: f64,
    pub yun_v: f64,
}

impl EstimatorConfig {
    pub fn cvar_smoothed(c: f64, m: usize, measure: SmoothingMeasure) -> Self {
        Self {
            kind: EstimatorKind::CvarSmoothed,
            c,
            m,
            measure: Some(measure),
            yun_u: f64::NAN,
            yun_v: f64::NAN,
        }
    }

    pub fn var_smoothed(c: f64, m: usize, measure: SmoothingMeasure) -> Self {
        Self {
            kind: EstimatorKind::VarSmoothed,
            ..Self::cvar_smoothed(c, m, measure)
        }
    }

    pub fn pickands_yun(u: f64, v: f64, m: usize) -> Self {
        Self {
            kind: EstimatorKind::CvarPickandsYun,
            c: f64::NAN,
            m,
            measure: None,
            yun_u: u,
            yun_v: v,
        }
    }

    /// Check the configuration against a sample of size `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self.kind {
            EstimatorKind::CvarSmoothed | EstimatorKind::VarSmoothed => {
                if !(self.c > 0.0 && self.c < 1.0) {
                    return Err(Error::Config(format!("c={} outside (0,1)", self.c)));
                }
                if self.m == 0 || self.m > n {
                    return Err(Error::Config(format!("m={} outside [1, n={n}]", self.m)));
                }
                let measure = self
                    .measure
                    .as_ref()
                    .ok_or_else(|| Error::Config("smoothed estimators need a measure".into()))?;
                if let SmoothingMeasure::Discrete(_) = measure {
                    let report = validate_lambda(measure);
                    if !report.all_passed() {
                        return Err(Error::MeasureDomain(format!("{report:?}")));
                    }
                }
                Ok(())
            }
            EstimatorKind::CvarPickandsYun => yun_indices(self.yun_u, self.yun_v, self.m, n).map(|_| ()),
        }
    }
}

/// A smoothed estimate with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub gamma: f64,
    /// Terms whose spacing was exactly zero (counted as `log 0 := 0`).
    pub zero_spacings: usize,
    /// Leading terms with `⌊cj⌋ = 0` whose weight was merged forward.
    pub merged_terms: usize,
}

/// `Σ_j w_j log(z_{⌊cj⌋} - z_j)` over a non-increasing sequence `z`
/// (0-based slice, 1-based formula indices).
pub fn smoothed_sum(z: &[f64], c: f64, weights: &SpacingWeights) -> Result<Estimate> {
    let m = weights.m();
    if m > z.len() {
        return Err(Error::Config(format!("m={m} exceeds sample size {}", z.len())));
    }
    let mut acc = 0.0;
    let mut zero_spacings = 0;
    let mut merged_terms = 0;
    let mut carry = 0.0;
    for (j, &w) in (1..=m).zip(weights.weights()) {
        let i = index_floor(c * j as f64);
        if i == 0 {
            merged_terms += 1;
            carry += w;
            continue;
        }
        let w = if carry != 0.0 { std::mem::take(&mut carry) + w } else { w };
        let spacing = z[i - 1] - z[j - 1];
        if spacing > 0.0 {
            if w != 0.0 {
                acc += w * spacing.ln();
            }
        } else if spacing == 0.0 {
            zero_spacings += 1;
        } else {
            return Err(Error::Invariant(format!(
                "negative spacing {spacing:e} at j={j}; sequence not non-increasing"
            )));
        }
    }
    if merged_terms == m {
        return Err(Error::Config(format!("m={m} too small: every index floor(c*j) is 0 for c={c}")));
    }
    Ok(Estimate {
        gamma: acc,
        zero_spacings,
        merged_terms,
    })
}

/// Weights as applied by [`smoothed_sum`]: leading `⌊cj⌋ = 0` weights are
/// moved onto the first valid term and zeroed in place.
pub fn effective_weights(c: f64, weights: &SpacingWeights) -> Result<Vec<f64>> {
    let mut out = weights.weights().to_vec();
    let first = (1..=out.len())
        .find(|&j| index_floor(c * j as f64) >= 1)
        .ok_or_else(|| Error::Config(format!("m={} too small: every index floor(c*j) is 0 for c={c}", out.len())))?;
    let mut carry = 0.0;
    for w in &mut out[..first - 1] {
        carry += std::mem::take(w);
    }
    if carry != 0.0 {
        out[first - 1] = carry + out[first - 1];
    }
    Ok(out)
}

/// `log(z_{⌊cj⌋} - z_j)` for `j = 1..=m`, with `0` for leading terms with
/// `⌊cj⌋ = 0` and for zero spacings. `Σ_j w_j ℓ_j` over the
/// [`effective_weights`] reproduces [`smoothed_sum`] exactly.
pub fn log_spacings(z: &[f64], c: f64, m: usize) -> Result<Vec<f64>> {
    if m > z.len() {
        return Err(Error::Config(format!("m={m} exceeds sample size {}", z.len())));
    }
    (1..=m)
        .map(|j| {
            let i = index_floor(c * j as f64);
            if i == 0 {
                return Ok(0.0);
            }
            let spacing = z[i - 1] - z[j - 1];
            if spacing > 0.0 {
                Ok(spacing.ln())
            } else if spacing == 0.0 {
                Ok(0.0)
            } else {
                Err(Error::Invariant(format!("negative spacing {spacing:e} at j={j}")))
            }
        })
        .collect()
}

fn smoothed_config(config: &EstimatorConfig, n: usize) -> Result<SpacingWeights> {
    config.validate(n)?;
    let measure = config.measure.as_ref().expect("validated");
    SpacingWeights::new(measure, config.m)
}

/// CVaR-based smoothed estimator, with diagnostics.
pub fn cvar_smoothed_detailed(sample: &CvarSequence, config: &EstimatorConfig) -> Result<Estimate> {
    let weights = smoothed_config(config, sample.len())?;
    smoothed_sum(sample.values(), config.c, &weights)
}

/// CVaR-based smoothed estimator.
pub fn estimate_cvar_smoothed(sample: &CvarSequence, config: &EstimatorConfig) -> Result<f64> {
    cvar_smoothed_detailed(sample, config).map(|e| e.gamma)
}

/// VaR-based smoothed estimator, with diagnostics.
pub fn var_smoothed_detailed(sample: &OrderedSample, config: &EstimatorConfig) -> Result<Estimate> {
    let weights = smoothed_config(config, sample.len())?;
    smoothed_sum(sample.values(), config.c, &weights)
}

/// VaR-based smoothed estimator on the descending order statistics.
pub fn estimate_var_smoothed(sample: &OrderedSample, config: &EstimatorConfig) -> Result<f64> {
    var_smoothed_detailed(sample, config).map(|e| e.gamma)
}

fn yun_indices(u: f64, v: f64, m: usize, n: usize) -> Result<[usize; 4]> {
    for (name, x) in [("u", u), ("v", v)] {
        if !(x > 0.0) || x == 1.0 || !x.is_finite() {
            return Err(Error::Config(format!("{name}={x} must be positive and != 1")));
        }
    }
    let mf = m as f64;
    let idx = [m, index_floor(u * mf), index_floor(v * mf), index_floor(u * v * mf)];
    if idx.iter().any(|&i| i < 1 || i > n) {
        return Err(Error::Config(format!(
            "indices m, [um], [vm], [uvm] = {idx:?} must lie in [1, {n}]"
        )));
    }
    Ok(idx)
}

/// Generalized Pickands estimator of Yun applied to CVaR order statistics:
/// `log[(Y_m - Y_[um]) / (Y_[vm] - Y_[uvm])] / log v`.
pub fn estimate_pickands_yun(sample: &CvarSequence, u: f64, v: f64, m: usize) -> Result<f64> {
    let [a, b, c, d] = yun_indices(u, v, m, sample.len())?;
    let num = sample.get(a) - sample.get(b);
    let den = sample.get(c) - sample.get(d);
    if den == 0.0 || num == 0.0 {
        return Err(Error::DegenerateSpacing(format!(
            "Y_{a} - Y_{b} = {num:e}, Y_{c} - Y_{d} = {den:e}"
        )));
    }
    let inv = 1.0 / v.ln();
    // written as a two-term log-spacing sum so that it coincides bit for bit
    // with the smoothed estimator under the matching point measure
    Ok(inv * num.abs().ln() - inv * den.abs().ln())
}

/// Evaluate any estimator kind from a sorted sample and its CVaR sequence.
pub fn estimate(config: &EstimatorConfig, ordered: &OrderedSample, cvar: &CvarSequence) -> Result<Estimate> {
    match config.kind {
        EstimatorKind::CvarSmoothed => cvar_smoothed_detailed(cvar, config),
        EstimatorKind::VarSmoothed => var_smoothed_detailed(ordered, config),
        EstimatorKind::CvarPickandsYun => Ok(Estimate {
            gamma: estimate_pickands_yun(cvar, config.yun_u, config.yun_v, config.m)?,
            zero_spacings: 0,
            merged_terms: 0,
        }),
    }
}

/// Objective used to pick the stage-two measure of the adaptive estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdaptiveObjective {
    Variance,
    RegMse,
    /// AMSE with a supplied `r`.
    Amse(f64),
}

impl FromStr for AdaptiveObjective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "var" | "variance" => Ok(AdaptiveObjective::Variance),
            "regmse" => Ok(AdaptiveObjective::RegMse),
            _ => Err(Error::Parse(format!("unknown adaptive objective {s:?} (amse needs r)"))),
        }
    }
}

/// What to do with an initial estimate outside the kernel domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaBarPolicy {
    /// Clamp into `[GAMMA_BAR_MIN, GAMMA_BAR_MAX]`.
    #[default]
    Clamp,
    /// Fail with [`Error::InitialEstimate`] when `γ̄ ≥ 1/2`.
    Reject,
}

pub const GAMMA_BAR_MIN: f64 = -1.5;
pub const GAMMA_BAR_MAX: f64 = 0.49;

/// Two-stage estimator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    /// `CvarSmoothed` or `VarSmoothed`.
    pub kind: EstimatorKind,
    pub c: f64,
    pub m: usize,
    pub objective: AdaptiveObjective,
    pub rho_bar: f64,
    pub policy: GammaBarPolicy,
}

impl AdaptiveConfig {
    pub fn new(kind: EstimatorKind, c: f64, m: usize, objective: AdaptiveObjective) -> Self {
        Self {
            kind,
            c,
            m,
            objective,
            rho_bar: -1.0,
            policy: GammaBarPolicy::Clamp,
        }
    }

    pub fn kernel(&self) -> Result<Kernel> {
        match self.kind {
            EstimatorKind::CvarSmoothed => Ok(Kernel::Cvar),
            EstimatorKind::VarSmoothed => Ok(Kernel::Var),
            EstimatorKind::CvarPickandsYun => Err(Error::Config("the Yun form has no adaptive version".into())),
        }
    }
}

/// Result of the adaptive estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveEstimate {
    pub gamma: f64,
    /// Stage-one estimate before clamping.
    pub gamma_bar: f64,
    /// Value used for the stage-two measure.
    pub gamma_bar_used: f64,
    pub alpha: f64,
    pub beta: f64,
    pub stage1_alpha: f64,
    pub stage1_beta: f64,
}

fn smoothed_with(kind: EstimatorKind, c: f64, m: usize, alpha: f64, beta: f64, ordered: &OrderedSample, cvar: &CvarSequence) -> Result<f64> {
    let measure = SmoothingMeasure::Beta(BetaMeasure::new(alpha, beta)?);
    let config = EstimatorConfig {
        kind,
        c,
        m,
        measure: Some(measure),
        yun_u: f64::NAN,
        yun_v: f64::NAN,
    };
    estimate(&config, ordered, cvar).map(|e| e.gamma)
}

/// Apply the γ̄ policy.
pub fn resolve_gamma_bar(gamma_bar: f64, policy: GammaBarPolicy) -> Result<f64> {
    if !gamma_bar.is_finite() {
        return Err(Error::InitialEstimate(gamma_bar));
    }
    match policy {
        GammaBarPolicy::Reject if gamma_bar >= 0.5 => Err(Error::InitialEstimate(gamma_bar)),
        GammaBarPolicy::Reject => Ok(gamma_bar.max(GAMMA_BAR_MIN)),
        GammaBarPolicy::Clamp => Ok(gamma_bar.clamp(GAMMA_BAR_MIN, GAMMA_BAR_MAX)),
    }
}

/// Stage-two objective for a given `γ̄`.
pub fn stage_two_spec(config: &AdaptiveConfig, gamma_bar: f64, n: usize) -> Result<ObjectiveSpec> {
    let kernel = config.kernel()?;
    let ctx = TailContext::new(gamma_bar, config.rho_bar, config.c)?;
    Ok(match config.objective {
        AdaptiveObjective::Variance => ObjectiveSpec::variance(ctx, kernel),
        AdaptiveObjective::RegMse => ObjectiveSpec::regmse(ctx, kernel, config.m, n),
        AdaptiveObjective::Amse(r) => ObjectiveSpec::amse(ctx, kernel, config.m, r),
    })
}

/// Two-stage estimator using a given measure table.
pub fn estimate_adaptive_with(
    table: &MeasureTable,
    ordered: &OrderedSample,
    cvar: &CvarSequence,
    config: &AdaptiveConfig,
) -> Result<AdaptiveEstimate> {
    let kernel = config.kernel()?;
    let n = ordered.len();
    if config.m == 0 || config.m > n {
        return Err(Error::Config(format!("m={} outside [1, n={n}]", config.m)));
    }
    let ctx0 = TailContext::new(0.0, config.rho_bar, config.c)?;
    let s1 = table.lookup(&ObjectiveSpec::variance(ctx0, kernel))?;
    let gamma_bar = smoothed_with(config.kind, config.c, config.m, s1.alpha, s1.beta, ordered, cvar)?;
    let used = resolve_gamma_bar(gamma_bar, config.policy)?;
    let s2 = table.lookup(&stage_two_spec(config, used, n)?)?;
    let gamma = smoothed_with(config.kind, config.c, config.m, s2.alpha, s2.beta, ordered, cvar)?;
    Ok(AdaptiveEstimate {
        gamma,
        gamma_bar,
        gamma_bar_used: used,
        alpha: s2.alpha,
        beta: s2.beta,
        stage1_alpha: s1.alpha,
        stage1_beta: s1.beta,
    })
}

/// Two-stage estimator: a variance-optimal measure at `γ = 0` gives `γ̄`,
/// then the measure optimal for the requested objective at `(γ̄, ρ̄)` gives
/// the final estimate. Uses the process-wide [`MeasureTable`].
pub fn estimate_adaptive(sample: &[f64], config: &AdaptiveConfig) -> Result<AdaptiveEstimate> {
    let (ordered, cvar) = cvar_from_raw(sample)?;
    estimate_adaptive_with(MeasureTable::global(), &ordered, &cvar, config)
}
