//! Asymptotic variance, bias, AMSE and RegMSE of the smoothed estimators.
//!
//! Both covariance kernels are symmetric and homogeneous of degree -1, so
//! with `φ(u) = σ(u, 1)` the variance of a measure with density `λ'` is
//!
//! ```text
//! v = 2 ∫_0^1 λ'(t) ∫_0^1 φ(u) λ'(ut) du dt,
//! ```
//!
//! whose only interior kink is at `u = c`. The inner and outer integrals use
//! tanh-sinh rules; `1 - ut` is formed as `(1-u) + u(1-t)` from exact node
//! complements so the `(1-x)^(β-2)` singularity is resolved at the corner.

use crate::error::{Error, Result};
use crate::evt_kernels::{big_h_raw, big_h_tilde_raw, h_raw, sigma_raw, Kernel, TailContext};
use crate::measures::{BetaMeasure, SmoothingMeasure};
use crate::numeric::ln_beta;
use crate::quadrature::{self, tanh_sinh_rule, Node};

/// Absolute tolerance of [`asymptotic_variance`].
pub const VARIANCE_TOL: f64 = 1e-7;
const MIN_LEVEL: u32 = 3;
const MAX_LEVEL: u32 = 9;
/// Grid level used by [`VarianceEvaluator::new`] unless overridden.
pub const DEFAULT_EVALUATOR_LEVEL: u32 = 5;

fn check_gamma(ctx: &TailContext, kernel: Kernel) -> Result<()> {
    if kernel == Kernel::Cvar && !(ctx.gamma < 0.5) {
        return Err(Error::Domain(format!("gamma={} must be < 1/2", ctx.gamma)));
    }
    if !(ctx.c > 0.0 && ctx.c < 1.0) {
        return Err(Error::Domain(format!("c={} outside (0,1)", ctx.c)));
    }
    Ok(())
}

/// Variance for a purely atomic measure: `Σ_i Σ_j m_i m_j σ(l_i, l_j)`.
fn atomic_variance(kernel: Kernel, gamma: f64, c: f64, atoms: &[(f64, f64)]) -> f64 {
    let mut acc = 0.0;
    for &(li, mi) in atoms {
        for &(lj, mj) in atoms {
            acc += mi * mj * sigma_raw(kernel, gamma, c, li, lj);
        }
    }
    acc
}

#[inline]
fn beta_density_logs(b: &BetaMeasure, x: f64, omx: f64, ln_x: f64, ln_omx: f64) -> f64 {
    let core = ((b.alpha() - 2.0) * ln_x + (b.beta() - 2.0) * ln_omx - b.ln_normalizer()).exp();
    core * ((b.alpha() - 1.0) * omx - (b.beta() - 1.0) * x)
}

struct UNode {
    u: f64,
    omu: f64,
    ln_u: f64,
    /// quadrature weight times `φ(u)`
    wphi: f64,
}

struct TNode {
    t: f64,
    omt: f64,
    ln_t: f64,
    ln_omt: f64,
    w: f64,
}

fn u_nodes(kernel: Kernel, gamma: f64, c: f64, level: u32) -> Vec<UNode> {
    let mut out = Vec::new();
    for (lo, hi) in [(0.0, c), (c, 1.0)] {
        for nd in tanh_sinh_rule(lo, hi, level) {
            if nd.weight == 0.0 || nd.x <= 0.0 {
                continue;
            }
            let omu = nd.one_minus_x(hi);
            let wphi = nd.weight * sigma_raw(kernel, gamma, c, nd.x, 1.0);
            if wphi == 0.0 || !wphi.is_finite() {
                continue;
            }
            out.push(UNode {
                u: nd.x,
                omu,
                ln_u: nd.x.ln(),
                wphi,
            });
        }
    }
    out
}

fn t_nodes(level: u32) -> Vec<TNode> {
    tanh_sinh_rule(0.0, 1.0, level)
        .into_iter()
        .filter(|nd| nd.weight > 0.0 && nd.x > 0.0 && nd.from_hi > 0.0)
        .map(|nd| TNode {
            t: nd.x,
            omt: nd.from_hi,
            ln_t: nd.x.ln(),
            ln_omt: nd.from_hi.ln(),
            w: nd.weight,
        })
        .collect()
}

/// Tensor-rule variance of a beta measure at a fixed grid level.
fn beta_variance_at_level(kernel: Kernel, gamma: f64, c: f64, b: &BetaMeasure, level: u32) -> f64 {
    let us = u_nodes(kernel, gamma, c, level);
    let ts = t_nodes(level);
    let mut outer = 0.0;
    for tn in &ts {
        let dt = beta_density_logs(b, tn.t, tn.omt, tn.ln_t, tn.ln_omt);
        if dt == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for un in &us {
            let x = un.u * tn.t;
            let omx = un.omu + un.u * tn.omt;
            inner += un.wphi * beta_density_logs(b, x, omx, un.ln_u + tn.ln_t, omx.ln());
        }
        outer += tn.w * dt * inner;
    }
    2.0 * outer
}

/// Precomputed tensor grid for repeated variance evaluations of beta
/// measures at fixed `(kernel, γ, c)`; used inside the measure optimizer.
pub struct VarianceEvaluator {
    kernel: Kernel,
    gamma: f64,
    c: f64,
    level: u32,
    t_w: Vec<f64>,
    t: Vec<f64>,
    omt: Vec<f64>,
    ln_t: Vec<f64>,
    ln_omt: Vec<f64>,
    /// per `(t, u)` pair, t-major: `u t`, `1 - u t`, logs, and `w_u φ(u)`
    x: Vec<f64>,
    omx: Vec<f64>,
    ln_x: Vec<f64>,
    ln_omx: Vec<f64>,
    wphi: Vec<f64>,
    nu: usize,
}

impl VarianceEvaluator {
    pub fn new(kernel: Kernel, ctx: &TailContext) -> Result<Self> {
        Self::with_level(kernel, ctx, DEFAULT_EVALUATOR_LEVEL)
    }

    pub fn with_level(kernel: Kernel, ctx: &TailContext, level: u32) -> Result<Self> {
        check_gamma(ctx, kernel)?;
        let (gamma, c) = (ctx.gamma, ctx.c);
        let us = u_nodes(kernel, gamma, c, level);
        let ts = t_nodes(level);
        let nu = us.len();
        let np = nu * ts.len();
        let mut ev = Self {
            kernel,
            gamma,
            c,
            level,
            t_w: ts.iter().map(|n| n.w).collect(),
            t: ts.iter().map(|n| n.t).collect(),
            omt: ts.iter().map(|n| n.omt).collect(),
            ln_t: ts.iter().map(|n| n.ln_t).collect(),
            ln_omt: ts.iter().map(|n| n.ln_omt).collect(),
            x: Vec::with_capacity(np),
            omx: Vec::with_capacity(np),
            ln_x: Vec::with_capacity(np),
            ln_omx: Vec::with_capacity(np),
            wphi: Vec::with_capacity(np),
            nu,
        };
        for tn in &ts {
            for un in &us {
                let omx = un.omu + un.u * tn.omt;
                ev.x.push(un.u * tn.t);
                ev.omx.push(omx);
                ev.ln_x.push(un.ln_u + tn.ln_t);
                ev.ln_omx.push(omx.ln());
                ev.wphi.push(un.wphi);
            }
        }
        Ok(ev)
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Variance of the beta measure `(α, β)`; the box is not checked.
    pub fn variance(&self, alpha: f64, beta: f64) -> f64 {
        let a2 = alpha - 2.0;
        let b2 = beta - 2.0;
        let a1 = alpha - 1.0;
        let b1 = beta - 1.0;
        let ln_norm = ln_beta(a1, beta);
        let dens = |x: f64, omx: f64, lx: f64, lomx: f64| (a2 * lx + b2 * lomx - ln_norm).exp() * (a1 * omx - b1 * x);
        let mut outer = 0.0;
        for k in 0..self.t.len() {
            let dt = dens(self.t[k], self.omt[k], self.ln_t[k], self.ln_omt[k]);
            let base = k * self.nu;
            let mut inner = 0.0;
            for i in base..base + self.nu {
                inner += self.wphi[i] * dens(self.x[i], self.omx[i], self.ln_x[i], self.ln_omx[i]);
            }
            outer += self.t_w[k] * dt * inner;
        }
        2.0 * outer
    }
}

/// Asymptotic variance `∬ σ(s,t) λ(ds) λ(dt)` of the smoothed estimator
/// with the given kernel, to absolute accuracy [`VARIANCE_TOL`].
pub fn asymptotic_variance(ctx: &TailContext, measure: &SmoothingMeasure, kernel: Kernel) -> Result<f64> {
    check_gamma(ctx, kernel)?;
    match measure {
        SmoothingMeasure::Beta(b) => {
            let mut prev = beta_variance_at_level(kernel, ctx.gamma, ctx.c, b, MIN_LEVEL);
            let mut residual = f64::INFINITY;
            for level in MIN_LEVEL + 1..=MAX_LEVEL {
                let cur = beta_variance_at_level(kernel, ctx.gamma, ctx.c, b, level);
                if !cur.is_finite() {
                    return Err(Error::Quadrature { residual: f64::INFINITY });
                }
                residual = (cur - prev).abs();
                if residual <= VARIANCE_TOL {
                    return Ok(cur);
                }
                prev = cur;
            }
            Err(Error::Quadrature { residual })
        }
        other => Ok(atomic_variance(kernel, ctx.gamma, ctx.c, &other.atoms())),
    }
}

/// Reference route: integrate `σ(s,t) λ'(s) λ'(t)` over the whole square
/// with nested adaptive quadrature, splitting only at the kernel kinks
/// `s = ct`, `s = t`, `s = t/c`. Much slower than [`asymptotic_variance`].
pub fn asymptotic_variance_full_square(
    ctx: &TailContext,
    measure: &SmoothingMeasure,
    kernel: Kernel,
    tol: f64,
) -> Result<f64> {
    check_gamma(ctx, kernel)?;
    let b = match measure {
        SmoothingMeasure::Beta(b) => b,
        other => return Ok(atomic_variance(kernel, ctx.gamma, ctx.c, &other.atoms())),
    };
    let (gamma, c) = (ctx.gamma, ctx.c);
    let dens = |nd: &Node, hi: f64| b.density_at(nd.x, nd.one_minus_x(hi));
    let mut failure = None;
    let outer = quadrature::integrate_pieces(0.0, 1.0, &[c], tol, |thi, tn| {
        let dt = dens(tn, thi);
        // σ ~ 1/t overflows at the outermost nodes, whose weight is negligible
        if dt == 0.0 || tn.x < 1e-100 {
            return 0.0;
        }
        let t = tn.x;
        let inner = quadrature::integrate_pieces(0.0, 1.0, &[c * t, t, t / c], tol * 1e-2 / t, |shi, sn| {
            sigma_raw(kernel, gamma, c, sn.x, t) * dens(sn, shi)
        });
        match inner {
            Ok(r) => dt * r.value,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(outer?.value)
}

/// `K` in `B = ∫ [h_ρ(t) + t^{-ρ} K] λ(dt)`.
fn bias_constant(kernel: Kernel, gamma: f64, rho: f64, c: f64) -> f64 {
    match kernel {
        Kernel::Cvar => big_h_tilde_raw(gamma, rho, c) * (1.0 - gamma) / h_raw(gamma, c),
        Kernel::Var => big_h_raw(gamma, rho, c) / h_raw(gamma, c),
    }
}

fn check_bias_domain(ctx: &TailContext) -> Result<()> {
    if !(ctx.gamma < 0.5) {
        return Err(Error::Domain(format!("gamma={} must be < 1/2", ctx.gamma)));
    }
    if !(ctx.rho <= 0.0) {
        return Err(Error::Domain(format!("rho={} must be <= 0", ctx.rho)));
    }
    if !(ctx.gamma + ctx.rho < 1.0) {
        return Err(Error::Domain("gamma + rho must be < 1".into()));
    }
    if !(ctx.c > 0.0 && ctx.c < 1.0) {
        return Err(Error::Domain(format!("c={} outside (0,1)", ctx.c)));
    }
    Ok(())
}

/// Beta-measure bias in closed form from the power moments
/// `∫ t^p λ(dt) = -p Beta(α-1+p, β) / Beta(α-1, β)`:
/// `B = (1 + ρK) Beta(α-1-ρ, β) / Beta(α-1, β)`.
pub(crate) fn beta_bias(b_alpha: f64, b_beta: f64, ln_norm: f64, rho: f64, k: f64) -> f64 {
    (1.0 + rho * k) * (ln_beta(b_alpha - 1.0 - rho, b_beta) - ln_norm).exp()
}

/// Asymptotic bias `B(c, γ, ρ, λ)` in closed form.
pub fn asymptotic_bias(ctx: &TailContext, measure: &SmoothingMeasure, kernel: Kernel) -> Result<f64> {
    check_bias_domain(ctx)?;
    let k = bias_constant(kernel, ctx.gamma, ctx.rho, ctx.c);
    Ok(match measure {
        SmoothingMeasure::Beta(b) => beta_bias(b.alpha(), b.beta(), b.ln_normalizer(), ctx.rho, k),
        other => other
            .atoms()
            .iter()
            .map(|&(l, m)| m * (h_raw(ctx.rho, l) + l.powf(-ctx.rho) * k))
            .sum(),
    })
}

/// Precomputed bias constant for repeated beta-measure evaluations.
#[derive(Debug, Clone, Copy)]
pub struct BiasEvaluator {
    rho: f64,
    k: f64,
}

impl BiasEvaluator {
    pub fn new(kernel: Kernel, ctx: &TailContext) -> Result<Self> {
        check_bias_domain(ctx)?;
        Ok(Self {
            rho: ctx.rho,
            k: bias_constant(kernel, ctx.gamma, ctx.rho, ctx.c),
        })
    }

    pub fn bias(&self, alpha: f64, beta: f64) -> f64 {
        beta_bias(alpha, beta, ln_beta(alpha - 1.0, beta), self.rho, self.k)
    }
}

/// Variance, bias and the resulting mean squared error objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticSummary {
    pub variance: f64,
    pub bias: f64,
    pub objective_value: f64,
    pub r_used: f64,
    pub m: usize,
    pub n: Option<usize>,
}

/// `(1/m) [r² B² + v]`.
pub fn amse(ctx: &TailContext, measure: &SmoothingMeasure, kernel: Kernel, m: usize, r: f64) -> Result<AsymptoticSummary> {
    if m == 0 {
        return Err(Error::Config("m must be at least 1".into()));
    }
    if !(r >= 0.0) {
        return Err(Error::Config(format!("r={r} must be >= 0")));
    }
    let variance = asymptotic_variance(ctx, measure, kernel)?;
    let bias = asymptotic_bias(ctx, measure, kernel)?;
    Ok(AsymptoticSummary {
        variance,
        bias,
        objective_value: (r * r * bias * bias + variance) / m as f64,
        r_used: r,
        m,
        n: None,
    })
}

/// The bias weight `r_C = 15 m / n` of the regularized MSE.
pub fn regmse_r(m: usize, n: usize) -> f64 {
    15.0 * m as f64 / n as f64
}

/// AMSE with `r = 15 m / n`.
pub fn regmse(ctx: &TailContext, measure: &SmoothingMeasure, kernel: Kernel, m: usize, n: usize) -> Result<AsymptoticSummary> {
    if m == 0 || m > n {
        return Err(Error::Config(format!("m={m} outside [1, n={n}]")));
    }
    let mut s = amse(ctx, measure, kernel, m, regmse_r(m, n))?;
    s.n = Some(n);
    Ok(s)
}
