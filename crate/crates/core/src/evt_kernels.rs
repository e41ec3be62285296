//! Deterministic special functions of extreme value theory: the first- and
//! second-order limit functions for the tail quantile and super-quantile
//! functions, the difference operator `Δ_c`, and the covariance kernels of
//! the Gaussian limits of the CVaR- and VaR-based estimators.
//!
//! Removable singularities (`γ = 0`, `ρ = 0`, `γ + ρ = 0`) are handled with
//! `expm1`-based forms, so neighbouring parameters never lose digits to
//! cancellation; exact limit formulas are used below [`BRANCH_EPS`].

use crate::error::{Error, Result};
use crate::numeric::{exprel, exprel_deriv};
use crate::quadrature;

/// Parameters closer than this to a removable singularity take the limit branch.
pub const BRANCH_EPS: f64 = 1e-8;

/// Extreme value index, second-order parameter and spacing fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailContext {
    pub gamma: f64,
    pub rho: f64,
    pub c: f64,
}

impl TailContext {
    pub fn new(gamma: f64, rho: f64, c: f64) -> Result<Self> {
        if !(gamma < 0.5) {
            return Err(Error::Domain(format!("gamma={gamma} must be < 1/2")));
        }
        if !(rho <= 0.0) {
            return Err(Error::Domain(format!("rho={rho} must be <= 0")));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::Domain(format!("c={c} outside (0,1)")));
        }
        Ok(Self { gamma, rho, c })
    }
}

fn check_positive(y: f64) -> Result<()> {
    if y > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("y={y} must be positive")))
    }
}

#[inline]
pub(crate) fn h_raw(gamma: f64, y: f64) -> f64 {
    let l = -y.ln();
    if gamma.abs() < BRANCH_EPS {
        l
    } else {
        l * exprel(gamma * l)
    }
}

/// `h_γ(y) = (y^-γ - 1)/γ`, read as `log(1/y)` at `γ = 0`.
pub fn h_gamma(gamma: f64, y: f64) -> Result<f64> {
    check_positive(y)?;
    Ok(h_raw(gamma, y))
}

/// `h̃_γ(y) = (y^-γ - 1)/(γ(1-γ))`, read as `-log y` at `γ = 0`.
pub fn h_tilde_gamma(gamma: f64, y: f64) -> Result<f64> {
    check_positive(y)?;
    if !(gamma < 1.0) {
        return Err(Error::Domain(format!("gamma={gamma} must be < 1")));
    }
    Ok(h_raw(gamma, y) / (1.0 - gamma))
}

/// `∂/∂γ h_γ(y)`.
fn h_dgamma(gamma: f64, y: f64) -> f64 {
    let l = -y.ln();
    l * l * exprel_deriv(gamma * l)
}

/// `H_{γ,ρ}(y) = ∫_y^1 w^(-1-γ) h_ρ(w) dw`.
pub fn big_h(gamma: f64, rho: f64, y: f64) -> Result<f64> {
    check_positive(y)?;
    Ok(big_h_raw(gamma, rho, y))
}

pub(crate) fn big_h_raw(gamma: f64, rho: f64, y: f64) -> f64 {
    if rho.abs() < BRANCH_EPS {
        h_dgamma(gamma, y)
    } else {
        (h_raw(gamma + rho, y) - h_raw(gamma, y)) / rho
    }
}

/// `H̃_{γ,ρ}(y) = (1/y) ∫_0^y H_{γ,ρ} - ∫_0^1 H_{γ,ρ}`, in closed form.
///
/// Since `(1/y) ∫_0^y h_x = (h_x(y) + 1)/(1 - x)`, this equals
/// `(h̃_{γ+ρ}(y) - h̃_γ(y)) / ρ`.
pub fn big_h_tilde(gamma: f64, rho: f64, y: f64) -> Result<f64> {
    if !(y > 0.0 && y <= 1.0) {
        return Err(Error::Domain(format!("y={y} outside (0,1]")));
    }
    if !(gamma < 1.0 && gamma + rho < 1.0) {
        return Err(Error::Domain(format!(
            "H is not integrable at 0 for gamma={gamma}, rho={rho}"
        )));
    }
    Ok(big_h_tilde_raw(gamma, rho, y))
}

pub(crate) fn big_h_tilde_raw(gamma: f64, rho: f64, y: f64) -> f64 {
    if rho.abs() < BRANCH_EPS {
        let one = 1.0 - gamma;
        h_dgamma(gamma, y) / one + h_raw(gamma, y) / (one * one)
    } else {
        (h_raw(gamma + rho, y) / (1.0 - gamma - rho) - h_raw(gamma, y) / (1.0 - gamma)) / rho
    }
}

/// `Δ_c f(t) = (1/c) ∫_0^c f(ut) du - ∫_0^1 f(ut) du` by quadrature.
pub fn delta_c<F: Fn(f64) -> f64>(f: F, c: f64, t: f64) -> Result<f64> {
    delta_c_tol(f, c, t, 1e-11)
}

pub fn delta_c_tol<F: Fn(f64) -> f64>(f: F, c: f64, t: f64, tol: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain(format!("c={c} outside (0,1)")));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("t={t} outside (0,1]")));
    }
    let lower = quadrature::integrate(0.0, c, tol, |nd| f(nd.x * t))?;
    let upper = quadrature::integrate(c, 1.0, tol, |nd| f(nd.x * t))?;
    Ok((1.0 / c - 1.0) * lower.value - upper.value)
}

/// `E(B_s(t1) B_t(t2))` for `B_s(x) = (1/x) ∫_0^x u^(-γ-1) W(us) du`.
pub fn wiener_cov(gamma: f64, s: f64, t: f64, t1: f64, t2: f64) -> f64 {
    let (p, q) = (s * t1, t * t2);
    let (a, b) = if p <= q { (p, q) } else { (q, p) };
    if gamma.abs() < BRANCH_EPS {
        return a * (2.0 - a.ln() + b.ln()) / (t1 * t2);
    }
    let l = b.ln() - a.ln();
    let g = gamma;
    let pre = (s * t).powf(g) * a.powf(1.0 - 2.0 * g) / (t1 * t2 * (1.0 - g) * (1.0 - 2.0 * g));
    pre * (l * exprel(-g * l) + 2.0 * (-g * l).exp())
}

/// Which Gaussian limit a kernel describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kernel {
    /// Spacings of CVaR order statistics.
    Cvar,
    /// Spacings of ordinary order statistics.
    Var,
}

impl Kernel {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Cvar => "cvar",
            Kernel::Var => "var",
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cvar" => Ok(Kernel::Cvar),
            "var" => Ok(Kernel::Var),
            _ => Err(Error::Parse(format!("unknown kernel {s:?}"))),
        }
    }
}

fn check_unit(x: f64, name: &str) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name}={x} outside (0,1]")))
    }
}

/// Covariance kernel `σ_{c,γ}(s,t)` of the CVaR-based limit.
pub fn sigma_cvar(ctx: &TailContext, s: f64, t: f64) -> Result<f64> {
    if !(ctx.gamma < 0.5) {
        return Err(Error::Domain(format!("gamma={} must be < 1/2", ctx.gamma)));
    }
    check_unit(s, "s")?;
    check_unit(t, "t")?;
    Ok(sigma_cvar_raw(ctx.gamma, ctx.c, s, t))
}

pub(crate) fn sigma_cvar_raw(gamma: f64, c: f64, s: f64, t: f64) -> f64 {
    let ht = h_raw(gamma, c) / (1.0 - gamma);
    let e = |t1: f64, t2: f64| wiener_cov(gamma, s, t, t1, t2);
    (e(c, c) - e(1.0, c) - e(c, 1.0) + e(1.0, 1.0)) / (s * t * ht * ht)
}

/// Covariance kernel `σ̃_{c,γ}(s,t)` of the VaR-based (order statistic) limit.
pub fn sigma_var(ctx: &TailContext, s: f64, t: f64) -> Result<f64> {
    check_unit(s, "s")?;
    check_unit(t, "t")?;
    Ok(sigma_var_raw(ctx.gamma, ctx.c, s, t))
}

pub(crate) fn sigma_var_raw(gamma: f64, c: f64, s: f64, t: f64) -> f64 {
    let h = h_raw(gamma, c);
    let cg1 = c.powf(gamma + 1.0);
    let num = (c.powf(-gamma) + cg1) * s.min(t) - s.min(c * t) - (c * s).min(t);
    num / (s * t * cg1 * h * h)
}

/// Evaluate the kernel of the given kind.
pub fn sigma(kernel: Kernel, ctx: &TailContext, s: f64, t: f64) -> Result<f64> {
    match kernel {
        Kernel::Cvar => sigma_cvar(ctx, s, t),
        Kernel::Var => sigma_var(ctx, s, t),
    }
}

pub(crate) fn sigma_raw(kernel: Kernel, gamma: f64, c: f64, s: f64, t: f64) -> f64 {
    match kernel {
        Kernel::Cvar => sigma_cvar_raw(gamma, c, s, t),
        Kernel::Var => sigma_var_raw(gamma, c, s, t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn h_gamma_examples() {
        assert_eq!(h_gamma(0.3, 1.0).unwrap(), 0.0);
        assert_eq!(h_gamma(-2.0, 1.0).unwrap(), 0.0);
        assert!((h_gamma(0.0, (-1.0f64).exp()).unwrap() - 1.0).abs() < 1e-15);
        // (0.5^-0.25 - 1)/0.25
        let want = (0.5f64.powf(-0.25) - 1.0) / 0.25;
        assert!((want - 0.756828).abs() < 5e-7);
        assert!((h_gamma(0.25, 0.5).unwrap() - want).abs() < 1e-15);
        assert!(h_gamma(0.1, 0.0).is_err());
    }

    #[test]
    fn h_tilde_examples() {
        assert_eq!(h_tilde_gamma(0.4, 1.0).unwrap(), 0.0);
        assert!((h_tilde_gamma(0.0, 0.75).unwrap() - 0.287682).abs() < 5e-7);
        let v = h_tilde_gamma(0.25, 0.75).unwrap();
        assert!((v - (0.75f64.powf(-0.25) - 1.0) / (0.25 * 0.75)).abs() < 1e-15);
        assert!((v - 0.397707).abs() < 5e-6);
        assert!(h_tilde_gamma(1.0, 0.5).is_err());
        assert!(h_tilde_gamma(0.0, -1.0).is_err());
    }

    /// `∫_y^1 w^(-1-γ) h_ρ(w) dw` by quadrature.
    fn big_h_oracle(gamma: f64, rho: f64, y: f64) -> f64 {
        let f = |w: f64| w.powf(-1.0 - gamma) * if rho == 0.0 { -w.ln() } else { (w.powf(-rho) - 1.0) / rho };
        log_scale_integral(y.min(1.0), y.max(1.0), f) * if y <= 1.0 { 1.0 } else { -1.0 }
    }

    /// `∫_lo^hi f` for `0 < lo < hi`, over `ln w` in unit-width pieces with
    /// relative accuracy, so that spans of hundreds of decades are fine.
    fn log_scale_integral<F: Fn(f64) -> f64>(lo: f64, hi: f64, f: F) -> f64 {
        let (a, b) = (lo.ln(), hi.ln());
        let mut total = 0.0;
        let mut z = a;
        while z < b {
            let z1 = (z + 1.0).min(b);
            let g = |nd: &crate::quadrature::Node| {
                let w = nd.x.exp();
                f(w) * w
            };
            let rough = integrate(z, z1, f64::INFINITY, g).unwrap().value;
            total += integrate(z, z1, (1e-11 * rough.abs()).max(1e-20), g).unwrap().value;
            z = z1;
        }
        total
    }

    #[test]
    fn big_h_matches_defining_integral() {
        assert_eq!(big_h(0.3, -1.0, 1.0).unwrap(), 0.0);
        assert!(close(big_h(0.25, -1.0, 0.5).unwrap(), big_h_oracle(0.25, -1.0, 0.5), 1e-9));
        // γ + ρ = 0
        assert!(close(big_h(0.25, -0.25, 0.5).unwrap(), big_h_oracle(0.25, -0.25, 0.5), 1e-9));
        // ρ = 0, γ = 0 and both
        for &(g, r) in &[(0.25, 0.0), (0.0, -0.5), (0.0, 0.0), (-0.3, 0.0)] {
            for &y in &[0.1, 0.5, 0.9, 1.7] {
                assert!(close(big_h(g, r, y).unwrap(), big_h_oracle(g, r, y), 1e-9), "{g} {r} {y}");
            }
        }
    }

    #[test]
    fn big_h_random_grid() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let g = rng.random_range(-1.0..0.45);
            let r = rng.random_range(-2.0..0.0);
            let y = rng.random_range(0.01..1.0);
            let got = big_h(g, r, y).unwrap();
            let want = big_h_oracle(g, r, y);
            assert!(close(got, want, 1e-9), "g={g} r={r} y={y}: {got} vs {want}");
        }
    }

    #[test]
    fn limit_branches_are_continuous() {
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);
        for &eps in &[1e-6, -1e-6] {
            for &y in &[0.2, 0.6] {
                assert!(rel(h_gamma(eps, y).unwrap(), h_gamma(0.0, y).unwrap()) < 1e-5);
                assert!(rel(big_h(eps, -1.0, y).unwrap(), big_h(0.0, -1.0, y).unwrap()) < 1e-5);
                assert!(rel(big_h(0.25, -1e-6, y).unwrap(), big_h(0.25, 0.0, y).unwrap()) < 1e-5);
                assert!(rel(big_h(0.25 + eps, -0.25, y).unwrap(), big_h(0.25, -0.25, y).unwrap()) < 1e-5);
                assert!(rel(big_h_tilde(eps, -1.0, y).unwrap(), big_h_tilde(0.0, -1.0, y).unwrap()) < 1e-5);
                assert!(rel(big_h_tilde(0.25, -1e-6, y).unwrap(), big_h_tilde(0.25, 0.0, y).unwrap()) < 1e-5);
                let s = 0.7;
                assert!(rel(wiener_cov(eps, s, y, 0.75, 1.0), wiener_cov(0.0, s, y, 0.75, 1.0)) < 1e-5);
                assert!((sigma_var_raw(eps, 0.75, s, y) - sigma_var_raw(0.0, 0.75, s, y)).abs() < 1e-5);
            }
        }
    }

    /// Nested-quadrature oracle for `H̃`.
    fn big_h_tilde_oracle(gamma: f64, rho: f64, y: f64) -> f64 {
        // below 1e-30 the integrand contributes less than 1e-15
        let inner = |hi: f64| {
            integrate(0.0, hi, 1e-12, |nd| if nd.x < 1e-30 { 0.0 } else { big_h_oracle(gamma, rho, nd.x) })
                .unwrap()
                .value
        };
        inner(y) / y - inner(1.0)
    }

    #[test]
    fn big_h_tilde_matches_nested_quadrature() {
        assert_eq!(big_h_tilde(0.25, -1.0, 1.0).unwrap(), 0.0);
        for &(g, r, y) in &[(0.25, -1.0, 0.75), (0.0, -1.0, 0.5), (-0.4, -0.5, 0.3), (0.3, 0.0, 0.6)] {
            let got = big_h_tilde(g, r, y).unwrap();
            let want = big_h_tilde_oracle(g, r, y);
            assert!((got - want).abs() < 1e-8, "{g} {r} {y}: {got} vs {want}");
        }
        assert!(big_h_tilde(1.0, -1.0, 0.5).is_err());
        assert!(big_h_tilde(0.5, -1.0, 1.5).is_err());
    }

    #[test]
    fn delta_c_examples() {
        assert!(delta_c(|_| 4.2, 0.3, 0.8).unwrap().abs() < 1e-12);
        assert!((delta_c(|u| u, 0.5, 1.0).unwrap() + 0.25).abs() < 1e-12);
        for &t in &[0.2, 0.9] {
            assert!((delta_c(|u| u, 0.75, t).unwrap() - t * (0.75 - 1.0) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_c_of_big_h_satisfies_functional_relation() {
        for &(g, r) in &[(0.25, -1.0), (0.0, -1.0), (-0.2, -0.5), (0.45, -2.0), (0.1, 0.0)] {
            for &c in &[0.6, 0.75, 0.9] {
                for &t in &[0.05, 0.3, 0.77, 1.0] {
                    let lhs = delta_c(|x| big_h_raw(g, r, x), c, t).unwrap();
                    let rhs = t.powf(-(g + r)) * big_h_tilde_raw(g, r, c)
                        + t.powf(-g) * h_raw(r, t) * h_raw(g, c) / (1.0 - g);
                    assert!((lhs - rhs).abs() < 1e-8, "g={g} r={r} c={c} t={t}: {lhs} vs {rhs}");
                }
            }
        }
    }

    /// The displayed formula with `h1`, `h2` spelled out.
    fn wiener_cov_displayed(g: f64, s: f64, t: f64, t1: f64, t2: f64) -> f64 {
        let a = (s * t1).min(t * t2);
        let b = (s * t1).max(t * t2);
        let h1 = 1.0 / (g * (1.0 - g) * (1.0 - 2.0 * g));
        let h2 = 1.0 / (g * (1.0 - g));
        (s * t).powf(g) / (t1 * t2) * (h1 * a.powf(1.0 - 2.0 * g) - h2 * a.powf(1.0 - g) * b.powf(-g))
    }

    /// `(st)^γ/(t1 t2) ∫_0^{st1} ∫_0^{tt2} x^(-γ-1) y^(-γ-1) min(x,y) dy dx` by quadrature.
    fn wiener_cov_quadrature(g: f64, s: f64, t: f64, t1: f64, t2: f64) -> f64 {
        let (p, q) = (s * t1, t * t2);
        let inner = |x: f64| {
            if x < 1e-30 {
                return 0.0;
            }
            let below = integrate(0.0, x.min(q), 1e-13 * x.powf(1.0 - g), |nd| nd.x.powf(-g)).unwrap().value;
            below + if x < q { x * log_scale_integral(x, q, |y| y.powf(-g - 1.0)) } else { 0.0 }
        };
        let outer = integrate(0.0, p, 1e-11, |nd| nd.x.powf(-g - 1.0) * inner(nd.x)).unwrap().value;
        (s * t).powf(g) / (t1 * t2) * outer
    }

    #[test]
    fn wiener_cov_matches_displayed_formula_and_quadrature() {
        for &g in &[-0.5, -0.1, 0.25, 0.45] {
            for &(s, t, t1, t2) in &[(0.5, 1.0, 0.75, 1.0), (1.0, 1.0, 0.75, 0.75), (0.3, 0.8, 1.0, 0.6)] {
                let got = wiener_cov(g, s, t, t1, t2);
                assert!(close(got, wiener_cov_displayed(g, s, t, t1, t2), 1e-12));
                if g < 0.3 {
                    assert!(close(got, wiener_cov_quadrature(g, s, t, t1, t2), 1e-7), "g={g}");
                }
            }
        }
        // γ = 0 branch against quadrature
        let got = wiener_cov(0.0, 0.5, 1.0, 0.75, 1.0);
        assert!(close(got, wiener_cov_quadrature(0.0, 0.5, 1.0, 0.75, 1.0), 1e-7));
    }

    #[test]
    fn sigma_kernels_are_symmetric_and_homogeneous() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let g = rng.random_range(-1.0..0.49);
            let c = rng.random_range(0.55..0.95);
            let s = rng.random_range(0.01..1.0);
            let t = rng.random_range(0.01..1.0);
            let ctx = TailContext::new(g, -1.0, c).unwrap();
            let a = sigma_cvar(&ctx, s, t).unwrap();
            let b = sigma_cvar(&ctx, t, s).unwrap();
            assert!(close(a, b, 1e-12));
            let a = sigma_var(&ctx, s, t).unwrap();
            let b = sigma_var(&ctx, t, s).unwrap();
            assert!(close(a, b, 1e-12));
            let k = 0.37;
            assert!(close(sigma_cvar_raw(g, c, k * s, k * t), sigma_cvar_raw(g, c, s, t) / k, 1e-10));
            assert!(close(sigma_var_raw(g, c, k * s, k * t), sigma_var_raw(g, c, s, t) / k, 1e-10));
        }
    }

    #[test]
    fn sigma_cvar_diagonal_is_positive() {
        for &g in &[-0.5, 0.0, 0.25, 0.45] {
            for &c in &[0.6, 0.75, 0.9] {
                let ctx = TailContext::new(g, -1.0, c).unwrap();
                for i in 1..=50 {
                    let t = i as f64 / 50.0;
                    assert!(sigma_cvar(&ctx, t, t).unwrap() > 0.0, "g={g} c={c} t={t}");
                }
            }
        }
        assert!(sigma_cvar(&TailContext { gamma: 0.5, rho: -1.0, c: 0.75 }, 1.0, 1.0).is_err());
    }

    #[test]
    fn sigma_var_examples() {
        let ctx = TailContext::new(0.0, -1.0, 0.75).unwrap();
        let want = 0.25 / (0.75 * (1.0f64 / 0.75).ln().powi(2));
        assert!(close(sigma_var(&ctx, 1.0, 1.0).unwrap(), want, 1e-14));
        // continuity across the kink s = ct
        let t = 0.8;
        let k = ctx.c * t;
        let lo = sigma_var(&ctx, k - 1e-9, t).unwrap();
        let hi = sigma_var(&ctx, k + 1e-9, t).unwrap();
        assert!((lo - hi).abs() < 1e-7);
    }

    #[test]
    fn context_validation() {
        assert!(TailContext::new(0.5, -1.0, 0.75).is_err());
        assert!(TailContext::new(0.2, 0.1, 0.75).is_err());
        assert!(TailContext::new(0.2, -1.0, 1.0).is_err());
        assert!(TailContext::new(0.2, 0.0, 0.5).is_ok());
    }
}
