//! Heavy, light and short-tailed test distributions with their extreme
//! value index `γ` and second-order parameter `ρ`.
//!
//! Sampling is by inversion of the survival function, `X = F̄⁻¹(U)`, which
//! keeps full relative precision in the upper tail.

use crate::error::{Error, Result};
use crate::numeric::exprel;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::beta::inv_beta_reg;
use std::fmt;
use std::str::FromStr;

/// `ρ = -∞` (no second-order bias, e.g. exact Pareto-type tails).
pub const RHO_NONE: f64 = f64::NEG_INFINITY;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `F(x) = 1 - (1 + γx)^(-1/γ)`
    Gpd { gamma: f64 },
    /// `F(x) = exp(-x^-α)`
    Frechet { alpha: f64 },
    /// `F(x) = 1 - (1 + x^c)^-k`
    Burr { c: f64, k: f64 },
    StudentT { v: f64 },
    Exponential,
    /// `F(x) = exp(-e^-x)`
    Gumbel,
    /// `F(x) = 1 - 2/(1 + e^x)`, `x ≥ 0`
    Logistic,
    /// `F(x) = 1 - exp(-x^τ)`
    Weibull { tau: f64 },
    Lognormal { sigma: f64 },
    Normal,
    /// `F(x) = exp(-|x|^α)`, `x ≤ 0`
    ReversedWeibull { alpha: f64 },
    Uniform,
}

/// A distribution together with its true `(γ, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionSpec {
    pub family: Family,
    pub true_gamma: f64,
    /// [`RHO_NONE`] when `ρ = -∞`.
    pub true_rho: f64,
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Domain(format!("{name}={x} must be positive")))
    }
}

impl DistributionSpec {
    pub fn new(family: Family) -> Result<Self> {
        let (g, r) = match family {
            Family::Gpd { gamma } => {
                if !gamma.is_finite() {
                    return Err(Error::Domain(format!("gamma={gamma}")));
                }
                (gamma, RHO_NONE)
            }
            Family::Frechet { alpha } => (1.0 / positive("alpha", alpha)?, -1.0),
            Family::Burr { c, k } => (1.0 / (positive("c", c)? * positive("k", k)?), -1.0 / k),
            Family::StudentT { v } => (1.0 / positive("v", v)?, -2.0 / v),
            Family::Exponential => (0.0, RHO_NONE),
            Family::Gumbel | Family::Logistic => (0.0, -1.0),
            Family::Weibull { tau } => {
                positive("tau", tau)?;
                (0.0, 0.0)
            }
            Family::Lognormal { sigma } => {
                positive("sigma", sigma)?;
                (0.0, 0.0)
            }
            Family::Normal => (0.0, 0.0),
            Family::ReversedWeibull { alpha } => (-1.0 / positive("alpha", alpha)?, -1.0),
            Family::Uniform => (-1.0, RHO_NONE),
        };
        Ok(Self {
            family,
            true_gamma: g,
            true_rho: r,
        })
    }

    pub fn gpd(gamma: f64) -> Result<Self> {
        Self::new(Family::Gpd { gamma })
    }

    pub fn burr(c: f64, k: f64) -> Result<Self> {
        Self::new(Family::Burr { c, k })
    }

    /// `ρ̄` to use in adaptive estimators: `-1` unless `ρ` is finite and negative.
    pub fn rho_or(&self, default: f64) -> f64 {
        if self.true_rho.is_finite() && self.true_rho < 0.0 {
            self.true_rho
        } else {
            default
        }
    }

    /// Short name usable as a directory name, e.g. `burr_c2_k2`.
    pub fn label(&self) -> String {
        self.to_string().replace(':', "_").replace(',', "_").replace('=', "")
    }

    /// Upper quantile `F̄⁻¹(s)` for `s = 1 - p ∈ (0,1)`.
    pub fn survival_quantile(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("probability {s} outside (0,1)")));
        }
        Ok(self.survival_quantile_raw(s))
    }

    fn survival_quantile_raw(&self, s: f64) -> f64 {
        // -ln(1-p) and -ln p from the survival probability
        let neg_ln_s = -s.ln();
        let neg_ln_p = -(-s).ln_1p();
        match self.family {
            Family::Gpd { gamma } => neg_ln_s * exprel(gamma * neg_ln_s),
            Family::Frechet { alpha } => neg_ln_p.powf(-1.0 / alpha),
            Family::Burr { c, k } => ((neg_ln_s / k).exp_m1()).powf(1.0 / c),
            Family::StudentT { v } => {
                if s <= 0.5 {
                    let y = inv_beta_reg(0.5 * v, 0.5, 2.0 * s);
                    (v * (1.0 - y) / y).sqrt()
                } else {
                    let t = StudentsT::new(0.0, 1.0, v).expect("validated");
                    t.inverse_cdf(1.0 - s)
                }
            }
            Family::Exponential => neg_ln_s,
            Family::Gumbel => -neg_ln_p.ln(),
            Family::Logistic => (2.0 - s).ln() - s.ln(),
            Family::Weibull { tau } => neg_ln_s.powf(1.0 / tau),
            Family::Lognormal { sigma } => (sigma * std_normal_upper(s)).exp(),
            Family::Normal => std_normal_upper(s),
            Family::ReversedWeibull { alpha } => -neg_ln_p.powf(1.0 / alpha),
            Family::Uniform => 1.0 - s,
        }
    }

    /// Quantile `F⁻¹(p)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("probability {p} outside (0,1)")));
        }
        Ok(self.survival_quantile_raw(1.0 - p))
    }

    /// Distribution function `F(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Gpd { gamma } => {
                if x <= 0.0 {
                    0.0
                } else if gamma.abs() < 1e-12 {
                    -(-x).exp_m1()
                } else {
                    let z = 1.0 + gamma * x;
                    if z <= 0.0 {
                        1.0
                    } else {
                        1.0 - (-(z.ln()) / gamma).exp()
                    }
                }
            }
            Family::Frechet { alpha } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-x.powf(-alpha)).exp()
                }
            }
            Family::Burr { c, k } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (-k * x.powf(c).ln_1p()).exp()
                }
            }
            Family::StudentT { v } => StudentsT::new(0.0, 1.0, v).expect("validated").cdf(x),
            Family::Exponential => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x).exp_m1()
                }
            }
            Family::Gumbel => (-(-x).exp()).exp(),
            Family::Logistic => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - 2.0 / (1.0 + x.exp())
                }
            }
            Family::Weibull { tau } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x.powf(tau)).exp_m1()
                }
            }
            Family::Lognormal { sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal().cdf(x.ln() / sigma)
                }
            }
            Family::Normal => std_normal().cdf(x),
            Family::ReversedWeibull { alpha } => {
                if x >= 0.0 {
                    1.0
                } else {
                    (-(-x).powf(alpha)).exp()
                }
            }
            Family::Uniform => x.clamp(0.0, 1.0),
        }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// `Φ⁻¹(1 - s)` computed as `-Φ⁻¹(s)` for small `s`.
fn std_normal_upper(s: f64) -> f64 {
    if s < 0.5 {
        -std_normal().inverse_cdf(s)
    } else {
        std_normal().inverse_cdf(1.0 - s)
    }
}

/// Uniform on the open interval `(0, 1)` from 53 random bits.
#[inline]
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// `n` draws from stream `stream` of the generator seeded with `seed`.
/// Streams are independent, so replicate `i` can use stream `i` and be
/// generated in any order.
pub fn sample_stream(spec: &DistributionSpec, n: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..n).map(|_| spec.survival_quantile_raw(open_unit(&mut rng))).collect()
}

/// `n` draws, bit-reproducible for fixed `(spec, n, seed)`.
pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> Vec<f64> {
    sample_stream(spec, n, seed, 0)
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Gpd { gamma } => write!(f, "gpd:gamma={gamma}"),
            Family::Frechet { alpha } => write!(f, "frechet:alpha={alpha}"),
            Family::Burr { c, k } => write!(f, "burr:c={c},k={k}"),
            Family::StudentT { v } => write!(f, "student_t:v={v}"),
            Family::Exponential => f.write_str("exponential"),
            Family::Gumbel => f.write_str("gumbel"),
            Family::Logistic => f.write_str("logistic"),
            Family::Weibull { tau } => write!(f, "weibull:tau={tau}"),
            Family::Lognormal { sigma } => write!(f, "lognormal:sigma={sigma}"),
            Family::Normal => f.write_str("normal"),
            Family::ReversedWeibull { alpha } => write!(f, "reversed_weibull:alpha={alpha}"),
            Family::Uniform => f.write_str("uniform"),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Parse `family[:key=value,...]`, e.g. `burr:c=2,k=2` or `gpd:gamma=0.25`.
    /// Omitted parameters take the simulation-study defaults.
    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let mut params = Vec::new();
        for kv in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in {kv:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number in {kv:?}")))?;
            params.push((k.trim().to_ascii_lowercase(), v));
        }
        let mut used = 0;
        let mut get = |keys: &[&str], default: f64| {
            match params.iter().find(|(k, _)| keys.contains(&k.as_str())) {
                Some(&(_, v)) => {
                    used += 1;
                    v
                }
                None => default,
            }
        };
        let family = match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "gpd" => Family::Gpd {
                gamma: get(&["gamma", "g"], 0.25),
            },
            "frechet" => Family::Frechet {
                alpha: get(&["alpha", "a"], 4.0),
            },
            "burr" => Family::Burr {
                c: get(&["c"], 2.0),
                k: get(&["k"], 2.0),
            },
            "student_t" | "t" | "student" => Family::StudentT {
                v: get(&["v", "df", "nu"], 4.0),
            },
            "exponential" | "exp" => Family::Exponential,
            "gumbel" => Family::Gumbel,
            "logistic" => Family::Logistic,
            "weibull" => Family::Weibull {
                tau: get(&["tau", "shape"], 1.5),
            },
            "lognormal" => Family::Lognormal {
                sigma: get(&["sigma", "s"], 1.0),
            },
            "normal" | "gaussian" => Family::Normal,
            "reversed_weibull" | "rweibull" => Family::ReversedWeibull {
                alpha: get(&["alpha", "a"], 5.0),
            },
            "uniform" => Family::Uniform,
            other => return Err(Error::Parse(format!("unknown distribution {other:?}"))),
        };
        if used != params.len() {
            return Err(Error::Parse(format!("unexpected parameters in {s:?}")));
        }
        DistributionSpec::new(family)
    }
}

/// The parameterizations of the simulation study.
pub fn study_distributions() -> Vec<DistributionSpec> {
    [
        "gpd:gamma=0.25",
        "frechet:alpha=4",
        "burr:c=2,k=2",
        "student_t:v=4",
        "exponential",
        "gumbel",
        "logistic",
        "weibull:tau=1.5",
        "lognormal:sigma=1",
        "normal",
        "gpd:gamma=-0.2",
        "reversed_weibull:alpha=5",
        "uniform",
    ]
    .iter()
    .map(|s| s.parse().expect("valid built-in spec"))
    .collect()
}
