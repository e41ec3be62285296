//! Bootstrap calibration of `r_{n,m} = √m A(n/m)` along a path of `m`
//! values, and the estimator whose measure minimizes the resulting
//! approximate AMSE.
//!
//! For every `m` on the path and every `r_j` on a grid, the AMSE-optimal
//! measure at `(γ̄, ρ̄, r_j)` gives an analytical `m·AMSE_j` and a bootstrap
//! `MSE_j` around a reference estimate. `r̂_{n,m}` is the first crossing of
//! the two curves when it is close to the previous value, otherwise the
//! best match in a small window around it.

use crate::core_stats::{cvar_from_raw, cvar_sequence, order_descending, CvarSequence, OrderedSample};
use crate::error::{Error, Result};
use crate::estimators::{
    effective_weights, estimate_adaptive_with, log_spacings, resolve_gamma_bar, AdaptiveConfig, AdaptiveObjective,
    EstimatorConfig, EstimatorKind, GammaBarPolicy, SpacingWeights,
};
use crate::evt_kernels::{Kernel, TailContext};
use crate::measure_opt::{MeasureTable, ObjectiveSpec};
use crate::measures::SmoothingMeasure;
use crate::numeric::KahanSum;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

/// Tuning constants of the calibration loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmParams {
    /// Number of bootstrap resamples.
    pub b: usize,
    pub r_max: f64,
    pub delta_m: usize,
    /// Largest accepted jump to a crossing.
    pub d: f64,
    /// Half-width of the fallback window.
    pub tau: f64,
    pub r_grid_step: f64,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        Self {
            b: 1000,
            r_max: 15.0,
            delta_m: 4,
            d: 0.5,
            tau: 0.1,
            r_grid_step: 0.1,
        }
    }
}

impl AlgorithmParams {
    pub fn validate(&self) -> Result<()> {
        if self.b == 0 || self.delta_m == 0 {
            return Err(Error::Config("bootstrap count and delta_m must be positive".into()));
        }
        if !(self.r_grid_step > 0.0) || !(self.r_max >= 0.0) || !(self.d >= 0.0) || !(self.tau >= 0.0) {
            return Err(Error::Config(format!("invalid parameters {self:?}")));
        }
        Ok(())
    }

    /// `0, step, 2 step, ..., r_max`.
    pub fn r_grid(&self) -> Vec<f64> {
        let n = (self.r_max / self.r_grid_step + 1e-9).floor() as usize;
        (0..=n).map(|j| (j as f64 * self.r_grid_step).min(self.r_max)).collect()
    }
}

/// One step of the path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RPathEntry {
    pub m: usize,
    pub r_hat: f64,
    /// A crossing within distance `d` was accepted.
    pub intersection: bool,
    /// The windowed minimization was used.
    pub constrained: bool,
    /// The window held no grid point and the previous value was kept.
    pub fallback: bool,
}

/// The calibration path together with the quantities it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct RPath {
    pub entries: Vec<RPathEntry>,
    /// Initial estimate used for every measure on the path.
    pub gamma_bar: f64,
    /// Reference estimate the bootstrap MSE is centred on.
    pub gamma_ref: f64,
}

impl RPath {
    pub fn terminal(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.r_hat)
    }

    /// `r̂` at `m`, if `m` is on the path.
    pub fn r_at(&self, m: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.m == m).map(|e| e.r_hat)
    }

    /// Continuity of consecutive values: jumps of at most `d` at crossings
    /// and at most `τ` otherwise, up to grid rounding.
    pub fn check_continuity(&self, params: &AlgorithmParams) -> Result<()> {
        for w in self.entries.windows(2) {
            let jump = (w[1].r_hat - w[0].r_hat).abs();
            let limit = if w[1].intersection { params.d } else { params.tau } + 1e-9;
            if jump > limit {
                return Err(Error::Invariant(format!(
                    "r jumps by {jump} between m={} and m={}",
                    w[0].m, w[1].m
                )));
            }
        }
        for e in &self.entries {
            if !(0.0..=params.r_max).contains(&e.r_hat) {
                return Err(Error::Invariant(format!("r={} outside [0, r_max] at m={}", e.r_hat, e.m)));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "m,r_hat,intersection,constrained")?;
        for e in &self.entries {
            writeln!(w, "{},{},{},{}", e.m, e.r_hat, e.intersection, e.constrained)?;
        }
        Ok(())
    }

    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f)).map_err(|e| Error::io(path, e))
    }
}

/// Resample `x` with replacement using stream `stream` of `seed`.
fn resample(x: &[f64], seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let n = x.len() as u64;
    // Lemire's unbiased bounded draw
    let threshold = n.wrapping_neg() % n;
    (0..x.len())
        .map(|_| loop {
            let m = (rng.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                break x[(m >> 64) as usize];
            }
        })
        .collect()
}

/// Log-spacings `ℓ_b[j]`, `j ≤ m_max`, of the CVaR sequence of every
/// bootstrap resample.
fn bootstrap_log_spacings(x: &[f64], b: usize, c: f64, m_max: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    (0..b as u64)
        .into_par_iter()
        .map(|i| {
            let xs = resample(x, seed, i);
            let y = cvar_sequence(&order_descending(&xs)?);
            log_spacings(y.values(), c, m_max)
        })
        .collect()
}

/// First crossing of `D_j` (sign change, or an exact zero), linearly
/// interpolated between grid nodes.
fn first_crossing(grid: &[f64], disc: &[f64]) -> Option<f64> {
    for j in 0..disc.len() {
        if disc[j] == 0.0 {
            return Some(grid[j]);
        }
        if j + 1 < disc.len() && (disc[j] < 0.0) != (disc[j + 1] < 0.0) && disc[j + 1] != 0.0 {
            let t = disc[j] / (disc[j] - disc[j + 1]);
            return Some(grid[j] + t * (grid[j + 1] - grid[j]));
        }
    }
    None
}

/// Grid point minimizing `|D_j|` in the window around `prev` bounded by the
/// nearest local maxima of `|D_j|`; `None` if the window holds no node.
fn constrained_min(grid: &[f64], disc: &[f64], prev: f64, tau: f64) -> Option<f64> {
    let a: Vec<f64> = disc.iter().map(|d| d.abs()).collect();
    let is_max = |i: usize| i > 0 && i + 1 < a.len() && a[i] >= a[i - 1] && a[i] > a[i + 1];
    let eps = 1e-9;
    let r_left = (0..grid.len())
        .rev()
        .find(|&i| grid[i] < prev - eps && is_max(i))
        .map_or(grid[0], |i| grid[i]);
    let r_right = (0..grid.len())
        .find(|&i| grid[i] > prev + eps && is_max(i))
        .map_or(*grid.last().unwrap(), |i| grid[i]);
    let lo = (prev - tau).max(r_left) - eps;
    let hi = (prev + tau).min(r_right) + eps;
    (0..grid.len())
        .filter(|&i| grid[i] >= lo && grid[i] <= hi)
        .min_by(|&i, &j| a[i].total_cmp(&a[j]).then(i.cmp(&j)))
        .map(|i| grid[i])
}

/// Settings shared by the calibration and the final estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub c: f64,
    pub rho_bar: f64,
    pub params: AlgorithmParams,
    pub seed: u64,
    pub policy: GammaBarPolicy,
}

impl CalibrationConfig {
    pub fn new(c: f64, rho_bar: f64, params: AlgorithmParams, seed: u64) -> Self {
        Self {
            c,
            rho_bar,
            params,
            seed,
            policy: GammaBarPolicy::Clamp,
        }
    }
}

fn cvar_config(c: f64, m: usize, alpha: f64, beta: f64) -> Result<(EstimatorConfig, SpacingWeights)> {
    let measure = SmoothingMeasure::beta(alpha, beta)?;
    let w = SpacingWeights::new(&measure, m)?;
    Ok((EstimatorConfig::cvar_smoothed(c, m, measure), w))
}

/// The calibration loop on a prepared sample, using `table` for optima.
pub fn estimate_r_with(
    table: &MeasureTable,
    ordered: &OrderedSample,
    cvar: &CvarSequence,
    m0: usize,
    cfg: &CalibrationConfig,
) -> Result<RPath> {
    let p = &cfg.params;
    p.validate()?;
    let n = ordered.len();
    if m0 < p.delta_m || m0 > n {
        return Err(Error::Config(format!("m0={m0} outside [delta_m={}, n={n}]", p.delta_m)));
    }
    if n < 2 * p.delta_m {
        return Err(Error::Config(format!("n={n} smaller than 2 delta_m")));
    }
    let m_top = m0 - m0 % p.delta_m;
    if m_top != m0 {
        log::warn!("m0={m0} is not a multiple of delta_m={}; using {m_top}", p.delta_m);
    }
    let grid = p.r_grid();

    // initial estimate at m0 and the reference estimate at m = n
    let stage1 = AdaptiveConfig {
        policy: cfg.policy,
        rho_bar: cfg.rho_bar,
        ..AdaptiveConfig::new(EstimatorKind::CvarSmoothed, cfg.c, m_top, AdaptiveObjective::Variance)
    };
    let first = estimate_adaptive_with(table, ordered, cvar, &stage1)?;
    let gamma_bar = resolve_gamma_bar(first.gamma_bar, cfg.policy)?;
    let ctx = TailContext::new(gamma_bar, cfg.rho_bar, cfg.c)?;
    let bias_opt = table.lookup(&ObjectiveSpec::abs_bias(ctx, Kernel::Cvar))?;
    let (ref_cfg, _) = cvar_config(cfg.c, n, bias_opt.alpha, bias_opt.beta)?;
    let gamma_ref = crate::estimators::estimate_cvar_smoothed(cvar, &ref_cfg)?;

    let mut entries = vec![RPathEntry {
        m: p.delta_m,
        r_hat: 0.0,
        intersection: false,
        constrained: false,
        fallback: false,
    }];
    if m_top == p.delta_m {
        return Ok(RPath {
            entries,
            gamma_bar,
            gamma_ref,
        });
    }

    let x = ordered.values();
    let ell = bootstrap_log_spacings(x, p.b, cfg.c, m_top, cfg.seed)?;
    // AMSE-optimal measures per grid value (the optimum does not depend on m)
    let optima: Vec<_> = grid
        .iter()
        .map(|&r| table.lookup(&ObjectiveSpec::amse(ctx, Kernel::Cvar, 1, r)))
        .collect::<Result<_>>()?;

    let mut prev = 0.0;
    for m in (2 * p.delta_m..=m_top).step_by(p.delta_m) {
        let disc: Vec<f64> = optima
            .par_iter()
            .map(|o| {
                let (_, w) = cvar_config(cfg.c, m, o.alpha, o.beta)?;
                let ew = effective_weights(cfg.c, &w)?;
                let mut acc = KahanSum::new();
                for row in &ell {
                    let g = ew.iter().zip(&row[..m]).fold(0.0, |s, (a, b)| s + a * b);
                    acc.add((g - gamma_ref).powi(2));
                }
                let mse = acc.value() / p.b as f64;
                // both sides on the m·AMSE scale; o.value is r²B² + v
                Ok(m as f64 * mse - o.value)
            })
            .collect::<Result<_>>()?;
        let mut e = RPathEntry {
            m,
            r_hat: prev,
            intersection: false,
            constrained: false,
            fallback: false,
        };
        match first_crossing(&grid, &disc) {
            Some(r) if (r - prev).abs() <= p.d => {
                e.r_hat = r;
                e.intersection = true;
            }
            _ => {
                e.constrained = true;
                match constrained_min(&grid, &disc, prev, p.tau) {
                    Some(r) => e.r_hat = r,
                    None => e.fallback = true,
                }
            }
        }
        e.r_hat = e.r_hat.clamp(0.0, p.r_max);
        prev = e.r_hat;
        entries.push(e);
    }
    Ok(RPath {
        entries,
        gamma_bar,
        gamma_ref,
    })
}

/// Calibrate `r̂_{n,m}` for `m = Δm, 2Δm, ..., m0` on a raw sample.
pub fn estimate_r(sample: &[f64], m0: usize, cfg: &CalibrationConfig) -> Result<RPath> {
    let (ordered, cvar) = cvar_from_raw(sample)?;
    estimate_r_with(MeasureTable::global(), &ordered, &cvar, m0, cfg)
}

/// Result of the approximate-AMSE estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmseEstimate {
    pub gamma: f64,
    pub r_hat: f64,
    pub gamma_bar: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// The adaptive CVaR estimator whose stage-two measure minimizes the AMSE
/// with a given `r`.
pub fn estimate_with_r(
    table: &MeasureTable,
    ordered: &OrderedSample,
    cvar: &CvarSequence,
    m: usize,
    r: f64,
    cfg: &CalibrationConfig,
) -> Result<AmseEstimate> {
    let ac = AdaptiveConfig {
        policy: cfg.policy,
        rho_bar: cfg.rho_bar,
        ..AdaptiveConfig::new(EstimatorKind::CvarSmoothed, cfg.c, m, AdaptiveObjective::Amse(r))
    };
    let a = estimate_adaptive_with(table, ordered, cvar, &ac)?;
    Ok(AmseEstimate {
        gamma: a.gamma,
        r_hat: r,
        gamma_bar: a.gamma_bar,
        alpha: a.alpha,
        beta: a.beta,
    })
}

/// Calibrate `r̂_{n,m}` up to `m` and estimate with the measure minimizing
/// the approximate AMSE at that `r̂`.
pub fn estimate_amse_adaptive_with(
    table: &MeasureTable,
    ordered: &OrderedSample,
    cvar: &CvarSequence,
    m: usize,
    cfg: &CalibrationConfig,
) -> Result<AmseEstimate> {
    let path = estimate_r_with(table, ordered, cvar, m, cfg)?;
    estimate_with_r(table, ordered, cvar, m, path.terminal(), cfg)
}

pub fn estimate_amse_adaptive(sample: &[f64], m: usize, cfg: &CalibrationConfig) -> Result<AmseEstimate> {
    let (ordered, cvar) = cvar_from_raw(sample)?;
    estimate_amse_adaptive_with(MeasureTable::global(), &ordered, &cvar, m, cfg)
}
