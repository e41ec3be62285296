//! Monte Carlo oracle for the variance of the Gaussian limits, built
//! directly from discretized Brownian paths.
//!
//! With `W` on `[0, 1]` and `I(y) = ∫_0^y w^(-γ-1) W(w) dw`,
//!
//! ```text
//! CVaR:  G(t) = t^γ [I(ct)/c - I(t)] / (t h̃),   h̃ = h_γ(c) / (1-γ)
//! VaR:   G(t) = [c^(-γ-1) W(ct) - W(t)] / (t h_γ(c))
//! ```
//!
//! and the limit is `Z = ∫ G dλ`, with `h_γ(y) = (y^(-γ) - 1)/γ`.
//!
//! The cell integrals of `I` are sampled exactly: the part linear in the
//! endpoint values plus an independent Gaussian for the Brownian bridge
//! inside the cell. `G` is evaluated on every fourth grid point so that
//! `ct` (with `c = k/4`) falls on the grid, which makes every `G(t_j)`
//! exactly distributed; only the measure integral is discretized.

#![allow(dead_code)]

use rand::rngs::SmallRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// How the oracle applies a measure.
#[derive(Clone)]
pub enum OracleMeasure {
    /// Cumulative function `λ(t)`, applied through exact cell masses.
    Cumulative(fn(f64) -> f64),
    /// `(location, mass)` atoms on grid points.
    Atoms(Vec<(f64, f64)>),
}

fn h(gamma: f64, y: f64) -> f64 {
    if gamma == 0.0 {
        -y.ln()
    } else {
        (y.powf(-gamma) - 1.0) / gamma
    }
}

struct Prepared {
    /// `I_{k+1} = I_k + a_k W_k + b_k W_{k+1}`
    a: Vec<f64>,
    b: Vec<f64>,
    /// standard deviation of the bridge part of cell `k`
    e: Vec<f64>,
    cvar_scale: Vec<f64>,
    var_scale: Vec<f64>,
    c_pow: f64,
}

fn prepare(gamma: f64, c: f64, n: usize) -> Prepared {
    let hstep = 1.0 / n as f64;
    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
    // first cell: W linear from W_0 = 0, integrand w^(-γ) / h
    b[0] = hstep.powf(-gamma) / (1.0 - gamma);
    let g = 0.5 / 3f64.sqrt();
    for k in 1..n {
        let (lo, hi) = (k as f64 * hstep, (k + 1) as f64 * hstep);
        for x in [lo + (0.5 - g) * hstep, lo + (0.5 + g) * hstep] {
            let f = 0.5 * hstep * x.powf(-gamma - 1.0);
            a[k] += f * (hi - x) / hstep;
            b[k] += f * (x - lo) / hstep;
        }
    }
    // Var ∫ f B over a cell, B a bridge: 2 h³ ∫_0^1 f(y)(1-y) ∫_0^y x f(x) dx dy
    let mut e = vec![0.0; n];
    e[0] = (hstep.powf(1.0 - 2.0 * gamma) * 2.0 / (1.0 - gamma)
        * (1.0 / (1.0 - 2.0 * gamma) - 1.0 / (2.0 - 2.0 * gamma)))
        .sqrt();
    let (gx, gw) = gauss_legendre_8();
    for k in 1..n {
        let lo = k as f64 * hstep;
        let f = |x: f64| (lo + hstep * x).powf(-gamma - 1.0);
        let var = if k < 256 {
            let mut acc = 0.0;
            for (&y, &wy) in gx.iter().zip(&gw) {
                let inner: f64 = gx.iter().zip(&gw).map(|(&x, &wx)| wx * y * (x * y) * f(x * y)).sum();
                acc += wy * f(y) * (1.0 - y) * inner;
            }
            2.0 * hstep.powi(3) * acc
        } else {
            hstep.powi(3) * f(0.5).powi(2) / 12.0
        };
        e[k] = var.sqrt();
    }
    let ht = h(gamma, c) / (1.0 - gamma);
    let hc = h(gamma, c);
    let cvar_scale = (0..=n)
        .map(|j| if j == 0 { 0.0 } else { let t = j as f64 * hstep; t.powf(gamma) / (t * ht) })
        .collect();
    let var_scale = (0..=n)
        .map(|j| if j == 0 { 0.0 } else { 1.0 / (j as f64 * hstep * hc) })
        .collect();
    Prepared {
        a,
        b,
        e,
        cvar_scale,
        var_scale,
        c_pow: c.powf(-gamma - 1.0),
    }
}

/// Nodes and weights on `[0, 1]`.
fn gauss_legendre_8() -> ([f64; 8], [f64; 8]) {
    let x = [0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363];
    let w = [0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763];
    let mut nodes = [0.0; 8];
    let mut weights = [0.0; 8];
    for i in 0..4 {
        nodes[2 * i] = 0.5 - 0.5 * x[i];
        nodes[2 * i + 1] = 0.5 + 0.5 * x[i];
        weights[2 * i] = 0.5 * w[i];
        weights[2 * i + 1] = 0.5 * w[i];
    }
    (nodes, weights)
}

/// Sample variances of `Z`, indexed `[gamma][kernel (0 = CVaR, 1 = VaR)][measure]`.
pub fn wiener_variance_oracle(
    gammas: &[f64],
    c: f64,
    measures: &[OracleMeasure],
    paths: usize,
    log2_steps: u32,
    seed: u64,
) -> Vec<[Vec<f64>; 2]> {
    let n = 1usize << log2_steps;
    let hstep = 1.0 / n as f64;
    let prepared: Vec<Prepared> = gammas.iter().map(|&g| prepare(g, c, n)).collect();
    let quarter = (c * 4.0).round();
    assert!((quarter / 4.0 - c).abs() < 1e-15 && log2_steps >= 4, "c must be a multiple of 1/4");
    let nt = n / 4;
    let dt = 4.0 * hstep;
    // cell masses on t_i = 4 i h: the cell [t_i - δ/2, t_i + δ/2] ∩ (0, 1]
    let masses: Vec<Option<Vec<f64>>> = measures
        .iter()
        .map(|m| match m {
            OracleMeasure::Cumulative(f) => Some(
                (0..=nt)
                    .map(|i| {
                        if i == 0 {
                            return 0.0;
                        }
                        let lo = if i == 1 { 0.0 } else { (i as f64 - 0.5) * dt };
                        let hi = ((i as f64 + 0.5) * dt).min(1.0);
                        f(hi) - f(lo)
                    })
                    .collect(),
            ),
            OracleMeasure::Atoms(_) => None,
        })
        .collect();
    let nm = measures.len();
    let ng = gammas.len();
    let chunks = 64usize;
    let per = paths.div_ceil(chunks);
    // sums of Z and Z² per (gamma, kernel, measure)
    let partial: Vec<(Vec<f64>, Vec<f64>, usize)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = SmallRng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ chunk as u64);
            let count = per.min(paths.saturating_sub(chunk * per));
            let mut s1 = vec![0.0; ng * 2 * nm];
            let mut s2 = vec![0.0; ng * 2 * nm];
            let mut w = vec![0.0; n + 1];
            let mut big_i = vec![0.0; n + 1];
            let mut g_cvar = vec![0.0; nt + 1];
            let mut g_var = vec![0.0; nt + 1];
            let cq = quarter as usize;
            let sd = hstep.sqrt();
            for _ in 0..count {
                for k in 1..=n {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    w[k] = w[k - 1] + sd * z;
                }
                for (gi, p) in prepared.iter().enumerate() {
                    for k in 0..n {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        big_i[k + 1] = big_i[k] + p.a[k] * w[k] + p.b[k] * w[k + 1] + p.e[k] * z;
                    }
                    for i in 1..=nt {
                        let (j, jc) = (4 * i, cq * i);
                        g_cvar[i] = p.cvar_scale[j] * (big_i[jc] / c - big_i[j]);
                        g_var[i] = p.var_scale[j] * (p.c_pow * w[jc] - w[j]);
                    }
                    for (mi, m) in measures.iter().enumerate() {
                        for (ki, gk) in [&g_cvar, &g_var].into_iter().enumerate() {
                            let z = match (m, &masses[mi]) {
                                (_, Some(mass)) => gk.iter().zip(mass).map(|(g, m)| g * m).sum::<f64>(),
                                (OracleMeasure::Atoms(atoms), None) => atoms
                                    .iter()
                                    .map(|&(l, mass)| {
                                        let j = (l * nt as f64).round() as usize;
                                        mass * gk[j]
                                    })
                                    .sum(),
                                _ => unreachable!(),
                            };
                            let idx = (gi * 2 + ki) * nm + mi;
                            s1[idx] += z;
                            s2[idx] += z * z;
                        }
                    }
                }
            }
            (s1, s2, count)
        })
        .collect();
    let total: usize = partial.iter().map(|p| p.2).sum();
    let mut s1 = vec![0.0; ng * 2 * nm];
    let mut s2 = vec![0.0; ng * 2 * nm];
    for (a, b, _) in &partial {
        for i in 0..s1.len() {
            s1[i] += a[i];
            s2[i] += b[i];
        }
    }
    let nf = total as f64;
    (0..ng)
        .map(|gi| {
            let var_of = |ki: usize| {
                (0..nm)
                    .map(|mi| {
                        let i = (gi * 2 + ki) * nm + mi;
                        let mean = s1[i] / nf;
                        (s2[i] / nf - mean * mean) * nf / (nf - 1.0)
                    })
                    .collect::<Vec<f64>>()
            };
            [var_of(0), var_of(1)]
        })
        .collect()
}
