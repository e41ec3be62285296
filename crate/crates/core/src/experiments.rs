//! Monte Carlo harness: MSE, squared bias and variance of several
//! estimators over a grid of `k`, plus CSV and SVG output.

use crate::amse_bootstrap::{estimate_r_with, estimate_with_r, AlgorithmParams, CalibrationConfig};
use crate::core_stats::{cvar_sequence, order_descending, CvarSequence, OrderedSample};
use crate::distributions::{sample_stream, DistributionSpec};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate, estimate_adaptive_with, estimate_pickands_yun, AdaptiveConfig, AdaptiveObjective, EstimatorConfig,
    EstimatorKind,
};
use crate::measure_opt::MeasureTable;
use crate::measures::SmoothingMeasure;
use crate::numeric::KahanSum;
use rayon::prelude::*;
use std::fmt::{self, Write as _};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// An estimator evaluated along the `k` grid.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    /// Yun form on the CVaR sequence at `m = k/4`.
    CvarPickands { u: f64, v: f64 },
    /// Two-stage smoothed estimator at `m = k`.
    Adaptive { kind: EstimatorKind, objective: AdaptiveObjective },
    /// Smoothed estimator with a fixed beta measure at `m = k`.
    Fixed { kind: EstimatorKind, alpha: f64, beta: f64 },
    /// CVaR estimator minimizing the approximate AMSE; `r̂` comes from one
    /// calibration path per replicate.
    CvarAmse { params: AlgorithmParams },
}

impl EstimatorSpec {
    pub fn m_for(&self, k: usize) -> usize {
        match self {
            EstimatorSpec::CvarPickands { .. } => k / 4,
            _ => k,
        }
    }

    /// The three estimators of the main comparison.
    pub fn defaults() -> Vec<EstimatorSpec> {
        vec![
            EstimatorSpec::CvarPickands { u: 2.0, v: 2.0 },
            EstimatorSpec::Adaptive {
                kind: EstimatorKind::VarSmoothed,
                objective: AdaptiveObjective::RegMse,
            },
            EstimatorSpec::Adaptive {
                kind: EstimatorKind::CvarSmoothed,
                objective: AdaptiveObjective::RegMse,
            },
        ]
    }
}

fn kind_prefix(kind: EstimatorKind) -> &'static str {
    match kind {
        EstimatorKind::VarSmoothed => "var",
        _ => "cvar",
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorSpec::CvarPickands { u, v } if *u == 2.0 && *v == 2.0 => f.write_str("cvar_pickands"),
            EstimatorSpec::CvarPickands { u, v } => write!(f, "cvar_pickands:u={u},v={v}"),
            EstimatorSpec::Adaptive { kind, objective } => {
                let p = kind_prefix(*kind);
                match objective {
                    AdaptiveObjective::Variance => write!(f, "{p}_variance"),
                    AdaptiveObjective::RegMse => write!(f, "{p}_regmse"),
                    AdaptiveObjective::Amse(r) => write!(f, "{p}_amse_fixed:r={r}"),
                }
            }
            EstimatorSpec::Fixed { kind, alpha, beta } => {
                write!(f, "{}_beta:alpha={alpha},beta={beta}", kind_prefix(*kind))
            }
            EstimatorSpec::CvarAmse { params } => write!(f, "cvar_amse:b={}", params.b),
        }
    }
}

impl FromStr for EstimatorSpec {
    type Err = Error;

    /// `cvar_pickands[:u=..,v=..]`, `{cvar,var}_{regmse,variance}`,
    /// `{cvar,var}_amse_fixed:r=..`, `{cvar,var}_beta:alpha=..,beta=..`,
    /// `cvar_amse[:b=..]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().replace('-', "_");
        let (name, rest) = s.split_once(':').unwrap_or((&s, ""));
        let mut params = std::collections::HashMap::new();
        for kv in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in {kv:?}")))?;
            let v: f64 = v.parse().map_err(|_| Error::Parse(format!("bad number in {kv:?}")))?;
            params.insert(k.to_string(), v);
        }
        let get = |k: &str| params.get(k).copied().ok_or_else(|| Error::Parse(format!("{name} needs {k}=")));
        let kind_of = |p: &str| match p {
            "cvar" => Ok(EstimatorKind::CvarSmoothed),
            "var" => Ok(EstimatorKind::VarSmoothed),
            _ => Err(Error::Parse(format!("unknown estimator {s:?}"))),
        };
        let spec = match name {
            "cvar_pickands" | "pickands" => EstimatorSpec::CvarPickands {
                u: params.get("u").copied().unwrap_or(2.0),
                v: params.get("v").copied().unwrap_or(2.0),
            },
            "cvar_amse" => EstimatorSpec::CvarAmse {
                params: AlgorithmParams {
                    b: params.get("b").map_or(AlgorithmParams::default().b, |&b| b as usize),
                    ..AlgorithmParams::default()
                },
            },
            _ => {
                let (p, obj) = name
                    .split_once('_')
                    .ok_or_else(|| Error::Parse(format!("unknown estimator {s:?}")))?;
                let kind = kind_of(p)?;
                match obj {
                    "regmse" => EstimatorSpec::Adaptive {
                        kind,
                        objective: AdaptiveObjective::RegMse,
                    },
                    "variance" | "var" => EstimatorSpec::Adaptive {
                        kind,
                        objective: AdaptiveObjective::Variance,
                    },
                    "amse_fixed" => EstimatorSpec::Adaptive {
                        kind,
                        objective: AdaptiveObjective::Amse(get("r")?),
                    },
                    "beta" => EstimatorSpec::Fixed {
                        kind,
                        alpha: get("alpha")?,
                        beta: get("beta")?,
                    },
                    _ => return Err(Error::Parse(format!("unknown estimator {s:?}"))),
                }
            }
        };
        Ok(spec)
    }
}

/// `8, 12, ..., n`.
pub fn default_k_grid(n: usize) -> Vec<usize> {
    (8..=n).step_by(4).collect()
}

/// A simulation design.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dist: DistributionSpec,
    pub n: usize,
    pub reps: usize,
    pub k_grid: Vec<usize>,
    pub estimators: Vec<EstimatorSpec>,
    pub seed: u64,
    pub c: f64,
    pub rho_bar: f64,
    /// Run replicates on the rayon pool (results do not depend on it).
    pub parallel: bool,
}

impl ExperimentSpec {
    /// `n = 1000`, 1000 replicates, `k = 8, 12, ..., 1000`, `c = 0.75`, `ρ̄ = -1`.
    pub fn new(dist: DistributionSpec) -> Self {
        Self {
            dist,
            n: 1000,
            reps: 1000,
            k_grid: default_k_grid(1000),
            estimators: EstimatorSpec::defaults(),
            seed: 1,
            c: 0.75,
            rho_bar: -1.0,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.reps == 0 || self.k_grid.is_empty() || self.estimators.is_empty() {
            return Err(Error::Config("need n >= 2, reps >= 1, a k grid and estimators".into()));
        }
        if let Some(&k) = self.k_grid.iter().find(|&&k| k == 0 || k > self.n) {
            return Err(Error::Config(format!("k={k} outside [1, n={}]", self.n)));
        }
        if !(self.c > 0.0 && self.c < 1.0) || !(self.rho_bar < 0.0) {
            return Err(Error::Config(format!("need c in (0,1) and rho_bar < 0 (c={}, rho_bar={})", self.c, self.rho_bar)));
        }
        Ok(())
    }
}

/// Aggregate statistics of one `(estimator, k)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub k: usize,
    pub estimator: String,
    pub mse: f64,
    pub bias_sq: f64,
    pub variance: f64,
    pub mean_estimate: f64,
    /// Replicates with a finite estimate.
    pub replicates: usize,
}

/// One point of the first replicate's estimate path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRow {
    pub k: usize,
    pub estimator: String,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveResult {
    pub dist: DistributionSpec,
    pub true_gamma: f64,
    pub rows: Vec<CurveRow>,
    pub first_sample: Vec<PathRow>,
    /// Cells whose estimator failed (recorded as NaN).
    pub failures: usize,
}

impl CurveResult {
    pub fn row(&self, estimator: &str, k: usize) -> Option<&CurveRow> {
        self.rows.iter().find(|r| r.k == k && r.estimator == estimator)
    }

    /// Rows of one estimator in `k` order.
    pub fn curve(&self, estimator: &str) -> Vec<&CurveRow> {
        self.rows.iter().filter(|r| r.estimator == estimator).collect()
    }
}

struct Replicate<'a> {
    ordered: OrderedSample,
    cvar: CvarSequence,
    spec: &'a ExperimentSpec,
    table: &'a MeasureTable,
}

impl Replicate<'_> {
    fn evaluate(&self, est: &EstimatorSpec, ks: &[usize]) -> Vec<f64> {
        let spec = self.spec;
        let one = |k: usize, r: Option<f64>| -> Result<f64> {
            let m = est.m_for(k);
            match est {
                EstimatorSpec::CvarPickands { u, v } => estimate_pickands_yun(&self.cvar, *u, *v, m),
                EstimatorSpec::Adaptive { kind, objective } => {
                    let cfg = AdaptiveConfig {
                        rho_bar: spec.rho_bar,
                        ..AdaptiveConfig::new(*kind, spec.c, m, *objective)
                    };
                    estimate_adaptive_with(self.table, &self.ordered, &self.cvar, &cfg).map(|a| a.gamma)
                }
                EstimatorSpec::Fixed { kind, alpha, beta } => {
                    let measure = SmoothingMeasure::beta(*alpha, *beta)?;
                    let cfg = match kind {
                        EstimatorKind::VarSmoothed => EstimatorConfig::var_smoothed(spec.c, m, measure),
                        _ => EstimatorConfig::cvar_smoothed(spec.c, m, measure),
                    };
                    estimate(&cfg, &self.ordered, &self.cvar).map(|e| e.gamma)
                }
                EstimatorSpec::CvarAmse { params } => {
                    let cfg = CalibrationConfig::new(spec.c, spec.rho_bar, *params, spec.seed);
                    let r = r.ok_or_else(|| Error::Config("no calibration path".into()))?;
                    estimate_with_r(self.table, &self.ordered, &self.cvar, m, r, &cfg).map(|a| a.gamma)
                }
            }
        };
        // one calibration path up to the largest k serves every k
        let path = match est {
            EstimatorSpec::CvarAmse { params } => {
                let m0 = ks.iter().copied().max().unwrap_or(0);
                let cfg = CalibrationConfig::new(spec.c, spec.rho_bar, *params, spec.seed);
                estimate_r_with(self.table, &self.ordered, &self.cvar, m0, &cfg).ok()
            }
            _ => None,
        };
        ks.iter()
            .map(|&k| {
                let r = path.as_ref().map(|p| {
                    p.entries
                        .iter()
                        .take_while(|e| e.m <= k)
                        .last()
                        .map_or(0.0, |e| e.r_hat)
                });
                match one(k, r) {
                    Ok(g) if g.is_finite() => g,
                    Ok(_) => f64::NAN,
                    Err(e) => {
                        log::debug!("{est} at k={k}: {e}");
                        f64::NAN
                    }
                }
            })
            .collect()
    }
}

/// Run the design with the shared measure table.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<CurveResult> {
    run_experiment_with(spec, MeasureTable::global())
}

pub fn run_experiment_with(spec: &ExperimentSpec, table: &MeasureTable) -> Result<CurveResult> {
    spec.validate()?;
    let ks = &spec.k_grid;
    let run_rep = |rep: usize| -> Result<Vec<Vec<f64>>> {
        let x = sample_stream(&spec.dist, spec.n, spec.seed, rep as u64);
        let ordered = order_descending(&x)?;
        let cvar = cvar_sequence(&ordered);
        let r = Replicate {
            ordered,
            cvar,
            spec,
            table,
        };
        Ok(spec.estimators.iter().map(|e| r.evaluate(e, ks)).collect())
    };
    // estimates[rep][estimator][k]
    let estimates: Vec<Vec<Vec<f64>>> = if spec.parallel {
        (0..spec.reps).into_par_iter().map(run_rep).collect::<Result<_>>()?
    } else {
        (0..spec.reps).map(run_rep).collect::<Result<_>>()?
    };

    let g = spec.dist.true_gamma;
    let mut rows = Vec::new();
    let mut failures = 0;
    for (ei, est) in spec.estimators.iter().enumerate() {
        let name = est.to_string();
        for (ki, &k) in ks.iter().enumerate() {
            let vals: Vec<f64> = estimates.iter().map(|r| r[ei][ki]).filter(|v| v.is_finite()).collect();
            failures += spec.reps - vals.len();
            rows.push(aggregate(&vals, g, k, &name));
        }
    }
    let first_sample = spec
        .estimators
        .iter()
        .enumerate()
        .flat_map(|(ei, est)| {
            let name = est.to_string();
            let est0 = &estimates[0][ei];
            ks.iter().enumerate().map(move |(ki, &k)| PathRow {
                k,
                estimator: name.clone(),
                estimate: est0[ki],
            })
        })
        .collect();
    Ok(CurveResult {
        dist: spec.dist,
        true_gamma: g,
        rows,
        first_sample,
        failures,
    })
}

fn aggregate(vals: &[f64], g: f64, k: usize, name: &str) -> CurveRow {
    let n = vals.len();
    if n == 0 {
        return CurveRow {
            k,
            estimator: name.to_string(),
            mse: f64::NAN,
            bias_sq: f64::NAN,
            variance: f64::NAN,
            mean_estimate: f64::NAN,
            replicates: 0,
        };
    }
    let nf = n as f64;
    let mut s = KahanSum::new();
    vals.iter().for_each(|&v| s.add(v));
    let mean = s.value() / nf;
    let (mut sq, mut err) = (KahanSum::new(), KahanSum::new());
    for &v in vals {
        sq.add((v - mean) * (v - mean));
        err.add((v - g) * (v - g));
    }
    CurveRow {
        k,
        estimator: name.to_string(),
        mse: err.value() / nf,
        bias_sq: (mean - g) * (mean - g),
        variance: sq.value() / nf,
        mean_estimate: mean,
        replicates: n,
    }
}

/// `<out>/<distribution label>`.
pub fn output_dir(out: &Path, dist: &DistributionSpec) -> PathBuf {
    out.join(dist.label())
}

pub fn write_curves_csv<W: Write>(result: &CurveResult, mut w: W) -> std::io::Result<()> {
    writeln!(w, "k,estimator,mse,bias_sq,variance,mean_estimate,replicates")?;
    for r in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.k, r.estimator, r.mse, r.bias_sq, r.variance, r.mean_estimate, r.replicates
        )?;
    }
    Ok(())
}

/// Split a CSV line, honouring double quotes (estimator names contain commas).
fn split_csv(line: &str) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut quoted = false;
    for ch in line.chars() {
        match ch {
            '"' => quoted = !quoted,
            ',' if !quoted => out.push(String::new()),
            _ => out.last_mut().unwrap().push(ch),
        }
    }
    out
}

fn quote(name: &str) -> String {
    if name.contains(',') {
        format!("\"{name}\"")
    } else {
        name.to_string()
    }
}

pub fn parse_curves_csv(text: &str) -> Result<Vec<CurveRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.starts_with("k,estimator,mse,bias_sq,variance,mean_estimate") => {}
        _ => return Err(Error::Parse("missing curve header".into())),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f = split_csv(line);
            if f.len() < 6 {
                return Err(Error::Parse(format!("short row {line:?}")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}")));
            let int = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad integer {s:?}")));
            Ok(CurveRow {
                k: int(&f[0])?,
                estimator: f[1].clone(),
                mse: num(&f[2])?,
                bias_sq: num(&f[3])?,
                variance: num(&f[4])?,
                mean_estimate: num(&f[5])?,
                replicates: f.get(6).map_or(Ok(0), |s| int(s))?,
            })
        })
        .collect()
}

/// Files written by [`write_outputs`].
pub const OUTPUT_FILES: [&str; 4] = ["mse_curves.csv", "first_sample_path.csv", "mse_curves.svg", "estimates.svg"];

/// Write both CSVs and both plots into `dir` (created if missing).
pub fn write_outputs(result: &CurveResult, dir: &Path, log_mse: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| -> Result<PathBuf> {
        let path = dir.join(name);
        let mut buf = Vec::new();
        body(&mut buf).map_err(|e| Error::io(&path, e))?;
        std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    };
    let mut quoted = result.clone();
    for r in &mut quoted.rows {
        r.estimator = quote(&r.estimator);
    }
    let names = estimator_names(result);
    let mse_series: Vec<Series> = names
        .iter()
        .map(|n| Series {
            name: n.clone(),
            points: result.curve(n).iter().map(|r| (r.k as f64, r.mse)).collect(),
        })
        .collect();
    let est_series: Vec<Series> = names
        .iter()
        .map(|n| Series {
            name: n.clone(),
            points: result
                .first_sample
                .iter()
                .filter(|p| &p.estimator == n)
                .map(|p| (p.k as f64, p.estimate))
                .collect(),
        })
        .collect();
    let dist = result.dist.to_string();
    Ok(vec![
        write(OUTPUT_FILES[0], &|w| write_curves_csv(&quoted, w))?,
        write(OUTPUT_FILES[1], &|w| {
            writeln!(w, "k,estimator,estimate")?;
            for p in &result.first_sample {
                writeln!(w, "{},{},{}", p.k, quote(&p.estimator), p.estimate)?;
            }
            Ok(())
        })?,
        write(OUTPUT_FILES[2], &|w| {
            w.write_all(line_plot(&format!("MSE, {dist}"), "MSE", &mse_series, log_mse, None).as_bytes())
        })?,
        write(OUTPUT_FILES[3], &|w| {
            w.write_all(
                line_plot(&format!("Estimates from the first sample, {dist}"), "estimate", &est_series, false, Some(result.true_gamma))
                    .as_bytes(),
            )
        })?,
    ])
}

fn estimator_names(result: &CurveResult) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for r in &result.rows {
        if !names.contains(&r.estimator) {
            names.push(r.estimator.clone());
        }
    }
    names
}

/// A named polyline.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Minimal SVG line plot with axes, ticks and a legend. Non-finite points
/// (and non-positive ones on a log axis) break the line.
pub fn line_plot(title: &str, y_label: &str, series: &[Series], log_y: bool, reference: Option<f64>) -> String {
    let (w, h) = (820.0, 520.0);
    let (left, right, top, bottom) = (80.0, 200.0, 40.0, 60.0);
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let ok = |p: &(f64, f64)| p.0.is_finite() && p.1.is_finite() && (!log_y || p.1 > 0.0);
    let pts = series.iter().flat_map(|s| s.points.iter().filter(|p| ok(p)));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p.0);
        x1 = x1.max(p.0);
        y0 = y0.min(ty(p.1));
        y1 = y1.max(ty(p.1));
    }
    if let Some(r) = reference.filter(|r| r.is_finite()) {
        y0 = y0.min(r);
        y1 = y1.max(r);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, left + pw / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let fx = x0 + (x1 - x0) * i as f64 / 5.0;
        let fy = y0 + (y1 - y0) * i as f64 / 5.0;
        let ylab = if log_y { format!("{:.3e}", 10f64.powf(fy)) } else { format!("{fy:.3}") };
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="black"/><text x="{0:.2}" y="{3}" text-anchor="middle">{4:.0}</text>"#,
            sx(fx),
            top + ph,
            top + ph + 5.0,
            top + ph + 20.0,
            fx
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1:.2}" x2="{2}" y2="{1:.2}" stroke="black"/><text x="{3}" y="{4:.2}" text-anchor="end">{5}</text>"#,
            left - 5.0,
            sy(fy),
            left,
            left - 8.0,
            sy(fy) + 4.0,
            ylab
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">k</text>"#, left + pw / 2.0, h - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}{2}</text>"#,
        top + ph / 2.0,
        escape(y_label),
        if log_y { " (log scale)" } else { "" }
    );
    if let Some(r) = reference.filter(|r| r.is_finite()) {
        let _ = writeln!(
            s,
            r#"<line x1="{left}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            sy(r),
            left + pw
        );
    }
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for p in &ser.points {
            if ok(p) {
                let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, sx(p.0), sy(ty(p.1)));
                pen_down = true;
            } else {
                pen_down = false;
            }
        }
        if !d.is_empty() {
            let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
        }
        let ly = top + 10.0 + 20.0 * i as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}
