//! Optimal beta smoothing measures.
//!
//! The bias of a beta measure is available in closed form, while the
//! variance needs a double integral. For a fixed `(kernel, γ, c)` the
//! variance is tabulated once on a Chebyshev grid over the box in the
//! coordinates `(ln(α - 3/2), ln(β - 1))` and interpolated (`ln v` is
//! analytic there; the variance itself diverges as `α → 3/2`). Objectives
//! are then cheap enough to run a full multistart Nelder-Mead.

use crate::asymptotics::{regmse_r, BiasEvaluator, VarianceEvaluator};
use crate::error::{Error, Result};
use crate::evt_kernels::{Kernel, TailContext};
use crate::measures::{ALPHA_MAX, ALPHA_MIN, BETA_MAX, BETA_MIN};
use rayon::prelude::*;
use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

/// Chebyshev points per axis of a [`VarianceSurface`].
pub const SURFACE_POINTS: usize = 20;
const SURFACE_LEVEL: u32 = 5;
const GRID_STARTS: usize = 6;
const SIMPLEX_DIAMETER_TOL: f64 = 1e-4;
const SPREAD_TOL: f64 = 1e-10;
const MAX_ITER: usize = 2000;

/// What the optimizer minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Objective {
    Variance,
    AbsBias,
    RegMse,
    Amse,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::Variance => "variance",
            Objective::AbsBias => "abs_bias",
            Objective::RegMse => "regmse",
            Objective::Amse => "amse",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "variance" | "var" => Ok(Objective::Variance),
            "abs_bias" | "bias" => Ok(Objective::AbsBias),
            "regmse" => Ok(Objective::RegMse),
            "amse" => Ok(Objective::Amse),
            _ => Err(Error::Parse(format!("unknown objective {s:?}"))),
        }
    }
}

/// Objective, tail context and the sample-size information it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveSpec {
    pub objective: Objective,
    pub context: TailContext,
    pub kernel: Kernel,
    /// Number of spacings (RegMSE and AMSE); scales the reported value.
    pub m: usize,
    /// Sample size (RegMSE).
    pub n: usize,
    /// Bias weight (AMSE).
    pub r: f64,
}

impl ObjectiveSpec {
    pub fn variance(context: TailContext, kernel: Kernel) -> Self {
        Self {
            objective: Objective::Variance,
            context,
            kernel,
            m: 1,
            n: 1,
            r: 0.0,
        }
    }

    pub fn abs_bias(context: TailContext, kernel: Kernel) -> Self {
        Self {
            objective: Objective::AbsBias,
            ..Self::variance(context, kernel)
        }
    }

    pub fn regmse(context: TailContext, kernel: Kernel, m: usize, n: usize) -> Self {
        Self {
            objective: Objective::RegMse,
            m,
            n,
            ..Self::variance(context, kernel)
        }
    }

    pub fn amse(context: TailContext, kernel: Kernel, m: usize, r: f64) -> Self {
        Self {
            objective: Objective::Amse,
            m,
            r,
            ..Self::variance(context, kernel)
        }
    }

    /// The `r` multiplying `B²` (zero for the variance objective).
    pub fn bias_weight(&self) -> f64 {
        match self.objective {
            Objective::Variance | Objective::AbsBias => 0.0,
            Objective::RegMse => regmse_r(self.m, self.n),
            Objective::Amse => self.r,
        }
    }

    /// Factor turning the per-unit objective `r²B² + v` into the reported value.
    fn scale(&self) -> f64 {
        match self.objective {
            Objective::RegMse | Objective::Amse => 1.0 / self.m as f64,
            _ => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = &self.context;
        if !(ctx.gamma < 0.5) || !(ctx.rho <= 0.0) || !(ctx.c > 0.0 && ctx.c < 1.0) {
            return Err(Error::Domain(format!("invalid tail context {ctx:?}")));
        }
        match self.objective {
            Objective::AbsBias if ctx.rho == 0.0 => Err(Error::DegenerateObjective(
                "the bias is identically 1 when rho = 0".into(),
            )),
            Objective::RegMse if self.m == 0 || self.m > self.n => {
                Err(Error::Config(format!("m={} outside [1, n={}]", self.m, self.n)))
            }
            Objective::Amse if self.m == 0 || !(self.r >= 0.0) || !self.r.is_finite() => {
                Err(Error::Config(format!("amse needs m >= 1 and r >= 0 (m={}, r={})", self.m, self.r)))
            }
            _ => Ok(()),
        }
    }
}

/// Minimizer over the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureOptimum {
    pub alpha: f64,
    pub beta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    shift: f64,
}

impl Axis {
    fn to_unit(&self, x: f64) -> f64 {
        let (a, b) = ((self.lo - self.shift).ln(), (self.hi - self.shift).ln());
        2.0 * ((x - self.shift).ln() - a) / (b - a) - 1.0
    }

    fn from_unit(&self, z: f64) -> f64 {
        let (a, b) = ((self.lo - self.shift).ln(), (self.hi - self.shift).ln());
        self.shift + (a + 0.5 * (z + 1.0) * (b - a)).exp()
    }
}

const ALPHA_AXIS: Axis = Axis {
    lo: ALPHA_MIN,
    hi: ALPHA_MAX,
    shift: 1.5,
};
const BETA_AXIS: Axis = Axis {
    lo: BETA_MIN,
    hi: BETA_MAX,
    shift: 1.0,
};

fn chebyshev_points(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * n) as f64).cos())
        .collect()
}

/// Barycentric weights of Chebyshev points of the first kind.
fn chebyshev_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let s = (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * n) as f64).sin();
            if i % 2 == 0 {
                s
            } else {
                -s
            }
        })
        .collect()
}

fn barycentric_row(nodes: &[f64], weights: &[f64], z: f64, out: &mut [f64]) {
    if let Some(i) = nodes.iter().position(|&x| x == z) {
        out.fill(0.0);
        out[i] = 1.0;
        return;
    }
    let mut s = 0.0;
    for i in 0..nodes.len() {
        out[i] = weights[i] / (z - nodes[i]);
        s += out[i];
    }
    for v in out.iter_mut() {
        *v /= s;
    }
}

/// Interpolated asymptotic variance over the admissible box for fixed
/// `(kernel, γ, c)`; relative accuracy about 1e-5 or better.
#[derive(Debug, Clone)]
pub struct VarianceSurface {
    kernel: Kernel,
    gamma: f64,
    c: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `ln v` at node `(i, j)`, row-major in `α`
    log_v: Vec<f64>,
}

impl VarianceSurface {
    pub fn build(kernel: Kernel, ctx: &TailContext) -> Result<Self> {
        let ev = VarianceEvaluator::with_level(kernel, ctx, SURFACE_LEVEL)?;
        let n = SURFACE_POINTS;
        let nodes = chebyshev_points(n);
        let log_v: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|k| {
                let a = ALPHA_AXIS.from_unit(nodes[k / n]);
                let b = BETA_AXIS.from_unit(nodes[k % n]);
                ev.variance(a, b).ln()
            })
            .collect();
        if let Some(k) = log_v.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invariant(format!(
                "non-positive variance at surface node {k} for {kernel:?}, gamma={}",
                ctx.gamma
            )));
        }
        Ok(Self {
            kernel,
            gamma: ctx.gamma,
            c: ctx.c,
            weights: chebyshev_weights(n),
            nodes,
            log_v,
        })
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

    /// Interpolated variance at `(α, β)` inside the box.
    pub fn variance(&self, alpha: f64, beta: f64) -> f64 {
        let n = self.nodes.len();
        let mut ra = [0.0; SURFACE_POINTS];
        let mut rb = [0.0; SURFACE_POINTS];
        barycentric_row(&self.nodes, &self.weights, ALPHA_AXIS.to_unit(alpha), &mut ra[..n]);
        barycentric_row(&self.nodes, &self.weights, BETA_AXIS.to_unit(beta), &mut rb[..n]);
        let mut acc = 0.0;
        for i in 0..n {
            if ra[i] == 0.0 {
                continue;
            }
            let row = &self.log_v[i * n..(i + 1) * n];
            let mut s = 0.0;
            for j in 0..n {
                s += rb[j] * row[j];
            }
            acc += ra[i] * s;
        }
        acc.exp()
    }
}

fn clamp_box(p: [f64; 2]) -> [f64; 2] {
    [p[0].clamp(ALPHA_MIN, ALPHA_MAX), p[1].clamp(BETA_MIN, BETA_MAX)]
}

fn better(a: &(f64, [f64; 2]), b: &(f64, [f64; 2])) -> bool {
    // total order with deterministic tie-breaking on the coordinates
    a.0.total_cmp(&b.0)
        .then(a.1[0].total_cmp(&b.1[0]))
        .then(a.1[1].total_cmp(&b.1[1]))
        .is_lt()
}

/// Nelder-Mead from `start`, with every trial point projected onto the box.
fn nelder_mead<F: Fn(f64, f64) -> f64>(f: &F, start: [f64; 2]) -> (f64, [f64; 2]) {
    let eval = |p: [f64; 2]| {
        let p = clamp_box(p);
        let v = f(p[0], p[1]);
        (if v.is_nan() { f64::INFINITY } else { v }, p)
    };
    let step = [0.1 * (ALPHA_MAX - ALPHA_MIN), 0.1 * (BETA_MAX - BETA_MIN)];
    let mut s: Vec<(f64, [f64; 2])> = vec![
        eval(start),
        eval([start[0] + step[0], start[1]]),
        eval([start[0], start[1] + step[1]]),
    ];
    // a start on the upper edge would project back onto itself
    for k in 1..3 {
        if s[k].1 == s[0].1 {
            let mut p = start;
            p[k - 1] -= step[k - 1];
            s[k] = eval(p);
        }
    }
    for _ in 0..MAX_ITER {
        s.sort_by(|a, b| if better(a, b) { std::cmp::Ordering::Less } else if better(b, a) { std::cmp::Ordering::Greater } else { std::cmp::Ordering::Equal });
        let diameter = (0..3)
            .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
            .map(|(i, j)| ((s[i].1[0] - s[j].1[0]).powi(2) + (s[i].1[1] - s[j].1[1]).powi(2)).sqrt())
            .fold(0.0, f64::max);
        let spread = s[2].0 - s[0].0;
        if diameter < SIMPLEX_DIAMETER_TOL && spread <= SPREAD_TOL * s[0].0.abs().max(1.0) {
            break;
        }
        if diameter < 1e-12 {
            break;
        }
        let centroid = [(s[0].1[0] + s[1].1[0]) / 2.0, (s[0].1[1] + s[1].1[1]) / 2.0];
        let along = |t: f64| {
            [
                centroid[0] + t * (s[2].1[0] - centroid[0]),
                centroid[1] + t * (s[2].1[1] - centroid[1]),
            ]
        };
        let r = eval(along(-1.0));
        if r.0 < s[0].0 {
            let e = eval(along(-2.0));
            s[2] = if e.0 < r.0 { e } else { r };
        } else if r.0 < s[1].0 {
            s[2] = r;
        } else {
            let c = if r.0 < s[2].0 { eval(along(-0.5)) } else { eval(along(0.5)) };
            if c.0 < s[2].0.min(r.0) {
                s[2] = c;
            } else {
                let best = s[0].1;
                for k in 1..3 {
                    s[k] = eval([(s[k].1[0] + best[0]) / 2.0, (s[k].1[1] + best[1]) / 2.0]);
                }
            }
        }
    }
    s.into_iter().reduce(|a, b| if better(&b, &a) { b } else { a }).unwrap()
}

/// Multistart Nelder-Mead over the box from a `6 × 6` grid of starts; the
/// best point over all starts is returned.
pub fn minimize_on_box<F: Fn(f64, f64) -> f64 + Sync>(f: F) -> Result<MeasureOptimum> {
    let grid = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * (i as f64 + 0.5) / GRID_STARTS as f64;
    let starts: Vec<[f64; 2]> = (0..GRID_STARTS * GRID_STARTS)
        .map(|k| {
            [
                grid(ALPHA_MIN, ALPHA_MAX, k / GRID_STARTS),
                grid(BETA_MIN, BETA_MAX, k % GRID_STARTS),
            ]
        })
        .collect();
    let best = starts
        .iter()
        .filter(|p| f(p[0], p[1]).is_finite())
        .map(|&p| nelder_mead(&f, p))
        .filter(|r| r.0.is_finite())
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .ok_or(Error::ObjectiveUndefined)?;
    Ok(MeasureOptimum {
        alpha: best.1[0],
        beta: best.1[1],
        value: best.0,
    })
}

/// Per-unit objective `r²B² + v` (or `|B|`) built from a surface.
fn objective_fn<'a>(spec: &ObjectiveSpec, surface: Option<&'a VarianceSurface>) -> Result<Box<dyn Fn(f64, f64) -> f64 + Sync + 'a>> {
    let bias = BiasEvaluator::new(spec.kernel, &spec.context)?;
    let r = spec.bias_weight();
    Ok(match spec.objective {
        Objective::AbsBias => Box::new(move |a, b| bias.bias(a, b).abs()),
        Objective::Variance => {
            let s = surface.expect("variance objectives need a surface");
            Box::new(move |a, b| s.variance(a, b))
        }
        Objective::RegMse | Objective::Amse => {
            let s = surface.expect("variance objectives need a surface");
            if r == 0.0 {
                Box::new(move |a, b| s.variance(a, b))
            } else {
                Box::new(move |a, b| {
                    let bb = bias.bias(a, b);
                    r * r * bb * bb + s.variance(a, b)
                })
            }
        }
    })
}

/// Optimize using a prebuilt variance surface for `(spec.kernel, γ, c)`.
pub fn optimize_with_surface(spec: &ObjectiveSpec, surface: Option<&VarianceSurface>) -> Result<MeasureOptimum> {
    spec.validate()?;
    if let Some(s) = surface {
        if s.kernel != spec.kernel || s.gamma != spec.context.gamma || s.c != spec.context.c {
            return Err(Error::Config("variance surface does not match the objective".into()));
        }
    }
    let f = objective_fn(spec, surface)?;
    let mut best = minimize_on_box(f)?;
    best.value *= spec.scale();
    Ok(best)
}

/// Minimize the objective over beta measures in the admissible box.
pub fn optimize_measure(spec: &ObjectiveSpec) -> Result<MeasureOptimum> {
    spec.validate()?;
    let surface = match spec.objective {
        Objective::AbsBias => None,
        _ => Some(VarianceSurface::build(spec.kernel, &spec.context)?),
    };
    optimize_with_surface(spec, surface.as_ref())
}

fn quantize(x: f64, step: f64) -> i64 {
    (x / step).round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct SurfaceKey {
    kernel: Kernel,
    gamma: i64,
    c_bits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct TableKey {
    gamma: i64,
    rho: i64,
    objective: Objective,
    kernel: Kernel,
    r: i64,
    c_bits: u64,
}

/// A memoized table of optimal measures keyed on quantized parameters:
/// `γ` to 0.01, `ρ` to 0.1, `r` (or `m/n` for RegMSE) to 0.01.
#[derive(Default)]
pub struct MeasureTable {
    surfaces: RwLock<HashMap<SurfaceKey, Arc<VarianceSurface>>>,
    optima: RwLock<HashMap<TableKey, MeasureOptimum>>,
}

/// A row of the table; `value` is the per-unit objective `r²B² + v`
/// (`v` for the variance objective, `|B|` for the bias objective).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub gamma: f64,
    pub rho: f64,
    pub objective: Objective,
    pub kernel: Kernel,
    pub c: f64,
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub value: f64,
}

impl MeasureTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// A process-wide table shared by the adaptive estimators.
    pub fn global() -> &'static MeasureTable {
        static TABLE: OnceLock<MeasureTable> = OnceLock::new();
        TABLE.get_or_init(MeasureTable::new)
    }

    fn key(spec: &ObjectiveSpec) -> TableKey {
        let r = match spec.objective {
            Objective::Variance | Objective::AbsBias => 0,
            Objective::RegMse => quantize(spec.m as f64 / spec.n as f64, 0.01),
            Objective::Amse => quantize(spec.r, 0.01),
        };
        TableKey {
            gamma: quantize(spec.context.gamma, 0.01),
            rho: if spec.objective == Objective::Variance { 0 } else { quantize(spec.context.rho, 0.1) },
            objective: spec.objective,
            kernel: spec.kernel,
            r,
            c_bits: spec.context.c.to_bits(),
        }
    }

    /// The spec with its parameters replaced by the quantized key values.
    pub fn quantized_spec(spec: &ObjectiveSpec) -> ObjectiveSpec {
        let key = Self::key(spec);
        let mut q = *spec;
        q.context.gamma = key.gamma as f64 * 0.01;
        if spec.objective != Objective::Variance {
            q.context.rho = key.rho as f64 * 0.1;
        }
        match spec.objective {
            Objective::RegMse => {
                // keep m so the reported value scales with it; r = 15 (m/n)_q
                q.objective = Objective::Amse;
                q.r = 15.0 * key.r as f64 * 0.01;
            }
            Objective::Amse => q.r = key.r as f64 * 0.01,
            _ => {}
        }
        q
    }

    /// The cached variance surface for `(kernel, γ quantized, c)`.
    pub fn surface(&self, kernel: Kernel, gamma: f64, c: f64) -> Result<Arc<VarianceSurface>> {
        let key = SurfaceKey {
            kernel,
            gamma: quantize(gamma, 0.01),
            c_bits: c.to_bits(),
        };
        if let Some(s) = self.surfaces.read().unwrap().get(&key) {
            return Ok(s.clone());
        }
        let ctx = TailContext {
            gamma: key.gamma as f64 * 0.01,
            rho: 0.0,
            c,
        };
        let s = Arc::new(VarianceSurface::build(kernel, &ctx)?);
        Ok(self.surfaces.write().unwrap().entry(key).or_insert(s).clone())
    }

    /// Optimal measure for the quantized version of `spec`. The returned
    /// value is scaled by `1/m` for the AMSE-type objectives.
    pub fn lookup(&self, spec: &ObjectiveSpec) -> Result<MeasureOptimum> {
        spec.validate()?;
        let key = Self::key(spec);
        let q = Self::quantized_spec(spec);
        let scale = q.scale();
        if let Some(o) = self.optima.read().unwrap().get(&key) {
            return Ok(MeasureOptimum {
                value: o.value * scale,
                ..*o
            });
        }
        let surface = match q.objective {
            Objective::AbsBias => None,
            _ => Some(self.surface(q.kernel, q.context.gamma, q.context.c)?),
        };
        let mut unit = q;
        unit.m = 1;
        unit.n = unit.n.max(1);
        let opt = optimize_with_surface(&unit, surface.as_deref())?;
        self.optima.write().unwrap().insert(key, opt);
        Ok(MeasureOptimum {
            value: opt.value * scale,
            ..opt
        })
    }

    pub fn len(&self) -> usize {
        self.optima.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All cached optima, sorted by key.
    pub fn rows(&self) -> Vec<TableRow> {
        let map = self.optima.read().unwrap();
        let mut keys: Vec<&TableKey> = map.keys().collect();
        keys.sort();
        keys.into_iter()
            .map(|k| {
                let o = map[k];
                let r = match k.objective {
                    Objective::RegMse => 15.0 * k.r as f64 * 0.01,
                    _ => k.r as f64 * 0.01,
                };
                TableRow {
                    gamma: k.gamma as f64 * 0.01,
                    rho: k.rho as f64 * 0.1,
                    objective: k.objective,
                    kernel: k.kernel,
                    c: f64::from_bits(k.c_bits),
                    r,
                    alpha: o.alpha,
                    beta: o.beta,
                    value: o.value,
                }
            })
            .collect()
    }

    /// Write `gamma,rho,objective,kernel,r,alpha,beta,value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "gamma,rho,objective,kernel,r,alpha,beta,value")?;
        for row in self.rows() {
            write_row(&mut w, &row)?;
        }
        Ok(())
    }

    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f)).map_err(|e| Error::io(path, e))
    }

    /// Load rows written by [`MeasureTable::export_csv`] for spacing
    /// fraction `c` (the file format does not carry `c`).
    pub fn import_csv(&self, path: &Path, c: f64) -> Result<usize> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows = parse_csv(&text)?;
        let mut map = self.optima.write().unwrap();
        for row in &rows {
            let r_key = match row.objective {
                Objective::RegMse => quantize(row.r / 15.0, 0.01),
                _ => quantize(row.r, 0.01),
            };
            let key = TableKey {
                gamma: quantize(row.gamma, 0.01),
                rho: quantize(row.rho, 0.1),
                objective: row.objective,
                kernel: row.kernel,
                r: r_key,
                c_bits: c.to_bits(),
            };
            map.insert(
                key,
                MeasureOptimum {
                    alpha: row.alpha,
                    beta: row.beta,
                    value: row.value,
                },
            );
        }
        Ok(rows.len())
    }
}

/// One CSV row in the table format.
pub fn write_row<W: Write>(w: &mut W, row: &TableRow) -> std::io::Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{},{},{}",
        row.gamma,
        row.rho,
        row.objective,
        row.kernel.name(),
        row.r,
        row.alpha,
        row.beta,
        row.value
    )
}

/// Parse table rows (header required; `c` is not part of the format and is
/// set to NaN).
pub fn parse_csv(text: &str) -> Result<Vec<TableRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "gamma,rho,objective,kernel,r,alpha,beta,value" => {}
        _ => return Err(Error::Parse("missing measure table header".into())),
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 8 {
                return Err(Error::Parse(format!("expected 8 fields: {line:?}")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}")));
            Ok(TableRow {
                gamma: num(f[0])?,
                rho: num(f[1])?,
                objective: f[2].parse()?,
                kernel: f[3].parse()?,
                c: f64::NAN,
                r: num(f[4])?,
                alpha: num(f[5])?,
                beta: num(f[6])?,
                value: num(f[7])?,
            })
        })
        .collect()
}
