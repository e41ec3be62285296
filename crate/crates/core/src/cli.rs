//! Command-line front end. Every subcommand is a thin wrapper over the
//! library; [`run`] returns the process exit code.

use crate::amse_bootstrap::{estimate_amse_adaptive, estimate_r, AlgorithmParams, CalibrationConfig};
use crate::core_stats::{cvar_from_raw, read_sample_file};
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::estimators::{
    estimate, estimate_adaptive, AdaptiveConfig, AdaptiveObjective, EstimatorConfig, EstimatorKind, GammaBarPolicy,
};
use crate::evt_kernels::{Kernel, TailContext};
use crate::experiments::{output_dir, run_experiment, write_outputs, EstimatorSpec, ExperimentSpec};
use crate::measure_opt::{optimize_measure, write_row, Objective, ObjectiveSpec, TableRow};
use crate::measures::SmoothingMeasure;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cvar-evt", version, about = "Smoothed CVaR-based estimators of the extreme value index")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Also write the resolved configuration to this file (`simulate`
    /// writes run_config.txt into its output directory by default).
    #[arg(long, global = true)]
    pub run_config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate γ from a sample file.
    Estimate(EstimateArgs),
    /// Optimal beta measure for an objective.
    OptimizeMeasure(OptimizeArgs),
    /// Bootstrap calibration path of r.
    EstimateR(EstimateRArgs),
    /// Monte Carlo MSE study.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliEstimator {
    CvarSmoothed,
    VarSmoothed,
    CvarPickands,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliObjective {
    Var,
    Regmse,
    Amse,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Whitespace or comma separated sample.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "cvar-smoothed")]
    pub estimator: CliEstimator,
    #[arg(long, default_value_t = 0.75)]
    pub c: f64,
    #[arg(long)]
    pub m: usize,
    /// Stage-two objective (default regmse unless --alpha/--beta are given).
    #[arg(long, value_enum)]
    pub objective: Option<CliObjective>,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub rho_bar: f64,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Supplied r for the AMSE objective; calibrated by bootstrap if absent.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub u: f64,
    #[arg(long, default_value_t = 2.0)]
    pub v: f64,
    /// Bootstrap size when r is calibrated.
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    /// Fail instead of clamping an initial estimate outside the kernel domain.
    #[arg(long)]
    pub reject_gamma_bar: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.75)]
    pub c: f64,
    /// variance, bias, regmse or amse.
    #[arg(long, default_value = "variance")]
    pub objective: String,
    #[arg(long, default_value = "cvar")]
    pub kernel: String,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    /// Also write the optimum as a measure table CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateRArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub m0: usize,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 15.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 4)]
    pub delta_m: usize,
    #[arg(long, default_value_t = 0.5)]
    pub d: f64,
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.75)]
    pub c: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub rho_bar: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV destination (default stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// e.g. `burr:c=2,k=2`, `gpd:gamma=0.25`, `student:nu=4`.
    #[arg(long)]
    pub dist: String,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Estimator names (default: cvar_pickands var_regmse cvar_regmse).
    #[arg(long, num_args = 1..)]
    pub estimators: Vec<String>,
    #[arg(long, default_value_t = 8)]
    pub k_min: usize,
    #[arg(long, default_value_t = 4)]
    pub k_step: usize,
    #[arg(long, default_value_t = 0.75)]
    pub c: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub rho_bar: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Linear instead of logarithmic MSE axis.
    #[arg(long)]
    pub linear: bool,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) | Error::Parse(m) => Failure::Usage(m),
            e => Failure::Compute(e),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parse `args` (including the program name) and run.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            let _ = writeln!(err, "error: --threads must be positive");
            return EXIT_USAGE;
        }
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_COMPUTATION;
        }
    };
    let result = pool.install(|| dispatch(&cli, pool.current_num_threads(), out, err));
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "usage error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Compute(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_COMPUTATION
        }
    }
}

/// Echo `lines` to stderr and, if given, to the run configuration file.
fn echo_config(lines: &[(String, String)], path: Option<&Path>, err: &mut (dyn Write + Send)) -> Result<()> {
    let mut text = String::new();
    for (k, v) in lines {
        text.push_str(&format!("{k}={v}\n"));
    }
    let _ = err.write_all(text.as_bytes());
    let Some(path) = path else { return Ok(()) };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

macro_rules! kv {
    ($($k:expr => $v:expr),* $(,)?) => {
        vec![$(($k.to_string(), $v.to_string())),*]
    };
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn dispatch(cli: &Cli, threads: usize, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Outcome {
    let mut common = kv!["version" => env!("CARGO_PKG_VERSION"), "threads" => threads];
    match &cli.command {
        Command::Estimate(a) => {
            let mode = estimate_mode(a)?;
            common.extend(kv![
                "command" => "estimate",
                "input" => a.input.display(),
                "estimator" => a.estimator.to_possible_value().unwrap().get_name(),
                "c" => a.c,
                "m" => a.m,
                "mode" => mode.describe(),
                "rho_bar" => a.rho_bar,
                "u" => a.u,
                "v" => a.v,
                "bootstrap" => a.bootstrap,
                "gamma_bar_policy" => if a.reject_gamma_bar { "reject" } else { "clamp" },
                "seed" => a.seed,
            ]);
            echo_config(&common, cli.run_config.as_deref(), err)?;
            cmd_estimate(a, mode, out)
        }
        Command::OptimizeMeasure(a) => {
            common.extend(kv![
                "command" => "optimize-measure",
                "gamma" => a.gamma,
                "rho" => a.rho,
                "c" => a.c,
                "objective" => a.objective,
                "kernel" => a.kernel,
                "m" => a.m,
                "n" => a.n,
                "r" => a.r,
                "csv" => opt(&a.csv.as_ref().map(|p| p.display().to_string())),
            ]);
            echo_config(&common, cli.run_config.as_deref(), err)?;
            cmd_optimize(a, out)
        }
        Command::EstimateR(a) => {
            common.extend(kv![
                "command" => "estimate-r",
                "input" => a.input.display(),
                "m0" => a.m0,
                "bootstrap" => a.bootstrap,
                "r_max" => a.r_max,
                "delta_m" => a.delta_m,
                "d" => a.d,
                "tau" => a.tau,
                "c" => a.c,
                "rho_bar" => a.rho_bar,
                "seed" => a.seed,
                "output" => opt(&a.output.as_ref().map(|p| p.display().to_string())),
            ]);
            echo_config(&common, cli.run_config.as_deref(), err)?;
            cmd_estimate_r(a, out)
        }
        Command::Simulate(a) => {
            let spec = simulate_spec(a)?;
            let dir = output_dir(&a.out, &spec.dist);
            let names: Vec<String> = spec.estimators.iter().map(|e| e.to_string()).collect();
            common.extend(kv![
                "command" => "simulate",
                "dist" => spec.dist,
                "n" => spec.n,
                "reps" => spec.reps,
                "k_grid" => format!("{}..={} step {}", a.k_min, spec.n, a.k_step),
                "estimators" => names.join(" "),
                "c" => spec.c,
                "rho_bar" => spec.rho_bar,
                "seed" => spec.seed,
                "out" => dir.display(),
                "mse_axis" => if a.linear { "linear" } else { "log" },
            ]);
            let cfg_path = cli.run_config.clone().unwrap_or_else(|| dir.join("run_config.txt"));
            echo_config(&common, Some(&cfg_path), err)?;
            let result = run_experiment(&spec)?;
            let files = write_outputs(&result, &dir, !a.linear)?;
            let _ = writeln!(out, "failures={}", result.failures);
            for f in files {
                let _ = writeln!(out, "wrote={}", f.display());
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum EstimateMode {
    Pickands,
    Fixed(f64, f64),
    Adaptive(AdaptiveObjective),
    Calibrated,
}

impl EstimateMode {
    fn describe(&self) -> String {
        match self {
            EstimateMode::Pickands => "pickands".into(),
            EstimateMode::Fixed(a, b) => format!("fixed(alpha={a},beta={b})"),
            EstimateMode::Adaptive(AdaptiveObjective::Variance) => "adaptive(var)".into(),
            EstimateMode::Adaptive(AdaptiveObjective::RegMse) => "adaptive(regmse)".into(),
            EstimateMode::Adaptive(AdaptiveObjective::Amse(r)) => format!("adaptive(amse,r={r})"),
            EstimateMode::Calibrated => "adaptive(amse,r=bootstrap)".into(),
        }
    }
}

fn estimate_mode(a: &EstimateArgs) -> std::result::Result<EstimateMode, Failure> {
    let explicit = match (a.alpha, a.beta) {
        (Some(al), Some(be)) => Some((al, be)),
        (None, None) => None,
        _ => return Err(usage("--alpha and --beta go together")),
    };
    if a.estimator == CliEstimator::CvarPickands {
        if explicit.is_some() || a.objective.is_some() || a.r.is_some() {
            return Err(usage("cvar-pickands takes --u/--v, not a measure or objective"));
        }
        return Ok(EstimateMode::Pickands);
    }
    if a.r.is_some() && a.objective != Some(CliObjective::Amse) {
        return Err(usage("--r only applies to --objective amse"));
    }
    match (explicit, a.objective) {
        (Some(_), Some(_)) => Err(usage("give either an explicit measure (--alpha/--beta) or --objective, not both")),
        (Some((al, be)), None) => Ok(EstimateMode::Fixed(al, be)),
        (None, None) | (None, Some(CliObjective::Regmse)) => Ok(EstimateMode::Adaptive(AdaptiveObjective::RegMse)),
        (None, Some(CliObjective::Var)) => Ok(EstimateMode::Adaptive(AdaptiveObjective::Variance)),
        (None, Some(CliObjective::Amse)) => match a.r {
            Some(r) => Ok(EstimateMode::Adaptive(AdaptiveObjective::Amse(r))),
            None if a.estimator == CliEstimator::CvarSmoothed => Ok(EstimateMode::Calibrated),
            None => Err(usage("bootstrap calibration of r is CVaR only; pass --r for var-smoothed")),
        },
    }
}

fn kind_of(e: CliEstimator) -> EstimatorKind {
    match e {
        CliEstimator::CvarSmoothed => EstimatorKind::CvarSmoothed,
        CliEstimator::VarSmoothed => EstimatorKind::VarSmoothed,
        CliEstimator::CvarPickands => EstimatorKind::CvarPickandsYun,
    }
}

fn cmd_estimate(a: &EstimateArgs, mode: EstimateMode, out: &mut (dyn Write + Send)) -> Outcome {
    let sample = read_sample_file(&a.input)?;
    let kind = kind_of(a.estimator);
    let policy = if a.reject_gamma_bar { GammaBarPolicy::Reject } else { GammaBarPolicy::Clamp };
    let mut lines = Vec::new();
    match mode {
        EstimateMode::Pickands | EstimateMode::Fixed(..) => {
            let config = match mode {
                EstimateMode::Pickands => EstimatorConfig::pickands_yun(a.u, a.v, a.m),
                EstimateMode::Fixed(al, be) => {
                    let measure = SmoothingMeasure::beta(al, be).map_err(Failure::Compute)?;
                    EstimatorConfig { kind, ..EstimatorConfig::cvar_smoothed(a.c, a.m, measure) }
                }
                _ => unreachable!(),
            };
            config.validate(sample.len())?;
            let (ordered, cvar) = cvar_from_raw(&sample)?;
            let e = estimate(&config, &ordered, &cvar).map_err(Failure::Compute)?;
            lines.extend(kv!["gamma" => e.gamma]);
        }
        EstimateMode::Adaptive(objective) => {
            let config = AdaptiveConfig {
                rho_bar: a.rho_bar,
                policy,
                ..AdaptiveConfig::new(kind, a.c, a.m, objective)
            };
            let e = estimate_adaptive(&sample, &config).map_err(Failure::Compute)?;
            lines.extend(kv![
                "gamma" => e.gamma,
                "gamma_bar" => e.gamma_bar,
                "gamma_bar_used" => e.gamma_bar_used,
                "alpha" => e.alpha,
                "beta" => e.beta,
            ]);
        }
        EstimateMode::Calibrated => {
            let params = AlgorithmParams {
                b: a.bootstrap,
                ..AlgorithmParams::default()
            };
            let cfg = CalibrationConfig {
                policy,
                ..CalibrationConfig::new(a.c, a.rho_bar, params, a.seed)
            };
            let e = estimate_amse_adaptive(&sample, a.m, &cfg).map_err(Failure::Compute)?;
            lines.extend(kv![
                "gamma" => e.gamma,
                "gamma_bar" => e.gamma_bar,
                "r_hat" => e.r_hat,
                "alpha" => e.alpha,
                "beta" => e.beta,
            ]);
        }
    }
    for (k, v) in lines {
        let _ = writeln!(out, "{k}={v}");
    }
    Ok(())
}

fn cmd_optimize(a: &OptimizeArgs, out: &mut (dyn Write + Send)) -> Outcome {
    let objective: Objective = a.objective.parse()?;
    let kernel: Kernel = a.kernel.parse()?;
    let ctx = TailContext::new(a.gamma, a.rho, a.c).map_err(Failure::Compute)?;
    let spec = match objective {
        Objective::Variance => ObjectiveSpec::variance(ctx, kernel),
        Objective::AbsBias => ObjectiveSpec::abs_bias(ctx, kernel),
        Objective::RegMse => ObjectiveSpec::regmse(ctx, kernel, a.m, a.n),
        Objective::Amse => ObjectiveSpec::amse(ctx, kernel, a.m, a.r),
    };
    let o = optimize_measure(&spec).map_err(Failure::Compute)?;
    let _ = writeln!(out, "alpha={}\nbeta={}\nvalue={}", o.alpha, o.beta, o.value);
    if let Some(path) = &a.csv {
        let row = TableRow {
            gamma: a.gamma,
            rho: a.rho,
            objective,
            kernel,
            c: a.c,
            r: spec.bias_weight(),
            alpha: o.alpha,
            beta: o.beta,
            value: o.value,
        };
        let mut buf = b"gamma,rho,objective,kernel,r,alpha,beta,value\n".to_vec();
        write_row(&mut buf, &row).expect("in-memory write");
        std::fs::write(path, buf).map_err(|e| Failure::Compute(Error::io(path, e)))?;
    }
    Ok(())
}

fn cmd_estimate_r(a: &EstimateRArgs, out: &mut (dyn Write + Send)) -> Outcome {
    let params = AlgorithmParams {
        b: a.bootstrap,
        r_max: a.r_max,
        delta_m: a.delta_m,
        d: a.d,
        tau: a.tau,
        ..AlgorithmParams::default()
    };
    params.validate()?;
    let sample = read_sample_file(&a.input)?;
    let cfg = CalibrationConfig::new(a.c, a.rho_bar, params, a.seed);
    let path = estimate_r(&sample, a.m0, &cfg).map_err(Failure::Compute)?;
    match &a.output {
        Some(p) => path.export_csv(p).map_err(Failure::Compute)?,
        None => {
            let _ = path.write_csv(&mut *out);
        }
    }
    Ok(())
}

fn simulate_spec(a: &SimulateArgs) -> std::result::Result<ExperimentSpec, Failure> {
    let dist: DistributionSpec = a.dist.parse()?;
    if a.k_step == 0 || a.k_min == 0 {
        return Err(usage("--k-min and --k-step must be positive"));
    }
    let estimators = if a.estimators.is_empty() {
        EstimatorSpec::defaults()
    } else {
        a.estimators.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?
    };
    let spec = ExperimentSpec {
        n: a.n,
        reps: a.reps,
        k_grid: (a.k_min..=a.n).step_by(a.k_step).collect(),
        estimators,
        seed: a.seed,
        c: a.c,
        rho_bar: a.rho_bar,
        ..ExperimentSpec::new(dist)
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let mut full = vec!["cvar-evt"];
        full.extend_from_slice(args);
        let code = run(full, &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn missing_m_is_usage_error() {
        let (code, _, err) = call(&["estimate", "--input", "x.txt"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--m"));
    }

    #[test]
    fn conflicting_measure_and_objective() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("s.txt");
        std::fs::write(&input, "1 2 3 4 5 6 7 8 9 10").unwrap();
        let cfg = dir.path().join("cfg.txt");
        let (code, _, err) = call(&[
            "--run-config", cfg.to_str().unwrap(), "estimate", "--input", input.to_str().unwrap(), "--m", "4",
            "--alpha", "2", "--beta", "2", "--objective", "regmse",
        ]);
        assert_eq!(code, EXIT_USAGE, "{err}");
        let (code, _, _) = call(&[
            "--run-config", cfg.to_str().unwrap(), "estimate", "--input", input.to_str().unwrap(), "--m", "4",
            "--alpha", "2",
        ]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn degenerate_bias_objective_is_computation_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("cfg.txt");
        let (code, _, err) = call(&[
            "--run-config", cfg.to_str().unwrap(), "optimize-measure", "--gamma", "0", "--rho", "0",
            "--objective", "bias",
        ]);
        assert_eq!(code, EXIT_COMPUTATION);
        assert!(err.to_lowercase().contains("degenera"), "{err}");
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("simulate"));
    }
}
