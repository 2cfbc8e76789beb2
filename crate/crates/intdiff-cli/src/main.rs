//! Command-line driver for the integrated-diffusion estimation toolkit.
//!
//! Exit codes: 0 success, 2 invalid arguments or configuration, 3 numeric
//! failure (divergence, undefined estimate), 4 file input/output failure.

// Validation tests are written `!(x > 0.0)` rather than `x <= 0.0` so that
// NaN arguments fail them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Args, Parser, Subcommand};
use intdiff::analysis::{
    check_beta_conditions, eval_grid, moment_check_diffusion, moment_check_drift,
    rate_diffusion_terms, rate_drift_terms, rate_reference, AnalysisError, EstimatorTag,
    MomentCheckReport, RateParams,
};
use intdiff::estimators::{
    compute_breve, nw_drift_direct, nw_drift_integrated, nw_sigma2_direct, nw_sigma2_integrated,
    EstimateCurve, EstimatorError,
};
use intdiff::kernels::{KernelKind, KernelSpec};
use intdiff::sde::{
    euler_simulate_opts, subsample, ObservationSet, Quadrature, SdeModel, SimError, SimOptions,
};
use intdiff_cli::config::{ExperimentConfig, ModelKind};
use intdiff_cli::output::{
    read_observation_csv, write_curve_csv, write_fine_csv, write_observation_csv,
};
use intdiff_cli::runner::{emit_plots, run_experiment};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "intdiff",
    version,
    about = "Simulation and nonparametric estimation for integrated scalar diffusions"
)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Model kind: `cir` or `ou`.
    #[arg(long, default_value = "cir")]
    model: String,
    /// Mean-reversion speed.
    #[arg(long, default_value_t = 0.85837, allow_negative_numbers = true)]
    kappa: f64,
    /// Long-run mean.
    #[arg(long, default_value_t = 0.085711, allow_negative_numbers = true)]
    theta: f64,
    /// Diffusion scale.
    #[arg(long, default_value_t = 0.1566, allow_negative_numbers = true)]
    sigma: f64,
}

impl ModelArgs {
    fn build(&self) -> Result<SdeModel, CliError> {
        let kind = ModelKind::from_name(&self.model).ok_or_else(|| {
            config_err(format!(
                "unknown model `{}` (expected cir or ou)",
                self.model
            ))
        })?;
        match kind {
            ModelKind::Cir => SdeModel::cir(self.kappa, self.theta, self.sigma),
            ModelKind::Ou => SdeModel::ou(self.kappa, self.theta, self.sigma),
        }
        .map_err(|e| config_err(e.to_string()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path and write it to CSV (fine grid, or observations
    /// at spacing --delta).
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// Initial state (default: the long-run mean).
        #[arg(long, allow_negative_numbers = true)]
        x0: Option<f64>,
        /// Recorded time horizon.
        #[arg(long)]
        t_end: f64,
        /// Fine simulation step.
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Time simulated and discarded before recording starts.
        #[arg(long, default_value_t = 0.0)]
        burn_in: f64,
        /// Integration rule: `left_riemann` or `trapezoid`.
        #[arg(long, default_value = "left_riemann")]
        quadrature: String,
        /// Observation spacing; when given, writes `t,y,x` observations
        /// instead of the fine path.
        #[arg(long)]
        delta: Option<f64>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one estimator to an observation CSV (`t,y[,x]`) and write the
    /// curve to CSV.
    Estimate {
        /// Input observation CSV; spacing is inferred from the `t` column.
        #[arg(long)]
        input: PathBuf,
        /// Output CSV path (`x,estimate,denominator`).
        #[arg(long)]
        out: PathBuf,
        /// One of: sigma2_direct, sigma2_integrated, drift_direct,
        /// drift_integrated.
        #[arg(long)]
        estimator: String,
        #[arg(long)]
        bandwidth: f64,
        /// Kernel: `epanechnikov`, `uniform`, or `triangular`.
        #[arg(long, default_value = "epanechnikov")]
        kernel: String,
        /// Evaluation interval lower end.
        #[arg(long, allow_negative_numbers = true)]
        eval_lo: f64,
        /// Evaluation interval upper end.
        #[arg(long, allow_negative_numbers = true)]
        eval_hi: f64,
        #[arg(long, default_value_t = 50)]
        eval_points: usize,
    },
    /// Run a Monte-Carlo experiment described by a JSON config file and
    /// write maae.csv, per-cell curves CSVs, and rates.csv.
    Experiment {
        /// JSON configuration path.
        #[arg(long)]
        config: PathBuf,
    },
    /// Monte-Carlo check of the short-horizon moment identities behind the
    /// estimators (diagnostic; always exits 0 when it runs).
    MomentCheck {
        #[command(flatten)]
        model: ModelArgs,
        /// Conditioning point (default: the long-run mean).
        #[arg(long, allow_negative_numbers = true)]
        x0: Option<f64>,
        /// Observation spacing.
        #[arg(long)]
        delta: f64,
        /// Simulation substeps per spacing.
        #[arg(long, default_value_t = 10)]
        fine_factor: usize,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Which identity to check: `both`, `diffusion`, or `drift`.
        #[arg(long, default_value = "both")]
        statistic: String,
    },
    /// Print the theoretical uniform rates and mixing-decay conditions for
    /// one (delta, h, n) design point.
    Rates {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        bandwidth: f64,
        #[arg(long)]
        n: u64,
        /// Time horizon for the drift rate (default: n * delta).
        #[arg(long)]
        t_horizon: Option<f64>,
        /// Polynomial moment index q > 0.
        #[arg(long, default_value_t = 38.0)]
        q: f64,
        /// Time-growth exponent for the squared-diffusion bound.
        #[arg(long, default_value_t = 0.4)]
        theta_exp: f64,
        /// Bandwidth-decay exponent for the squared-diffusion bound.
        #[arg(long, default_value_t = 0.4)]
        kappa_exp: f64,
        /// Time-growth exponent for the drift bound.
        #[arg(long, default_value_t = 0.9)]
        theta_bar: f64,
        /// Bandwidth-decay exponent for the drift bound.
        #[arg(long, default_value_t = 0.1)]
        kappa_bar: f64,
        /// Mixing decay exponent of the state process.
        #[arg(long, default_value_t = 17.0)]
        beta_mix: f64,
    },
    /// Render SVG figures from the CSV artifacts of a previous experiment
    /// run.
    Plot {
        /// Directory holding maae.csv, curves_*.csv, and rates.csv.
        #[arg(long)]
        output_dir: PathBuf,
    },
}

struct CliError {
    code: i32,
    message: String,
}

fn config_err(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

fn sim_exit_code(e: &SimError) -> i32 {
    match e {
        SimError::Diverged { .. } => 3,
        _ => 2,
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError {
            code: sim_exit_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        let code = match &e {
            AnalysisError::Sim(s) => sim_exit_code(s),
            AnalysisError::NanEstimate { .. } | AnalysisError::DegenerateFit => 3,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        config_err(e.to_string())
    }
}

impl From<intdiff_cli::output::OutputError> for CliError {
    fn from(e: intdiff_cli::output::OutputError) -> Self {
        CliError {
            code: 4,
            message: e.to_string(),
        }
    }
}

impl From<intdiff_cli::runner::RunError> for CliError {
    fn from(e: intdiff_cli::runner::RunError) -> Self {
        CliError {
            code: e.exit_code(),
            message: e.to_string(),
        }
    }
}

fn parse_quadrature(name: &str) -> Result<Quadrature, CliError> {
    Quadrature::from_name(name).ok_or_else(|| {
        config_err(format!(
            "unknown quadrature `{name}` (expected left_riemann or trapezoid)"
        ))
    })
}

fn parse_kernel(name: &str) -> Result<KernelSpec, CliError> {
    let kind = KernelKind::from_name(name).map_err(|e| config_err(e.to_string()))?;
    Ok(KernelSpec::new(kind))
}

/// Checks the time column is an arithmetic grid and returns its spacing.
fn infer_delta(t: &[f64]) -> Result<f64, CliError> {
    if t.len() < 2 {
        return Err(config_err(
            "need at least two observations to infer the spacing",
        ));
    }
    let delta = t[1] - t[0];
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(config_err(format!(
            "time column must be strictly increasing, first spacing is {delta}"
        )));
    }
    for (i, w) in t.windows(2).enumerate() {
        let d = w[1] - w[0];
        if (d - delta).abs() > 1e-9 * delta {
            return Err(config_err(format!(
                "time column is not evenly spaced: spacing {d} at row {} differs from {delta}",
                i + 1
            )));
        }
    }
    Ok(delta)
}

fn warn_on_empty_windows(curve: &EstimateCurve) {
    let empty = curve.values.iter().filter(|v| v.is_nan()).count();
    if empty > 0 {
        eprintln!(
            "warning: {empty} of {} evaluation points had a near-empty kernel window (NaN estimate)",
            curve.values.len()
        );
    }
}

fn print_moment_line(label: &str, report: &MomentCheckReport) {
    let verdict = if report.passes() { "PASS" } else { "FAIL" };
    println!(
        "{label}: estimate {:.6e}  stderr {:.3e}  target {:.6e}  tolerance {:.3e}  -> {verdict}",
        report.mc_estimate,
        report.mc_stderr,
        report.target,
        report.tolerance()
    );
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate {
            model,
            x0,
            t_end,
            dt,
            seed,
            burn_in,
            quadrature,
            delta,
            out,
        } => {
            let sde = model.build()?;
            let opts = SimOptions {
                burn_in_time: burn_in,
                quadrature: parse_quadrature(&quadrature)?,
            };
            let x0 = x0.unwrap_or(model.theta);
            let path = euler_simulate_opts(&sde, x0, t_end, dt, seed, &opts)?;
            match delta {
                Some(delta) => {
                    let obs = subsample(&path, delta, true)?;
                    write_observation_csv(&out, delta, &obs.y_obs, obs.x_obs.as_deref())?;
                    println!(
                        "wrote {} observations at spacing {delta} to {}",
                        obs.n + 1,
                        out.display()
                    );
                }
                None => {
                    write_fine_csv(&out, path.dt, &path.x, &path.y)?;
                    println!(
                        "wrote fine path ({} steps of {}) to {}",
                        path.steps(),
                        path.dt,
                        out.display()
                    );
                }
            }
            Ok(())
        }
        Command::Estimate {
            input,
            out,
            estimator,
            bandwidth,
            kernel,
            eval_lo,
            eval_hi,
            eval_points,
        } => {
            let tag = EstimatorTag::from_name(&estimator).ok_or_else(|| {
                config_err(format!(
                    "unknown estimator `{estimator}` (expected sigma2_direct, sigma2_integrated, drift_direct, or drift_integrated)"
                ))
            })?;
            let kernel = parse_kernel(&kernel)?;
            let data = read_observation_csv(&input)?;
            let delta = infer_delta(&data.t)?;
            let grid = eval_grid(eval_lo, eval_hi, eval_points)?;
            let curve = if tag.is_direct() {
                let x = data.x.as_ref().ok_or_else(|| {
                    config_err("input has no `x` column; direct estimators need state observations")
                })?;
                if tag.is_sigma2() {
                    nw_sigma2_direct(x, delta, &kernel, bandwidth, &grid)?
                } else {
                    nw_drift_direct(x, delta, &kernel, bandwidth, &grid)?
                }
            } else {
                let n = data.y.len() - 1;
                let obs = ObservationSet {
                    delta,
                    y_obs: data.y.clone(),
                    x_obs: None,
                    n,
                    t_horizon: n as f64 * delta,
                };
                let breve = compute_breve(&obs)?;
                if tag.is_sigma2() {
                    nw_sigma2_integrated(&breve, &kernel, bandwidth, &grid)?
                } else {
                    nw_drift_integrated(&breve, &kernel, bandwidth, &grid)?
                }
            };
            warn_on_empty_windows(&curve);
            write_curve_csv(&out, &curve.eval_points, &curve.values, &curve.denominators)?;
            println!(
                "wrote {} curve ({} anchor points, h = {bandwidth}) to {}",
                tag.name(),
                curve.n_used,
                out.display()
            );
            Ok(())
        }
        Command::Experiment { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| CliError {
                code: 4,
                message: format!("{}: {e}", config.display()),
            })?;
            let cfg = ExperimentConfig::from_json(&text).map_err(|e| config_err(e.to_string()))?;
            let summary = run_experiment(&cfg)?;
            println!(
                "ran {} cells x {} replications; wrote maae.csv, {} curve files, and rates.csv to {}",
                summary.cells.len(),
                cfg.replications,
                summary.cells.len(),
                summary.output_dir.display()
            );
            Ok(())
        }
        Command::MomentCheck {
            model,
            x0,
            delta,
            fine_factor,
            reps,
            seed,
            statistic,
        } => {
            let sde = model.build()?;
            let x0 = x0.unwrap_or(model.theta);
            let (do_diffusion, do_drift) = match statistic.as_str() {
                "both" => (true, true),
                "diffusion" => (true, false),
                "drift" => (false, true),
                other => {
                    return Err(config_err(format!(
                        "unknown statistic `{other}` (expected both, diffusion, or drift)"
                    )))
                }
            };
            if do_diffusion {
                let report = moment_check_diffusion(&sde, x0, delta, fine_factor, reps, seed)?;
                print_moment_line("squared-increment identity", &report);
            }
            if do_drift {
                let report = moment_check_drift(&sde, x0, delta, fine_factor, reps, seed)?;
                print_moment_line("increment identity", &report);
            }
            Ok(())
        }
        Command::Rates {
            delta,
            bandwidth,
            n,
            t_horizon,
            q,
            theta_exp,
            kappa_exp,
            theta_bar,
            kappa_bar,
            beta_mix,
        } => {
            let params = RateParams::new(q, theta_exp, kappa_exp, theta_bar, kappa_bar, beta_mix)?;
            println!("rate_reference(n = {n}) = {:.6e}", rate_reference(n)?);
            let [a, b, c] = rate_diffusion_terms(delta, bandwidth, n, &params)?;
            println!(
                "squared-diffusion rate: discretization {a:.6e} + sampling {b:.6e} + smoothing {c:.6e} = {:.6e}",
                a + b + c
            );
            let t = t_horizon.unwrap_or(n as f64 * delta);
            match rate_drift_terms(delta, bandwidth, t, &params) {
                Ok([a, b, c]) => println!(
                    "drift rate (T = {t}): discretization {a:.6e} + sampling {b:.6e} + smoothing {c:.6e} = {:.6e}",
                    a + b + c
                ),
                Err(AnalysisError::HorizonTooShort(t)) => {
                    println!("drift rate: not defined for time horizon T = {t} (needs T > 1)")
                }
                Err(e) => return Err(e.into()),
            }
            match check_beta_conditions(&params) {
                Ok(check) => {
                    println!(
                        "mixing-decay condition (squared diffusion): beta_mix = {beta_mix} vs bound {:.6} -> {}",
                        check.diffusion_bound,
                        if check.diffusion_ok { "satisfied" } else { "NOT satisfied" }
                    );
                    println!(
                        "mixing-decay condition (drift): beta_mix = {beta_mix} vs bound {:.6} -> {}",
                        check.drift_bound,
                        if check.drift_ok { "satisfied" } else { "NOT satisfied" }
                    );
                }
                Err(AnalysisError::NotApplicable(msg)) => {
                    println!("mixing-decay conditions: not applicable ({msg})")
                }
                Err(e) => return Err(e.into()),
            }
            Ok(())
        }
        Command::Plot { output_dir } => {
            let written = emit_plots(&output_dir)?;
            for path in &written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: could not configure the thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code.clamp(1, 255) as u8)
        }
    }
}
