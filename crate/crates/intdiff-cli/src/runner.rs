//! Monte-Carlo experiment orchestration.
//!
//! Cells — (spacing, bandwidth, sample size) triples — run sequentially in
//! configuration order; replications within a cell run in parallel. Every
//! replication derives its seed from the master seed, the cell coordinates,
//! and the replication counter, so results do not depend on thread count,
//! cell order, or which subset of cells a run contains.

use crate::config::ExperimentConfig;
use crate::output::{
    read_curves_csv, read_rates_csv, write_curves_csv, write_maae_csv, write_rates_csv, MaaeRow,
    OutputError, RatesRow,
};
use crate::svg::{line_plot, Series};
use intdiff::analysis::{
    eval_grid, maae, pointwise_mean, rate_diffusion, rate_drift, rate_fit, rate_reference,
    AnalysisError, EstimatorTag, MaaeReport,
};
use intdiff::estimators::{
    compute_breve, nw_drift_direct, nw_drift_integrated, nw_sigma2_direct, nw_sigma2_integrated,
    EstimateCurve,
};
use intdiff::kernels::KernelSpec;
use intdiff::sde::{euler_simulate_opts, subsample, SdeModel, SimOptions};
use intdiff::seeding::{mix_seed, replication_seed};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(
        "cell (delta={delta}, h={h}, n={n}), replication {replication} (seed {seed}): {message}"
    )]
    Replication {
        delta: f64,
        h: f64,
        n: u64,
        replication: usize,
        seed: u64,
        message: String,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl RunError {
    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Replication { .. } | RunError::Analysis(_) => 3,
            RunError::Output(_) => 4,
        }
    }
}

/// Which coefficient family the curve artifacts cover: the squared-diffusion
/// estimators when any of them is selected, otherwise the drift estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveFamily {
    Sigma2,
    Drift,
}

pub fn curve_family(tags: &[EstimatorTag]) -> CurveFamily {
    if tags.iter().any(|t| t.is_sigma2()) {
        CurveFamily::Sigma2
    } else {
        CurveFamily::Drift
    }
}

impl CurveFamily {
    pub fn direct_member(self) -> EstimatorTag {
        match self {
            CurveFamily::Sigma2 => EstimatorTag::Sigma2Direct,
            CurveFamily::Drift => EstimatorTag::DriftDirect,
        }
    }

    pub fn integrated_member(self) -> EstimatorTag {
        match self {
            CurveFamily::Sigma2 => EstimatorTag::Sigma2Integrated,
            CurveFamily::Drift => EstimatorTag::DriftIntegrated,
        }
    }
}

/// All results of one experiment cell.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub delta: f64,
    pub h: f64,
    pub n: u64,
    pub grid: Vec<f64>,
    /// True coefficient curve of the family shown in the curve artifacts.
    pub truth: Vec<f64>,
    pub reports: Vec<(EstimatorTag, MaaeReport)>,
    pub mean_direct: Option<Vec<f64>>,
    pub mean_integrated: Option<Vec<f64>>,
    pub rate_reference: f64,
    /// Theoretical rate per estimator; NaN when the drift rate is not
    /// meaningful (time horizon at most 1).
    pub rate_thm: Vec<(EstimatorTag, f64)>,
}

impl CellSummary {
    pub fn cell_id(&self) -> String {
        format!("d{}_h{}_n{}", self.delta, self.h, self.n)
    }

    pub fn maae_of(&self, tag: EstimatorTag) -> Option<f64> {
        self.reports
            .iter()
            .find(|(t, _)| *t == tag)
            .map(|(_, r)| r.maae)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub cells: Vec<CellSummary>,
    pub family: CurveFamily,
    pub output_dir: PathBuf,
}

#[allow(clippy::too_many_arguments)]
fn replication_curves(
    config: &ExperimentConfig,
    model: &SdeModel,
    kernel: &KernelSpec,
    grid: &[f64],
    delta: f64,
    h: f64,
    n: u64,
    seed: u64,
) -> Result<Vec<(EstimatorTag, EstimateCurve)>, String> {
    let with_x = config.estimators.iter().any(|t| t.is_direct());
    let needs_breve = config.estimators.iter().any(|t| !t.is_direct());
    let opts = SimOptions {
        burn_in_time: config.burn_in_time,
        quadrature: config.quadrature,
    };
    let dt = delta / config.fine_factor as f64;
    let t_end = n as f64 * delta;
    let path = euler_simulate_opts(model, config.x0(), t_end, dt, seed, &opts)
        .map_err(|e| e.to_string())?;
    let obs = subsample(&path, delta, with_x).map_err(|e| e.to_string())?;
    let breve = if needs_breve {
        Some(compute_breve(&obs).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(config.estimators.len());
    for &tag in &config.estimators {
        let curve = match tag {
            EstimatorTag::Sigma2Direct => {
                nw_sigma2_direct(obs.x_obs.as_ref().unwrap(), delta, kernel, h, grid)
            }
            EstimatorTag::DriftDirect => {
                nw_drift_direct(obs.x_obs.as_ref().unwrap(), delta, kernel, h, grid)
            }
            EstimatorTag::Sigma2Integrated => {
                nw_sigma2_integrated(breve.as_ref().unwrap(), kernel, h, grid)
            }
            EstimatorTag::DriftIntegrated => {
                nw_drift_integrated(breve.as_ref().unwrap(), kernel, h, grid)
            }
        }
        .map_err(|e| e.to_string())?;
        out.push((tag, curve));
    }
    Ok(out)
}

/// Runs one (delta, h, n) cell: L replications in parallel, then sequential
/// order-stable reductions.
pub fn run_cell(
    config: &ExperimentConfig,
    model: &SdeModel,
    delta: f64,
    h: f64,
    n: u64,
) -> Result<CellSummary, RunError> {
    let (lo, hi) = config.eval_range;
    let grid = eval_grid(lo, hi, config.eval_points)?;
    let kernel = KernelSpec::new(config.kernel);
    let cell_seed = mix_seed(config.master_seed, &[delta.to_bits(), h.to_bits(), n]);

    let per_rep: Vec<Vec<(EstimatorTag, EstimateCurve)>> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let seed = replication_seed(cell_seed, r as u64);
            replication_curves(config, model, &kernel, &grid, delta, h, n, seed).map_err(
                |message| RunError::Replication {
                    delta,
                    h,
                    n,
                    replication: r,
                    seed,
                    message,
                },
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    let family = curve_family(&config.estimators);
    let mut reports = Vec::with_capacity(config.estimators.len());
    let mut rate_thm = Vec::with_capacity(config.estimators.len());
    let mut mean_direct = None;
    let mut mean_integrated = None;
    for (idx, &tag) in config.estimators.iter().enumerate() {
        let curves: Vec<EstimateCurve> = per_rep.iter().map(|v| v[idx].1.clone()).collect();
        let truth = |x: f64| {
            if tag.is_sigma2() {
                model.sigma2_true(x)
            } else {
                model.drift_true(x)
            }
        };
        let report = maae(&curves, truth).map_err(|e| match e {
            AnalysisError::NanEstimate { replication, .. } => RunError::Replication {
                delta,
                h,
                n,
                replication,
                seed: replication_seed(cell_seed, replication as u64),
                message: e.to_string(),
            },
            other => RunError::Analysis(other),
        })?;
        reports.push((tag, report));

        let rate = if tag.is_sigma2() {
            rate_diffusion(delta, h, n, &config.rate_params)?
        } else {
            match rate_drift(delta, h, n as f64 * delta, &config.rate_params) {
                Ok(v) => v,
                Err(AnalysisError::HorizonTooShort(_)) => f64::NAN,
                Err(e) => return Err(e.into()),
            }
        };
        rate_thm.push((tag, rate));

        if tag == family.direct_member() {
            mean_direct = Some(pointwise_mean(&curves)?);
        } else if tag == family.integrated_member() {
            mean_integrated = Some(pointwise_mean(&curves)?);
        }
    }

    let truth = grid
        .iter()
        .map(|&x| match family {
            CurveFamily::Sigma2 => model.sigma2_true(x),
            CurveFamily::Drift => model.drift_true(x),
        })
        .collect();

    Ok(CellSummary {
        delta,
        h,
        n,
        grid,
        truth,
        reports,
        mean_direct,
        mean_integrated,
        rate_reference: rate_reference(n)?,
        rate_thm,
    })
}

fn rates_rows(summary: &ExperimentSummary, config: &ExperimentConfig) -> Vec<RatesRow> {
    let family = summary.family;
    let mut rows = Vec::new();
    for &delta in &config.deltas {
        for &h in &config.bandwidths {
            let block: Vec<&CellSummary> = summary
                .cells
                .iter()
                .filter(|c| c.delta.to_bits() == delta.to_bits() && c.h.to_bits() == h.to_bits())
                .collect();
            let maae_direct: Vec<f64> = block
                .iter()
                .map(|c| c.maae_of(family.direct_member()).unwrap_or(f64::NAN))
                .collect();
            let maae_integrated: Vec<f64> = block
                .iter()
                .map(|c| c.maae_of(family.integrated_member()).unwrap_or(f64::NAN))
                .collect();
            // Fit the direct member when available, else the integrated one.
            let fit_values = if maae_direct.iter().all(|v| v.is_finite()) {
                Some(&maae_direct)
            } else if maae_integrated.iter().all(|v| v.is_finite()) {
                Some(&maae_integrated)
            } else {
                None
            };
            let rates: Vec<f64> = block.iter().map(|c| c.rate_reference).collect();
            let fit = fit_values.and_then(|vals| rate_fit(vals, &rates).ok());
            let (slope, intercept, correlation) = match fit {
                Some(f) => (f.slope, f.intercept, f.correlation),
                None => (f64::NAN, f64::NAN, f64::NAN),
            };
            for (i, cell) in block.iter().enumerate() {
                rows.push(RatesRow {
                    delta,
                    h,
                    n: cell.n,
                    rate_reference: cell.rate_reference,
                    maae_direct: maae_direct[i],
                    maae_integrated: maae_integrated[i],
                    slope,
                    intercept,
                    correlation,
                });
            }
        }
    }
    rows
}

/// Runs the whole experiment grid and writes `maae.csv`, one
/// `curves_<cell>.csv` per cell, and `rates.csv` into the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary, RunError> {
    let model = config
        .build_model()
        .map_err(|e| RunError::Config(e.to_string()))?;
    let out_dir = &config.output_dir;
    std::fs::create_dir_all(out_dir).map_err(|e| {
        RunError::Output(OutputError::Io {
            path: out_dir.clone(),
            source: e,
        })
    })?;

    let mut cells = Vec::new();
    for &delta in &config.deltas {
        for &h in &config.bandwidths {
            for &n in &config.ns {
                let cell = run_cell(config, &model, delta, h, n)?;
                let path = out_dir.join(format!("curves_{}.csv", cell.cell_id()));
                write_curves_csv(
                    &path,
                    &cell.grid,
                    &cell.truth,
                    cell.mean_direct.as_deref(),
                    cell.mean_integrated.as_deref(),
                )?;
                cells.push(cell);
            }
        }
    }

    let summary = ExperimentSummary {
        family: curve_family(&config.estimators),
        cells,
        output_dir: out_dir.clone(),
    };

    let mut maae_rows = Vec::new();
    for cell in &summary.cells {
        for (tag, report) in &cell.reports {
            let rate_thm = cell
                .rate_thm
                .iter()
                .find(|(t, _)| t == tag)
                .map(|(_, v)| *v)
                .unwrap_or(f64::NAN);
            maae_rows.push(MaaeRow {
                model: config.model_kind.name().to_string(),
                estimator: *tag,
                delta: cell.delta,
                h: cell.h,
                n: cell.n,
                replications: config.replications,
                maae: report.maae,
                rate_thm,
                rate_reference: cell.rate_reference,
            });
        }
    }
    write_maae_csv(&out_dir.join("maae.csv"), &maae_rows)?;
    write_rates_csv(&out_dir.join("rates.csv"), &rates_rows(&summary, config))?;
    Ok(summary)
}

/// Renders SVG figures from the CSV artifacts in `output_dir`: one curve
/// overlay per cell and one error-versus-rate figure per (delta, h) block.
/// Returns the written file paths.
pub fn emit_plots(output_dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let rates_path = output_dir.join("rates.csv");
    let rows = read_rates_csv(&rates_path)?;
    if rows.is_empty() {
        return Err(RunError::Output(OutputError::Format {
            path: rates_path,
            message: "no data rows to plot".to_string(),
        }));
    }
    let mut written = Vec::new();

    // One curve figure per cell.
    for row in &rows {
        let cell_id = format!("d{}_h{}_n{}", row.delta, row.h, row.n);
        let curves_path = output_dir.join(format!("curves_{cell_id}.csv"));
        let data = read_curves_csv(&curves_path)?;
        let series = [
            Series {
                label: "truth".to_string(),
                xs: &data.x,
                ys: &data.truth,
                color: "#000000",
                dashed: false,
                markers: false,
            },
            Series {
                label: "mean direct estimate".to_string(),
                xs: &data.x,
                ys: &data.mean_direct,
                color: "#1f77b4",
                dashed: true,
                markers: false,
            },
            Series {
                label: "mean integrated-data estimate".to_string(),
                xs: &data.x,
                ys: &data.mean_integrated,
                color: "#d62728",
                dashed: false,
                markers: false,
            },
        ];
        let svg = line_plot(
            &format!("Mean estimated coefficient ({cell_id})"),
            "x",
            "coefficient",
            &series,
        );
        let out = output_dir.join(format!("curves_{cell_id}.svg"));
        std::fs::write(&out, svg).map_err(|e| {
            RunError::Output(OutputError::Io {
                path: out.clone(),
                source: e,
            })
        })?;
        written.push(out);
    }

    // One error-versus-rate figure per (delta, h) block, in file order.
    let mut seen: Vec<(u64, u64)> = Vec::new();
    for row in &rows {
        let key = (row.delta.to_bits(), row.h.to_bits());
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let block: Vec<&RatesRow> = rows
            .iter()
            .filter(|r| (r.delta.to_bits(), r.h.to_bits()) == key)
            .collect();
        let xs: Vec<f64> = block.iter().map(|r| r.rate_reference).collect();
        let direct: Vec<f64> = block.iter().map(|r| r.maae_direct).collect();
        let integrated: Vec<f64> = block.iter().map(|r| r.maae_integrated).collect();
        let mut series = vec![
            Series {
                label: "direct".to_string(),
                xs: &xs,
                ys: &direct,
                color: "#1f77b4",
                dashed: true,
                markers: true,
            },
            Series {
                label: "integrated".to_string(),
                xs: &xs,
                ys: &integrated,
                color: "#d62728",
                dashed: false,
                markers: true,
            },
        ];
        let slope = block[0].slope;
        let intercept = block[0].intercept;
        let fit_xs: Vec<f64>;
        let fit_ys: Vec<f64>;
        if slope.is_finite() && intercept.is_finite() {
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            fit_xs = vec![lo, hi];
            fit_ys = vec![slope * lo + intercept, slope * hi + intercept];
            series.push(Series {
                label: "least-squares fit".to_string(),
                xs: &fit_xs,
                ys: &fit_ys,
                color: "#7f7f7f",
                dashed: false,
                markers: false,
            });
        }
        let svg = line_plot(
            &format!("Error vs reference rate (delta={}, h={})", row.delta, row.h),
            "reference rate",
            "MAAE",
            &series,
        );
        let out = output_dir.join(format!("rates_d{}_h{}.svg", row.delta, row.h));
        std::fs::write(&out, svg).map_err(|e| {
            RunError::Output(OutputError::Io {
                path: out.clone(),
                source: e,
            })
        })?;
        written.push(out);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_prefers_sigma2_when_present() {
        assert_eq!(
            curve_family(&[EstimatorTag::DriftDirect, EstimatorTag::Sigma2Integrated]),
            CurveFamily::Sigma2
        );
        assert_eq!(
            curve_family(&[EstimatorTag::DriftDirect, EstimatorTag::DriftIntegrated]),
            CurveFamily::Drift
        );
        assert_eq!(
            CurveFamily::Sigma2.direct_member(),
            EstimatorTag::Sigma2Direct
        );
        assert_eq!(
            CurveFamily::Drift.integrated_member(),
            EstimatorTag::DriftIntegrated
        );
    }

    #[test]
    fn exit_codes_match_failure_classes() {
        assert_eq!(RunError::Config("x".into()).exit_code(), 2);
        assert_eq!(
            RunError::Replication {
                delta: 0.01,
                h: 0.03,
                n: 10,
                replication: 0,
                seed: 1,
                message: "m".into()
            }
            .exit_code(),
            3
        );
        assert_eq!(
            RunError::Analysis(AnalysisError::NoReplications).exit_code(),
            3
        );
        assert_eq!(
            RunError::Output(OutputError::Format {
                path: PathBuf::from("x"),
                message: "m".into()
            })
            .exit_code(),
            4
        );
    }

    #[test]
    fn replication_diagnostic_names_cell_and_seed() {
        let err = RunError::Replication {
            delta: 0.008,
            h: 0.12,
            n: 1000,
            replication: 17,
            seed: 42,
            message: "diverged".into(),
        };
        let msg = err.to_string();
        for needle in ["0.008", "0.12", "1000", "17", "42", "diverged"] {
            assert!(msg.contains(needle), "missing {needle} in {msg}");
        }
    }
}
