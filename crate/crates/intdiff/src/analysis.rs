//! Error summaries, theoretical rate curves, and moment diagnostics.
//!
//! The central experiment summary is the mean (over replications) of the
//! maximum absolute estimation error over the evaluation grid. Alongside it
//! this module evaluates the theoretical uniform-convergence-rate expressions
//! for both estimator families, checks the mixing-decay inequality that those
//! rates assume, and runs short-horizon Monte-Carlo checks of the conditional
//! moment identities that motivate the proxy-based estimators.

use crate::estimators::EstimateCurve;
use crate::numeric::{mean_and_stderr, KahanSum};
use crate::sde::{euler_simulate, SdeModel, SimError};
use crate::seeding::replication_seed;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("need at least one replication curve")]
    NoReplications,
    #[error("replication {replication} uses a different evaluation grid")]
    MismatchedGrids { replication: usize },
    #[error("estimate is NaN at replication {replication}, point {point} (x = {x})")]
    NanEstimate {
        replication: usize,
        point: usize,
        x: f64,
    },
    #[error(
        "grid needs lo < hi (finite) and at least two points, got lo = {lo}, hi = {hi}, n = {n}"
    )]
    DegenerateGrid { lo: f64, hi: f64, n: usize },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{name} must satisfy {requirement}, got {value}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("time horizon must exceed 1 for the drift rate, got {0}")]
    HorizonTooShort(f64),
    #[error("condition not applicable: {0}")]
    NotApplicable(String),
    #[error("predictor values are all equal; the fit is degenerate")]
    DegenerateFit,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// The four estimator variants an experiment can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorTag {
    Sigma2Direct,
    Sigma2Integrated,
    DriftDirect,
    DriftIntegrated,
}

impl EstimatorTag {
    pub const ALL: [EstimatorTag; 4] = [
        EstimatorTag::Sigma2Direct,
        EstimatorTag::Sigma2Integrated,
        EstimatorTag::DriftDirect,
        EstimatorTag::DriftIntegrated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorTag::Sigma2Direct => "sigma2_direct",
            EstimatorTag::Sigma2Integrated => "sigma2_integrated",
            EstimatorTag::DriftDirect => "drift_direct",
            EstimatorTag::DriftIntegrated => "drift_integrated",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    pub fn is_direct(self) -> bool {
        matches!(self, EstimatorTag::Sigma2Direct | EstimatorTag::DriftDirect)
    }

    pub fn is_sigma2(self) -> bool {
        matches!(
            self,
            EstimatorTag::Sigma2Direct | EstimatorTag::Sigma2Integrated
        )
    }
}

/// Worst-case-error summary over a set of replicated curves.
#[derive(Debug, Clone, PartialEq)]
pub struct MaaeReport {
    /// Mean over replications of the per-replication maximum absolute error.
    pub maae: f64,
    pub per_replication_max_err: Vec<f64>,
    pub n_replications: usize,
}

/// Mean over replications of the maximum absolute error on the grid.
/// Any NaN estimate is an error (silently skipping would bias the summary
/// downward); all curves must share one evaluation grid.
pub fn maae<F>(curves: &[EstimateCurve], truth: F) -> Result<MaaeReport, AnalysisError>
where
    F: Fn(f64) -> f64,
{
    if curves.is_empty() {
        return Err(AnalysisError::NoReplications);
    }
    let grid = &curves[0].eval_points;
    for (k, c) in curves.iter().enumerate().skip(1) {
        if c.eval_points != *grid {
            return Err(AnalysisError::MismatchedGrids { replication: k });
        }
    }
    let truths: Vec<f64> = grid.iter().map(|&x| truth(x)).collect();
    let mut per_replication_max_err = Vec::with_capacity(curves.len());
    for (k, c) in curves.iter().enumerate() {
        let mut worst = 0.0f64;
        for (i, (&v, &t)) in c.values.iter().zip(&truths).enumerate() {
            if v.is_nan() {
                return Err(AnalysisError::NanEstimate {
                    replication: k,
                    point: i,
                    x: grid[i],
                });
            }
            worst = worst.max((v - t).abs());
        }
        per_replication_max_err.push(worst);
    }
    let mut sum = KahanSum::new();
    for &e in &per_replication_max_err {
        sum.add(e);
    }
    Ok(MaaeReport {
        maae: sum.value() / per_replication_max_err.len() as f64,
        n_replications: curves.len(),
        per_replication_max_err,
    })
}

/// Pointwise mean of replicated curves on their shared grid. Same grid and
/// NaN policy as [`maae`].
pub fn pointwise_mean(curves: &[EstimateCurve]) -> Result<Vec<f64>, AnalysisError> {
    if curves.is_empty() {
        return Err(AnalysisError::NoReplications);
    }
    let grid = &curves[0].eval_points;
    for (k, c) in curves.iter().enumerate().skip(1) {
        if c.eval_points != *grid {
            return Err(AnalysisError::MismatchedGrids { replication: k });
        }
    }
    let mut sums = vec![KahanSum::new(); grid.len()];
    for (k, c) in curves.iter().enumerate() {
        for (i, &v) in c.values.iter().enumerate() {
            if v.is_nan() {
                return Err(AnalysisError::NanEstimate {
                    replication: k,
                    point: i,
                    x: grid[i],
                });
            }
            sums[i].add(v);
        }
    }
    Ok(sums
        .into_iter()
        .map(|s| s.value() / curves.len() as f64)
        .collect())
}

/// Uniform inclusive-endpoint grid of `n_points` values on [lo, hi].
pub fn eval_grid(lo: f64, hi: f64, n_points: usize) -> Result<Vec<f64>, AnalysisError> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || n_points < 2 {
        return Err(AnalysisError::DegenerateGrid {
            lo,
            hi,
            n: n_points,
        });
    }
    let step = (hi - lo) / (n_points - 1) as f64;
    let mut grid: Vec<f64> = (0..n_points).map(|i| lo + i as f64 * step).collect();
    grid[0] = lo;
    grid[n_points - 1] = hi;
    Ok(grid)
}

/// Reference convergence-rate curve ((ln n)^3 / n)^(2/5), the horizontal axis
/// of the rate-consistency plots. Natural logarithm throughout.
pub fn rate_reference(n: u64) -> Result<f64, AnalysisError> {
    if n < 2 {
        return Err(AnalysisError::InvalidParameter {
            name: "n",
            requirement: ">= 2",
            value: n as f64,
        });
    }
    let ln_n = (n as f64).ln();
    Ok((ln_n.powi(3) / n as f64).powf(0.4))
}

/// Exponents entering the theoretical rate expressions and the mixing-decay
/// condition. Constructed through [`RateParams::new`], which validates every
/// field; the free functions re-validate, so a hand-mutated value cannot
/// slip through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    /// Polynomial moment index q > 0.
    pub q: f64,
    /// Time-growth exponent for the squared-diffusion bound, in (0, 1).
    pub theta: f64,
    /// Bandwidth-decay exponent for the squared-diffusion bound, >= 0.
    pub kappa_exp: f64,
    /// Time-growth exponent for the drift bound, in (0, 1).
    pub theta_bar: f64,
    /// Bandwidth-decay exponent for the drift bound, >= 0.
    pub kappa_bar: f64,
    /// Mixing decay exponent of the state process, > 0.
    pub beta_mix: f64,
}

impl RateParams {
    pub fn new(
        q: f64,
        theta: f64,
        kappa_exp: f64,
        theta_bar: f64,
        kappa_bar: f64,
        beta_mix: f64,
    ) -> Result<Self, AnalysisError> {
        let p = RateParams {
            q,
            theta,
            kappa_exp,
            theta_bar,
            kappa_bar,
            beta_mix,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let checks: [(&'static str, f64, bool, &'static str); 6] = [
            ("q", self.q, self.q > 0.0 && self.q.is_finite(), "> 0"),
            (
                "theta",
                self.theta,
                self.theta > 0.0 && self.theta < 1.0,
                "in (0, 1)",
            ),
            (
                "kappa_exp",
                self.kappa_exp,
                self.kappa_exp >= 0.0 && self.kappa_exp.is_finite(),
                ">= 0",
            ),
            (
                "theta_bar",
                self.theta_bar,
                self.theta_bar > 0.0 && self.theta_bar < 1.0,
                "in (0, 1)",
            ),
            (
                "kappa_bar",
                self.kappa_bar,
                self.kappa_bar >= 0.0 && self.kappa_bar.is_finite(),
                ">= 0",
            ),
            (
                "beta_mix",
                self.beta_mix,
                self.beta_mix > 0.0 && self.beta_mix.is_finite(),
                "> 0",
            ),
        ];
        for (name, value, ok, requirement) in checks {
            if !ok {
                return Err(AnalysisError::InvalidParameter {
                    name,
                    requirement,
                    value,
                });
            }
        }
        Ok(())
    }
}

impl Default for RateParams {
    /// Exponents used by the worked experiment configuration.
    fn default() -> Self {
        RateParams {
            q: 38.0,
            theta: 0.4,
            kappa_exp: 0.4,
            theta_bar: 0.9,
            kappa_bar: 0.1,
            beta_mix: 17.0,
        }
    }
}

fn check_rate_args(delta: f64, h: f64, params: &RateParams) -> Result<(), AnalysisError> {
    params.validate()?;
    // delta = 0 is allowed deliberately: it isolates the bandwidth terms.
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(AnalysisError::InvalidParameter {
            name: "delta",
            requirement: ">= 0",
            value: delta,
        });
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(AnalysisError::InvalidParameter {
            name: "h",
            requirement: "> 0",
            value: h,
        });
    }
    Ok(())
}

/// The three summands of the squared-diffusion uniform rate:
/// `[delta * h^(-1/(1+q)), sqrt((ln n)^3 / (n h)), h^2]`.
pub fn rate_diffusion_terms(
    delta: f64,
    h: f64,
    n: u64,
    params: &RateParams,
) -> Result<[f64; 3], AnalysisError> {
    check_rate_args(delta, h, params)?;
    if n < 2 {
        return Err(AnalysisError::InvalidParameter {
            name: "n",
            requirement: ">= 2",
            value: n as f64,
        });
    }
    let ln_n = (n as f64).ln();
    Ok([
        delta * h.powf(-1.0 / (1.0 + params.q)),
        (ln_n.powi(3) / (n as f64 * h)).sqrt(),
        h * h,
    ])
}

/// Theoretical uniform rate for the squared-diffusion estimators.
pub fn rate_diffusion(
    delta: f64,
    h: f64,
    n: u64,
    params: &RateParams,
) -> Result<f64, AnalysisError> {
    let [a, b, c] = rate_diffusion_terms(delta, h, n, params)?;
    Ok(a + b + c)
}

/// The three summands of the drift uniform rate:
/// `[delta^(1/2 - 1/(2+q)), sqrt(ln T / (T^theta_bar * h)), h^2]`.
pub fn rate_drift_terms(
    delta: f64,
    h: f64,
    t_horizon: f64,
    params: &RateParams,
) -> Result<[f64; 3], AnalysisError> {
    check_rate_args(delta, h, params)?;
    if !(t_horizon > 1.0) || !t_horizon.is_finite() {
        return Err(AnalysisError::HorizonTooShort(t_horizon));
    }
    let exponent = 0.5 - 1.0 / (2.0 + params.q);
    Ok([
        delta.powf(exponent),
        (t_horizon.ln() / (t_horizon.powf(params.theta_bar) * h)).sqrt(),
        h * h,
    ])
}

/// Theoretical uniform rate for the drift estimators.
pub fn rate_drift(
    delta: f64,
    h: f64,
    t_horizon: f64,
    params: &RateParams,
) -> Result<f64, AnalysisError> {
    let [a, b, c] = rate_drift_terms(delta, h, t_horizon, params)?;
    Ok(a + b + c)
}

/// Outcome of the mixing-decay inequality checks. Each estimator family
/// requires `beta_mix` to exceed the larger of two exponent expressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaConditionCheck {
    pub diffusion_ok: bool,
    pub drift_ok: bool,
    /// The diffusion-side lower bound that `beta_mix` must exceed.
    pub diffusion_bound: f64,
    /// The drift-side lower bound that `beta_mix` must exceed.
    pub drift_bound: f64,
}

/// Evaluates both mixing-decay conditions. Structural requirements
/// (positive denominators in the bound expressions) are reported as
/// [`AnalysisError::NotApplicable`] rather than `false`: a violated
/// precondition means the inequality has no content, not that it failed.
pub fn check_beta_conditions(params: &RateParams) -> Result<BetaConditionCheck, AnalysisError> {
    params.validate()?;
    let RateParams {
        q,
        theta,
        kappa_exp: kappa,
        theta_bar,
        kappa_bar,
        beta_mix,
    } = *params;

    let den_a = 1.0 - theta - kappa;
    if den_a <= 0.0 {
        return Err(AnalysisError::NotApplicable(format!(
            "diffusion condition needs 1 - theta - kappa_exp > 0, got {den_a}"
        )));
    }
    let den_b = 1.0 - 2.0 * kappa;
    if den_b <= 0.0 {
        return Err(AnalysisError::NotApplicable(format!(
            "diffusion condition needs 1 - 2 kappa_exp > 0, got {den_b}"
        )));
    }
    let diffusion_bound = ((2.0 + 3.0 * theta) / den_a).max((2.0 + 1.0 / (2.0 + q)) / den_b);

    let den_c = 1.0 - (1.0 + 4.0 / q) * theta_bar - 2.0 * kappa_bar / q;
    if den_c <= 0.0 {
        return Err(AnalysisError::NotApplicable(format!(
            "drift condition needs 1 - (1 + 4/q) theta_bar - 2 kappa_bar / q > 0, got {den_c}"
        )));
    }
    let drift_bound = ((1.5 + theta_bar + kappa_bar) / den_c - 2.0)
        .max((2.0 + 1.0 / (2.0 + q)) * theta_bar / (1.0 - theta_bar));

    Ok(BetaConditionCheck {
        diffusion_ok: beta_mix > diffusion_bound,
        drift_ok: beta_mix > drift_bound,
        diffusion_bound,
        drift_bound,
    })
}

/// Slack coefficient for the O(delta) remainder in the moment identities:
/// the computable tolerance is `4 * stderr + MOMENT_BIAS_COEFF * delta *
/// (1 + |target|)`. Loose enough for both worked models at delta <= 0.01,
/// tight enough that a missing 2/3 factor (a 50% relative error) fails.
pub const MOMENT_BIAS_COEFF: f64 = 5.0;

/// Monte-Carlo check of a short-horizon conditional-moment identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheckReport {
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    pub target: f64,
    pub delta: f64,
    pub replications: usize,
}

impl MomentCheckReport {
    pub fn tolerance(&self) -> f64 {
        4.0 * self.mc_stderr + MOMENT_BIAS_COEFF * self.delta * (1.0 + self.target.abs())
    }

    pub fn passes(&self) -> bool {
        (self.mc_estimate - self.target).abs() <= self.tolerance()
    }
}

#[derive(Clone, Copy)]
enum MomentStatistic {
    SquaredIncrement,
    Increment,
}

#[allow(clippy::too_many_arguments)]
fn moment_check(
    model: &SdeModel,
    x0: f64,
    delta: f64,
    fine_factor: usize,
    reps: usize,
    seed: u64,
    statistic: MomentStatistic,
    target: f64,
) -> Result<MomentCheckReport, AnalysisError> {
    if reps < 100 {
        return Err(AnalysisError::TooFewSamples {
            got: reps,
            min: 100,
        });
    }
    if fine_factor < 1 {
        return Err(AnalysisError::InvalidParameter {
            name: "fine_factor",
            requirement: ">= 1",
            value: fine_factor as f64,
        });
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(AnalysisError::InvalidParameter {
            name: "delta",
            requirement: "> 0",
            value: delta,
        });
    }
    let dt = delta / fine_factor as f64;
    let stats: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<f64, AnalysisError> {
            let path =
                euler_simulate(model, x0, 2.0 * delta, dt, replication_seed(seed, r as u64))?;
            let breve_first = (path.y[fine_factor] - path.y[0]) / delta;
            let breve_second = (path.y[2 * fine_factor] - path.y[fine_factor]) / delta;
            let d = breve_second - breve_first;
            Ok(match statistic {
                MomentStatistic::SquaredIncrement => d * d / delta,
                MomentStatistic::Increment => d / delta,
            })
        })
        .collect::<Result<Vec<f64>, AnalysisError>>()?;
    let (mean, stderr) = mean_and_stderr(&stats);
    Ok(MomentCheckReport {
        mc_estimate: mean,
        mc_stderr: stderr,
        target,
        delta,
        replications: reps,
    })
}

/// Checks that squared proxy increments over one spacing, scaled by 1/delta,
/// average to (2/3) of the squared diffusion at the start point. The 2/3
/// factor is the within-interval averaging loss the proxy-based estimator
/// corrects for.
pub fn moment_check_diffusion(
    model: &SdeModel,
    x0: f64,
    delta: f64,
    fine_factor: usize,
    reps: usize,
    seed: u64,
) -> Result<MomentCheckReport, AnalysisError> {
    let target = (2.0 / 3.0) * model.sigma2_true(x0);
    moment_check(
        model,
        x0,
        delta,
        fine_factor,
        reps,
        seed,
        MomentStatistic::SquaredIncrement,
        target,
    )
}

/// Checks that proxy increments over one spacing, scaled by 1/delta, average
/// to the drift at the start point.
pub fn moment_check_drift(
    model: &SdeModel,
    x0: f64,
    delta: f64,
    fine_factor: usize,
    reps: usize,
    seed: u64,
) -> Result<MomentCheckReport, AnalysisError> {
    let target = model.drift_true(x0);
    moment_check(
        model,
        x0,
        delta,
        fine_factor,
        reps,
        seed,
        MomentStatistic::Increment,
        target,
    )
}

/// Ordinary least-squares line and Pearson correlation of observed errors
/// against a theoretical rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub correlation: f64,
}

/// Fits `maae_values` on `rate_values` by least squares. A constant response
/// yields slope 0 and correlation 0; constant predictors are an error.
pub fn rate_fit(maae_values: &[f64], rate_values: &[f64]) -> Result<RateFit, AnalysisError> {
    if maae_values.len() != rate_values.len() {
        return Err(AnalysisError::LengthMismatch {
            left: maae_values.len(),
            right: rate_values.len(),
        });
    }
    if maae_values.len() < 3 {
        return Err(AnalysisError::TooFewSamples {
            got: maae_values.len(),
            min: 3,
        });
    }
    let n = maae_values.len() as f64;
    let mut sx = KahanSum::new();
    let mut sy = KahanSum::new();
    for (&x, &y) in rate_values.iter().zip(maae_values) {
        sx.add(x);
        sy.add(y);
    }
    let x_bar = sx.value() / n;
    let y_bar = sy.value() / n;
    let mut sxx = KahanSum::new();
    let mut syy = KahanSum::new();
    let mut sxy = KahanSum::new();
    for (&x, &y) in rate_values.iter().zip(maae_values) {
        let dx = x - x_bar;
        let dy = y - y_bar;
        sxx.add(dx * dx);
        syy.add(dy * dy);
        sxy.add(dx * dy);
    }
    let sxx = sxx.value();
    let syy = syy.value();
    let sxy = sxy.value();
    if sxx <= 0.0 {
        return Err(AnalysisError::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let correlation = if syy <= 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    };
    Ok(RateFit {
        slope,
        intercept,
        correlation,
    })
}
