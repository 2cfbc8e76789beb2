//! Euler-Maruyama simulation of a scalar diffusion and its running integral.
//!
//! The state follows `dX_t = b(X_t) dt + sigma(X_t) dW_t` on a fine grid of
//! step `dt`; the integral `Y_t = \int_0^t X_s ds` is accumulated alongside
//! with a left-Riemann rule by default, so the recorded pair mimics a data
//! source that only ever exposes `Y` at coarser sampling times.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("parameter {name} must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("x0 = {x0} lies outside the model domain [{lo}, {hi}]")]
    OutOfDomain { x0: f64, lo: f64, hi: f64 },
    #[error("step size dt must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("burn-in time must be finite and nonnegative, got {0}")]
    InvalidBurnIn(f64),
    #[error("horizon {t_end} is not a positive integer multiple of dt = {dt}")]
    GridMismatch { t_end: f64, dt: f64 },
    #[error("state became non-finite at step {step}")]
    Diverged { step: usize },
    #[error("spacing {delta} is not a positive integer multiple of the fine step {dt}")]
    SubsampleMismatch { delta: f64, dt: f64 },
    #[error("need at least {min} observation intervals, got {got}")]
    InsufficientData { got: usize, min: usize },
}

/// How the stepper keeps square-root diffusions away from negative arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositivityScheme {
    /// Feed the raw state to drift and diffusion.
    None,
    /// Clamp the state at zero inside the diffusion coefficient only; the
    /// drift still sees the raw state and pulls excursions back.
    FullTruncation,
}

/// Integration rule for the running integral of the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    LeftRiemann,
    Trapezoid,
}

impl Quadrature {
    pub fn name(self) -> &'static str {
        match self {
            Quadrature::LeftRiemann => "left_riemann",
            Quadrature::Trapezoid => "trapezoid",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "left_riemann" => Some(Quadrature::LeftRiemann),
            "trapezoid" => Some(Quadrature::Trapezoid),
            _ => None,
        }
    }
}

type StateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar diffusion model: coefficient functions plus the closed-form
/// squared diffusion used as ground truth in experiments.
#[derive(Clone)]
pub struct SdeModel {
    drift: StateFn,
    diffusion: StateFn,
    sigma2: StateFn,
    domain: (f64, f64),
    positivity: PositivityScheme,
}

impl fmt::Debug for SdeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeModel")
            .field("domain", &self.domain)
            .field("positivity", &self.positivity)
            .finish_non_exhaustive()
    }
}

fn require_positive(name: &'static str, value: f64) -> Result<(), SimError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(SimError::NonPositiveParameter { name, value })
    }
}

impl SdeModel {
    /// Square-root mean-reverting model: drift `kappa (theta - x)`, diffusion
    /// `sigma sqrt(max(x, 0))`, state space `[0, inf)`, full truncation.
    pub fn cir(kappa: f64, theta: f64, sigma: f64) -> Result<Self, SimError> {
        require_positive("kappa", kappa)?;
        require_positive("theta", theta)?;
        require_positive("sigma", sigma)?;
        let s2 = sigma * sigma;
        Ok(SdeModel {
            drift: Arc::new(move |x| kappa * (theta - x)),
            diffusion: Arc::new(move |x| sigma * x.max(0.0).sqrt()),
            sigma2: Arc::new(move |x| s2 * x.max(0.0)),
            domain: (0.0, f64::INFINITY),
            positivity: PositivityScheme::FullTruncation,
        })
    }

    /// Mean-reverting model with constant diffusion: drift `kappa (theta - x)`,
    /// diffusion `sigma`, state space all of R. `theta` may be any finite real.
    pub fn ou(kappa: f64, theta: f64, sigma: f64) -> Result<Self, SimError> {
        require_positive("kappa", kappa)?;
        require_positive("sigma", sigma)?;
        if !theta.is_finite() {
            return Err(SimError::NonPositiveParameter {
                name: "theta",
                value: theta,
            });
        }
        let s2 = sigma * sigma;
        Ok(SdeModel {
            drift: Arc::new(move |x| kappa * (theta - x)),
            diffusion: Arc::new(move |_| sigma),
            sigma2: Arc::new(move |_| s2),
            domain: (f64::NEG_INFINITY, f64::INFINITY),
            positivity: PositivityScheme::None,
        })
    }

    /// Model from arbitrary coefficient functions; used for controlled test
    /// dynamics (zero drift, zero noise, explosive drift, ...).
    pub fn custom<D, S, V>(
        drift: D,
        diffusion: S,
        sigma2: V,
        domain: (f64, f64),
        positivity: PositivityScheme,
    ) -> Self
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        S: Fn(f64) -> f64 + Send + Sync + 'static,
        V: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        SdeModel {
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            sigma2: Arc::new(sigma2),
            domain,
            positivity,
        }
    }

    pub fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }

    /// Alias used where the drift plays the role of the estimation target.
    pub fn drift_true(&self, x: f64) -> f64 {
        self.drift(x)
    }

    pub fn diffusion(&self, x: f64) -> f64 {
        (self.diffusion)(x)
    }

    pub fn sigma2_true(&self, x: f64) -> f64 {
        (self.sigma2)(x)
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn positivity(&self) -> PositivityScheme {
        self.positivity
    }

    fn check_x0(&self, x0: f64) -> Result<(), SimError> {
        let (lo, hi) = self.domain;
        if x0 >= lo && x0 <= hi {
            Ok(())
        } else {
            Err(SimError::OutOfDomain { x0, lo, hi })
        }
    }
}

/// One simulated path of the state and its running integral on the fine grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FinePath {
    /// Fine step; times are `k * dt` for `k = 0..=steps`.
    pub dt: f64,
    /// State values, `steps + 1` entries starting at the initial state.
    pub x: Vec<f64>,
    /// Integral values, same length as `x`, `y[0] = 0`.
    pub y: Vec<f64>,
    /// Seed the path was generated from.
    pub seed: u64,
}

impl FinePath {
    pub fn steps(&self) -> usize {
        self.x.len() - 1
    }
}

/// Coarsely sampled record of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    /// Observation spacing.
    pub delta: f64,
    /// Integral observations at `0, delta, ..., n * delta` (`n + 1` values).
    pub y_obs: Vec<f64>,
    /// State observations at the same times, when requested.
    pub x_obs: Option<Vec<f64>>,
    /// Number of observation intervals.
    pub n: usize,
    /// `n * delta`.
    pub t_horizon: f64,
}

/// Extra simulation controls beyond the required arguments.
#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Time to simulate and discard before recording starts. The recorded
    /// path begins at the post-burn-in state with its integral reset to zero.
    pub burn_in_time: f64,
    pub quadrature: Quadrature,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            burn_in_time: 0.0,
            quadrature: Quadrature::LeftRiemann,
        }
    }
}

/// Rounds `num / den` to an integer when the ratio is within a few ulps of
/// one; `None` flags a genuine grid mismatch.
fn exact_ratio(num: f64, den: f64) -> Option<u64> {
    if !(den > 0.0) || !num.is_finite() || !den.is_finite() {
        return None;
    }
    let r = num / den;
    let m = r.round();
    if m < 1.0 || m > 2f64.powi(53) {
        return None;
    }
    if (r - m).abs() <= 8.0 * f64::EPSILON * m {
        Some(m as u64)
    } else {
        None
    }
}

struct Stepper<'a> {
    model: &'a SdeModel,
    dt: f64,
    sqrt_dt: f64,
    rng: ChaCha8Rng,
    /// 1-based count of steps taken, across burn-in and recording.
    step: usize,
}

impl<'a> Stepper<'a> {
    fn new(model: &'a SdeModel, dt: f64, seed: u64) -> Self {
        Stepper {
            model,
            dt,
            sqrt_dt: dt.sqrt(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            step: 0,
        }
    }

    fn advance(&mut self, x: f64) -> Result<f64, SimError> {
        self.step += 1;
        let z: f64 = self.rng.sample(StandardNormal);
        let diff_arg = match self.model.positivity {
            PositivityScheme::None => x,
            PositivityScheme::FullTruncation => x.max(0.0),
        };
        if self.model.positivity == PositivityScheme::FullTruncation {
            debug_assert!(diff_arg >= 0.0);
        }
        let next =
            x + self.model.drift(x) * self.dt + self.model.diffusion(diff_arg) * self.sqrt_dt * z;
        if next.is_finite() {
            Ok(next)
        } else {
            Err(SimError::Diverged { step: self.step })
        }
    }
}

/// Simulates `t_end / dt` Euler steps from `x0` and accumulates the integral
/// with the left-Riemann rule. `t_end` must be an integer multiple of `dt`.
pub fn euler_simulate(
    model: &SdeModel,
    x0: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<FinePath, SimError> {
    euler_simulate_opts(model, x0, t_end, dt, seed, &SimOptions::default())
}

/// `euler_simulate` with burn-in and quadrature controls.
pub fn euler_simulate_opts(
    model: &SdeModel,
    x0: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
    opts: &SimOptions,
) -> Result<FinePath, SimError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SimError::InvalidStep(dt));
    }
    model.check_x0(x0)?;
    let steps = exact_ratio(t_end, dt).ok_or(SimError::GridMismatch { t_end, dt })? as usize;
    if !(opts.burn_in_time >= 0.0) || !opts.burn_in_time.is_finite() {
        return Err(SimError::InvalidBurnIn(opts.burn_in_time));
    }
    let burn_steps = (opts.burn_in_time / dt).ceil() as usize;

    let mut stepper = Stepper::new(model, dt, seed);
    let mut x = x0;
    for _ in 0..burn_steps {
        x = stepper.advance(x)?;
    }

    let mut xs = Vec::with_capacity(steps + 1);
    let mut ys = Vec::with_capacity(steps + 1);
    xs.push(x);
    ys.push(0.0);
    for k in 0..steps {
        let next = stepper.advance(xs[k])?;
        let y_next = match opts.quadrature {
            Quadrature::LeftRiemann => ys[k] + xs[k] * dt,
            Quadrature::Trapezoid => ys[k] + 0.5 * (xs[k] + next) * dt,
        };
        xs.push(next);
        ys.push(y_next);
    }
    Ok(FinePath {
        dt,
        x: xs,
        y: ys,
        seed,
    })
}

/// Picks every `delta / dt`-th grid point off a fine path. `delta` must be an
/// integer multiple of the fine step; state observations are attached only
/// when `with_x` is set.
pub fn subsample(path: &FinePath, delta: f64, with_x: bool) -> Result<ObservationSet, SimError> {
    let m = exact_ratio(delta, path.dt).ok_or(SimError::SubsampleMismatch { delta, dt: path.dt })?
        as usize;
    let n = path.steps() / m;
    if n < 3 {
        return Err(SimError::InsufficientData { got: n, min: 3 });
    }
    let y_obs: Vec<f64> = (0..=n).map(|i| path.y[i * m]).collect();
    let x_obs = with_x.then(|| (0..=n).map(|i| path.x[i * m]).collect());
    Ok(ObservationSet {
        delta,
        y_obs,
        x_obs,
        n,
        t_horizon: n as f64 * delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{kahan_sum, mean_and_stderr};

    /// Zero drift, zero noise: the state stays at x0 forever.
    fn frozen_model() -> SdeModel {
        SdeModel::custom(
            |_| 0.0,
            |_| 0.0,
            |_| 0.0,
            (f64::NEG_INFINITY, f64::INFINITY),
            PositivityScheme::None,
        )
    }

    #[test]
    fn cir_rejects_nonpositive_parameters() {
        assert!(matches!(
            SdeModel::cir(0.0, 1.0, 1.0),
            Err(SimError::NonPositiveParameter { name: "kappa", .. })
        ));
        assert!(matches!(
            SdeModel::cir(1.0, -0.5, 1.0),
            Err(SimError::NonPositiveParameter { name: "theta", .. })
        ));
        assert!(matches!(
            SdeModel::cir(1.0, 1.0, f64::NAN),
            Err(SimError::NonPositiveParameter { name: "sigma", .. })
        ));
    }

    #[test]
    fn ou_rejects_bad_parameters_but_allows_negative_theta() {
        assert!(SdeModel::ou(0.5, -2.75, 0.43).is_ok());
        assert!(SdeModel::ou(-0.5, -2.75, 0.43).is_err());
        assert!(SdeModel::ou(0.5, -2.75, 0.0).is_err());
        assert!(SdeModel::ou(0.5, f64::INFINITY, 0.43).is_err());
    }

    #[test]
    fn cir_coefficients() {
        let m = SdeModel::cir(1.0, 1.0, 1.0).unwrap();
        assert_eq!(m.sigma2_true(4.0), 4.0);
        assert_eq!(m.diffusion(4.0), 2.0);
        assert_eq!(m.diffusion(-1.0), 0.0);
        assert_eq!(m.drift(1.0), 0.0);

        let m = SdeModel::cir(0.85837, 0.085711, 0.15660).unwrap();
        // Independently evaluated in high precision: 0.15660^2 * 0.085711.
        let expected = 2.10193885116e-3;
        let got = m.sigma2_true(0.085711);
        assert!(((got - expected) / expected).abs() < 1e-12, "got {got:e}");
        assert_eq!(m.drift(0.085711), 0.0);
    }

    #[test]
    fn ou_coefficients() {
        let m = SdeModel::ou(0.5, -2.75, 0.43).unwrap();
        let s2 = m.sigma2_true(123.456);
        assert!(((s2 - 0.1849) / 0.1849).abs() < 1e-12, "got {s2}");
        assert_eq!(s2, m.sigma2_true(-10.0));
        let b = m.drift(-2.79);
        assert!(((b - 0.02) / 0.02).abs() < 1e-12, "got {b}");
        assert_eq!(m.drift_true(-2.79), b);

        let centered = SdeModel::ou(1.0, 0.0, 1.0).unwrap();
        assert_eq!(centered.drift(0.0), 0.0);
    }

    #[test]
    fn deterministic_path_integrates_a_constant() {
        let model = frozen_model();
        let path = euler_simulate(&model, 3.0, 1.0, 0.1, 1).unwrap();
        assert_eq!(path.steps(), 10);
        assert!(path.x.iter().all(|&v| v == 3.0));
        assert_eq!(path.y[0], 0.0);
        for k in 0..path.steps() {
            // Increment recovery loses a few ulps to the running-sum rounding.
            assert!((path.y[k + 1] - path.y[k] - 3.0 * 0.1).abs() < 1e-14);
            let expected = 0.3 * (k + 1) as f64;
            assert!((path.y[k + 1] - expected).abs() < 1e-12);
        }
        assert!((path.y[10] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn cir_first_step_from_zero_is_pure_drift() {
        let model = SdeModel::cir(0.85837, 0.085711, 0.15660).unwrap();
        let path = euler_simulate(&model, 0.0, 0.1, 0.01, 7).unwrap();
        // Diffusion vanishes at the clamped origin, so step one is exact.
        assert_eq!(path.x[1], model.drift(0.0) * 0.01);
    }

    #[test]
    fn paths_are_reproducible_and_seed_sensitive() {
        let model = SdeModel::ou(0.5, -2.75, 0.43).unwrap();
        let a = euler_simulate(&model, -2.75, 2.0, 0.01, 99).unwrap();
        let b = euler_simulate(&model, -2.75, 2.0, 0.01, 99).unwrap();
        assert_eq!(a, b);
        let c = euler_simulate(&model, -2.75, 2.0, 0.01, 100).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn divergence_is_reported_with_step_index() {
        let model = SdeModel::custom(
            |_| 1e308,
            |_| 0.0,
            |_| 0.0,
            (f64::NEG_INFINITY, f64::INFINITY),
            PositivityScheme::None,
        );
        let err = euler_simulate(&model, 0.0, 3.0, 1.0, 1).unwrap_err();
        assert_eq!(err, SimError::Diverged { step: 2 });
    }

    #[test]
    fn grid_mismatch_and_argument_errors() {
        let model = frozen_model();
        assert!(matches!(
            euler_simulate(&model, 0.0, 1.05, 0.1, 1),
            Err(SimError::GridMismatch { .. })
        ));
        assert!(matches!(
            euler_simulate(&model, 0.0, 1.0, 0.0, 1),
            Err(SimError::InvalidStep(_))
        ));
        assert!(matches!(
            euler_simulate(&model, 0.0, 0.0, 0.1, 1),
            Err(SimError::GridMismatch { .. })
        ));
        let cir = SdeModel::cir(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            euler_simulate(&cir, -0.5, 1.0, 0.1, 1),
            Err(SimError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn ratio_check_tolerates_float_division_slop() {
        // delta / (delta / 10) often misses the integer by more than half an
        // ulp; the grid check must still recognize the intended multiple.
        for delta in [0.002, 0.004, 0.008, 0.01] {
            let dt = delta / 10.0;
            assert_eq!(exact_ratio(delta, dt), Some(10), "delta = {delta}");
        }
        assert_eq!(exact_ratio(0.0015, 0.001), None);
        assert_eq!(exact_ratio(0.5, 1.0), None);
    }

    #[test]
    fn burn_in_continues_the_same_stream() {
        let model = SdeModel::ou(0.5, -2.75, 0.43).unwrap();
        let opts = SimOptions {
            burn_in_time: 0.5,
            quadrature: Quadrature::LeftRiemann,
        };
        let burned = euler_simulate_opts(&model, -2.0, 1.0, 0.1, 5, &opts).unwrap();
        let full = euler_simulate(&model, -2.0, 1.5, 0.1, 5).unwrap();
        assert_eq!(burned.steps(), 10);
        assert_eq!(burned.y[0], 0.0);
        // The recorded states are the tail of the unburned path.
        assert_eq!(&burned.x[..], &full.x[5..]);
    }

    #[test]
    fn trapezoid_increments_match_the_rule() {
        let model = SdeModel::ou(0.5, -2.75, 0.43).unwrap();
        let opts = SimOptions {
            burn_in_time: 0.0,
            quadrature: Quadrature::Trapezoid,
        };
        let path = euler_simulate_opts(&model, -2.75, 1.0, 0.1, 11, &opts).unwrap();
        for k in 0..path.steps() {
            let inc = 0.5 * (path.x[k] + path.x[k + 1]) * 0.1;
            // A few ulps of slack: the running sum rounds each addition.
            assert!((path.y[k + 1] - path.y[k] - inc).abs() < 1e-14);
        }
    }

    #[test]
    fn integral_matches_prefix_sums_over_long_horizon() {
        let model = SdeModel::ou(0.5, -2.75, 0.43).unwrap();
        let dt = 1e-3;
        let path = euler_simulate(&model, -2.75, 100.0, dt, 21).unwrap();
        assert_eq!(path.steps(), 100_000);
        let direct = kahan_sum(&path.x[..path.steps()]) * dt;
        let rel = ((path.y[path.steps()] - direct) / direct).abs();
        assert!(rel < 1e-10, "relative drift {rel:e}");
    }

    #[test]
    fn ou_terminal_mean_matches_closed_form() {
        let kappa = 0.5;
        let theta = -2.75;
        let x0 = theta + 1.0;
        let model = SdeModel::ou(kappa, theta, 0.43).unwrap();
        let dt = 1e-3;
        let reps = 10_000usize;
        let finals: Vec<f64> = (0..reps)
            .map(|r| {
                let seed = crate::seeding::replication_seed(20_240_801, r as u64);
                let path = euler_simulate(&model, x0, 1.0, dt, seed).unwrap();
                *path.x.last().unwrap()
            })
            .collect();
        let (m, se) = mean_and_stderr(&finals);
        let target = theta + (x0 - theta) * (-kappa).exp();
        let bound = 4.0 * se + kappa * dt * (x0 - theta).abs();
        assert!(
            (m - target).abs() <= bound,
            "mean {m}, target {target}, bound {bound}"
        );
    }

    #[test]
    fn subsample_picks_every_mth_point() {
        let model = frozen_model();
        let path = euler_simulate(&model, 3.0, 2.0, 0.1, 1).unwrap();
        let obs = subsample(&path, 0.5, true).unwrap();
        assert_eq!(obs.n, 4);
        assert_eq!(obs.t_horizon, 2.0);
        assert_eq!(obs.y_obs.len(), 5);
        assert_eq!(obs.x_obs.as_ref().unwrap(), &vec![3.0; 5]);
        // Left-Riemann integral of the constant 3: y(i * 0.5) = 1.5 i.
        for (i, &y) in obs.y_obs.iter().enumerate() {
            assert!((y - 1.5 * i as f64).abs() < 1e-12);
        }

        let fine = euler_simulate(&model, 3.0, 1.0, 0.001, 1).unwrap();
        let every_2nd = subsample(&fine, 0.002, false).unwrap();
        assert_eq!(every_2nd.n, 500);
        assert_eq!(every_2nd.y_obs[1], fine.y[2]);
        assert!(every_2nd.x_obs.is_none());
    }

    #[test]
    fn subsample_rejects_mismatched_spacing() {
        let model = frozen_model();
        let path = euler_simulate(&model, 1.0, 1.0, 0.001, 1).unwrap();
        assert!(matches!(
            subsample(&path, 0.0015, false),
            Err(SimError::SubsampleMismatch { .. })
        ));
        // 10 fine steps at delta = 4 dt only yields n = 2 intervals.
        let short = euler_simulate(&model, 1.0, 1.0, 0.1, 1).unwrap();
        assert_eq!(
            subsample(&short, 0.4, false),
            Err(SimError::InsufficientData { got: 2, min: 3 })
        );
    }
}
