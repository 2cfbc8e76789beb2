//! Difference-quotient proxy series and the four Nadaraya-Watson estimators.
//!
//! From integral observations the latent state is proxied by
//! `breve(i) = (Y(i delta) - Y((i-1) delta)) / delta`. Drift and squared
//! diffusion are then kernel-weighted means of first and second powers of the
//! proxy increments; the squared-diffusion estimator from the proxy carries a
//! 3/2 correction because averaging the state inside each sampling interval
//! shrinks increment variance by 2/3. The direct estimators apply the same
//! smoother to true state observations, with no correction factor.
//!
//! Weights and responses follow the convention that the weight anchor trails
//! the increment: a summand pairs the kernel weight at the proxy (or state)
//! one spacing before the increment's left endpoint. For the proxy series,
//! whose first defined entry is at time `delta`, the first usable summand
//! therefore starts two entries in, leaving `n - 2` summands; the direct
//! estimators use all `n` increments.

use crate::kernels::KernelSpec;
use crate::numeric::KahanSum;
use crate::sde::ObservationSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("spacing delta must be positive and finite, got {0}")]
    InvalidDelta(f64),
    #[error("evaluation grid is empty")]
    EmptyGrid,
    #[error("need at least {min} observation intervals, got {got}")]
    TooFewObservations { got: usize, min: usize },
}

/// Scale below which a mean kernel weight is treated as an empty window.
/// The threshold is relative to the kernel's natural magnitude 1/h.
pub const EPS_DEN_COEFF: f64 = 1e-12;

/// Denominator cutoff for bandwidth `h`: mean weights below this flag the
/// evaluation point as undefined (NaN) instead of producing a wild ratio.
pub fn eps_den(h: f64) -> f64 {
    EPS_DEN_COEFF / h
}

/// Proxy series for the latent state, one value per observation interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BreveSeries {
    /// `values[i]` estimates the state over the (i+1)-th interval.
    pub values: Vec<f64>,
    pub delta: f64,
}

/// A fitted curve on an evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateCurve {
    pub eval_points: Vec<f64>,
    /// Estimates; NaN exactly where the local denominator is below `eps_den`.
    pub values: Vec<f64>,
    /// Mean kernel weight per point (empirical density diagnostic).
    pub denominators: Vec<f64>,
    pub h: f64,
    /// Number of summands each point was computed from.
    pub n_used: usize,
}

/// Difference quotients of the integral observations.
pub fn compute_breve(obs: &ObservationSet) -> Result<BreveSeries, EstimatorError> {
    if obs.n < 2 {
        return Err(EstimatorError::TooFewObservations { got: obs.n, min: 2 });
    }
    let values = obs
        .y_obs
        .windows(2)
        .map(|w| (w[1] - w[0]) / obs.delta)
        .collect();
    Ok(BreveSeries {
        values,
        delta: obs.delta,
    })
}

fn check_curve_args(h: f64, delta: f64, eval_points: &[f64]) -> Result<(), EstimatorError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(EstimatorError::InvalidBandwidth(h));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(EstimatorError::InvalidDelta(delta));
    }
    if eval_points.is_empty() {
        return Err(EstimatorError::EmptyGrid);
    }
    Ok(())
}

/// Shared ratio smoother: value(x) = sum w_i r_i / (delta * sum w_i) with
/// w_i = K_h(anchor_i - x). Numerator and denominator accumulate in anchor
/// order with compensated summation.
fn nw_curve(
    anchors: &[f64],
    responses: &[f64],
    delta: f64,
    kernel: &KernelSpec,
    h: f64,
    eval_points: &[f64],
) -> EstimateCurve {
    debug_assert_eq!(anchors.len(), responses.len());
    let n_used = anchors.len();
    let cutoff = eps_den(h);
    let mut values = Vec::with_capacity(eval_points.len());
    let mut denominators = Vec::with_capacity(eval_points.len());
    for &x in eval_points {
        let mut num = KahanSum::new();
        let mut den = KahanSum::new();
        for (&a, &r) in anchors.iter().zip(responses) {
            let w = kernel.scaled_unchecked(h, a - x);
            den.add(w);
            num.add(w * r);
        }
        let den_total = den.value();
        let den_mean = den_total / n_used as f64;
        denominators.push(den_mean);
        if den_mean < cutoff {
            values.push(f64::NAN);
        } else {
            values.push(num.value() / (delta * den_total));
        }
    }
    EstimateCurve {
        eval_points: eval_points.to_vec(),
        values,
        denominators,
        h,
        n_used,
    }
}

fn integrated_inputs(
    breve: &BreveSeries,
    square: bool,
) -> Result<(Vec<f64>, Vec<f64>), EstimatorError> {
    let n = breve.values.len();
    if n < 3 {
        return Err(EstimatorError::TooFewObservations { got: n, min: 3 });
    }
    let anchors = breve.values[..n - 2].to_vec();
    let responses = (0..n - 2)
        .map(|j| {
            let d = breve.values[j + 2] - breve.values[j + 1];
            if square {
                1.5 * d * d
            } else {
                d
            }
        })
        .collect();
    Ok((anchors, responses))
}

/// Squared-diffusion estimator from the proxy series (3/2-corrected squared
/// proxy increments).
pub fn nw_sigma2_integrated(
    breve: &BreveSeries,
    kernel: &KernelSpec,
    h: f64,
    eval_points: &[f64],
) -> Result<EstimateCurve, EstimatorError> {
    check_curve_args(h, breve.delta, eval_points)?;
    let (anchors, responses) = integrated_inputs(breve, true)?;
    Ok(nw_curve(
        &anchors,
        &responses,
        breve.delta,
        kernel,
        h,
        eval_points,
    ))
}

/// Drift estimator from the proxy series (first-power proxy increments).
pub fn nw_drift_integrated(
    breve: &BreveSeries,
    kernel: &KernelSpec,
    h: f64,
    eval_points: &[f64],
) -> Result<EstimateCurve, EstimatorError> {
    check_curve_args(h, breve.delta, eval_points)?;
    let (anchors, responses) = integrated_inputs(breve, false)?;
    Ok(nw_curve(
        &anchors,
        &responses,
        breve.delta,
        kernel,
        h,
        eval_points,
    ))
}

fn direct_inputs(x_obs: &[f64], square: bool) -> Result<(Vec<f64>, Vec<f64>), EstimatorError> {
    if x_obs.len() < 2 {
        return Err(EstimatorError::TooFewObservations {
            got: x_obs.len().saturating_sub(1),
            min: 1,
        });
    }
    let n = x_obs.len() - 1;
    let anchors = x_obs[..n].to_vec();
    let responses = (0..n)
        .map(|i| {
            let d = x_obs[i + 1] - x_obs[i];
            if square {
                d * d
            } else {
                d
            }
        })
        .collect();
    Ok((anchors, responses))
}

/// Squared-diffusion estimator from direct state observations. No correction
/// factor applies.
pub fn nw_sigma2_direct(
    x_obs: &[f64],
    delta: f64,
    kernel: &KernelSpec,
    h: f64,
    eval_points: &[f64],
) -> Result<EstimateCurve, EstimatorError> {
    check_curve_args(h, delta, eval_points)?;
    let (anchors, responses) = direct_inputs(x_obs, true)?;
    Ok(nw_curve(
        &anchors,
        &responses,
        delta,
        kernel,
        h,
        eval_points,
    ))
}

/// Drift estimator from direct state observations.
pub fn nw_drift_direct(
    x_obs: &[f64],
    delta: f64,
    kernel: &KernelSpec,
    h: f64,
    eval_points: &[f64],
) -> Result<EstimateCurve, EstimatorError> {
    check_curve_args(h, delta, eval_points)?;
    let (anchors, responses) = direct_inputs(x_obs, false)?;
    Ok(nw_curve(
        &anchors,
        &responses,
        delta,
        kernel,
        h,
        eval_points,
    ))
}
