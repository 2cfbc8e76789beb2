//! Experiment configuration: a documented JSON schema parsed into a fully
//! validated form with defaults applied.
//!
//! Schema (keys and types; * marks required keys):
//!
//! ```json
//! {
//!   "model":        {"kind": "cir" | "ou", "kappa": f, "theta": f, "sigma": f},  *
//!   "deltas":       [f, ...],          * observation spacings, each > 0
//!   "bandwidths":   [f, ...],          * kernel bandwidths, each > 0
//!   "ns":           [i, ...],          * observation counts, each >= 3
//!   "replications": i,                 * Monte-Carlo replications, >= 1
//!   "eval_points":  i,                 * evaluation-grid size, >= 2
//!   "eval_range":   [lo, hi],          * evaluation interval, lo < hi
//!   "estimators":   ["sigma2_direct", "sigma2_integrated",
//!                    "drift_direct", "drift_integrated"],  * nonempty subset
//!   "master_seed":  i,                 * 64-bit reproducibility seed
//!   "kernel":       "epanechnikov" | "uniform" | "triangular",   (default epanechnikov)
//!   "fine_factor":  i,                 simulation substeps per spacing, >= 1 (default 10)
//!   "burn_in_time": f,                 time discarded before recording, >= 0 (default 10/kappa)
//!   "output_dir":   "path",            (default "out")
//!   "quadrature":   "left_riemann" | "trapezoid",   (default left_riemann)
//!   "rate_params":  {"q": f, "theta": f, "kappa_exp": f,
//!                    "theta_bar": f, "kappa_bar": f, "beta_mix": f}   (defaults apply)
//! }
//! ```

use intdiff::analysis::{EstimatorTag, RateParams};
use intdiff::kernels::KernelKind;
use intdiff::sde::{Quadrature, SdeModel};
use serde::Deserialize;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config field `{field}`: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Cir,
    Ou,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cir => "cir",
            ModelKind::Ou => "ou",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "cir" => Some(ModelKind::Cir),
            "ou" => Some(ModelKind::Ou),
            _ => None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: String,
    kappa: f64,
    theta: f64,
    sigma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRateParams {
    q: f64,
    theta: f64,
    kappa_exp: f64,
    theta_bar: f64,
    kappa_bar: f64,
    beta_mix: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    deltas: Vec<f64>,
    bandwidths: Vec<f64>,
    ns: Vec<u64>,
    replications: usize,
    eval_points: usize,
    eval_range: (f64, f64),
    estimators: Vec<String>,
    master_seed: u64,
    kernel: Option<String>,
    fine_factor: Option<usize>,
    burn_in_time: Option<f64>,
    output_dir: Option<String>,
    quadrature: Option<String>,
    rate_params: Option<RawRateParams>,
}

/// Fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model_kind: ModelKind,
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    pub deltas: Vec<f64>,
    pub bandwidths: Vec<f64>,
    pub ns: Vec<u64>,
    pub replications: usize,
    pub eval_points: usize,
    pub eval_range: (f64, f64),
    pub estimators: Vec<EstimatorTag>,
    pub master_seed: u64,
    pub kernel: KernelKind,
    pub fine_factor: usize,
    pub burn_in_time: f64,
    pub output_dir: PathBuf,
    pub quadrature: Quadrature,
    pub rate_params: RateParams,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text)?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let model_kind = ModelKind::from_name(&raw.model.kind)
            .ok_or_else(|| invalid("model.kind", format!("unknown kind `{}`", raw.model.kind)))?;
        // Validate model parameters before the burn-in default (10 / kappa)
        // divides by them.
        match model_kind {
            ModelKind::Cir => SdeModel::cir(raw.model.kappa, raw.model.theta, raw.model.sigma),
            ModelKind::Ou => SdeModel::ou(raw.model.kappa, raw.model.theta, raw.model.sigma),
        }
        .map_err(|e| invalid("model", e.to_string()))?;

        if raw.deltas.is_empty() {
            return Err(invalid("deltas", "must be nonempty"));
        }
        for &d in &raw.deltas {
            if !(d > 0.0) || !d.is_finite() {
                return Err(invalid(
                    "deltas",
                    format!("spacing must be positive, got {d}"),
                ));
            }
        }
        if raw.bandwidths.is_empty() {
            return Err(invalid("bandwidths", "must be nonempty"));
        }
        for &h in &raw.bandwidths {
            if !(h > 0.0) || !h.is_finite() {
                return Err(invalid(
                    "bandwidths",
                    format!("bandwidth must be positive, got {h}"),
                ));
            }
        }
        if raw.ns.is_empty() {
            return Err(invalid("ns", "must be nonempty"));
        }
        for &n in &raw.ns {
            if n < 3 {
                return Err(invalid(
                    "ns",
                    format!("need at least 3 observation intervals, got {n}"),
                ));
            }
        }
        if raw.replications < 1 {
            return Err(invalid("replications", "must be at least 1"));
        }
        if raw.eval_points < 2 {
            return Err(invalid("eval_points", "must be at least 2"));
        }
        let (lo, hi) = raw.eval_range;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(
                "eval_range",
                format!("need finite lo < hi, got [{lo}, {hi}]"),
            ));
        }
        if raw.estimators.is_empty() {
            return Err(invalid("estimators", "must select at least one estimator"));
        }
        let mut estimators = Vec::with_capacity(raw.estimators.len());
        for name in &raw.estimators {
            let tag = EstimatorTag::from_name(name)
                .ok_or_else(|| invalid("estimators", format!("unknown estimator `{name}`")))?;
            if estimators.contains(&tag) {
                return Err(invalid(
                    "estimators",
                    format!("duplicate estimator `{name}`"),
                ));
            }
            estimators.push(tag);
        }

        let kernel = match raw.kernel.as_deref() {
            None => KernelKind::Epanechnikov,
            Some(name) => KernelKind::from_name(name)
                .map_err(|_| invalid("kernel", format!("unknown kernel `{name}`")))?,
        };
        let quadrature = match raw.quadrature.as_deref() {
            None => Quadrature::LeftRiemann,
            Some(name) => Quadrature::from_name(name)
                .ok_or_else(|| invalid("quadrature", format!("unknown quadrature `{name}`")))?,
        };
        let fine_factor = raw.fine_factor.unwrap_or(10);
        if fine_factor < 1 {
            return Err(invalid("fine_factor", "must be at least 1"));
        }
        let burn_in_time = raw.burn_in_time.unwrap_or(10.0 / raw.model.kappa);
        if !(burn_in_time >= 0.0) || !burn_in_time.is_finite() {
            return Err(invalid(
                "burn_in_time",
                format!("must be nonnegative and finite, got {burn_in_time}"),
            ));
        }
        let rate_params = match raw.rate_params {
            None => RateParams::default(),
            Some(rp) => RateParams::new(
                rp.q,
                rp.theta,
                rp.kappa_exp,
                rp.theta_bar,
                rp.kappa_bar,
                rp.beta_mix,
            )
            .map_err(|e| invalid("rate_params", e.to_string()))?,
        };

        let config = ExperimentConfig {
            model_kind,
            kappa: raw.model.kappa,
            theta: raw.model.theta,
            sigma: raw.model.sigma,
            deltas: raw.deltas,
            bandwidths: raw.bandwidths,
            ns: raw.ns,
            replications: raw.replications,
            eval_points: raw.eval_points,
            eval_range: raw.eval_range,
            estimators,
            master_seed: raw.master_seed,
            kernel,
            fine_factor,
            burn_in_time,
            output_dir: PathBuf::from(raw.output_dir.unwrap_or_else(|| "out".to_string())),
            quadrature,
            rate_params,
        };
        Ok(config)
    }

    /// Builds the configured model; parameter errors become config errors.
    pub fn build_model(&self) -> Result<SdeModel, ConfigError> {
        let model = match self.model_kind {
            ModelKind::Cir => SdeModel::cir(self.kappa, self.theta, self.sigma),
            ModelKind::Ou => SdeModel::ou(self.kappa, self.theta, self.sigma),
        }
        .map_err(|e| invalid("model", e.to_string()))?;
        Ok(model)
    }

    /// Paths start at the long-run mean of the state process.
    pub fn x0(&self) -> f64 {
        self.theta
    }
}
