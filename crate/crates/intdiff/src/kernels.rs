//! Smoothing kernels for the Nadaraya-Watson estimators.
//!
//! All provided kernels are symmetric densities with compact support, so an
//! evaluation outside `[-support_radius, support_radius]` is exactly zero and
//! the bandwidth-scaled form `K_h(z) = K(z/h)/h` integrates to one for any
//! positive bandwidth.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("kernel validation needs at least {min} quadrature points, got {got}")]
    TooFewQuadPoints { got: usize, min: usize },
    #[error("unknown kernel kind {0:?}")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Epanechnikov,
    Uniform,
    Triangular,
}

impl KernelKind {
    /// Lowercase name used in configuration files and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Epanechnikov => "epanechnikov",
            KernelKind::Uniform => "uniform",
            KernelKind::Triangular => "triangular",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, KernelError> {
        match name {
            "epanechnikov" => Ok(KernelKind::Epanechnikov),
            "uniform" => Ok(KernelKind::Uniform),
            "triangular" => Ok(KernelKind::Triangular),
            other => Err(KernelError::UnknownKind(other.to_string())),
        }
    }
}

/// A kernel together with the constants the estimation theory refers to.
///
/// `lipschitz` is recorded for reference only; the uniform kernel has a jump
/// at the support edge and stores infinity there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub support_radius: f64,
    pub sup_bound: f64,
    pub lipschitz: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind) -> Self {
        match kind {
            KernelKind::Epanechnikov => KernelSpec {
                kind,
                support_radius: 1.0,
                sup_bound: 0.75,
                lipschitz: 1.5,
            },
            KernelKind::Uniform => KernelSpec {
                kind,
                support_radius: 1.0,
                sup_bound: 0.5,
                lipschitz: f64::INFINITY,
            },
            KernelKind::Triangular => KernelSpec {
                kind,
                support_radius: 1.0,
                sup_bound: 1.0,
                lipschitz: 1.0,
            },
        }
    }

    /// K(u). Exactly zero outside the support, endpoints included in it.
    pub fn eval(&self, u: f64) -> f64 {
        if u.abs() > self.support_radius {
            return 0.0;
        }
        match self.kind {
            KernelKind::Epanechnikov => 0.75 * (1.0 - u * u),
            KernelKind::Uniform => 0.5,
            KernelKind::Triangular => 1.0 - u.abs(),
        }
    }

    /// K_h(z) = K(z/h)/h. The caller must have validated h > 0.
    #[inline]
    pub fn scaled_unchecked(&self, h: f64, z: f64) -> f64 {
        debug_assert!(h > 0.0);
        self.eval(z / h) / h
    }
}

/// Kernel value at `u`.
pub fn kernel_eval(spec: &KernelSpec, u: f64) -> f64 {
    spec.eval(u)
}

/// Bandwidth-scaled kernel value `K(z/h)/h`.
pub fn kernel_scaled(spec: &KernelSpec, h: f64, z: f64) -> Result<f64, KernelError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(KernelError::InvalidBandwidth(h));
    }
    Ok(spec.scaled_unchecked(h, z))
}

/// Numeric checks of the kernel assumptions on one spec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    /// Composite-Simpson value of the integral of K over its support.
    pub integral: f64,
    /// Composite-Simpson value of the second moment of K over its support.
    pub second_moment: f64,
    /// Largest |K(u) - K(-u)| over the quadrature grid.
    pub max_symmetry_defect: f64,
    pub passes: bool,
}

/// Integrates K and u^2 K over the support and probes symmetry on the same
/// grid. Passes when the integral is 1 within 1e-9 and the symmetry defect is
/// below 1e-12.
pub fn validate_kernel(
    spec: &KernelSpec,
    quad_points: usize,
) -> Result<ValidationReport, KernelError> {
    const MIN_POINTS: usize = 100;
    if quad_points < MIN_POINTS {
        return Err(KernelError::TooFewQuadPoints {
            got: quad_points,
            min: MIN_POINTS,
        });
    }
    // Composite Simpson over [-c, c] with an even interval count.
    let intervals = if quad_points.is_multiple_of(2) {
        quad_points
    } else {
        quad_points + 1
    };
    let c = spec.support_radius;
    let step = 2.0 * c / intervals as f64;
    let mut integral = crate::numeric::KahanSum::new();
    let mut second = crate::numeric::KahanSum::new();
    let mut defect = 0.0f64;
    for i in 0..=intervals {
        let u = -c + i as f64 * step;
        let w = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let k = spec.eval(u);
        integral.add(w * k);
        second.add(w * u * u * k);
        defect = defect.max((k - spec.eval(-u)).abs());
    }
    let scale = step / 3.0;
    let integral = integral.value() * scale;
    let second_moment = second.value() * scale;
    let passes = (integral - 1.0).abs() < 1e-9 && defect < 1e-12;
    Ok(ValidationReport {
        integral,
        second_moment,
        max_symmetry_defect: defect,
        passes,
    })
}
