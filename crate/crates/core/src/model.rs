//! Physical model description shared by the kernel, the sampler and the
//! expectation layer.

use core::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("boson mass nu = {nu} must be positive")]
    NonPositiveMass { nu: f64 },
    #[error("dimension d = {d} is not supported (radial reductions exist for d = 1 and d = 3)")]
    UnsupportedDimension { d: u32 },
    #[error("cutoff parameter {name} = {value} must be positive and finite")]
    InvalidCutoff { name: &'static str, value: f64 },
    #[error("sharp UV cutoff has a sign-changing charge density; enable the positivity override to use it")]
    NonPositiveCharge,
    #[error("point charge cutoff is only meaningful for the polaron")]
    PointChargeOutsidePolaron,
    #[error("harmonic frequency omega0 = {omega0} must be positive")]
    NonPositiveFrequency { omega0: f64 },
    #[error("coupling g = {g} must be finite")]
    InvalidCoupling { g: f64 },
    #[error("infrared divergence: {detail}")]
    InfraredDivergence { detail: &'static str },
    #[error("ultraviolet divergence: {detail}")]
    UltravioletDivergence { detail: &'static str },
}

/// Radial form factor `φ̂(|k|)` of the charge distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutoffKind {
    /// `φ̂(k) = N·exp(−|k|²/(2w²))`.
    Gaussian { width: f64 },
    /// `φ̂(k) = N·1{|k| ≤ K}`.
    SharpUv { k_max: f64 },
    /// `φ̂(k) = N`, a point charge (`N = (2π)^{−d/2}` for a unit delta).
    PointPolaron,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffFunction {
    pub kind: CutoffKind,
    pub normalization: f64,
    /// Admits charge densities that are not pointwise nonnegative.
    pub allow_nonpositive: bool,
}

impl CutoffFunction {
    pub fn gaussian(width: f64) -> Self {
        Self { kind: CutoffKind::Gaussian { width }, normalization: 1.0, allow_nonpositive: false }
    }

    pub fn sharp_uv(k_max: f64) -> Self {
        Self { kind: CutoffKind::SharpUv { k_max }, normalization: 1.0, allow_nonpositive: false }
    }

    /// Unit point charge in three dimensions, `φ̂ = (2π)^{−3/2}`.
    pub fn point_charge() -> Self {
        Self { kind: CutoffKind::PointPolaron, normalization: (2.0 * PI).powf(-1.5), allow_nonpositive: false }
    }

    pub fn with_normalization(mut self, normalization: f64) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn with_override(mut self, allow: bool) -> Self {
        self.allow_nonpositive = allow;
        self
    }

    /// `|φ̂(k)|²` at radius `k`.
    pub fn squared(&self, k: f64) -> f64 {
        let n2 = self.normalization * self.normalization;
        match self.kind {
            CutoffKind::Gaussian { width } => n2 * (-(k * k) / (width * width)).exp(),
            CutoffKind::SharpUv { k_max } => {
                if k <= k_max {
                    n2
                } else {
                    0.0
                }
            }
            CutoffKind::PointPolaron => n2,
        }
    }

    /// Radius beyond which `|φ̂|²` is below `e^{−45}` of its peak (or exactly zero).
    pub fn support_radius(&self) -> f64 {
        match self.kind {
            CutoffKind::Gaussian { width } => width * 45f64.sqrt(),
            CutoffKind::SharpUv { k_max } => k_max,
            CutoffKind::PointPolaron => f64::INFINITY,
        }
    }

    /// Characteristic momentum scale.
    pub fn momentum_scale(&self) -> f64 {
        match self.kind {
            CutoffKind::Gaussian { width } => width,
            CutoffKind::SharpUv { k_max } => k_max,
            CutoffKind::PointPolaron => 1.0,
        }
    }

    /// Whether the charge density `φ(x)` is pointwise nonnegative.
    pub fn is_positive(&self) -> bool {
        !matches!(self.kind, CutoffKind::SharpUv { .. })
    }

    fn validate(&self) -> Result<(), ModelError> {
        if !(self.normalization > 0.0 && self.normalization.is_finite()) {
            return Err(ModelError::InvalidCutoff { name: "normalization", value: self.normalization });
        }
        match self.kind {
            CutoffKind::Gaussian { width } if !(width > 0.0 && width.is_finite()) => {
                Err(ModelError::InvalidCutoff { name: "width", value: width })
            }
            CutoffKind::SharpUv { k_max } if !(k_max > 0.0 && k_max.is_finite()) => {
                Err(ModelError::InvalidCutoff { name: "k_max", value: k_max })
            }
            CutoffKind::SharpUv { .. } if !self.allow_nonpositive => Err(ModelError::NonPositiveCharge),
            _ => Ok(()),
        }
    }
}

/// `ω(k) = √(|k|² + ν²)` or the constant polaron dispersion `ω ≡ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DispersionSpec {
    Massive { nu: f64 },
    PolaronUnit,
}

impl DispersionSpec {
    pub fn omega(&self, k: f64) -> f64 {
        match *self {
            DispersionSpec::Massive { nu } => (k * k + nu * nu).sqrt(),
            DispersionSpec::PolaronUnit => 1.0,
        }
    }

    /// Slowest temporal decay rate of the kernel.
    pub fn gap(&self) -> f64 {
        match *self {
            DispersionSpec::Massive { nu } => nu,
            DispersionSpec::PolaronUnit => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Particle confined by `V(x) = ω₀² |x|²/2`.
    Nelson { omega0: f64 },
    /// Polaron-type coupling `φ̂/|k|` with `ω ≡ 1`, confined harmonically.
    Polaron { omega0: f64 },
    /// Translation-invariant Nelson fiber at total momentum zero.
    ZeroMomentum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub variant: Variant,
    pub dimension: u32,
    pub dispersion: DispersionSpec,
    pub cutoff: CutoffFunction,
    pub g: f64,
}

impl ModelSpec {
    pub fn nelson(dimension: u32, nu: f64, omega0: f64, cutoff: CutoffFunction, g: f64) -> Self {
        Self { variant: Variant::Nelson { omega0 }, dimension, dispersion: DispersionSpec::Massive { nu }, cutoff, g }
    }

    pub fn polaron(dimension: u32, omega0: f64, cutoff: CutoffFunction, g: f64) -> Self {
        Self { variant: Variant::Polaron { omega0 }, dimension, dispersion: DispersionSpec::PolaronUnit, cutoff, g }
    }

    pub fn zero_momentum(dimension: u32, nu: f64, cutoff: CutoffFunction, g: f64) -> Self {
        Self { variant: Variant::ZeroMomentum, dimension, dispersion: DispersionSpec::Massive { nu }, cutoff, g }
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn is_polaron(&self) -> bool {
        matches!(self.variant, Variant::Polaron { .. })
    }

    /// Checks parameters and, separately, finiteness of `W∞`.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.dimension != 1 && self.dimension != 3 {
            return Err(ModelError::UnsupportedDimension { d: self.dimension });
        }
        if !self.g.is_finite() {
            return Err(ModelError::InvalidCoupling { g: self.g });
        }
        self.cutoff.validate()?;
        match self.variant {
            Variant::Nelson { omega0 } | Variant::Polaron { omega0 } if !(omega0 > 0.0 && omega0.is_finite()) => {
                return Err(ModelError::NonPositiveFrequency { omega0 })
            }
            _ => {}
        }
        match (self.variant, self.dispersion) {
            (Variant::Polaron { .. }, DispersionSpec::PolaronUnit) => {}
            (Variant::Polaron { .. }, DispersionSpec::Massive { .. }) | (_, DispersionSpec::PolaronUnit) => {
                return Err(ModelError::InvalidCutoff { name: "dispersion", value: f64::NAN })
            }
            (_, DispersionSpec::Massive { nu }) if !(nu > 0.0 && nu.is_finite()) => {
                return Err(ModelError::NonPositiveMass { nu })
            }
            _ => {}
        }
        if matches!(self.cutoff.kind, CutoffKind::PointPolaron) && !self.is_polaron() {
            return Err(ModelError::PointChargeOutsidePolaron);
        }
        Ok(())
    }

    /// Errors when `W∞` diverges for this model.
    pub fn check_integrability(&self) -> Result<(), ModelError> {
        self.validate()?;
        if self.is_polaron() {
            if matches!(self.cutoff.kind, CutoffKind::PointPolaron) {
                return Err(ModelError::UltravioletDivergence {
                    detail: "∫|φ̂|²/|k|² dk diverges at large |k| for a point charge",
                });
            }
            if self.dimension < 3 {
                return Err(ModelError::InfraredDivergence { detail: "∫|φ̂|²/|k|² dk diverges at k = 0 for d < 3" });
            }
        }
        Ok(())
    }

    /// Mass gap of the dispersion, which sets the temporal decay rate.
    pub fn gap(&self) -> f64 {
        self.dispersion.gap()
    }

    /// Default half-window `T = 8/ν`.
    pub fn default_window(&self) -> f64 {
        8.0 / self.gap()
    }
}
