//! Single-mode and sub-wavelength design rules for a step-index fiber.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// First zero of J0: the LP11/TE01/TM01 cutoff.
pub const V_CUTOFF: f64 = 2.404_825_557_695_773;

/// Rounded cutoff value used for the single-mode verdict.
pub const V_CUTOFF_DESIGN: f64 = 2.405;

/// Step-index fiber: glass of index `n1` and radius `radius_nm` in a
/// surrounding medium of index `n2` (air for a nanofiber).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberSpec {
    pub radius_nm: f64,
    pub n1: f64,
    pub n2: f64,
    pub wavelength_nm: f64,
}

impl FiberSpec {
    pub fn new(radius_nm: f64, n1: f64, n2: f64, wavelength_nm: f64) -> Result<Self> {
        let spec = FiberSpec {
            radius_nm,
            n1,
            n2,
            wavelength_nm,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Air-clad fiber (n2 = 1).
    pub fn air_clad(radius_nm: f64, n1: f64, wavelength_nm: f64) -> Result<Self> {
        Self::new(radius_nm, n1, 1.0, wavelength_nm)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_nm > 0.0 && self.radius_nm.is_finite()) {
            return Err(Error::invalid("radius_nm", "must be > 0"));
        }
        if !(self.n2 >= 1.0) {
            return Err(Error::invalid("n2", "must be >= 1"));
        }
        if !(self.n1 > self.n2) {
            return Err(Error::invalid("n1", "must exceed n2"));
        }
        if !(self.wavelength_nm > 0.0 && self.wavelength_nm.is_finite()) {
            return Err(Error::invalid("wavelength_nm", "must be > 0"));
        }
        Ok(())
    }

    /// Vacuum wavenumber in 1/nm.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.wavelength_nm
    }

    pub fn numerical_aperture(&self) -> f64 {
        (self.n1 * self.n1 - self.n2 * self.n2).sqrt()
    }

    pub fn with_radius(&self, radius_nm: f64) -> Self {
        FiberSpec { radius_nm, ..*self }
    }
}

/// Normalized frequency V = k a √(n1² − n2²).
pub fn v_number(spec: &FiberSpec) -> f64 {
    spec.k0() * spec.radius_nm * spec.numerical_aperture()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleModeCheck {
    pub single_mode: bool,
    pub v: f64,
    /// 2.405 − V; positive when single mode.
    pub margin: f64,
}

pub fn single_mode_check(spec: &FiberSpec) -> SingleModeCheck {
    SingleModeCheck::from_v(v_number(spec))
}

impl SingleModeCheck {
    pub fn from_v(v: f64) -> Self {
        SingleModeCheck {
            single_mode: v < V_CUTOFF_DESIGN,
            v,
            margin: V_CUTOFF_DESIGN - v,
        }
    }
}

/// Radius at which V reaches 2.405.
pub fn cutoff_radius(wavelength_nm: f64, n1: f64, n2: f64) -> Result<f64> {
    if !(n1 > n2) {
        return Err(Error::invalid("n1", "must exceed n2"));
    }
    Ok(V_CUTOFF_DESIGN * wavelength_nm / (2.0 * PI * (n1 * n1 - n2 * n2).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubwavelengthCheck {
    /// Diameter at most half the wavelength.
    pub satisfied: bool,
    /// λ / (2a).
    pub ratio: f64,
}

/// Factor-two rule: the field peaks at the surface once the diameter is at
/// most half the guided wavelength.
pub fn subwavelength_check(spec: &FiberSpec) -> SubwavelengthCheck {
    let ratio = spec.wavelength_nm / (2.0 * spec.radius_nm);
    SubwavelengthCheck {
        satisfied: ratio >= 2.0,
        ratio,
    }
}
