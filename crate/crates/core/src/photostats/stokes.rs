use serde::Serialize;

use crate::error::{Error, Result};

/// DOP below which a source is reported as unpolarized.
pub const UNPOLARIZED_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StokesVector {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

/// Stokes vector from the six analyzer settings H, V, D, A, R, L.
pub fn stokes_from_intensities(i: [f64; 6]) -> Result<StokesVector> {
    if let Some(bad) = i.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::invalid(
            "intensity",
            format!("{bad} is not a finite value >= 0"),
        ));
    }
    let [h, v, d, a, r, l] = i;
    Ok(StokesVector {
        s0: h + v,
        s1: h - v,
        s2: d - a,
        s3: r - l,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dop {
    /// Clamped to [0, 1].
    pub value: f64,
    /// Unclamped √(s1² + s2² + s3²)/s0.
    pub raw: f64,
    /// `raw` exceeded 1, so the six measurements are mutually inconsistent.
    pub out_of_range: bool,
}

impl Dop {
    pub fn is_unpolarized(&self, threshold: f64) -> bool {
        self.value < threshold
    }
}

pub fn degree_of_polarization(s: &StokesVector) -> Result<Dop> {
    if !(s.s0 > 0.0) {
        return Err(Error::invalid("s0", "total intensity must be > 0"));
    }
    let raw = (s.s1 * s.s1 + s.s2 * s.s2 + s.s3 * s.s3).sqrt() / s.s0;
    Ok(Dop {
        value: raw.min(1.0),
        raw,
        out_of_range: raw > 1.0,
    })
}
