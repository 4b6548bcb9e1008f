//! Monte Carlo model of a blinking, bleaching single-photon emitter observed
//! through a two-detector HBT setup.

mod blinking;
mod extras;
mod stream;

pub use blinking::{on_intervals, powerlaw_min_dwell};
pub use extras::{
    simulate_polarimetry, simulate_saturation_data, simulate_spectrum, FWHM_PER_SIGMA,
};
pub use stream::{
    apply_router_dead_time, simulate, simulate_intensity_trace, simulate_stream, Simulation,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::timetag::{Excitation as ExcitationModel, ExcitationMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlinkingKind {
    None,
    TwoStateExponential,
    TwoStatePowerlaw,
}

/// Two-state on/off renewal process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlinkingModel {
    pub kind: BlinkingKind,
    pub mean_on_s: f64,
    pub mean_off_s: f64,
    /// Dwell density ∝ t^(−exponent) for the power-law kind.
    pub powerlaw_exponent: f64,
    /// Upper truncation of power-law dwells.
    pub dwell_cap_s: f64,
}

impl Default for BlinkingModel {
    fn default() -> Self {
        BlinkingModel {
            kind: BlinkingKind::None,
            mean_on_s: 1e-3,
            mean_off_s: 1e-3,
            powerlaw_exponent: 1.5,
            dwell_cap_s: 10.0,
        }
    }
}

impl BlinkingModel {
    pub fn two_state(mean_on_s: f64, mean_off_s: f64) -> Self {
        BlinkingModel {
            kind: BlinkingKind::TwoStateExponential,
            mean_on_s,
            mean_off_s,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == BlinkingKind::None {
            return Ok(());
        }
        if !(self.mean_on_s > 0.0 && self.mean_on_s.is_finite()) {
            return Err(Error::invalid("mean_on_s", "must be > 0"));
        }
        if !(self.mean_off_s > 0.0 && self.mean_off_s.is_finite()) {
            return Err(Error::invalid("mean_off_s", "must be > 0"));
        }
        if self.kind == BlinkingKind::TwoStatePowerlaw {
            if !(self.powerlaw_exponent > 1.0 && self.powerlaw_exponent.is_finite()) {
                return Err(Error::invalid("powerlaw_exponent", "must be > 1"));
            }
            if !(self.dwell_cap_s > 0.0 && self.dwell_cap_s.is_finite()) {
                return Err(Error::invalid("dwell_cap_s", "must be > 0"));
            }
            if self.mean_on_s.max(self.mean_off_s) >= self.dwell_cap_s {
                return Err(Error::invalid(
                    "dwell_cap_s",
                    "must exceed both mean dwell times",
                ));
            }
        }
        Ok(())
    }

    /// Long-run fraction of time spent on.
    pub fn duty_cycle(&self) -> f64 {
        match self.kind {
            BlinkingKind::None => 1.0,
            _ => self.mean_on_s / (self.mean_on_s + self.mean_off_s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Polarization {
    /// Degree of (linear) polarization.
    pub dop: f64,
    pub axis_deg: f64,
}

impl Default for Polarization {
    fn default() -> Self {
        Polarization {
            dop: 0.0,
            axis_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmitterModel {
    pub lifetime_ns: f64,
    pub quantum_yield: f64,
    /// Saturation power, nW.
    pub p_sat: f64,
    pub blinking: BlinkingModel,
    pub bleaching: bool,
    /// Mean survival time of an unprotected emitter.
    pub bleach_time_s: f64,
    /// Survival multiplier from encapsulation.
    pub bleach_protection_factor: f64,
    pub emission_center_nm: f64,
    pub emission_fwhm_nm: f64,
    pub polarization: Polarization,
}

impl Default for EmitterModel {
    fn default() -> Self {
        EmitterModel {
            lifetime_ns: 5.0,
            quantum_yield: 0.7,
            p_sat: 80.0,
            blinking: BlinkingModel::default(),
            bleaching: true,
            bleach_time_s: 900.0,
            bleach_protection_factor: 4.0,
            emission_center_nm: 518.0,
            emission_fwhm_nm: 16.0,
            polarization: Polarization::default(),
        }
    }
}

impl EmitterModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.lifetime_ns > 0.0 && self.lifetime_ns.is_finite()) {
            return Err(Error::invalid("lifetime_ns", "must be > 0"));
        }
        check_probability("quantum_yield", self.quantum_yield)?;
        if !(self.p_sat > 0.0 && self.p_sat.is_finite()) {
            return Err(Error::invalid("p_sat", "must be > 0"));
        }
        self.blinking.validate()?;
        if self.bleaching && !(self.bleach_time_s > 0.0 && self.bleach_time_s.is_finite()) {
            return Err(Error::invalid("bleach_time_s", "must be > 0"));
        }
        if !(self.bleach_protection_factor >= 1.0 && self.bleach_protection_factor.is_finite()) {
            return Err(Error::invalid("bleach_protection_factor", "must be >= 1"));
        }
        if !(self.emission_center_nm > 0.0 && self.emission_center_nm.is_finite()) {
            return Err(Error::invalid("emission_center_nm", "must be > 0"));
        }
        if !(self.emission_fwhm_nm >= 0.0 && self.emission_fwhm_nm.is_finite()) {
            return Err(Error::invalid("emission_fwhm_nm", "must be >= 0"));
        }
        check_probability("dop", self.polarization.dop)?;
        if !self.polarization.axis_deg.is_finite() {
            return Err(Error::invalid("axis_deg", "must be finite"));
        }
        Ok(())
    }

    /// Mean survival time including protection, s.
    pub fn mean_survival_s(&self) -> Option<f64> {
        self.bleaching
            .then_some(self.bleach_time_s * self.bleach_protection_factor)
    }

    /// Probability that one pulse excites the emitter: P/(P + P_sat).
    pub fn excitation_probability(&self, power_nw: f64) -> f64 {
        (power_nw / (power_nw + self.p_sat)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionChain {
    /// Fraction of photons sent to channel 0.
    pub splitter_ratio: f64,
    pub efficiency: [f64; 2],
    /// Dark counts per second, per channel.
    pub dark_rate: [f64; 2],
    /// Shared non-paralyzable dead time of the routing electronics.
    pub router_dead_time_ns: f64,
    pub timing_jitter_ps: f64,
    /// Objective or fiber collection efficiency.
    pub collection_efficiency: f64,
    /// Cable delay added to channel 1 ahead of the router.
    pub channel_delay_ns: f64,
}

impl Default for DetectionChain {
    fn default() -> Self {
        DetectionChain {
            splitter_ratio: 0.5,
            efficiency: [0.6, 0.6],
            dark_rate: [100.0, 100.0],
            router_dead_time_ns: 100.0,
            timing_jitter_ps: 200.0,
            collection_efficiency: 0.1,
            channel_delay_ns: 0.0,
        }
    }
}

impl DetectionChain {
    /// Noise-free, lossless chain.
    pub fn ideal() -> Self {
        DetectionChain {
            splitter_ratio: 0.5,
            efficiency: [1.0, 1.0],
            dark_rate: [0.0, 0.0],
            router_dead_time_ns: 0.0,
            timing_jitter_ps: 0.0,
            collection_efficiency: 1.0,
            channel_delay_ns: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("splitter_ratio", self.splitter_ratio)?;
        for &e in &self.efficiency {
            check_probability("efficiency", e)?;
        }
        for &d in &self.dark_rate {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::invalid("dark_rate", "must be >= 0"));
            }
        }
        if !(self.router_dead_time_ns >= 0.0 && self.router_dead_time_ns.is_finite()) {
            return Err(Error::invalid("router_dead_time_ns", "must be >= 0"));
        }
        if !(self.timing_jitter_ps >= 0.0 && self.timing_jitter_ps.is_finite()) {
            return Err(Error::invalid("timing_jitter_ps", "must be >= 0"));
        }
        check_probability("collection_efficiency", self.collection_efficiency)?;
        if !(self.channel_delay_ns >= 0.0 && self.channel_delay_ns.is_finite()) {
            return Err(Error::invalid("channel_delay_ns", "must be >= 0"));
        }
        Ok(())
    }

    /// Probability that an emitted photon is registered on each channel.
    pub fn channel_probabilities(&self) -> [f64; 2] {
        let c = self.collection_efficiency;
        [
            c * self.splitter_ratio * self.efficiency[0],
            c * (1.0 - self.splitter_ratio) * self.efficiency[1],
        ]
    }
}

fn check_probability(field: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(field, format!("{p} not in [0, 1]")));
    }
    Ok(())
}
