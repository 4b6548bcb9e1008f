//! Scenario files: TOML with `[emitter]`, `[excitation]`, `[chain]`,
//! `[analysis]` and optional `[fiber_coupling]` sections. Unknown keys are
//! rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::correlator::{LongDelayWindow, PulsedAnalysis};
use crate::emitter::{DetectionChain, EmitterModel, ExcitationModel};
use crate::error::{Error, Result};
use crate::fiber::{coupling_efficiency_estimate, sellmeier_silica, solve_he11, FiberSpec};
use crate::timetag::Ps;

/// Analysis settings. Repetition period, zero delay and lifetime come from
/// the other sections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub bin_width_ps: Ps,
    pub peak_window_ns: Option<f64>,
    /// Dead time to excise; defaults to the chain's router dead time.
    pub dead_time_ns: Option<f64>,
    pub side_peaks: i64,
    pub long_delay: LongDelayWindow,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let d = PulsedAnalysis::default();
        AnalysisSection {
            bin_width_ps: d.bin_width_ps,
            peak_window_ns: None,
            dead_time_ns: None,
            side_peaks: d.side_peaks,
            long_delay: d.long_delay,
        }
    }
}

/// Emitter on the surface of a silica nanofiber: the chain's collection
/// efficiency becomes β × transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiberCoupling {
    pub radius_nm: f64,
    pub wavelength_nm: f64,
    pub offset_nm: f64,
    /// Fiber transmission from the waist to the detectors.
    pub transmission: f64,
}

impl Default for FiberCoupling {
    fn default() -> Self {
        FiberCoupling {
            radius_nm: 150.0,
            wavelength_nm: 600.0,
            offset_nm: 0.0,
            transmission: 0.95,
        }
    }
}

impl FiberCoupling {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.transmission) {
            return Err(Error::invalid("transmission", "must be in [0, 1]"));
        }
        if !(self.offset_nm >= 0.0) {
            return Err(Error::invalid("offset_nm", "must be >= 0"));
        }
        Ok(())
    }

    /// β of the fundamental mode at the emitter position.
    pub fn beta(&self) -> Result<f64> {
        let n1 = sellmeier_silica(self.wavelength_nm)?;
        let mode = solve_he11(&FiberSpec::air_clad(
            self.radius_nm,
            n1,
            self.wavelength_nm,
        )?)?;
        coupling_efficiency_estimate(&mode, self.offset_nm)
    }

    pub fn collection_efficiency(&self) -> Result<f64> {
        Ok(self.beta()? * self.transmission)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default)]
    pub emitter: EmitterModel,
    #[serde(default)]
    pub excitation: ExcitationModel,
    #[serde(default)]
    pub chain: DetectionChain,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_coupling: Option<FiberCoupling>,
}

fn default_duration() -> f64 {
    10.0
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            seed: None,
            duration_s: default_duration(),
            emitter: EmitterModel::default(),
            excitation: ExcitationModel::default(),
            chain: DetectionChain::default(),
            analysis: AnalysisSection::default(),
            fiber_coupling: None,
        }
    }
}

impl Scenario {
    /// Parses and validates. With `[fiber_coupling]` the chain's
    /// collection efficiency is replaced by the fiber estimate.
    pub fn from_toml(text: &str) -> Result<Scenario> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map_or(0, |r| line_of(text, r.start)),
            reason: e.message().to_string(),
        })?;
        if let Some(f) = &s.fiber_coupling {
            f.validate()?;
            s.chain.collection_efficiency = f.collection_efficiency()?;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        Scenario::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::invalid("duration_s", "must be > 0"));
        }
        self.emitter.validate()?;
        self.excitation.validate()?;
        self.chain.validate()?;
        self.pulsed_analysis().validate()
    }

    /// Correlator settings matching the simulated stream.
    pub fn pulsed_analysis(&self) -> PulsedAnalysis {
        PulsedAnalysis {
            bin_width_ps: self.analysis.bin_width_ps,
            repetition_period_ns: self.excitation.repetition_period_ns,
            zero_delay_ns: self.chain.channel_delay_ns,
            peak_window_ns: self.analysis.peak_window_ns,
            lifetime_ns: Some(self.emitter.lifetime_ns),
            dead_time_ns: Some(
                self.analysis
                    .dead_time_ns
                    .unwrap_or(self.chain.router_dead_time_ns),
            ),
            side_peaks: self.analysis.side_peaks,
            long_delay: self.analysis.long_delay,
        }
    }

    /// Fully resolved scenario as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emitter::BlinkingKind;

    #[test]
    fn minimal_file_fills_defaults() {
        let s = Scenario::from_toml("seed = 7\n").unwrap();
        assert_eq!(s.seed, Some(7));
        assert_eq!(s.emitter, EmitterModel::default());
        assert_eq!(s.pulsed_analysis().repetition_period_ns, 200.0);
        let again = Scenario::from_toml(&s.to_toml()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn validation_names_field() {
        let err = Scenario::from_toml("[emitter]\np_sat = -1\n").unwrap_err();
        assert!(
            matches!(err, Error::Invalid { field: "p_sat", .. }),
            "{err}"
        );
    }

    #[test]
    fn unknown_key_reports_line() {
        let err =
            Scenario::from_toml("seed = 1\n\n[chain]\ndark_rate = [1.0, 1.0]\ndarkrate = 3\n")
                .unwrap_err();
        match err {
            Error::Config { line, reason } => {
                assert_eq!(line, 5, "{reason}");
                assert!(reason.contains("darkrate"));
            }
            other => panic!("{other}"),
        }
        assert!(matches!(
            Scenario::from_toml("seed = \n").unwrap_err(),
            Error::Config { line: 1, .. }
        ));
    }

    #[test]
    fn shipped_scenarios_load() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
        let fig4 = Scenario::load(&dir.join("paper_fig4.cfg")).unwrap();
        assert_eq!(fig4.excitation.repetition_period_ns, 200.0);
        assert_eq!(fig4.chain.router_dead_time_ns, 100.0);
        assert_eq!(
            fig4.emitter.blinking.kind,
            BlinkingKind::TwoStateExponential
        );
        let fig6 = Scenario::load(&dir.join("paper_fig6.cfg")).unwrap();
        let f = fig6.fiber_coupling.unwrap();
        assert_eq!(
            fig6.chain.collection_efficiency,
            f.collection_efficiency().unwrap()
        );
        Scenario::load(&dir.join("ideal.cfg")).unwrap();
    }

    #[test]
    fn thinner_fiber_collects_more() {
        let thin = FiberCoupling::default().beta().unwrap();
        let thick = FiberCoupling {
            radius_nm: 300.0,
            ..Default::default()
        }
        .beta()
        .unwrap();
        assert!(thin > thick && thin < 1.0);
    }
}
