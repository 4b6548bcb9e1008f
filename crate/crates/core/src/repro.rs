//! Executable checks of the headline figures: simulate a scenario, run the
//! pulsed correlator pipeline, compare against the reported bounds.

use serde::Serialize;

use crate::correlator::{analyze_pulsed, G2Result, Quality, Verdict};
use crate::emitter::{simulate, BlinkingModel, Simulation};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::timetag::split_channels;

/// Nearest side peaks that must show blinking-induced bunching.
pub const BUNCHED_SIDE_PEAKS: i64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Check {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproReport {
    pub name: String,
    pub g2_zero: f64,
    pub g2_zero_sigma: f64,
    pub verdict: Verdict,
    pub quality: Quality,
    pub collection_efficiency: f64,
    pub tags: usize,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub g2: G2Result,
}

impl ReproReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Simulates the scenario (seed required) and analyzes it.
pub fn run_pipeline(scenario: &Scenario) -> Result<(Simulation, G2Result)> {
    scenario.validate()?;
    let seed = scenario
        .seed
        .ok_or_else(|| Error::invalid("seed", "required to simulate"))?;
    let sim = simulate(
        &scenario.emitter,
        &scenario.excitation,
        &scenario.chain,
        scenario.duration_s,
        seed,
    )?;
    let (a, b) = split_channels(&sim.stream);
    let g2 = analyze_pulsed(&a, &b, &scenario.pulsed_analysis())?;
    Ok((sim, g2))
}

fn report(
    name: &str,
    scenario: &Scenario,
    sim: &Simulation,
    g2: &G2Result,
    checks: Vec<Check>,
) -> ReproReport {
    ReproReport {
        name: name.to_string(),
        g2_zero: g2.g2_zero,
        g2_zero_sigma: g2.g2_zero_sigma,
        verdict: g2.verdict,
        quality: g2.quality,
        collection_efficiency: scenario.chain.collection_efficiency,
        tags: sim.stream.len(),
        checks,
        g2: g2.clone(),
    }
}

/// Blinking nanocrystal: g²(0) < 0.1, nearest side peaks above 1; the
/// same scenario without blinking has every side peak at 1 within 4σ.
pub fn repro_fig4(scenario: &Scenario) -> Result<ReproReport> {
    let (sim, g2) = run_pipeline(scenario)?;
    let mut checks = vec![Check::new(
        "g2_zero < 0.1",
        g2.g2_zero < 0.1,
        format!("g2(0) = {:.4} ± {:.4}", g2.g2_zero, g2.g2_zero_sigma),
    )];
    let mut low = Vec::new();
    for k in (-BUNCHED_SIDE_PEAKS..=BUNCHED_SIDE_PEAKS).filter(|&k| k != 0) {
        match g2.peak(k) {
            Some((v, _)) if v > 1.0 => {}
            Some((v, s)) => low.push(format!("k={k}: {v:.3}±{s:.3}")),
            None => low.push(format!("k={k}: missing")),
        }
    }
    checks.push(Check::new(
        "nearest side peaks > 1",
        low.is_empty(),
        if low.is_empty() {
            format!("±{BUNCHED_SIDE_PEAKS} peaks bunched")
        } else {
            low.join(", ")
        },
    ));

    let steady = Scenario {
        emitter: crate::emitter::EmitterModel {
            blinking: BlinkingModel::default(),
            ..scenario.emitter
        },
        ..scenario.clone()
    };
    let (_, g2_steady) = run_pipeline(&steady)?;
    let mut off = Vec::new();
    let mut counted = 0;
    for p in g2_steady
        .peak_areas
        .iter()
        .filter(|p| p.complete && p.k != 0)
    {
        let (v, s) = g2_steady.peak(p.k).expect("complete peak");
        counted += 1;
        if (v - 1.0).abs() > 4.0 * s {
            off.push(format!("k={}: {v:.3}±{s:.3}", p.k));
        }
    }
    checks.push(Check::new(
        "steady side peaks = 1 ± 4σ",
        off.is_empty() && counted > 0,
        if off.is_empty() {
            format!("{counted} peaks within 4σ")
        } else {
            off.join(", ")
        },
    ));
    Ok(report("fig4", scenario, &sim, &g2, checks))
}

/// Fiber-collected emitter at 5 MHz: single-photon verdict with
/// g²(0) < 0.2.
pub fn repro_fig6(scenario: &Scenario) -> Result<ReproReport> {
    let (sim, g2) = run_pipeline(scenario)?;
    let checks = vec![
        Check::new(
            "g2_zero < 0.2",
            g2.g2_zero < 0.2,
            format!("g2(0) = {:.4} ± {:.4}", g2.g2_zero, g2.g2_zero_sigma),
        ),
        Check::new(
            "verdict single_photon",
            g2.verdict == Verdict::SinglePhoton,
            format!("{:?}", g2.verdict),
        ),
    ];
    Ok(report("fig6", scenario, &sim, &g2, checks))
}
