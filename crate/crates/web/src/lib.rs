//! WebAssembly bindings for the browser demo. Each export returns a JSON
//! string with a summary and a ready-to-insert SVG plot.

use photonbench::emitter::{BlinkingKind, BlinkingModel};
use photonbench::fiber::{
    sellmeier_silica, single_mode_check, solve_he11, taper_profile as build_taper, v_number,
    FiberSpec, TaperRecipe,
};
use photonbench::plot::{g2_plot, taper_plot, Plot, Series, Style};
use photonbench::repro::run_pipeline;
use photonbench::scenario::Scenario;
use photonbench::Error;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const FIG4: &str = include_str!("../../../scenarios/paper_fig4.cfg");

/// Longest simulation the page will run; keeps the tab responsive.
pub const MAX_DURATION_S: f64 = 30.0;

pub fn g2_demo(
    duration_s: f64,
    mean_on_ms: f64,
    mean_off_ms: f64,
    seed: u64,
) -> Result<Value, Error> {
    if !(duration_s > 0.0 && duration_s <= MAX_DURATION_S) {
        return Err(Error::invalid(
            "duration_s",
            format!("must be in (0, {MAX_DURATION_S}]"),
        ));
    }
    let mut s = Scenario::from_toml(FIG4)?;
    s.seed = Some(seed);
    s.duration_s = duration_s;
    s.emitter.blinking = if mean_off_ms > 0.0 {
        BlinkingModel::two_state(mean_on_ms * 1e-3, mean_off_ms * 1e-3)
    } else {
        BlinkingModel {
            kind: BlinkingKind::None,
            ..Default::default()
        }
    };
    let (sim, g2) = run_pipeline(&s)?;
    let side: Vec<Value> = (-5..=5)
        .filter(|&k| k != 0)
        .filter_map(|k| {
            g2.peak(k)
                .map(|(v, e)| json!({ "k": k, "g2": v, "sigma": e }))
        })
        .collect();
    Ok(json!({
        "tags": sim.stream.len(),
        "g2_zero": g2.g2_zero,
        "g2_zero_sigma": g2.g2_zero_sigma,
        "verdict": g2.verdict,
        "quality": g2.quality,
        "side_peaks": side,
        "svg": g2_plot(&g2).to_svg(),
    }))
}

pub fn fiber_demo(
    wavelength_nm: f64,
    r_min_nm: f64,
    r_max_nm: f64,
    points: usize,
) -> Result<Value, Error> {
    if !(r_min_nm > 0.0 && r_max_nm > r_min_nm) {
        return Err(Error::invalid("radius", "need 0 < r_min < r_max"));
    }
    if !(2..=400).contains(&points) {
        return Err(Error::invalid("points", "must be in 2..=400"));
    }
    let n1 = sellmeier_silica(wavelength_nm)?;
    let mut rows = Vec::with_capacity(points);
    let mut eta = Vec::with_capacity(points);
    let mut cutoff_seen = None;
    for i in 0..points {
        let a = r_min_nm + (r_max_nm - r_min_nm) * i as f64 / (points - 1) as f64;
        let spec = FiberSpec::air_clad(a, n1, wavelength_nm)?;
        let sm = single_mode_check(&spec);
        if !sm.single_mode && cutoff_seen.is_none() {
            cutoff_seen = Some(a);
        }
        match solve_he11(&spec) {
            Ok(m) => {
                eta.push((a, m.evanescent_fraction));
                rows.push(json!({
                    "radius_nm": a,
                    "v": v_number(&spec),
                    "single_mode": sm.single_mode,
                    "n_eff": m.n_eff,
                    "evanescent_fraction": m.evanescent_fraction,
                }));
            }
            // Too thin for the solver bracket: report V only.
            Err(_) => rows.push(
                json!({ "radius_nm": a, "v": v_number(&spec), "single_mode": sm.single_mode }),
            ),
        }
    }
    let plot = Plot {
        title: format!("HE11 at {wavelength_nm:.0} nm, silica in air"),
        x_label: "radius (nm)".into(),
        y_label: "power outside the glass".into(),
        log_y: false,
        series: vec![Series {
            label: "evanescent fraction".into(),
            points: eta,
            style: Style::Line,
            color: "#1f4e9c",
        }],
        guides: vec![(0.5, "0.5".into())],
    };
    Ok(json!({
        "n1": n1,
        "first_multimode_radius_nm": cutoff_seen,
        "rows": rows,
        "svg": plot.to_svg(),
    }))
}

pub fn taper_demo(r0_um: f64, target_nm: f64, hotzone_mm: f64) -> Result<Value, Error> {
    let recipe = TaperRecipe {
        initial_radius_um: r0_um,
        target_radius_nm: target_nm,
        hot_zone_mm: hotzone_mm,
        ..Default::default()
    };
    let profile = build_taper(&recipe)?;
    Ok(json!({
        "total_elongation_mm": profile.total_elongation_mm,
        "transition_length_mm": profile.transition_length_mm,
        "waist_length_mm": profile.waist_length_mm,
        "svg": taper_plot(&profile).to_svg(),
    }))
}

fn to_js(r: Result<Value, Error>) -> Result<String, JsError> {
    r.map(|v| v.to_string())
        .map_err(|e| JsError::new(&e.to_string()))
}

/// Simulates the blinking-emitter scenario and returns g²(τ).
#[wasm_bindgen]
pub fn simulate_g2(
    duration_s: f64,
    mean_on_ms: f64,
    mean_off_ms: f64,
    seed: u64,
) -> Result<String, JsError> {
    to_js(g2_demo(duration_s, mean_on_ms, mean_off_ms, seed))
}

#[wasm_bindgen]
pub fn fiber_sweep(
    wavelength_nm: f64,
    r_min_nm: f64,
    r_max_nm: f64,
    points: usize,
) -> Result<String, JsError> {
    to_js(fiber_demo(wavelength_nm, r_min_nm, r_max_nm, points))
}

#[wasm_bindgen]
pub fn taper_profile(r0_um: f64, target_nm: f64, hotzone_mm: f64) -> Result<String, JsError> {
    to_js(taper_demo(r0_um, target_nm, hotzone_mm))
}
