use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use photonbench::correlator::{
    analyze_pulsed, cross_correlate, normalize_cw, verdict, G2Result, LongDelayWindow,
    PulsedAnalysis,
};
use photonbench::emitter::simulate;
use photonbench::fiber::{
    adiabaticity_check, coupling_efficiency_estimate, cutoff_radius, pull_trajectory,
    sellmeier_silica, simulate_pull, single_mode_check, solve_he11, subwavelength_check,
    taper_profile, v_number, FiberSpec, HotZoneMode, TaperRecipe,
};
use photonbench::photostats::{
    degree_of_polarization, fit_saturation_with, fit_spectrum, fit_spectrum_samples, reduce,
    stokes_from_intensities, Reduction, SaturationPoint,
};
use photonbench::plot::{g2_plot, saturation_plot, taper_plot, Plot};
use photonbench::repro::{repro_fig4, repro_fig6, ReproReport};
use photonbench::scenario::Scenario;
use photonbench::timetag::{read_tags, split_channels, write_tags, Format, Ps};
use photonbench::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::input::read_numeric_csv;
use crate::output::{sidecar_path, Outputs};
use crate::{
    CliError, Command, CorrelateArgs, FiberArgs, Figure, PolarizationArgs, ReproArgs,
    SaturationArgs, SimulateArgs, SpectrumArgs, TagFormat, TaperArgs,
};

const FIG4: &str = include_str!("../../../scenarios/paper_fig4.cfg");
const FIG6: &str = include_str!("../../../scenarios/paper_fig6.cfg");

type CliResult = Result<Value, CliError>;

pub fn run(command: Command, args: &[String]) -> CliResult {
    match command {
        Command::Simulate(a) => simulate_cmd(a, args),
        Command::Correlate(a) => correlate_cmd(a, args),
        Command::Saturation(a) => saturation_cmd(a, args),
        Command::Spectrum(a) => spectrum_cmd(a, args),
        Command::Polarization(a) => polarization_cmd(a, args),
        Command::Fiber(a) => fiber_cmd(a),
        Command::Taper(a) => taper_cmd(a, args),
        Command::Repro(a) => repro_cmd(a, args),
    }
}

fn tag_format(explicit: Option<TagFormat>, path: &Path) -> Format {
    match explicit {
        Some(TagFormat::Ntag) => Format::Binary,
        Some(TagFormat::Csv) => Format::Csv,
        None if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv")) =>
        {
            Format::Csv
        }
        None => Format::Binary,
    }
}

fn ok(command: &str, written: Vec<String>, result: impl Serialize) -> CliResult {
    Ok(json!({
        "status": "ok",
        "command": command,
        "outputs": written,
        "result": serde_json::to_value(result).map_err(|e| CliError::Usage(e.to_string()))?,
    }))
}

fn to_json(v: &impl Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s.into_bytes()
}

/// Writes an SVG plus the plotted data as CSV next to it.
fn write_plot<C: Serialize>(out: &mut Outputs<C>, path: &Path, plot: &Plot) -> Result<(), Error> {
    out.write(path, plot.to_svg().as_bytes())?;
    let mut csv = String::from("series,x,y\n");
    for s in &plot.series {
        for (x, y) in &s.points {
            let _ = writeln!(csv, "{},{x},{y}", s.label);
        }
    }
    out.write(&plot_data_path(path), csv.as_bytes())
}

/// `plot.svg` → `plot_data.csv`.
fn plot_data_path(svg: &Path) -> PathBuf {
    let stem = svg.file_stem().unwrap_or_default().to_string_lossy();
    svg.with_file_name(format!("{stem}_data.csv"))
}

fn simulate_cmd(a: SimulateArgs, args: &[String]) -> CliResult {
    let mut scenario = Scenario::load(&a.scenario)?;
    if let Some(seed) = a.seed {
        scenario.seed = Some(seed);
    }
    if let Some(d) = a.duration_s {
        scenario.duration_s = d;
    }
    scenario.validate()?;
    let seed = scenario.seed.ok_or_else(|| {
        CliError::Usage("no seed: pass --seed or set seed in the scenario".into())
    })?;
    let sim = simulate(
        &scenario.emitter,
        &scenario.excitation,
        &scenario.chain,
        scenario.duration_s,
        seed,
    )?;
    let bytes = write_tags(&sim.stream, tag_format(a.format, &a.out));
    let mut out = Outputs::new("simulate", args, &scenario);
    out.write(&a.out, &bytes)?;
    ok(
        "simulate",
        out.written,
        json!({
            "seed": seed,
            "tags": sim.stream.len(),
            "signal_photons": sim.signal_photons,
            "dark_counts": sim.dark_counts,
            "dead_time_losses": sim.dead_time_losses,
            "on_fraction": sim.on_fraction,
            "bleach_time_s": sim.bleach_time_s,
        }),
    )
}

/// Scenario recorded in a tag file's sidecar, if present.
fn sidecar_scenario(input: &Path) -> Result<Option<Scenario>, Error> {
    let path = sidecar_path(input);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| Error::Config {
        line: 0,
        reason: format!("{}: {e}", path.display()),
    })?;
    match table.get("config") {
        Some(toml::Value::Table(t)) => Ok(Some(Scenario::from_toml(
            &toml::to_string(t).unwrap_or_default(),
        )?)),
        _ => Ok(None),
    }
}

#[derive(Serialize)]
struct CorrelateConfig {
    mode: &'static str,
    analysis: PulsedAnalysis,
    max_tau_ns: Option<f64>,
    input: String,
}

fn correlate_cmd(a: CorrelateArgs, args: &[String]) -> CliResult {
    let bytes = std::fs::read(&a.input).map_err(Error::from)?;
    let stream = read_tags(&bytes, tag_format(a.format, &a.input))?;
    let base = match &a.scenario {
        Some(p) => Some(Scenario::load(p)?),
        None => sidecar_scenario(&a.input)?,
    };
    let mut cfg = base
        .as_ref()
        .map(Scenario::pulsed_analysis)
        .unwrap_or_default();
    if let Some(v) = a.bin_width_ps {
        cfg.bin_width_ps = v;
    }
    if let Some(v) = a.period_ns {
        cfg.repetition_period_ns = v;
    }
    if let Some(v) = a.zero_delay_ns {
        cfg.zero_delay_ns = v;
    }
    if let Some(v) = a.dead_time_ns {
        cfg.dead_time_ns = Some(v);
    }
    if let Some(v) = a.lifetime_ns {
        cfg.lifetime_ns = Some(v);
    }
    if let Some(v) = a.window_ns {
        cfg.peak_window_ns = Some(v);
    }
    if let (Some(from_ns), Some(to_ns)) = (a.long_from_ns, a.long_to_ns) {
        cfg.long_delay = LongDelayWindow { from_ns, to_ns };
    }
    cfg.validate()?;
    let (start, stop) = split_channels(&stream);
    let config = CorrelateConfig {
        mode: if a.cw { "cw" } else { "pulsed" },
        analysis: cfg,
        max_tau_ns: a.cw.then_some(a.max_tau_ns),
        input: a.input.display().to_string(),
    };
    let mut out = Outputs::new("correlate", args, &config);

    if a.cw {
        let zero = (cfg.zero_delay_ns * 1e3).round() as Ps;
        let max_tau = (a.max_tau_ns * 1e3).round() as Ps + zero;
        let hist = cross_correlate(&start, &stop, cfg.bin_width_ps, max_tau)?;
        let duration = base
            .as_ref()
            .map_or(stream.meta().duration_ps, |s| (s.duration_s * 1e12) as Ps);
        let g2 = normalize_cw(&hist, duration)?;
        let zero_i = (0..hist.len())
            .min_by_key(|&i| (hist.tau(i) - zero).abs())
            .expect("non-empty histogram");
        let g2_zero = g2[zero_i];
        let (v, q) = verdict(g2_zero);
        if let Some(p) = &a.csv {
            let mut csv = String::from("tau_ps,raw,masked_flag,normalized\n");
            #[allow(clippy::needless_range_loop)]
            for i in 0..hist.len() {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    hist.tau(i) - zero,
                    hist.bins[i],
                    u8::from(hist.mask[i]),
                    g2[i]
                );
            }
            out.write(p, csv.as_bytes())?;
        }
        let result = json!({ "g2_zero": g2_zero, "verdict": v, "quality": q, "bins": hist.len() });
        if let Some(p) = &a.out {
            out.write(p, &to_json(&result))?;
        }
        return ok("correlate", out.written, result);
    }

    let g2 = analyze_pulsed(&start, &stop, &cfg)?;
    write_g2_outputs(&mut out, &g2, a.csv.as_deref(), a.svg.as_deref())?;
    let summary = g2_summary(&g2, cfg.side_peaks);
    if let Some(p) = &a.out {
        out.write(p, &to_json(&summary))?;
    }
    ok("correlate", out.written, summary)
}

fn g2_summary(g2: &G2Result, side_peaks: i64) -> Value {
    let side_peaks: Vec<(i64, f64)> = g2
        .normalized_peaks
        .iter()
        .copied()
        .filter(|(k, _)| k.abs() <= side_peaks)
        .collect();
    json!({
        "g2_zero": g2.g2_zero,
        "g2_zero_sigma": g2.g2_zero_sigma,
        "verdict": g2.verdict,
        "quality": g2.quality,
        "background": g2.background,
        "background_long": g2.background_long,
        "normalization_window_ns": [g2.long_delay.from_ns, g2.long_delay.to_ns],
        "normalization_peaks": g2.normalization_peaks,
        "normalization_factor": g2.normalization_factor,
        "excised_region_ps": g2.excised_region.map(|r| [r.from_ps, r.to_ps]),
        "side_peaks": side_peaks,
    })
}

fn write_g2_outputs<C: Serialize>(
    out: &mut Outputs<C>,
    g2: &G2Result,
    csv: Option<&Path>,
    svg: Option<&Path>,
) -> Result<(), Error> {
    // A plot always gets its data alongside.
    let csv = csv
        .map(Path::to_path_buf)
        .or_else(|| svg.map(plot_data_path));
    if let Some(p) = &csv {
        let h = &g2.histogram;
        let mut text = String::from("tau_ps,raw,masked_flag,normalized\n");
        for i in 0..h.len() {
            let _ = writeln!(
                text,
                "{},{},{},{}",
                h.tau(i) - g2.zero_delay_ps,
                h.bins[i],
                u8::from(h.mask[i]),
                g2.normalized[i]
            );
        }
        out.write(p, text.as_bytes())?;
    }
    if let Some(p) = svg {
        out.write(p, g2_plot(g2).to_svg().as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SaturationConfig {
    input: String,
    reduction: Reduction,
}

fn saturation_cmd(a: SaturationArgs, args: &[String]) -> CliResult {
    let rows = read_numeric_csv(&a.input)?;
    let points = rows
        .iter()
        .map(|r| SaturationPoint {
            power_nw: r[0],
            repeats: r[1..].to_vec(),
        })
        .collect::<Vec<_>>();
    let how = if a.unfiltered {
        Reduction::Mean
    } else {
        Reduction::Brightest(a.keep)
    };
    let fit = fit_saturation_with(&points, how)?;
    let config = SaturationConfig {
        input: a.input.display().to_string(),
        reduction: how,
    };
    let mut out = Outputs::new("saturation", args, &config);
    if let Some(p) = &a.svg {
        let data = points
            .iter()
            .map(|p| Ok((p.power_nw, reduce(p, how)?)))
            .collect::<Result<Vec<_>, Error>>()?;
        write_plot(&mut out, p, &saturation_plot(&data, &fit))?;
    }
    if let Some(p) = &a.out {
        out.write(p, &to_json(&fit))?;
    }
    ok("saturation", out.written, fit)
}

#[derive(Serialize)]
struct InputConfig {
    input: String,
}

fn spectrum_cmd(a: SpectrumArgs, args: &[String]) -> CliResult {
    let rows = read_numeric_csv(&a.input)?;
    let fit = match rows[0].len() {
        1 => fit_spectrum_samples(&rows.iter().map(|r| r[0]).collect::<Vec<_>>())?,
        2 => {
            let w: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let c: Vec<f64> = rows.iter().map(|r| r[1]).collect();
            fit_spectrum(&w, &c)?
        }
        n => {
            return Err(CliError::Usage(format!(
                "spectrum input needs 1 or 2 columns, found {n}"
            )))
        }
    };
    let config = InputConfig {
        input: a.input.display().to_string(),
    };
    let mut out = Outputs::new("spectrum", args, &config);
    if let Some(p) = &a.out {
        out.write(p, &to_json(&fit))?;
    }
    ok("spectrum", out.written, fit)
}

fn polarization_cmd(a: PolarizationArgs, args: &[String]) -> CliResult {
    let rows = read_numeric_csv(&a.input)?;
    let mut results = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let six: [f64; 6] = r.as_slice().try_into().map_err(|_| Error::Csv {
            line: i + 1,
            reason: format!("expected 6 intensities (H,V,D,A,R,L), found {}", r.len()),
        })?;
        let s = stokes_from_intensities(six)?;
        let d = degree_of_polarization(&s)?;
        results.push(json!({
            "stokes": s,
            "dop": d.value,
            "dop_raw": d.raw,
            "out_of_range": d.out_of_range,
            "unpolarized": d.is_unpolarized(a.threshold),
        }));
    }
    let config = json!({ "input": a.input.display().to_string(), "threshold": a.threshold });
    let mut out = Outputs::new("polarization", args, &config);
    if let Some(p) = &a.out {
        out.write(p, &to_json(&results))?;
    }
    ok("polarization", out.written, results)
}

fn fiber_cmd(a: FiberArgs) -> CliResult {
    let n1 = if a.n1 == "auto" {
        sellmeier_silica(a.wavelength_nm)?
    } else {
        a.n1.parse::<f64>().map_err(|_| {
            CliError::Usage(format!("--n1 expects \"auto\" or a number, got {:?}", a.n1))
        })?
    };
    let spec = FiberSpec::new(a.radius_nm, n1, a.n2, a.wavelength_nm)?;
    let check = single_mode_check(&spec);
    let sub = subwavelength_check(&spec);
    let mode = solve_he11(&spec)?;
    let beta = coupling_efficiency_estimate(&mode, a.offset_nm)?;
    ok(
        "fiber",
        Vec::new(),
        json!({
            "n1": n1,
            "v": v_number(&spec),
            "single_mode": check.single_mode,
            "margin": check.margin,
            "cutoff_radius_nm": cutoff_radius(a.wavelength_nm, n1, a.n2)?,
            "subwavelength": sub.satisfied,
            "wavelength_over_diameter": sub.ratio,
            "n_eff": mode.n_eff,
            "evanescent_fraction": mode.evanescent_fraction,
            "surface_intensity_ratio": mode.surface_intensity_ratio,
            "residual": mode.residual,
            "coupling_beta": beta,
        }),
    )
}

#[derive(Serialize)]
struct TaperConfig {
    recipe: TaperRecipe,
    #[serde(skip_serializing_if = "Option::is_none")]
    step_mm: Option<f64>,
    wavelength_nm: f64,
}

fn taper_cmd(a: TaperArgs, args: &[String]) -> CliResult {
    let recipe = TaperRecipe {
        initial_radius_um: a.r0_um,
        target_radius_nm: a.target_nm,
        hot_zone_mm: a.hotzone_mm,
        mode: match a.alpha {
            Some(alpha) => HotZoneMode::LinearProfile { alpha },
            None => HotZoneMode::ConstantHotzone,
        },
    };
    let profile = taper_profile(&recipe)?;
    let program = pull_trajectory(&recipe, a.step_mm)?;
    let pulled = simulate_pull(recipe.initial_radius_um, recipe.hot_zone_mm, &program)?;
    let deviation = pulled.max_relative_deviation(&profile, 2001);
    let n1 = sellmeier_silica(a.wavelength_nm)?;
    let adiabatic = adiabaticity_check(&profile, a.wavelength_nm, n1, 1.0)?;

    let config = TaperConfig {
        recipe,
        step_mm: a.step_mm,
        wavelength_nm: a.wavelength_nm,
    };
    let mut out = Outputs::new("taper", args, &config);
    let dir: PathBuf = a.out_dir.clone();
    let mut csv = String::from("z_mm,r_nm\n");
    for (z, r) in &profile.samples {
        let _ = writeln!(csv, "{z},{r}");
    }
    out.write(&dir.join("profile.csv"), csv.as_bytes())?;
    let mut csv = String::from("step,elongation_mm,hot_zone_mm,sweep_from_mm,sweep_to_mm\n");
    for (i, s) in program.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{i},{},{},{},{}",
            s.elongation_mm, s.hot_zone_mm, s.sweep_from_mm, s.sweep_to_mm
        );
    }
    out.write(&dir.join("pull.csv"), csv.as_bytes())?;
    out.write(&dir.join("adiabaticity.csv"), adiabatic.to_csv().as_bytes())?;
    out.write(
        &dir.join("profile.svg"),
        taper_plot(&profile).to_svg().as_bytes(),
    )?;

    let consumed = profile.consumed_volume();
    ok(
        "taper",
        out.written,
        json!({
            "total_elongation_mm": profile.total_elongation_mm,
            "waist_length_mm": profile.waist_length_mm,
            "transition_length_mm": profile.transition_length_mm,
            "pull_steps": program.len(),
            "pull_max_radius_deviation": deviation,
            "volume_relative_error": (pulled.volume() - consumed).abs() / consumed,
            "adiabatic": adiabatic.ok,
            "worst_margin": adiabatic.worst_margin,
            "worst_z_mm": adiabatic.worst_z_mm,
        }),
    )
}

fn repro_cmd(a: ReproArgs, args: &[String]) -> CliResult {
    let mut scenario = match &a.scenario {
        Some(p) => Scenario::load(p)?,
        None => Scenario::from_toml(match a.figure {
            Figure::Fig4 => FIG4,
            Figure::Fig6 => FIG6,
        })?,
    };
    if let Some(seed) = a.seed {
        scenario.seed = Some(seed);
    }
    if let Some(d) = a.duration_s {
        scenario.duration_s = d;
    }
    let report: ReproReport = match a.figure {
        Figure::Fig4 => repro_fig4(&scenario)?,
        Figure::Fig6 => repro_fig6(&scenario)?,
    };
    let mut out = Outputs::new("repro", args, &scenario);
    if let Some(dir) = &a.out_dir {
        out.write(
            &dir.join(format!("{}_report.json", report.name)),
            &to_json(&report),
        )?;
        write_g2_outputs(
            &mut out,
            &report.g2,
            Some(&dir.join(format!("{}_g2.csv", report.name))),
            Some(&dir.join(format!("{}_g2.svg", report.name))),
        )?;
    }
    if !report.passed() {
        let failed: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} ({})", c.name, c.detail))
            .collect();
        return Err(CliError::Check(format!(
            "{} failed: {}",
            report.name,
            failed.join("; ")
        )));
    }
    ok("repro", out.written, report)
}
