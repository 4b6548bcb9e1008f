//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria run one after another so the runtime bounds are measured
//! without competing for cores.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use photonbench::correlator::{brute_force_correlate, cross_correlate, normalize_cw};
use photonbench::emitter::{
    simulate_saturation_data, simulate_spectrum, BlinkingModel, DetectionChain, EmitterModel,
    ExcitationModel,
};
use photonbench::fiber::{
    coupling_efficiency_estimate, cutoff_radius, pull_trajectory, sellmeier_silica, simulate_pull,
    single_mode_check, solve_he11, subwavelength_check, taper_profile, v_number, FiberSpec,
    TaperRecipe,
};
use photonbench::photostats::{
    blinking_filter, fit_saturation_curve, fit_saturation_with, fit_spectrum_samples, Reduction,
    SaturationFit,
};
use photonbench::repro::{repro_fig4, repro_fig6};
use photonbench::scenario::Scenario;
use photonbench::timetag::{read_tags, write_tags, Format, Ps};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn scenario(name: &str) -> Scenario {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    Scenario::load(&dir.join(name)).expect("shipped scenario loads")
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(
        elapsed < Duration::from_secs(limit_s),
        format!("runtime {:.1} s exceeds {limit_s} s", elapsed.as_secs_f64()),
    )
}

fn blinking_emitter_closed_loop() -> Outcome {
    let s = scenario("paper_fig4.cfg");
    ensure(s.duration_s == 60.0, format!("duration {} s", s.duration_s))?;
    ensure(
        s.excitation.repetition_period_ns == 200.0 && s.chain.router_dead_time_ns == 100.0,
        "period / dead time differ from 200 ns / 100 ns".into(),
    )?;
    let t = Instant::now();
    let r = repro_fig4(&s).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    for c in &r.checks {
        ensure(c.passed, format!("{}: {}", c.name, c.detail))?;
    }
    within(elapsed, 60)?;
    Ok(format!(
        "g2(0) = {:.4} ± {:.4}; {}; {}; {:.1} s",
        r.g2_zero,
        r.g2_zero_sigma,
        r.checks[1].detail,
        r.checks[2].detail,
        elapsed.as_secs_f64()
    ))
}

fn fiber_collected_emitter() -> Outcome {
    let s = scenario("paper_fig6.cfg");
    ensure(
        (1e3 / s.excitation.repetition_period_ns - 5.0).abs() < 1e-12,
        "repetition rate is not 5 MHz".into(),
    )?;
    let fc = s
        .fiber_coupling
        .as_ref()
        .ok_or("no fiber coupling section")?;
    let spec = FiberSpec::air_clad(
        fc.radius_nm,
        sellmeier_silica(fc.wavelength_nm).map_err(|e| e.to_string())?,
        fc.wavelength_nm,
    )
    .map_err(|e| e.to_string())?;
    let mode = solve_he11(&spec).map_err(|e| e.to_string())?;
    let beta = coupling_efficiency_estimate(&mode, fc.offset_nm).map_err(|e| e.to_string())?;
    let want = beta * fc.transmission;
    ensure(
        (s.chain.collection_efficiency - want).abs() < 1e-12,
        format!(
            "collection {} != β·T = {want}",
            s.chain.collection_efficiency
        ),
    )?;
    let t = Instant::now();
    let r = repro_fig6(&s).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure(r.g2_zero < 0.2, format!("g2(0) = {}", r.g2_zero))?;
    ensure(
        r.verdict == photonbench::correlator::Verdict::SinglePhoton,
        format!("verdict {:?}", r.verdict),
    )?;
    within(elapsed, 60)?;
    Ok(format!(
        "β = {beta:.3}, collection {want:.3}, g2(0) = {:.4} ± {:.4}, {:.1} s",
        r.g2_zero,
        r.g2_zero_sigma,
        elapsed.as_secs_f64()
    ))
}

fn random_stream(rng: &mut ChaCha8Rng, n: usize, max_gap: Ps) -> Vec<Ps> {
    let mut t: Ps = rng.random_range(-1_000_000..1_000_000);
    (0..n)
        .map(|_| {
            // Occasional exact repeats exercise equal timestamps.
            if !rng.random_bool(0.02) {
                t += rng.random_range(0..=max_gap);
            }
            t
        })
        .collect()
}

fn correlator_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = Instant::now();
    let mut pairs_checked = 0;
    let mut coincidences = 0u64;
    for i in 0..200 {
        let n = rng.random_range(0..=10_000);
        let m = rng.random_range(0..=10_000);
        let max_gap = rng.random_range(1..=200_000);
        let start = random_stream(&mut rng, n, max_gap);
        let stop = random_stream(&mut rng, m, max_gap);
        let w = rng.random_range(1..=5_000);
        let max_tau = rng.random_range(w..=2_000_000);
        let fast = cross_correlate(&start, &stop, w, max_tau).map_err(|e| e.to_string())?;
        let slow = brute_force_correlate(&start, &stop, w, max_tau).map_err(|e| e.to_string())?;
        ensure(
            fast.first_bin == slow.first_bin && fast.bins == slow.bins,
            format!("pair {i}: histograms differ (n = {n}, m = {m}, w = {w}, max_tau = {max_tau})"),
        )?;
        coincidences += fast.total();
        pairs_checked += 1;
    }
    let elapsed = t.elapsed();
    within(elapsed, 120)?;
    Ok(format!(
        "{pairs_checked} pairs identical, {coincidences} coincidences, {:.1} s",
        elapsed.as_secs_f64()
    ))
}

fn poisson_stream(rng: &mut ChaCha8Rng, rate_hz: f64, duration: Ps) -> Vec<Ps> {
    let gap = Exp::new(rate_hz * 1e-12).expect("positive rate");
    let mut t = 0.0;
    let mut out = Vec::new();
    loop {
        t += gap.sample(rng);
        if t >= duration as f64 {
            return out;
        }
        out.push(t as Ps);
    }
}

/// P(X >= k) for X ~ Binomial(n, p).
fn binomial_tail(n: u64, p: f64, k: u64) -> f64 {
    let mut term = (1.0 - p).powf(n as f64);
    let mut below = 0.0;
    for j in 0..k {
        below += term;
        term *= (n - j) as f64 / (j + 1) as f64 * p / (1.0 - p);
    }
    (1.0 - below).max(0.0)
}

fn poisson_calibration() -> Outcome {
    const W: Ps = 1_000;
    const MAX_TAU: Ps = 200_000;
    const T: Ps = 10_000_000_000_000;
    const TRIALS: u64 = 10;
    // Two-sided tail beyond 4σ of a standard normal.
    const P4: f64 = 6.334e-5;
    let mut outliers = Vec::new();
    let mut bins = 0u64;
    let mut inside_1sigma = 0u64;
    for trial in 0..TRIALS {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + trial);
        let a = poisson_stream(&mut rng, 100_000.0, T);
        let b = poisson_stream(&mut rng, 100_000.0, T);
        let h = cross_correlate(&a, &b, W, MAX_TAU).map_err(|e| e.to_string())?;
        let g2 = normalize_cw(&h, T).map_err(|e| e.to_string())?;
        let mut n_out = 0;
        for (i, v) in g2.iter().enumerate() {
            if h.mask[i] {
                continue;
            }
            let expected = a.len() as f64 * b.len() as f64 * W as f64 * (T - h.tau(i).abs()) as f64
                / (T as f64 * T as f64);
            let sigma = 1.0 / expected.sqrt();
            bins += 1;
            let z = ((v - 1.0) / sigma).abs();
            if z < 1.0 {
                inside_1sigma += 1;
            }
            if z > 4.0 {
                n_out += 1;
            }
        }
        outliers.push(n_out);
    }
    ensure(
        outliers[0] == 0,
        format!("{} bins beyond 4σ in the first pair", outliers[0]),
    )?;
    let total: u64 = outliers.iter().sum();
    let p = binomial_tail(bins, P4, total);
    ensure(
        p > 1e-3,
        format!("{total} of {bins} bins beyond 4σ; P(≥ {total}) = {p:.2e}"),
    )?;
    // A σ that is too wide would hide miscalibration behind zero outliers.
    let f1 = inside_1sigma as f64 / bins as f64;
    let f1_sigma = (0.6827 * 0.3173 / bins as f64).sqrt();
    ensure(
        (f1 - 0.6827).abs() < 5.0 * f1_sigma,
        format!("{:.3} of bins within 1σ, expected 0.683", f1),
    )?;
    Ok(format!(
        "{total} of {bins} bins beyond 4σ over {TRIALS} pairs (expected {:.2}, P(≥ {total}) = {p:.2}), {f1:.3} within 1σ",
        bins as f64 * P4
    ))
}

/// Blinking dwell times span a few 100 ms windows; powers step by √2.
fn saturation_data(seed: u64) -> Result<Vec<photonbench::photostats::SaturationPoint>, String> {
    let e = EmitterModel {
        p_sat: 80.0,
        blinking: BlinkingModel::two_state(0.5, 0.1),
        bleaching: false,
        ..Default::default()
    };
    let powers: Vec<f64> = (0..16).map(|k| 10.0 * 2f64.powf(k as f64 / 2.0)).collect();
    simulate_saturation_data(
        &e,
        &ExcitationModel::default(),
        &DetectionChain::default(),
        &powers,
        10,
        100.0,
        0.05,
        seed,
    )
    .map_err(|e| e.to_string())
}

fn filtered_fit(
    data: &[photonbench::photostats::SaturationPoint],
) -> Result<SaturationFit, String> {
    let mut filtered = Vec::new();
    for p in data {
        filtered.push((
            p.power_nw,
            blinking_filter(&p.repeats, 3).map_err(|e| e.to_string())?,
        ));
    }
    fit_saturation_curve(&filtered).map_err(|e| e.to_string())
}

fn saturation_closed_loop() -> Outcome {
    let data = saturation_data(80)?;
    let fit = filtered_fit(&data)?;
    let plain = fit_saturation_with(&data, Reduction::Mean).map_err(|e| e.to_string())?;
    // Spread of the estimator over independent datasets, for context only.
    let mut hits = 0;
    for seed in 1000..1020 {
        if (filtered_fit(&saturation_data(seed)?)?.p_sat / 80.0 - 1.0).abs() < 0.05 {
            hits += 1;
        }
    }
    let err = (fit.p_sat / 80.0 - 1.0).abs();
    ensure(
        err < 0.05,
        format!(
            "P_sat = {:.2} nW ({:.1}% off; {hits}/20 other seeds within 5%)",
            fit.p_sat,
            100.0 * err
        ),
    )?;
    ensure(
        plain.relative_residual > fit.relative_residual,
        format!(
            "unfiltered residual {:.4} not above filtered {:.4}",
            plain.relative_residual, fit.relative_residual
        ),
    )?;
    Ok(format!(
        "P_sat = {:.2} nW ({:.1}%), relative residual {:.4} filtered vs {:.4} unfiltered; {hits}/20 other seeds within 5%",
        fit.p_sat,
        100.0 * err,
        fit.relative_residual,
        plain.relative_residual
    ))
}

fn spectrum_closed_loop() -> Outcome {
    let e = EmitterModel {
        emission_center_nm: 518.0,
        emission_fwhm_nm: 16.0,
        ..Default::default()
    };
    let samples = simulate_spectrum(&e, 100_000, 518).map_err(|e| e.to_string())?;
    let fit = fit_spectrum_samples(&samples).map_err(|e| e.to_string())?;
    ensure(
        (fit.center_nm - 518.0).abs() <= 0.2 && (fit.fwhm_nm - 16.0).abs() <= 0.5,
        format!("center {:.3} nm, FWHM {:.3} nm", fit.center_nm, fit.fwhm_nm),
    )?;
    Ok(format!(
        "center {:.3} nm, FWHM {:.3} nm",
        fit.center_nm, fit.fwhm_nm
    ))
}

/// Fused silica, three-term Sellmeier with the Malitson coefficients.
fn silica_index(lambda_nm: f64) -> f64 {
    let l2 = (lambda_nm * 1e-3).powi(2);
    let terms = [
        (0.6961663, 0.0684043),
        (0.4079426, 0.1162414),
        (0.8974794, 9.896161),
    ];
    (1.0 + terms
        .iter()
        .map(|(b, c)| b * l2 / (l2 - c * c))
        .sum::<f64>())
    .sqrt()
}

fn guidance_suite() -> Outcome {
    let n1 = sellmeier_silica(600.0).map_err(|e| e.to_string())?;
    ensure(
        (n1 - silica_index(600.0)).abs() < 1e-12,
        format!("n1 {n1} vs {}", silica_index(600.0)),
    )?;
    let spec = FiberSpec::air_clad(150.0, n1, 600.0).map_err(|e| e.to_string())?;
    let v = v_number(&spec);
    let v_oracle =
        2.0 * std::f64::consts::PI * 150.0 / 600.0 * (silica_index(600.0).powi(2) - 1.0).sqrt();
    ensure(
        (v - v_oracle).abs() < 1e-12,
        format!("V {v} vs closed form {v_oracle}"),
    )?;
    ensure((v / 1.667 - 1.0).abs() < 1e-3, format!("V = {v:.5}"))?;
    let sm = single_mode_check(&spec);
    ensure(sm.single_mode, "a = 150 nm not single-mode".into())?;
    ensure(
        subwavelength_check(&spec).satisfied,
        "300 nm diameter fails the factor-two rule".into(),
    )?;
    let cutoff = cutoff_radius(600.0, n1, 1.0).map_err(|e| e.to_string())?;
    let cutoff_oracle = 2.405 * 600.0 / (2.0 * std::f64::consts::PI * (n1 * n1 - 1.0).sqrt());
    ensure(
        (cutoff - cutoff_oracle).abs() < 1e-9,
        format!("cutoff {cutoff} vs {cutoff_oracle}"),
    )?;
    ensure(
        (cutoff / 216.5 - 1.0).abs() < 1e-3,
        format!("cutoff = {cutoff:.2} nm"),
    )?;
    Ok(format!(
        "V = {v:.5}, single-mode (margin {:.3}), cutoff {cutoff:.2} nm, diameter/λ = {:.3}",
        sm.margin,
        subwavelength_check(&spec).ratio
    ))
}

/// Composite Simpson rule with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn mode_solver_properties() -> Outcome {
    let n1 = silica_index(600.0);
    let mut prev: Option<(f64, f64)> = None;
    let mut worst_residual = 0.0f64;
    let mut worst_quadrature = 0.0f64;
    for i in 0..50 {
        let a = 80.0 + 5.0 * i as f64;
        let spec = FiberSpec::air_clad(a, n1, 600.0).map_err(|e| e.to_string())?;
        let sol = solve_he11(&spec).map_err(|e| format!("a = {a}: {e}"))?;
        worst_residual = worst_residual.max(sol.residual.abs());
        ensure(
            sol.residual.abs() < 1e-10,
            format!("a = {a}: residual {:e}", sol.residual),
        )?;
        ensure(
            sol.n_eff > spec.n2 && sol.n_eff < spec.n1,
            format!("a = {a}: n_eff {} outside bounds", sol.n_eff),
        )?;
        if let Some((pa, pf)) = prev {
            ensure(
                sol.evanescent_fraction < pf,
                format!(
                    "evanescent fraction not decreasing: {pf} at {pa} nm, {} at {a} nm",
                    sol.evanescent_fraction
                ),
            )?;
        }
        prev = Some((a, sol.evanescent_fraction));

        let flux = |r: f64| sol.fields(r).axial_flux() * r;
        let inside = simpson(flux, 0.0, a * (1.0 - 1e-14), 4000);
        let tail = 60.0 * sol.decay_length_nm();
        let outside = simpson(flux, a, a + tail, 40_000);
        let numeric = outside / (inside + outside);
        let diff = (numeric - sol.evanescent_fraction).abs();
        worst_quadrature = worst_quadrature.max(diff);
        ensure(
            diff < 1e-4,
            format!(
                "a = {a}: quadrature {numeric} vs {}",
                sol.evanescent_fraction
            ),
        )?;
    }
    Ok(format!(
        "50 radii 80–325 nm, max residual {worst_residual:.1e}, max quadrature gap {worst_quadrature:.1e}"
    ))
}

fn taper_suite() -> Outcome {
    let recipe = TaperRecipe::default();
    ensure(
        recipe.initial_radius_um == 62.5
            && recipe.target_radius_nm == 150.0
            && recipe.hot_zone_mm == 0.5,
        "default recipe is not 62.5 µm → 150 nm, L0 = 0.5 mm".into(),
    )?;
    let profile = taper_profile(&recipe).map_err(|e| e.to_string())?;
    let want = 2.0 * 0.5 * (62_500.0f64 / 150.0).ln();
    let rel = (profile.total_elongation_mm / want - 1.0).abs();
    ensure(
        rel < 1e-6,
        format!("elongation {} vs {want}", profile.total_elongation_mm),
    )?;

    // π∫r² dz over the drawn region against the glass originally in the hot zone.
    let t = profile.transition_length_mm;
    let total = profile.total_length_mm();
    let r2 = |z: f64| profile.radius_at(z).powi(2);
    let drawn = std::f64::consts::PI
        * (simpson(r2, 0.0, t, 200_000)
            + simpson(r2, t, total - t, 2)
            + simpson(r2, total - t, total, 200_000));
    let original = std::f64::consts::PI * 62_500.0f64.powi(2) * 0.5;
    let vol_err = (drawn / original - 1.0).abs();
    ensure(vol_err < 1e-6, format!("profile volume off by {vol_err:e}"))?;

    let steps = pull_trajectory(&recipe, None).map_err(|e| e.to_string())?;
    let pulled = simulate_pull(recipe.initial_radius_um, recipe.hot_zone_mm, &steps)
        .map_err(|e| e.to_string())?;
    let dev = pulled.max_relative_deviation(&profile, 100_000);
    ensure(
        dev < 0.01,
        format!("pull round trip deviates by {:.3}%", 100.0 * dev),
    )?;
    let pull_vol_err = (pulled.volume() / original - 1.0).abs();
    ensure(
        pull_vol_err < 1e-6,
        format!("pulled volume off by {pull_vol_err:e}"),
    )?;
    Ok(format!(
        "elongation {:.6} mm (rel {rel:.1e}), volume {vol_err:.1e}, pull {} steps, max deviation {:.2e}",
        profile.total_elongation_mm,
        steps.len(),
        dev
    ))
}

fn simulate_cli(dir: &Path, out: &str) -> Result<Vec<u8>, String> {
    let fig4 = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/paper_fig4.cfg");
    let o = Command::new(env!("CARGO_BIN_EXE_photonbench"))
        .args([
            "simulate",
            "--scenario",
            fig4.to_str().unwrap(),
            "--seed",
            "10",
            "--duration-s",
            "1",
            "--out",
            out,
        ])
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        o.status.success(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )?;
    std::fs::read(dir.join(out)).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d: PathBuf = dir.path().to_path_buf();
    let ntag = simulate_cli(&d, "a.ntag")?;
    ensure(
        ntag == simulate_cli(&d, "b.ntag")?,
        "NTAG output differs between runs".into(),
    )?;
    let csv = simulate_cli(&d, "a.csv")?;
    ensure(
        csv == simulate_cli(&d, "b.csv")?,
        "CSV output differs between runs".into(),
    )?;
    let meta_a = std::fs::read_to_string(d.join("a.ntag.meta.toml")).map_err(|e| e.to_string())?;
    let meta_b = std::fs::read_to_string(d.join("b.ntag.meta.toml")).map_err(|e| e.to_string())?;
    ensure(
        meta_a.replace("a.ntag", "b.ntag") == meta_b,
        "sidecars differ beyond the output name".into(),
    )?;

    let from_ntag = read_tags(&ntag, Format::Binary).map_err(|e| e.to_string())?;
    ensure(
        write_tags(&from_ntag, Format::Binary) == ntag,
        "NTAG re-encode differs".into(),
    )?;
    let from_csv = read_tags(&csv, Format::Csv).map_err(|e| e.to_string())?;
    ensure(
        write_tags(&from_csv, Format::Csv) == csv,
        "CSV re-encode differs".into(),
    )?;
    ensure(
        from_ntag.tags() == from_csv.tags(),
        "NTAG and CSV carry different tags".into(),
    )?;
    let cross = read_tags(&write_tags(&from_csv, Format::Binary), Format::Binary)
        .map_err(|e| e.to_string())?;
    ensure(
        cross.tags() == from_ntag.tags(),
        "CSV → NTAG round trip differs".into(),
    )?;
    Ok(format!(
        "{} tags, {} NTAG bytes, {} CSV bytes identical",
        from_ntag.len(),
        ntag.len(),
        csv.len()
    ))
}

/// Written straight to stderr so the lines survive test output capture.
fn report(line: &str) {
    let _ = writeln!(std::io::stderr().lock(), "{line}");
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("blinking emitter closed loop", blinking_emitter_closed_loop),
        ("fiber-collected emitter", fiber_collected_emitter),
        ("correlator oracle equivalence", correlator_oracle),
        ("poissonian calibration", poisson_calibration),
        ("saturation closed loop", saturation_closed_loop),
        ("spectrum closed loop", spectrum_closed_loop),
        ("guidance closed forms", guidance_suite),
        ("mode solver properties", mode_solver_properties),
        ("taper suite", taper_suite),
        ("determinism and round trips", determinism),
    ];
    // Start below the harness's "test acceptance ..." prefix.
    report("");
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => report(&format!("PASS {:>2} {name}: {detail}", i + 1)),
            Err(why) => {
                report(&format!("FAIL {:>2} {name}: {why}", i + 1));
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
