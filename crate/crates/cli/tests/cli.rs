use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_photonbench"))
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn summary(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().last().unwrap_or_else(|| {
        panic!(
            "no stdout; stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    });
    serde_json::from_str(line).expect("summary is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn simulate_is_deterministic_and_self_describing() {
    let dir = tempfile::tempdir().unwrap();
    let ideal = scenarios().join("ideal.cfg");
    let ideal = ideal.to_str().unwrap();
    for name in ["a.ntag", "b.ntag", "a.csv"] {
        let out = run(
            &[
                "simulate",
                "--scenario",
                ideal,
                "--seed",
                "42",
                "--duration-s",
                "0.2",
                "--out",
                name,
            ],
            dir.path(),
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir.path().join("a.ntag")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.ntag")).unwrap());
    assert_eq!(&a[..4], b"NTAG");
    let csv = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert!(csv.starts_with("time_ps,channel\n"));
    let meta = std::fs::read_to_string(dir.path().join("a.ntag.meta.toml")).unwrap();
    assert!(
        meta.contains("seed = 42") && meta.contains("[config.chain]"),
        "{meta}"
    );
}

#[test]
fn seed_is_required() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.cfg"), "duration_s = 0.1\n").unwrap();
    let out = run(
        &["simulate", "--scenario", "s.cfg", "--out", "x.ntag"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("x.ntag").exists());
}

#[test]
fn scenario_errors_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.cfg"),
        "seed = 1\n[emitter]\np_sat = -1\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("typo.cfg"),
        "seed = 1\n\n[chain]\ndark_rates = [1.0, 1.0]\n",
    )
    .unwrap();
    let out = run(
        &["simulate", "--scenario", "bad.cfg", "--out", "x.ntag"],
        dir.path(),
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("p_sat"));
    let out = run(
        &["simulate", "--scenario", "typo.cfg", "--out", "x.ntag"],
        dir.path(),
    );
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("line 4") && err.contains("dark_rates"),
        "{err}"
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["nonsense"], dir.path())), 2);
    assert_eq!(code(&run(&["fiber", "--radius-nm", "150"], dir.path())), 2);
    assert_eq!(
        code(&run(
            &["fiber", "--radius-nm", "-5", "--wavelength-nm", "600"],
            dir.path()
        )),
        3
    );
    // Weak-guidance limit beyond the root bracket.
    assert_eq!(
        code(&run(
            &["fiber", "--radius-nm", "40", "--wavelength-nm", "600"],
            dir.path()
        )),
        4
    );
    assert_eq!(
        code(&run(&["correlate", "--input", "missing.ntag"], dir.path())),
        5
    );
    let out = run(&["correlate", "--input", "missing.ntag"], dir.path());
    assert_eq!(summary(&out)["status"], "error");
}

#[test]
fn simulate_then_correlate_uses_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let fig4 = scenarios().join("paper_fig4.cfg");
    let out = run(
        &[
            "simulate",
            "--scenario",
            fig4.to_str().unwrap(),
            "--duration-s",
            "2",
            "--out",
            "s.ntag",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(
        &[
            "correlate",
            "-i",
            "s.ntag",
            "--svg",
            "g2.svg",
            "--out",
            "g2.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    assert!(s["result"]["g2_zero"].as_f64().unwrap() < 0.1, "{s}");
    assert_eq!(s["result"]["verdict"], "single_photon");
    let csv = std::fs::read_to_string(dir.path().join("g2_data.csv")).unwrap();
    assert!(csv.starts_with("tau_ps,raw,masked_flag,normalized\n"));
    // Router dead time around raw zero delay is masked.
    assert!(csv.lines().any(|l| l.split(',').nth(2) == Some("1")));
    let svg = std::fs::read_to_string(dir.path().join("g2.svg")).unwrap();
    assert!(svg.contains("stroke-dasharray"));
    assert!(dir.path().join("g2.json.meta.toml").exists());
}

#[test]
fn saturation_spectrum_polarization() {
    let dir = tempfile::tempdir().unwrap();
    let mut sat = String::from("power_nW,r1,r2,r3,r4,r5\n");
    for (j, p) in [10.0, 20.0, 40.0, 80.0, 160.0, 320.0]
        .into_iter()
        .enumerate()
    {
        let i = 1e5 * p / (p + 80.0);
        let dim = if j % 2 == 0 { 0.1 * i } else { i };
        sat.push_str(&format!("{p},{i},{i},{i},{dim},{dim}\n"));
    }
    std::fs::write(dir.path().join("sat.csv"), sat).unwrap();
    let out = run(
        &["saturation", "-i", "sat.csv", "--svg", "sat.svg"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let p_sat = summary(&out)["result"]["p_sat"].as_f64().unwrap();
    assert!((p_sat - 80.0).abs() < 1e-3, "{p_sat}");
    assert!(dir.path().join("sat_data.csv").exists());
    let out = run(&["saturation", "-i", "sat.csv", "--unfiltered"], dir.path());
    let plain = summary(&out)["result"]["relative_residual"]
        .as_f64()
        .unwrap();
    assert!(plain > 1e-3);

    let mut spec = String::from("wavelength_nm,counts\n");
    for i in 0..400 {
        let w = 450.0 + 0.5 * i as f64;
        let c = 1000.0 * (-0.5 * ((w - 518.0) / (16.0 / 2.354820045)).powi(2)).exp();
        spec.push_str(&format!("{w},{c}\n"));
    }
    std::fs::write(dir.path().join("spec.csv"), spec).unwrap();
    let s = summary(&run(&["spectrum", "-i", "spec.csv"], dir.path()));
    assert!((s["result"]["center_nm"].as_f64().unwrap() - 518.0).abs() < 1e-6);
    assert!((s["result"]["fwhm_nm"].as_f64().unwrap() - 16.0).abs() < 1e-6);

    std::fs::write(
        dir.path().join("pol.csv"),
        "H,V,D,A,R,L\n1,1,1,1,1,1\n0.5,0.5,0.5,0.5,1,0\n",
    )
    .unwrap();
    let s = summary(&run(&["polarization", "-i", "pol.csv"], dir.path()));
    assert_eq!(s["result"][0]["unpolarized"], true);
    assert_eq!(s["result"][1]["stokes"]["s3"], 1.0);
    std::fs::write(dir.path().join("short.csv"), "1,2,3\n").unwrap();
    assert_eq!(
        code(&run(&["polarization", "-i", "short.csv"], dir.path())),
        3
    );
}

#[test]
fn fiber_and_taper() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(&run(
        &["fiber", "--radius-nm", "150", "--wavelength-nm", "600"],
        dir.path(),
    ));
    let r = &s["result"];
    assert!((r["v"].as_f64().unwrap() - 1.667).abs() < 2e-3);
    assert_eq!(r["single_mode"], true);
    assert_eq!(r["subwavelength"], true);
    let s = summary(&run(
        &[
            "fiber",
            "--radius-nm",
            "300",
            "--wavelength-nm",
            "600",
            "--n1",
            "1.458",
        ],
        dir.path(),
    ));
    assert_eq!(s["result"]["single_mode"], false);
    assert_eq!(
        code(&run(
            &[
                "fiber",
                "--radius-nm",
                "150",
                "--wavelength-nm",
                "600",
                "--n1",
                "glass"
            ],
            dir.path()
        )),
        2
    );

    let out = run(&["taper", "--out-dir", "t"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = summary(&out)["result"].clone();
    assert!((r["total_elongation_mm"].as_f64().unwrap() - 6.0323).abs() < 1e-3);
    assert!(r["pull_max_radius_deviation"].as_f64().unwrap() < 0.01);
    for f in ["profile.csv", "pull.csv", "adiabaticity.csv", "profile.svg"] {
        assert!(dir.path().join("t").join(f).exists(), "{f}");
    }
    let profile = std::fs::read_to_string(dir.path().join("t/profile.csv")).unwrap();
    assert!(profile.starts_with("z_mm,r_nm\n"));
}

#[test]
fn short_repro_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["repro", "fig4", "--duration-s", "3", "--out-dir", "r"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        summary(&out)["result"]["checks"].as_array().unwrap().len(),
        3
    );
    assert!(dir.path().join("r/fig4_g2.svg").exists());
    // Without blinking the side peaks sit at 1 and the bunching check fails.
    std::fs::write(
        dir.path().join("steady.cfg"),
        "seed = 1\nduration_s = 2.0\n[excitation]\nmode = \"pulsed\"\nrepetition_period_ns = 200.0\n[chain]\nchannel_delay_ns = 1500.0\n",
    )
    .unwrap();
    let out = run(&["repro", "fig4", "--scenario", "steady.cfg"], dir.path());
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(summary(&out)["error"]
        .as_str()
        .unwrap()
        .contains("side peaks"));
}
