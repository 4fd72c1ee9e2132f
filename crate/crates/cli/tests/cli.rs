//! Exercises the `qcascade` binary: outputs, determinism and exit codes.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qcascade::config::ExperimentConfig;
use qcascade::figures::figures;
use qcascade_core::interferogram::{detect_structures_envelope, read_csv};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> PathBuf {
    configs_dir().join(format!("{name}.toml"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcascade"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn checked_in_configs_match_builtin_figures() {
    let figs = figures();
    assert_eq!(figs.len(), 18);
    for fig in figs {
        let text = fs::read_to_string(config(&fig.name)).unwrap();
        let parsed = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(parsed, fig.config, "{}", fig.name);
    }
}

#[test]
fn derive_homi() {
    let o = run(&["derive", "--config", arg(&config("fig3a"))]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("R = 1 − g₋(τ₁)\n"), "{}", stdout(&o));
}

#[test]
fn derive_two_param_2002_has_six_terms() {
    let o = run(&["derive", "--config", arg(&config("fig7a")), "--latex"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("terms: 6"), "{s}");
    assert!(s.contains("latex: R = "), "{s}");
}

#[test]
fn derive_three_param_full_listing_has_28_terms() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("full.toml");
    fs::write(&p, "[cascade]\npreset = \"three_param_11\"\n").unwrap();
    let o = run(&["derive", "--config", arg(&p)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("terms: 28"), "{}", stdout(&o));
}

#[test]
fn sweep_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = run(&["sweep", "--config", arg(&config("fig6c")), "--out", arg(p)]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn homi_sweep_dips_to_zero() {
    let o = run(&["sweep", "--config", arg(&config("fig3a"))]);
    assert_eq!(code(&o), 0);
    let (trace, _) = read_csv(BufReader::new(o.stdout.as_slice())).unwrap();
    let min = trace.values().iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min <= 1e-6, "{min}");
}

#[test]
fn noon_sweep_oscillates_at_pump_period() {
    let o = run(&["sweep", "--config", arg(&config("fig4b"))]);
    assert_eq!(code(&o), 0);
    let (trace, _) = read_csv(BufReader::new(o.stdout.as_slice())).unwrap();
    let c: Vec<f64> = trace.crossings(1.0).into_iter().filter(|t| t.abs() <= 4.0).collect();
    let spacing = (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64;
    let expected = std::f64::consts::PI / 20.0;
    assert!((spacing / expected - 1.0).abs() < 5e-3, "{spacing}");
}

#[test]
fn both_backends_write_two_files_and_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    let o = run(&["sweep", "--config", arg(&config("fig7c")), "--backend", "both", "--out", arg(&p)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("max |analytic - quadrature|"));
    assert!(dir.path().join("t_quadrature.csv").exists());
}

#[test]
fn pruned_model_disagreeing_with_quadrature_exits_3() {
    // At threshold 1e-2 the pruned three-delay model drops terms of size
    // ~3e-3, well past the backend agreement limit.
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("fig9c"))
        .unwrap()
        .replace("samples = ", "samples = 200 #");
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, text).unwrap();
    let p = dir.path().join("t.csv");
    let o = run(&["sweep", "--config", arg(&cfg), "--backend", "both", "--out", arg(&p)]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn both_backends_without_out_is_a_config_error() {
    let o = run(&["sweep", "--config", arg(&config("fig3a")), "--backend", "both"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, "[cascade]\npreset = \"nonesuch\"\n").unwrap();
    assert_eq!(code(&run(&["derive", "--config", arg(&p)])), 2);
    fs::write(&p, "[cascade]\npreset = \"homi\"\nbogus = 1\n").unwrap();
    assert_eq!(code(&run(&["derive", "--config", arg(&p)])), 2);
}

#[test]
fn reconstruct_recovers_widths() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("spectra.csv");
    for name in ["fig7a", "fig7b", "fig7c"] {
        let o = run(&["reconstruct", "--config", arg(&config(name)), "--out", arg(&p)]);
        assert_eq!(code(&o), 0);
        let report = stdout(&o);
        for line in report.lines().filter(|l| l.starts_with("sigma")) {
            let err: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
            assert!(err.abs() < 0.02, "{name}: {line}");
        }
        let csv = fs::read_to_string(&p).unwrap();
        assert!(csv.starts_with("omega,minus_intensity,plus_intensity\n"));
    }
}

#[test]
fn reconstruct_from_trace_csv() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let o = run(&["sweep", "--config", arg(&config("fig7c")), "--out", arg(&trace)]);
    assert_eq!(code(&o), 0);
    let p = dir.path().join("s.csv");
    let o = run(&["reconstruct", "--trace", arg(&trace), "--out", arg(&p)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout(&o);
    let fitted: Vec<f64> = report
        .lines()
        .filter(|l| l.starts_with("sigma"))
        .map(|l| l.split_whitespace().nth(2).unwrap().parse().unwrap())
        .collect();
    for f in fitted {
        assert!((f - 1.0).abs() < 0.02, "{report}");
    }
}

#[test]
fn homi_reconstruct_has_no_carrier_and_exits_4() {
    let o = run(&["reconstruct", "--config", arg(&config("fig3a"))]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("carrier"));
}

#[test]
fn undersampled_carrier_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("fig7c"))
        .unwrap()
        .replace("samples = ", "samples = 60 #");
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, text).unwrap();
    let o = run(&["reconstruct", "--numeric", "--config", arg(&cfg)]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_trace_file_exits_5() {
    let o = run(&["reconstruct", "--trace", "/nonexistent/trace.csv"]);
    assert_eq!(code(&o), 5);
}

#[test]
fn validate_passes_and_emits_json_lines() {
    let o = run(&["validate"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    for line in s.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["pass"], true, "{line}");
    }
    assert!(s.contains("\"parity."), "{s}");
}

#[test]
fn corrupted_fixture_fails_with_named_invariant() {
    let o = run(&["validate", "--corrupt-fixture"]);
    assert_eq!(code(&o), 1);
    let failed: Vec<String> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|v| v["pass"] == false)
        .map(|v| v["invariant"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(failed, ["formula.two_param_11"]);
}

#[test]
fn unwritable_figures_directory_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = run(&["figures", "--out", arg(&blocker.join("sub"))]);
    assert_eq!(code(&o), 5);
}

fn load(dir: &Path, name: &str) -> (qcascade_core::interferogram::Trace, qcascade_core::interferogram::EnvelopePair) {
    let f = fs::File::open(dir.join(format!("{name}.csv"))).unwrap();
    let (t, e) = read_csv(BufReader::new(f)).unwrap();
    (t, e.expect("figure CSVs carry envelopes"))
}

#[test]
fn figures_regenerate_all_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["figures", "--out", arg(dir.path())]);
    assert_eq!(code(&o), 0);
    let count = |ext: &str| {
        fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == ext))
            .count()
    };
    assert_eq!(count("csv"), 18);
    assert_eq!(count("svg"), 18);

    let read = |n: &str| fs::read(dir.path().join(format!("{n}.csv"))).unwrap();
    assert_eq!(read("fig3a"), read("fig3c"));
    assert_eq!(read("fig4b"), read("fig4c"));
    assert_ne!(read("fig3a"), read("fig3b"));

    // The |2002⟩ three-delay figures show the same structures as |1,1⟩.
    for letter in ['a', 'c'] {
        let structures = |n: &str| {
            let (_, env) = load(dir.path(), n);
            detect_structures_envelope(&env, 1.0).unwrap()
        };
        let (s9, s10) = (structures(&format!("fig9{letter}")), structures(&format!("fig10{letter}")));
        assert_eq!(s9.len(), 8, "{s9:?}");
        assert_eq!(s9.len(), s10.len());
        for (a, b) in s9.iter().zip(&s10) {
            assert!((a.center - b.center).abs() < 0.05 * (a.stop - a.start).max(1.0), "{a:?} {b:?}");
            assert!((a.visibility / b.visibility - 1.0).abs() < 0.1, "{a:?} {b:?}");
        }
    }

    let svg = fs::read_to_string(dir.path().join("fig9a.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}
