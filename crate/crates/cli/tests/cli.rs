use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn tfd(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tfd"));
    cmd.args(args).env_remove("TFD_WORKERS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_ok(config: &Path, out: &Path) {
    let o = tfd(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

/// Column `name` of a CSV written by the runner, ignoring the unit suffix.
fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let k = r
        .headers()
        .unwrap()
        .iter()
        .position(|h| h.split(' ').next() == Some(name))
        .unwrap_or_else(|| panic!("no column {name}"));
    r.records().map(|row| row.unwrap()[k].parse().unwrap()).collect()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const TANH: &str = r#"
[run]
beta = 1.0

[protocol]
kind = "oscillator"
family = "tanh"
t_i = 0.0
t_f = 10.0
center = 5.0
width = 0.5
omega_start = 1.0
omega_end = 2.0

[integrator]
rel_tol = 1e-10
abs_tol = 1e-12
grid_points = 41

[oracle]
enabled = false
truncation = 40
substeps_per_unit = 400
"#;

#[test]
fn equilibrium_occupation_column_is_one() {
    let tmp = TempDir::new().unwrap();
    for (name, protocol) in [
        ("osc", "kind = \"oscillator\"\nomega_start = 1.0\nmass_start = 2.0"),
        ("bos", "kind = \"boson\"\nomega0_start = 1.0"),
    ] {
        let text = format!(
            "[run]\nbeta = {}\n\n[protocol]\nfamily = \"constant\"\nt_i = 0.0\nt_f = 4.0\n{protocol}\n\n\
             [integrator]\nrel_tol = 1e-10\nabs_tol = 1e-12\ngrid_points = 21\n\n\
             [oracle]\nenabled = true\ntruncation = 40\nsubsteps_per_unit = 200\n",
            std::f64::consts::LN_2
        );
        let cfg = write(tmp.path(), &format!("{name}.toml"), &text);
        let out = tmp.path().join(name);
        run_ok(&cfg, &out);
        let obs = out.join("observables.csv");
        for col in ["occupation", "occupation_final", "oracle_occupation_final"] {
            for v in column(&obs, col) {
                assert!((v - 1.0).abs() < 1e-9, "{name} {col}: {v}");
            }
        }
    }
}

#[test]
fn narrow_ramp_matches_sudden_production() {
    let tmp = TempDir::new().unwrap();
    let text = TANH
        .replace("beta = 1.0", "beta = 50.0")
        .replace("t_f = 10.0", "t_f = 2.0")
        .replace("center = 5.0", "center = 1.0")
        .replace("width = 0.5", "width = 1e-4")
        .replace("omega_end = 2.0", "omega_end = 4.0");
    let cfg = write(tmp.path(), "sudden.toml", &text);
    let out = tmp.path().join("out");
    run_ok(&cfg, &out);
    let nu2 = column(&out.join("observables.csv"), "nu2");
    let last = *nu2.last().unwrap();
    assert!((last - 0.5625).abs() < 1e-3, "{last}");
}

#[test]
fn oracle_columns_agree_with_mode_equations() {
    let tmp = TempDir::new().unwrap();
    let text = TANH
        .replace("enabled = false", "enabled = true\nscheme = \"magnus4\"")
        .replace("grid_points = 41", "grid_points = 11")
        .replace("truncation = 40", "truncation = 60");
    let cfg = write(tmp.path(), "c.toml", &text);
    let out = tmp.path().join("out");
    run_ok(&cfg, &out);
    let obs = out.join("observables.csv");
    for (col, tol) in [("occupation_final", 1e-6), ("q2", 1e-6), ("q4", 1e-4)] {
        let worst = column(&obs, &format!("diff_{col}")).into_iter().fold(0.0, f64::max);
        assert!(worst < tol, "{col}: {worst}");
    }
    let m = manifest(&out);
    assert_eq!(m["comparisons"].as_array().unwrap().len(), 3);
    assert!(m["truncation"]["tail_weight"].as_f64().unwrap() < 1e-6);
}

#[test]
fn fermion_run_agrees_with_exact_space() {
    let tmp = TempDir::new().unwrap();
    let text = r#"
[run]
beta = 1.0
statistics = "fermion"

[protocol]
kind = "fermion"
family = "linear"
t_i = 0.0
t_f = 5.0
ramp_start = 1.0
ramp_end = 4.0
omega0_start = 1.0
omega0_end = 1.5
omega_plus_start = 0.0
omega_plus_end = 0.4
omega_minus_start = 0.0
omega_minus_end = 0.3
omega_minus_phase = -0.7

[integrator]
rel_tol = 1e-10
abs_tol = 1e-12
grid_points = 11

[oracle]
enabled = true
truncation = 40
substeps_per_unit = 1000
"#;
    let cfg = write(tmp.path(), "f.toml", text);
    let out = tmp.path().join("out");
    run_ok(&cfg, &out);
    let obs = out.join("observables.csv");
    let first = column(&obs, "occupation_a")[0];
    let fd = 1.0 / (1.0f64.exp() + 1.0);
    assert!((first - fd).abs() < 1e-12);
    for col in ["diff_occupation_a", "diff_occupation_b"] {
        let worst = column(&obs, col).into_iter().fold(0.0, f64::max);
        assert!(worst < 1e-8, "{col}: {worst}");
    }
    assert!((column(&out.join("modes.csv"), "W_a0_re")[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.toml", TANH);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_ok(&cfg, &a);
    run_ok(&cfg, &b);
    for f in ["modes.csv", "observables.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (mut ma, mut mb) = (manifest(&a), manifest(&b));
    for m in [&mut ma, &mut mb] {
        let o = m.as_object_mut().unwrap();
        o.remove("timestamp_unix");
        o.remove("duration_seconds");
    }
    assert_eq!(ma, mb);
}

#[test]
fn csv_headers_carry_units_and_full_precision() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.toml", TANH);
    let out = tmp.path().join("out");
    run_ok(&cfg, &out);
    for f in ["modes.csv", "observables.csv"] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        let mut lines = text.lines();
        for h in lines.next().unwrap().split(',') {
            assert!(h.ends_with(']') && h.contains(" ["), "header {h}");
        }
        for field in lines.next().unwrap().split(',') {
            let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.len(), 18, "{field}");
        }
    }
}

#[test]
fn sweep_is_independent_of_order_and_workers() {
    let tmp = TempDir::new().unwrap();
    let values = [0.25, 0.5, 1.0, 2.0];
    let forward = format!("{TANH}\n[sweep]\nparameter = \"width\"\nvalues = [0.25, 0.5, 1.0, 2.0]\n");
    let shuffled = format!("{TANH}\n[sweep]\nparameter = \"width\"\nvalues = [1.0, 2.0, 0.25, 0.5]\n");
    let order = [2usize, 3, 0, 1];
    let fa = write(tmp.path(), "forward.toml", &forward);
    let fb = write(tmp.path(), "shuffled.toml", &shuffled);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let o = tfd(&["sweep", "--config", fa.to_str().unwrap(), "--out", a.to_str().unwrap()], &[("TFD_WORKERS", "1")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = tfd(&["sweep", "--config", fb.to_str().unwrap(), "--out", b.to_str().unwrap()], &[("TFD_WORKERS", "4")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    for (k, v) in values.iter().enumerate() {
        let single = tmp.path().join(format!("single_{k}"));
        let cfg = write(tmp.path(), &format!("single_{k}.toml"), &TANH.replace("width = 0.5", &format!("width = {v}")));
        run_ok(&cfg, &single);
        let from_a = a.join(format!("entry_{k:03}"));
        let from_b = b.join(format!("entry_{:03}", order.iter().position(|&j| j == k).unwrap()));
        for f in ["modes.csv", "observables.csv"] {
            let want = fs::read(single.join(f)).unwrap();
            assert_eq!(fs::read(from_a.join(f)).unwrap(), want, "width {v} {f}");
            assert_eq!(fs::read(from_b.join(f)).unwrap(), want, "width {v} {f}");
        }
    }

    let rows = |dir: &Path| -> (String, BTreeSet<String>) {
        let text = fs::read_to_string(dir.join("sweep.csv")).unwrap();
        let mut lines = text.lines().map(String::from);
        (lines.next().unwrap(), lines.collect())
    };
    assert_eq!(rows(&a), rows(&b));
    let widths = column(&a.join("sweep.csv"), "width");
    assert_eq!(widths, values);
}

#[test]
fn verify_without_oracle_skips_and_succeeds() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "v.toml",
        "[oracle]\nenabled = false\ntruncation = 60\nsubsteps_per_unit = 2000\n",
    );
    let out = tmp.path().join("out");
    let o = tfd(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let m = manifest(&out);
    let checks = m["checks"].as_array().unwrap();
    let ids: BTreeSet<&str> = checks.iter().map(|c| c["id"].as_str().unwrap()).collect();
    assert_eq!(ids.len(), checks.len(), "every check appears once");
    let status = |s: &str| checks.iter().filter(|c| c["status"] == s).count();
    assert_eq!(status("fail"), 0);
    assert!(status("skipped") > 0);
    assert!(status("pass") > 0);
    for c in checks {
        if c["id"].as_str().unwrap().contains("oracle") {
            assert_eq!(c["status"], "skipped", "{c}");
        }
    }
}

#[test]
fn loose_tolerance_fails_the_wronskian_check() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "v.toml",
        "[integrator]\nrel_tol = 1e-3\nabs_tol = 1e-12\ngrid_points = 1001\n\n\
         [oracle]\nenabled = false\ntruncation = 60\nsubsteps_per_unit = 2000\n",
    );
    let out = tmp.path().join("out");
    let o = tfd(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(5));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let line = stdout.lines().find(|l| l.contains("oscillator_wronskian_drift")).unwrap();
    assert!(line.contains("FAIL") && line.contains("excess"), "{line}");
    let m = manifest(&out);
    let check = m["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["id"] == "oscillator_wronskian_drift")
        .unwrap();
    assert_eq!(check["status"], "fail");
    assert!(check["measured"].as_f64().unwrap() > check["tolerance"].as_f64().unwrap());
}

#[test]
fn exit_statuses_distinguish_failures() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let status = |name: &str, text: &str| {
        let cfg = write(tmp.path(), name, text);
        let o = tfd(&["run", "--config", cfg.to_str().unwrap(), "--out", out], &[]);
        (o.status.code(), String::from_utf8_lossy(&o.stderr).into_owned())
    };

    let (code, err) = status("typo.toml", &TANH.replace("center = 5.0", "centre = 5.0"));
    assert_eq!(code, Some(2));
    assert!(err.contains("centre") && err.contains("line"), "{err}");
    assert_eq!(status("beta.toml", &TANH.replace("beta = 1.0", "beta = -1.0")).0, Some(2));
    assert_eq!(status("noproto.toml", "[run]\nbeta = 1.0\n").0, Some(2));
    assert_eq!(status("syntax.toml", "[run\nbeta = 1.0\n").0, Some(2));

    let collapse = TANH
        .replace("family = \"tanh\"", "family = \"linear\"")
        .replace("center = 5.0\nwidth = 0.5", "ramp_start = 2.0\nramp_end = 4.0\nmass_start = 1.0\nmass_end = -1.0");
    assert_eq!(status("mass.toml", &collapse).0, Some(3));

    let hot = TANH
        .replace("beta = 1.0", "beta = 0.01")
        .replace("enabled = false", "enabled = true")
        .replace("truncation = 40", "truncation = 10");
    assert_eq!(status("hot.toml", &hot).0, Some(4));

    let o = tfd(&["sweep", "--config", write(tmp.path(), "s.toml", TANH).to_str().unwrap(), "--out", out], &[]);
    assert_eq!(o.status.code(), Some(2));
    let sweep = format!("{TANH}\n[sweep]\nparameter = \"width\"\nvalues = [1.0]\n");
    let o = tfd(
        &["sweep", "--config", write(tmp.path(), "w.toml", &sweep).to_str().unwrap(), "--out", out],
        &[("TFD_WORKERS", "zero")],
    );
    assert_eq!(o.status.code(), Some(2));
}
