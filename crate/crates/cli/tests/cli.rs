use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nls_lab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nls-lab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("NLS_LAB_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> (String, String) {
    (
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

const PLANE: &str = r#"
cadence_steps = 10
[grid]
n = [16, 16]
[params]
dim = 2
p = 3
dt = 0.01
t_end = 4.0
[init]
kind = "plane_wave"
k = [1, -1]
amplitude = 0.6
"#;

const RANDOM: &str = r#"
cadence_steps = 5
[grid]
n = [16, 16]
[params]
dim = 2
p = 3
dt = 0.001
t_end = 0.1
[init]
kind = "random_sobolev"
s = 3
amplitude = 0.5
seed = 1
"#;

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn help_lists_every_subcommand_and_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nls_lab(&["--help"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let (out, _) = text(&o);
    for word in ["simulate", "verify", "probe", "fit", "report", "--output-root", "NLS_LAB_OUTPUT_ROOT"] {
        assert!(out.contains(word), "{word}");
    }
    let o = nls_lab(&["verify", "--help"], tmp.path());
    let (out, _) = text(&o);
    for flag in ["--config", "--energy", "--k", "--p", "--widths", "--eps", "--output"] {
        assert!(out.contains(flag), "{flag}");
    }
    let o = nls_lab(&["--version"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o).0.contains("nls-core"));
}

#[test]
fn missing_config_is_a_validation_failure_naming_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nls_lab(&["simulate", "--config", "nowhere/c.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).1.contains("nowhere/c.toml"));
    let o = nls_lab(&["verify", "--config", "gone.toml", "--widths", "0.01"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).1.contains("gone.toml"));
}

#[test]
fn invalid_fields_and_flags_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", &PLANE.replace("amplitude = 0.6", "amplitude = -1"));
    let o = nls_lab(&["simulate", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).1.contains("init.amplitude"));
    let cfg = write(tmp.path(), "c.toml", PLANE);
    let o = nls_lab(&["simulate", "--config", &cfg, "--dt=-1"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).1.contains("params.dt"));
    let o = nls_lab(&["simulate", "--config", &cfg, "--seed", "3"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let o = nls_lab(&["frobnicate"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn plane_wave_run_fits_zero_exponent() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", PLANE);
    let o = nls_lab(&["simulate", "--config", &cfg, "--output", "runs/0001"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{:?}", text(&o));
    let o = nls_lab(&["fit", "--run", "runs/0001", "--model", "polynomial"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{:?}", text(&o));
    let out = text(&o).0;
    let value: f64 = out
        .split_whitespace()
        .skip_while(|w| *w != "exponent_or_rate")
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(value.abs() < 1e-6, "{out}");
}

#[test]
fn unnamed_runs_are_numbered_under_the_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", &PLANE.replace("t_end = 4.0", "t_end = 0.1"));
    let run = |extra: &[&str]| {
        let mut args = vec!["simulate", "--config", cfg.as_str()];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_nls-lab"))
            .args(&args)
            .current_dir(tmp.path())
            .env("NLS_LAB_OUTPUT_ROOT", "from-env")
            .output()
            .unwrap()
    };
    assert_eq!(run(&[]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(0));
    assert!(tmp.path().join("from-env/0001/manifest.json").exists());
    assert!(tmp.path().join("from-env/0002/series.ndjson").exists());
    // The flag beats the environment.
    assert_eq!(run(&["--output-root", "flag"]).status.code(), Some(0));
    assert!(tmp.path().join("flag/0001/manifest.json").exists());
}

#[test]
fn reports_are_byte_identical_for_identical_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", PLANE);
    for dir in ["a", "b"] {
        let o = nls_lab(&["simulate", "--config", &cfg, "--output", dir], tmp.path());
        assert_eq!(o.status.code(), Some(0));
        let o = nls_lab(&["report", "--run", dir, "--format", "json"], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{:?}", text(&o));
    }
    let a = fs::read(tmp.path().join("a/report.json")).unwrap();
    let b = fs::read(tmp.path().join("b/report.json")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        fs::read(tmp.path().join("a/series.ndjson")).unwrap(),
        fs::read(tmp.path().join("b/series.ndjson")).unwrap()
    );
    assert!(tmp.path().join("a/plots/h2.svg").exists());
}

#[test]
fn rerun_from_manifest_reproduces_series() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "r.toml", RANDOM);
    assert_eq!(nls_lab(&["simulate", "--config", &cfg, "--output", "a"], tmp.path()).status.code(), Some(0));
    let o = nls_lab(&["simulate", "--config", "a/manifest.json", "--output", "b"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{:?}", text(&o));
    assert_eq!(
        fs::read(tmp.path().join("a/series.ndjson")).unwrap(),
        fs::read(tmp.path().join("b/series.ndjson")).unwrap()
    );
}

#[test]
fn stopped_runs_resume_to_the_same_series() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "r.toml", RANDOM);
    assert_eq!(nls_lab(&["simulate", "--config", &cfg, "--output", "whole"], tmp.path()).status.code(), Some(0));
    let o = nls_lab(
        &["simulate", "--config", &cfg, "--output", "part", "--stop-at-step", "42"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o).0.contains("Interrupted"));
    let o = nls_lab(&["simulate", "--resume", "part"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{:?}", text(&o));
    assert_eq!(
        fs::read(tmp.path().join("whole/series.ndjson")).unwrap(),
        fs::read(tmp.path().join("part/series.ndjson")).unwrap()
    );
}

#[test]
fn verify_prints_residual_table_and_order() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "r.toml", RANDOM);
    let o = nls_lab(
        &[
            "verify", "--config", &cfg, "--energy", "even", "--k", "1", "--p", "3", "--widths", "0.02,0.01,0.005",
            "--output", "v",
        ],
        tmp.path(),
    );
    let (out, err) = text(&o);
    assert_eq!(o.status.code(), Some(0), "{err}");
    assert!(out.contains("max residual"));
    assert!(out.contains("fitted order"));
    assert!(tmp.path().join("v/verify.json").exists());
    assert!(tmp.path().join("v/plots/identity.svg").exists());
    let o = nls_lab(&["verify", "--config", &cfg, "--widths", "0.0013"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).1.contains("widths"));
}

#[test]
fn probe_reports_both_ratios() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nls_lab(&["probe", "--n", "16", "--ensemble", "3", "--output", "p"], tmp.path());
    let (out, err) = text(&o);
    assert_eq!(o.status.code(), Some(0), "{err}");
    assert!(out.contains("H^(s+2k-1) ratio") && out.contains("H^(s+2k)   ratio"));
    assert!(tmp.path().join("p/probe.json").exists());
    let o = nls_lab(&["probe", "--k", "9"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn blow_up_exits_two_and_prints_the_diagnostic_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", &PLANE.replace("amplitude = 0.6", "amplitude = 1e160"));
    let o = nls_lab(&["simulate", "--config", &cfg, "--output", "boom"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).1.contains("diagnostic.json"));
    assert!(tmp.path().join("boom/diagnostic.json").exists());
}

#[test]
fn ensembles_fan_out_into_member_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "r.toml", &RANDOM.replace("t_end = 0.1", "t_end = 0.01"));
    let o = nls_lab(
        &["simulate", "--config", &cfg, "--output", "ens", "--ensemble", "3", "--jobs", "2"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{:?}", text(&o));
    for i in 0..3 {
        assert!(tmp.path().join(format!("ens/member-{i:04}/series.ndjson")).exists());
    }
}

#[test]
fn subcommands_write_only_inside_their_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "r.toml", RANDOM);
    let before: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    let o = nls_lab(&["verify", "--config", &cfg, "--widths", "0.01"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let o = nls_lab(&["probe", "--n", "16", "--ensemble", "2"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let after: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(before, after);
}
