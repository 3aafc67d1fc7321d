use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chemflow::output::{read_diagnostics, read_energies, RunManifest};
use chemflow::torf;
use chemflow::TerminationKind;
use chemflow_core::{Field, ScalarField, VectorField};

fn chemflow(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_chemflow"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn assert_outputs_exist(out: &Path, m: &RunManifest) {
    assert!(!m.outputs.is_empty());
    for rel in &m.outputs {
        assert!(out.join(rel).is_file(), "missing {rel}");
    }
}

const SMALL_2D: &str = r#"
seed = 11

[grid]
dim = 2
n = 16

[fluid]
nu0 = 0.1

[fluid.exponent]
shape = "logistic"
p_lo = 1.5
p_hi = 2.0
c_mid = 0.5

[time]
dt = 1e-3
t_end = 0.02

[monitor]
report_every = 5

[initial.velocity]
kind = "random"
amplitude = 1.0

[initial.concentration]
kind = "random"
mean = 0.5
amplitude = 0.2

[twin]
eps = [1e-3, 0.0]
"#;

#[test]
fn run_newtonian_decay_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("decay");
    let o = chemflow(&["run", "--preset", "newtonian-decay", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = RunManifest::read(&out).unwrap();
    assert_eq!(m.termination, TerminationKind::Completed);
    assert_eq!(m.command, "run");
    assert_outputs_exist(&out, &m);
    let rows = read_energies(&out.join("energies.csv")).unwrap();
    let (first, last) = (rows.first().unwrap(), rows.last().unwrap());
    assert!((last.t - 0.1).abs() < 1e-12);
    let nu0 = 0.1;
    let expected = first.kinetic * (-2.0 * nu0 * 4.0 * std::f64::consts::PI.powi(2) * last.t).exp();
    assert!((last.kinetic / expected - 1.0).abs() < 1e-3, "{} vs {expected}", last.kinetic);
}

#[test]
fn blowup_exits_two_with_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "hot.toml",
        "[grid]\ndim = 2\nn = 16\n\n[fluid]\nnu0 = 1e-4\n\n[forcing]\nkind = \"single-mode\"\nk = [0, 1]\namplitude = 1e13\n",
    );
    let out = tmp.path().join("hot");
    let o = chemflow(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let m = RunManifest::read(&out).unwrap();
    assert_eq!(m.termination, TerminationKind::BlowUpDetected);
    assert!(m.blowup_time.is_some());
    assert!(m.message.is_some());
    assert_outputs_exist(&out, &m);
}

#[test]
fn config_error_exits_one_without_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", "[grid]\ndim = 3\nn = 16\n\n[monitor]\nq = 3.0\n");
    let out = tmp.path().join("bad");
    let o = chemflow(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("monitor.q") && err.contains("line 6"), "{err}");
    assert!(!out.join("manifest").exists());
}

#[test]
fn unknown_preset_and_missing_file_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let o = chemflow(&["run", "--preset", "no-such", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    let o = chemflow(&["run", "--config", "/nonexistent.toml", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_sweep_axis_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", SMALL_2D);
    let out = tmp.path().join("s");
    let o = chemflow(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    let m = RunManifest::read(&out).unwrap();
    assert_eq!(m.termination, TerminationKind::ConfigError);
}

#[test]
fn identical_inputs_give_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_2D);
    let mut texts = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let o = chemflow(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
        assert_eq!(o.status.code(), Some(0));
        texts.push((
            fs::read(out.join("energies.csv")).unwrap(),
            fs::read(out.join("diagnostics.csv")).unwrap(),
            RunManifest::read(&out).unwrap().config_hash,
        ));
    }
    assert_eq!(texts[0], texts[1]);
    let out = tmp.path().join("c");
    chemflow(&["run", "--config", &cfg, "--seed", "12", "--out", out.to_str().unwrap()], &[]);
    assert_ne!(fs::read(out.join("energies.csv")).unwrap(), texts[0].0);
    assert_ne!(RunManifest::read(&out).unwrap().config_hash, texts[0].2);
}

#[test]
fn environment_overrides_reach_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_2D);
    let out = tmp.path().join("env");
    let o = chemflow(
        &["run", "--config", &cfg, "--out", out.to_str().unwrap()],
        &[("CHEMFLOW_TIME__T_END", "0.005")],
    );
    assert_eq!(o.status.code(), Some(0));
    let rows = read_energies(&out.join("energies.csv")).unwrap();
    assert!((rows.last().unwrap().t - 0.005).abs() < 1e-12);
    assert!(fs::read_to_string(out.join("config.toml")).unwrap().contains("t_end = 0.005"));
}

#[test]
fn twin_with_zero_eps_has_zero_distance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_2D);
    let out = tmp.path().join("twin");
    let o = chemflow(
        &["twin", "--config", &cfg, "--workers", "2", "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = RunManifest::read(&out).unwrap();
    assert_outputs_exist(&out, &m);
    let mut r = csv::Reader::from_path(out.join("twin/delta_1.csv")).unwrap();
    let mut n = 0;
    for rec in r.records() {
        assert_eq!(rec.unwrap()[1].parse::<f64>().unwrap(), 0.0);
        n += 1;
    }
    assert!(n > 10);
    let mut r = csv::Reader::from_path(out.join("twin/delta_0.csv")).unwrap();
    let first: f64 = r.records().next().unwrap().unwrap()[1].parse().unwrap();
    assert!((first / 1e-6 - 1.0).abs() < 1e-6, "{first}");
}

#[test]
fn snapshots_round_trip_and_verify_reads_them() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_2D);
    let out = tmp.path().join("snap");
    let o = chemflow(
        &["run", "--config", &cfg, "--snapshot-every", "10", "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(o.status.code(), Some(0));
    let m = RunManifest::read(&out).unwrap();
    for step in [0, 10, 20] {
        assert!(m.outputs.contains(&format!("snapshots/v_{step:06}.torf")), "{:?}", m.outputs);
        assert!(m.outputs.contains(&format!("snapshots/c_{step:06}.torf")));
    }
    let v: VectorField = torf::read_file(&out.join("snapshots/v_000020.torf")).unwrap();
    let c: ScalarField = torf::read_file(&out.join("snapshots/c_000020.torf")).unwrap();
    assert_eq!(v.grid().n(), 16);
    assert_eq!(v.grid().cutoff(), 5);
    let diags = read_diagnostics(&out.join("diagnostics.csv")).unwrap();
    let last = diags.last().unwrap().diagnostics;
    assert!((c.integral() - last.mass_c).abs() < 1e-12);
    let vmax = (0..v.grid().len())
        .map(|i| v.magnitude_sq_at(i).sqrt())
        .fold(0.0, f64::max);
    assert!((vmax - last.vmax).abs() < 1e-12 * vmax.max(1.0));

    let vout = tmp.path().join("verify");
    let o = chemflow(
        &["verify", "--input", out.to_str().unwrap(), "--out", vout.to_str().unwrap()],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let vm = RunManifest::read(&vout).unwrap();
    assert_outputs_exist(&vout, &vm);
    for name in ["energy_balance", "gronwall_chain", "max_principle", "stress_constants", "lemma_hessian", "lemma_difference"] {
        assert!(vout.join(format!("verify/{name}.report")).is_file(), "{name}");
        assert!(vm.checks.contains_key(name), "{name}");
    }
    assert_eq!(vm.config_hash, m.config_hash);
    assert_eq!(vm.checks.get("max_principle"), Some(&true));
    assert_eq!(vm.checks.get("energy_balance"), Some(&true));
    assert_eq!(vm.checks.get("stress_constants"), Some(&true));
}

#[test]
fn fresh_verify_matches_stored_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_2D);
    let fresh = tmp.path().join("fresh");
    let o = chemflow(&["verify", "--config", &cfg, "--out", fresh.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stored = tmp.path().join("stored");
    chemflow(
        &["verify", "--input", fresh.to_str().unwrap(), "--out", stored.to_str().unwrap()],
        &[],
    );
    for name in ["energy_balance", "gronwall_chain", "max_principle"] {
        let a = fs::read_to_string(fresh.join(format!("verify/{name}.report"))).unwrap();
        let b = fs::read_to_string(stored.join(format!("verify/{name}.report"))).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn sweep_over_dt_and_cutoff() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{SMALL_2D}\n[sweep]\ndt = [2e-3, 1e-3]\ncutoffs = [2, 3]\n");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let out = tmp.path().join("dt");
    let o = chemflow(&["sweep", "--config", &cfg, "--axis", "dt", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    let steps: Vec<f64> = r.records().map(|x| x.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(steps, vec![10.0, 20.0]);

    let out = tmp.path().join("cut");
    let o = chemflow(&["sweep", "--config", &cfg, "--axis", "cutoff", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = RunManifest::read(&out).unwrap();
    assert_outputs_exist(&out, &m);
    let mut r = csv::Reader::from_path(out.join("refinement.csv")).unwrap();
    let rows: Vec<Vec<f64>> = r
        .records()
        .map(|x| x.unwrap().iter().map(|s| s.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 1, "only K = 2 has a partner within n/3 = 5");
    assert_eq!(&rows[0][..2], &[2.0, 4.0]);
    assert!(rows[0][2] > 0.0);
}
