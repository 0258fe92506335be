use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn deltalaser(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deltalaser"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("DELTALASER_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) {
    let o = deltalaser(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn col(rows: &[Vec<f64>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i]).collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fig1_excitation_peaks_at_half_the_strength() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["amplitudes", "--preset", "fig1"], dir.path());
    let (header, rows) = csv(&dir.path().join("fig1.csv"));
    assert_eq!(header, ["v[m/s]", "t11_sq[1]", "r11_sq[1]", "r12_flux[1]", "t12_flux[1]", "deficit[1]"]);
    for c in [3, 4] {
        let values = col(&rows, c);
        let i = (0..values.len()).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
        assert!((rows[i][0] / 0.5 - 1.0).abs() < 0.02);
        assert!((values[i] - 0.25).abs() < 1e-3);
    }
    assert!(rows.iter().all(|r| r[5].abs() < 1e-12));
    let m = json(&dir.path().join("fig1_manifest.json"));
    assert_eq!(m["config"]["delta[rad/s]"], "100");
    assert_eq!(m["files"][0]["columns"][0]["unit"], "m/s");
}

#[test]
fn zero_strength_transmits_everything() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["amplitudes", "--set", "strength[m/s]=0", "--set", "points=50"], dir.path());
    let (_, rows) = csv(&dir.path().join("amplitudes.csv"));
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| r[1] == 1.0));
}

#[test]
fn config_file_and_overrides_layer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# double layout\nscenario = twin\nlayout = double\nseparation[m] = 2e-7\npoints = 20\n").unwrap();
    ok(&["amplitudes", "--config", cfg.to_str().unwrap(), "--set", "points=30"], dir.path());
    let m = json(&dir.path().join("twin_manifest.json"));
    assert_eq!(m["config"]["points"], "30");
    assert_eq!(m["config"]["layout"], "double");
    let (_, rows) = csv(&dir.path().join("twin.csv"));
    assert_eq!(rows.len(), 30);
}

#[test]
fn config_errors_name_the_key_and_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = deltalaser(&["detection", "--set", "velocity[km/s]=1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("velocity"));

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "points = 10\nwhatever = 3\n").unwrap();
    let o = deltalaser(&["amplitudes", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("whatever"), "{err}");

    let o = deltalaser(&["ramsey", "--preset", "fig9"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn regime_violations_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = deltalaser(&["detection", "--set", "distributions=occupation_rate"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma = 0"));
}

#[test]
fn fig2_reports() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["ramsey", "--preset", "fig2a"], dir.path());
    ok(&["ramsey", "--preset", "fig2d"], dir.path());
    let a = json(&dir.path().join("fig2a_report.json"));
    assert!(a["max_deviation_over_peak"].as_f64().unwrap() < 0.05);
    assert_eq!(a["quantum"]["resonance_regime"], false);
    let d = json(&dir.path().join("fig2d_report.json"));
    assert_eq!(d["quantum"]["resonance_regime"], true);
    for name in ["fig2a.csv", "fig2d.csv"] {
        let (header, rows) = csv(&dir.path().join(name));
        assert_eq!(header, ["delta[rad/s]", "p12_quantum[1]", "p12_semiclassical[1]"]);
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r[1]) && (0.0..=1.0).contains(&r[2])));
    }
}

#[test]
fn ideal_references_are_unit_normalized() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["detection", "--preset", "ideal_narrow", "--format", "json"], dir.path());
    let data = json(&dir.path().join("ideal_narrow.json"));
    assert_eq!(data["columns"].as_array().unwrap().len(), 5);
    let m = json(&dir.path().join("ideal_narrow_manifest.json"));
    let integrals = m["summary"]["integrals"].as_object().unwrap();
    assert_eq!(integrals.len(), 4);
    for v in integrals.values() {
        assert!((v.as_f64().unwrap() - 1.0).abs() < 1e-5);
    }
}

#[test]
fn ladder_mode_emits_decreasing_distances() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["detection", "--preset", "ladder_density_fluorescence"], dir.path());
    let (header, rows) = csv(&dir.path().join("ladder_density_fluorescence.csv"));
    assert_eq!(header.last().unwrap(), "distance[1]");
    let d = col(&rows, 4);
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    let o = deltalaser(&["detection", "--preset", "ladder_flux_rivier", "--set", "limit=nope"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_tables() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["oracle", "--preset", "delta_limit"], dir.path());
    ok(&["oracle", "--preset", "grid"], dir.path());
    let order = |name: &str| json(&dir.path().join(format!("{name}_report.json")))["order"].as_f64().unwrap();
    assert!((order("delta_limit") - 1.0).abs() < 0.2);
    assert!((order("grid") - 2.0).abs() < 0.3);
    let o = deltalaser(&["oracle", "--preset", "grid", "--set", "rungs=1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(a.path(), "4"), (b.path(), "1")] {
        ok(&["ramsey", "--preset", "fig2b", "--threads", threads], dir);
        let o = Command::new(env!("CARGO_BIN_EXE_deltalaser"))
            .args(["detection", "--preset", "reference", "--out"])
            .arg(dir)
            .env("DELTALASER_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
    }
    for name in ["fig2b.csv", "fig2b_report.json", "reference.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let ma = json(&a.path().join("reference_manifest.json"));
    let mb = json(&b.path().join("reference_manifest.json"));
    assert_eq!(ma["files"], mb["files"]);
}

#[test]
fn lists_presets() {
    let dir = tempfile::tempdir().unwrap();
    let o = deltalaser(&["ramsey", "--list-presets"], dir.path());
    assert_eq!(String::from_utf8_lossy(&o.stdout), "fig2a\nfig2b\nfig2c\nfig2d\n");
}
