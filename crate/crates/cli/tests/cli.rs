use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kawahara_core::model::{decay_certificate, half_sup_weights};
use kawahara_core::SystemParams;
use serde_json::Value;

fn kawahara(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kawahara"));
    cmd.args(args).env_remove("KAWAHARA_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn run_ok(sub: &str, config: &str, dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = kawahara(&args, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    o
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

const SHORT: &str = "N=60\ndt=0.005\nT=0.5\n";

#[test]
fn zero_initial_data_gives_zero_energy() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("simulate", &format!("{SHORT}ic=zero\n"), dir.path(), &[]);
    let (header, rows) = csv_rows(&dir.path().join("out/timeseries.csv"));
    assert_eq!(header, "t,E,V,trace0,z1,l2");
    assert_eq!(rows.len(), 101);
    for r in &rows {
        assert_eq!(r[1].parse::<f64>().unwrap(), 0.0);
    }
    let summary = read_json(&dir.path().join("out/summary.json"));
    assert_eq!(summary["schema_version"], 1);
    assert!(summary["fit"]["error"].is_string());
}

#[test]
fn simulate_writes_snapshots_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("simulate", &format!("{SHORT}snapshots=0,0.25\nic_radius_fraction=0.5\n"), dir.path(), &[]);
    let (header, rows) = csv_rows(&dir.path().join("out/snapshots.csv"));
    assert_eq!(header, "t,x,u");
    assert_eq!(rows.len(), 2 * 61);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[60][1].parse::<f64>().unwrap(), 3.0);
    let s = read_json(&dir.path().join("out/summary.json"));
    let radius = s["smallness_radius"].as_f64().unwrap();
    let h_norm = s["initial"]["h_norm"].as_f64().unwrap();
    assert!((h_norm - 0.5 * radius).abs() < 1e-12 * radius);
    assert_eq!(s["sandwich"]["violations"], 0);
    assert!(s["certificate"]["lambda"].as_f64().unwrap() > 0.0);
}

#[test]
fn certificate_matches_core() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("certificate", "a=1\nb=1\nalpha=0.3\nbeta=0.3\nh=1\nL=3\nr=0.2\n", dir.path(), &[]);
    let c = read_json(&dir.path().join("out/certificate.json"));
    let p = SystemParams::reference();
    let (mu1, mu2) = half_sup_weights(&p).unwrap();
    let want = decay_certificate(&p, mu1, mu2, 0.2).unwrap();
    assert_eq!(c["lambda"].as_f64().unwrap(), want.lambda);
    assert_eq!(c["kappa"].as_f64().unwrap(), want.kappa);
    assert_eq!(c["M"]["negative_definite"], true);
    assert_eq!(c["M_mu"]["negative_definite"], true);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SHORT}ic=random\nz0=random\nmode=linear\nsnapshots=0.1\n");
    run_ok("simulate", &cfg, dir.path(), &["--seed", "9"]);
    let first: Vec<Vec<u8>> = ["timeseries.csv", "snapshots.csv", "summary.json"]
        .iter()
        .map(|f| fs::read(dir.path().join("out").join(f)).unwrap())
        .collect();
    run_ok("simulate", &cfg, dir.path(), &["--seed", "9"]);
    for (f, bytes) in ["timeseries.csv", "snapshots.csv", "summary.json"].iter().zip(first) {
        assert_eq!(fs::read(dir.path().join("out").join(f)).unwrap(), bytes, "{f}");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("simulate", &format!("{SHORT}ic=random\nseed=1\n"), dir.path(), &["--seed", "2"]);
    let s = read_json(&dir.path().join("out/summary.json"));
    assert_eq!(s["config"]["seed"], "2");
}

#[test]
fn csv_floats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("simulate", SHORT, dir.path(), &[]);
    let (_, rows) = csv_rows(&dir.path().join("out/timeseries.csv"));
    for cell in rows.iter().flatten() {
        let x: f64 = cell.parse().unwrap();
        assert_eq!(format!("{x:.16e}"), *cell);
    }
}

#[test]
fn unknown_key_fails_with_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "frobnicate=1\n").unwrap();
    let o = kawahara(&["simulate", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("frobnicate"));
}

#[test]
fn inadmissible_gains_are_rejected_at_run_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gains.cfg");
    fs::write(&cfg, "alpha=0.6\nbeta=0.5\n").unwrap();
    let out = dir.path().join("o");
    for sub in ["simulate", "certificate"] {
        let o = kawahara(&[sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
        assert_eq!(o.status.code(), Some(1));
        let err: Value = serde_json::from_slice(&o.stderr).unwrap();
        assert!(err["error"]["message"].as_str().unwrap().contains("GainSum"));
    }
}

#[test]
fn usage_errors_are_json() {
    let o = kawahara(&["bogus"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "usage");
    let o = kawahara(&["simulate", "--config", "/nonexistent/run.cfg"], &[]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "io");
}

#[test]
fn bad_thread_cap_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    fs::write(&cfg, "").unwrap();
    let out = dir.path().join("o");
    let o = kawahara(
        &["critical-set", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        &[("KAWAHARA_THREADS", "zero")],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn default_scan_meets_thresholds_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.cfg");
    fs::write(&cfg, "# defaults\n").unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(threads);
        let o = kawahara(
            &["spectral-scan", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
            &[("KAWAHARA_THREADS", threads)],
        );
        assert!(o.status.success());
        outputs.push(fs::read(out.join("scan.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let (header, rows) = csv_rows(&dir.path().join("1/scan.csv"));
    assert_eq!(header, "r,L,mobius_res,sigma_min,sigma5,flags");
    assert_eq!(rows.len(), 10_000);
    let min = |k: usize| {
        rows.iter()
            .filter(|r| r[5] == "ok")
            .map(|r| r[k].parse::<f64>().unwrap())
            .fold(f64::INFINITY, f64::min)
    };
    assert!(min(2) > 1e-6);
    assert!(min(3) > 1e-8);
    assert!(min(4) > 1e-8);
}

#[test]
fn critical_set_hits() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("critical-set", "critical_L=0,20\n", dir.path(), &[]);
    let h = read_json(&dir.path().join("out/hits.json"));
    assert_eq!(h["count"], 2);
    let l = h["hits"][0]["L"].as_f64().unwrap();
    assert!((l - 9.4006).abs() < 1e-3);
    assert_eq!(h["hits"][0]["constants"]["C"].as_array().unwrap().len(), 5);
}

#[test]
fn observability_is_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("obs.cfg");
    fs::write(&cfg, "N=60\ndt=0.005\nobs_samples=10\n").unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(threads);
        let o = kawahara(
            &["observability", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "3"],
            &[("KAWAHARA_THREADS", threads)],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(fs::read(out.join("observability.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let v: Value = serde_json::from_slice(&outputs[0]).unwrap();
    assert_eq!(v["samples"].as_array().unwrap().len(), 10);
    assert!(v["C_emp"].as_f64().unwrap() > 0.0);
}

#[test]
fn convergence_orders() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        "convergence",
        "conv_N=32,64\nconv_dt=0.001\nconv_T=0.1\nconv_temporal_N=64\nconv_dts=0.01,0.005\nconv_dt_ref=0.00125\n",
        dir.path(),
        &[],
    );
    let o = read_json(&dir.path().join("out/orders.json"));
    assert_eq!(o["spatial"]["study"]["orders"].as_array().unwrap().len(), 1);
    assert_eq!(o["temporal"]["study"]["errors"].as_array().unwrap().len(), 2);
    assert!(o["temporal"]["study"]["min_order"].as_f64().unwrap() > 1.5);
}
