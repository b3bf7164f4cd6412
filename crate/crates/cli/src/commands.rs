use std::fs;
use std::path::{Path, PathBuf};

use kawahara_core::diagnostics::convergence::{spatial_study, temporal_study, OrderStudy};
use kawahara_core::diagnostics::{
    default_window, fit_exponential, h_norm_squared, observability_estimate, sandwich_check,
};
use kawahara_core::model::{
    decay_certificate, gain_matrix_m, CertificateError, gain_matrix_mstar, length_bound, mu_bounds, perturbed_matrix,
    smallness_radius, validate_params,
};
use kawahara_core::spatial::build_grid;
use kawahara_core::spectral::{find_critical_lengths, spectral_scan, CRITICAL_SCAN_STEP};
use kawahara_core::timeloop::{profiles, simulate, Field, Mode, SimOptions};
use kawahara_core::{GainMatrix, InitialData, SystemParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{RunConfig, U0Spec, Weight, Z0Spec};
use crate::output::{fmt_f64, write_json, Csv};

/// Bumped whenever a column or field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Model(#[from] kawahara_core::model::ModelError),
    #[error(transparent)]
    Certificate(#[from] kawahara_core::model::CertificateError),
    #[error(transparent)]
    Timeloop(#[from] kawahara_core::timeloop::TimeloopError),
    #[error(transparent)]
    Diagnostics(#[from] kawahara_core::diagnostics::DiagnosticsError),
    #[error(transparent)]
    Spectral(#[from] kawahara_core::spectral::SpectralError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Input(_) => "input",
            CliError::Model(_) => "model",
            CliError::Certificate(_) => "certificate",
            CliError::Timeloop(_) => "timeloop",
            CliError::Diagnostics(_) => "diagnostics",
            CliError::Spectral(_) => "spectral",
        }
    }

    pub fn to_json(&self) -> Value {
        json!({"error": {"kind": self.kind(), "message": self.to_string()}})
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Certificate,
    SpectralScan,
    CriticalSet,
    Observability,
    Convergence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Certificate => "certificate",
            Command::SpectralScan => "spectral-scan",
            Command::CriticalSet => "critical-set",
            Command::Observability => "observability",
            Command::Convergence => "convergence",
        }
    }
}

/// Runs `cmd`, writes its files into `out` and returns their names.
pub fn run(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Vec<String>, CliError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    match cmd {
        Command::Simulate => run_simulate(cfg, out),
        Command::Certificate => run_certificate(cfg, out),
        Command::SpectralScan => run_scan(cfg, out),
        Command::CriticalSet => run_critical(cfg, out),
        Command::Observability => run_observability(cfg, out),
        Command::Convergence => run_convergence(cfg, out),
    }
}

fn save_json(out: &Path, name: &str, value: &Value) -> Result<String, CliError> {
    let path = out.join(name);
    write_json(&path, value).map_err(io_err(&path))?;
    Ok(name.to_string())
}

fn save_csv(out: &Path, name: &str, csv: &Csv) -> Result<String, CliError> {
    let path = out.join(name);
    csv.write(&path).map_err(io_err(&path))?;
    Ok(name.to_string())
}

fn header(cmd: Command, cfg: &RunConfig) -> Value {
    let config: serde_json::Map<String, Value> =
        cfg.entries().into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect();
    json!({"schema_version": SCHEMA_VERSION, "command": cmd.name(), "config": config})
}

fn with_header(cmd: Command, cfg: &RunConfig, body: Value) -> Value {
    let mut v = header(cmd, cfg);
    if let (Value::Object(dst), Value::Object(src)) = (&mut v, body) {
        dst.extend(src);
    }
    v
}

fn params_json(p: &SystemParams) -> Value {
    json!({"a": p.a, "b": p.b, "p": p.p, "alpha": p.alpha, "beta": p.beta, "h": p.h, "L": p.length})
}

fn matrix_json(m: &GainMatrix) -> Value {
    json!({"m11": m.m11, "m12": m.m12, "m22": m.m22, "det": m.det(), "negative_definite": m.is_negative_definite()})
}

fn read_samples(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            l.parse::<f64>()
                .map_err(|e| CliError::Input(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// `(mu1, mu2)` with `half` resolved against the admissible suprema.
pub fn resolve_weights(cfg: &RunConfig) -> Result<(f64, f64), CliError> {
    let p = &cfg.params;
    let (h1, h2) = match (cfg.mu1, cfg.mu2) {
        (Weight::Value(a), Weight::Value(b)) => return Ok((a, b)),
        _ => kawahara_core::model::half_sup_weights(p)?,
    };
    Ok(match (cfg.mu1, cfg.mu2) {
        (Weight::HalfSup, Weight::Value(mu2)) => {
            let bounds = mu_bounds(p.alpha, p.beta, p.length)?;
            ((0.5 * bounds.mu1_sup(mu2)).min(1.0 - f64::EPSILON), mu2)
        }
        (Weight::Value(mu1), Weight::HalfSup) => (mu1, h2),
        _ => (h1, h2),
    })
}

/// Initial data from the config, before any rescaling to a radius.
pub fn initial_data(cfg: &RunConfig) -> Result<InitialData, CliError> {
    let p = &cfg.params;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let random = profiles::random_smooth(&mut rng, p.length, p.h, cfg.ic_modes);
    let u0 = match &cfg.ic {
        U0Spec::Zero => Field::zero(),
        U0Spec::Sine => profiles::sine_power(p.length, cfg.ic_power),
        U0Spec::Bump => profiles::polynomial_bump(p.length),
        U0Spec::Random => random.u0.clone(),
        U0Spec::File(path) => {
            let v = read_samples(path)?;
            if v.len() + 1 != cfg.cells {
                return Err(CliError::Input(format!(
                    "{}: expected {} interior values for N = {}, found {}",
                    path.display(),
                    cfg.cells.saturating_sub(1),
                    cfg.cells,
                    v.len()
                )));
            }
            Field::Samples(v)
        }
    };
    let h = p.h;
    let z0 = match &cfg.z0 {
        Z0Spec::Zero => Field::zero(),
        Z0Spec::Sine => Field::function(move |s: f64| (std::f64::consts::PI * s / h).sin()),
        Z0Spec::Random => random.z0.clone(),
        Z0Spec::File(path) => {
            let v = read_samples(path)?;
            if v.len() < 2 {
                return Err(CliError::Input(format!("{}: need at least two history values", path.display())));
            }
            Field::Samples(v)
        }
    };
    let mut ic = InitialData::new(u0.scaled(cfg.ic_amplitude), z0.scaled(cfg.z0_amplitude));
    ic.check_compatibility(p.length, 1e-8)?;
    if let Some(frac) = cfg.ic_radius_fraction {
        let grid = build_grid(p.length, cfg.cells).map_err(kawahara_core::timeloop::TimeloopError::from)?;
        let norm = h_norm_squared(&ic, p, &grid, cfg.dt)?.sqrt();
        if !(norm > 0.0) {
            return Err(CliError::Input("ic_radius_fraction needs nonzero initial data".into()));
        }
        ic = ic.scaled(frac * smallness_radius(p)? / norm);
    }
    Ok(ic)
}

fn fit_json(fit: &Result<kawahara_core::DecayFit, kawahara_core::diagnostics::DiagnosticsError>) -> Value {
    match fit {
        Ok(f) => json!({
            "gamma": f.gamma, "c": f.c, "residual": f.residual,
            "window": [f.window.0, f.window.1], "samples": f.samples,
        }),
        Err(e) => json!({"error": e.to_string()}),
    }
}

fn run_simulate(cfg: &RunConfig, out: &Path) -> Result<Vec<String>, CliError> {
    let p = &cfg.params;
    let ic = initial_data(cfg)?;
    let weights = resolve_weights(cfg);
    let opts = SimOptions {
        mu: weights.as_ref().ok().copied(),
        snapshot_times: cfg.snapshots.clone(),
        record_every: cfg.record_every.max(1),
        ..SimOptions::default()
    };
    let run = simulate(p, &ic, cfg.t_end, cfg.cells, cfg.dt, cfg.mode, &opts)?;

    let mut ts = Csv::new(&["t", "E", "V", "trace0", "z1", "l2"]);
    for r in &run.rows {
        let v = r.v.unwrap_or(f64::NAN);
        ts.row(&[r.t, r.e, v, r.trace0, r.z1, r.l2].map(fmt_f64));
    }
    let grid = run.grid();
    let mut snaps = Csv::new(&["t", "x", "u"]);
    for s in &run.snapshots {
        for j in 0..=grid.cells {
            let u = if j == 0 || j == grid.cells { 0.0 } else { s.u[j - 1] };
            snaps.row(&[s.t, grid.x(j), u].map(fmt_f64));
        }
    }

    let series: Vec<(f64, f64)> = run.rows.iter().map(|r| (r.t, r.e)).collect();
    let window = cfg.fit_window.unwrap_or_else(|| default_window(cfg.t_end));
    let fit = fit_exponential(&series, window);
    let e0 = run.rows.first().map_or(0.0, |r| r.e);
    let radius = cfg.radius.unwrap_or(e0.sqrt());

    let (certificate, comparison, sandwich) = match &weights {
        Ok((mu1, mu2)) => {
            let violations = run
                .rows
                .iter()
                .filter(|r| r.v.is_some_and(|v| !sandwich_check(r.e, v, p, *mu1, *mu2)))
                .count();
            match decay_certificate(p, *mu1, *mu2, radius) {
                Ok(c) => {
                    let cmp = match &fit {
                        Ok(f) => json!({
                            "gamma_fit": f.gamma,
                            "two_lambda": 2.0 * c.lambda,
                            "ratio": f.gamma / (2.0 * c.lambda),
                            "gamma_at_least_90pct_of_two_lambda": f.gamma >= 1.8 * c.lambda,
                        }),
                        Err(_) => Value::Null,
                    };
                    (
                        json!({"mu1": c.mu1, "mu2": c.mu2, "r": c.r, "lambda": c.lambda, "kappa": c.kappa}),
                        cmp,
                        json!({"checked": run.rows.len(), "violations": violations}),
                    )
                }
                Err(e) => (
                    json!({"error": e.to_string()}),
                    Value::Null,
                    json!({"checked": run.rows.len(), "violations": violations}),
                ),
            }
        }
        Err(e) => (json!({"error": e.to_string()}), Value::Null, Value::Null),
    };

    let body = json!({
        "params": params_json(p),
        "run": {
            "mode": mode_name(cfg.mode),
            "N": run.cells,
            "dt": run.dt,
            "t_end": run.final_state.t,
            "steps": run.final_state.steps,
            "rows": run.rows.len(),
            "snapshots": run.snapshots.len(),
            "monotonicity_violations": run.monotonicity_violations,
            "warnings": run.warnings,
        },
        "initial": {"E": e0, "h_norm": e0.sqrt(), "l2": run.initial_l2, "history_integral": run.initial_zint},
        "smallness_radius": smallness_radius(p).ok(),
        "fit": fit_json(&fit),
        "certificate": certificate,
        "comparison": comparison,
        "sandwich": sandwich,
    });
    Ok(vec![
        save_csv(out, "timeseries.csv", &ts)?,
        save_csv(out, "snapshots.csv", &snaps)?,
        save_json(out, "summary.json", &with_header(Command::Simulate, cfg, body))?,
    ])
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Linear => "linear",
        Mode::Nonlinear => "nonlinear",
    }
}

fn run_certificate(cfg: &RunConfig, out: &Path) -> Result<Vec<String>, CliError> {
    let p = &cfg.params;
    let report = validate_params(p);
    if !report.is_admissible() {
        return Err(CertificateError::Inadmissible(report.violations).into());
    }
    let (mu1, mu2) = resolve_weights(cfg)?;
    let r = cfg.radius.unwrap_or(0.0);
    let cert = decay_certificate(p, mu1, mu2, r)?;
    let bounds = mu_bounds(p.alpha, p.beta, p.length)?;
    let body = json!({
        "params": params_json(p),
        "validation": {
            "violations": report.violations.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "length_ok": report.length_ok,
        },
        "length_bound": length_bound(p.a, p.b)?,
        "smallness_radius": smallness_radius(p)?,
        "mu_bounds": {"mu2_sup": bounds.mu2_sup, "mu1_sup_at_mu2": bounds.mu1_sup(mu2)},
        "mu1": cert.mu1,
        "mu2": cert.mu2,
        "r": cert.r,
        "lambda": cert.lambda,
        "kappa": cert.kappa,
        "M": matrix_json(&gain_matrix_m(p.alpha, p.beta)),
        "M_star": matrix_json(&gain_matrix_mstar(p.alpha, p.beta)),
        "M_mu": matrix_json(&perturbed_matrix(p.alpha, p.beta, p.length, mu1, mu2)),
    });
    Ok(vec![save_json(out, "certificate.json", &with_header(Command::Certificate, cfg, body))?])
}

fn run_scan(cfg: &RunConfig, out: &Path) -> Result<Vec<String>, CliError> {
    let scan = spectral_scan(cfg.scan_r, cfg.scan_l, cfg.scan_nr, cfg.scan_nl)?;
    let mut csv = Csv::new(&["r", "L", "mobius_res", "sigma_min", "sigma5", "flags"]);
    for c in &scan.cells {
        let mut row = [c.r, c.length, c.mobius, c.sigma_min, c.sigma5].map(fmt_f64).to_vec();
        row.push(c.flags.label());
        csv.row(&row);
    }
    Ok(vec![save_csv(out, "scan.csv", &csv)?])
}

fn run_critical(cfg: &RunConfig, out: &Path) -> Result<Vec<String>, CliError> {
    let (lo, hi) = cfg.critical_l;
    let hits = find_critical_lengths(lo, hi)?;
    let list: Vec<Value> = hits
        .iter()
        .map(|h| {
            let k = &h.constants;
            json!({
                "L": h.length,
                "membership_residual": h.membership_residual,
                "ode_residual": h.ode_residual,
                "bc_residuals": h.bc_residuals,
                "max_u": h.max_u,
                "constants": {"a": k.a, "b": k.b, "A": k.big_a, "B": k.big_b, "C": k.c},
            })
        })
        .collect();
    let body = json!({"range": [lo, hi], "scan_step": CRITICAL_SCAN_STEP, "count": hits.len(), "hits": list});
    Ok(vec![save_json(out, "hits.json", &with_header(Command::CriticalSet, cfg, body))?])
}

fn run_observability(cfg: &RunConfig, out: &Path) -> Result<Vec<String>, CliError> {
    let p = &cfg.params;
    let t_end = cfg.obs_t.unwrap_or(2.0 * p.h);
    let report = observability_estimate(p, t_end, cfg.obs_samples, cfg.seed, cfg.cells, cfg.dt)?;
    let samples: Vec<Value> = report
        .samples
        .iter()
        .map(|s| {
            json!({"index": s.index, "E0": s.e0, "ET": s.e_t, "observed": s.observed, "ratio": s.ratio, "flagged": s.flagged})
        })
        .collect();
    let body = json!({
        "params": params_json(p),
        "T": report.t_end,
        "N": cfg.cells,
        "dt": cfg.dt,
        "seed": cfg.seed,
        "C_emp": report.c_emp,
        "gamma_emp": report.gamma_emp,
        "nu_emp": report.nu_emp,
        "contraction_failures": report.contraction_failures(),
        "samples": samples,
    });
    Ok(vec![save_json(out, "observability.json", &with_header(Command::Observability, cfg, body))?])
}

fn study_json(s: &OrderStudy<f64>) -> Value {
    json!({"steps": s.steps, "errors": s.errors, "orders": s.orders, "min_order": s.min_order()})
}

fn run_convergence(cfg: &RunConfig, out: &Path) -> Result<Vec<String>, CliError> {
    let p = &cfg.params;
    let spatial = spatial_study(p, &cfg.conv_cells, cfg.conv_dt, cfg.conv_t, cfg.mode)?;
    let temporal = temporal_study(p, cfg.conv_temporal_cells, &cfg.conv_dts, cfg.conv_dt_ref, cfg.conv_t, cfg.mode)?;
    let body = json!({
        "params": params_json(p),
        "mode": mode_name(cfg.mode),
        "T": cfg.conv_t,
        "spatial": {"N": cfg.conv_cells, "dt": cfg.conv_dt, "study": study_json(&spatial)},
        "temporal": {"N": cfg.conv_temporal_cells, "dt_ref": cfg.conv_dt_ref, "study": study_json(&temporal)},
    });
    Ok(vec![save_json(out, "orders.json", &with_header(Command::Convergence, cfg, body))?])
}
