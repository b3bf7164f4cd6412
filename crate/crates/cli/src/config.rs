//! Flat `key=value` run configuration.
//!
//! Every key has a default, so an empty file is a valid configuration.
//! Blank lines and `#` comments are ignored; a key given twice keeps the
//! last value. Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use kawahara_core::timeloop::Mode;
use kawahara_core::SystemParams;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key '{key}' has no value")]
    MissingValue { line: usize, key: String },
    #[error("line {line}: bad value '{value}' for '{key}': {reason}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
}

/// Initial displacement.
#[derive(Debug, Clone, PartialEq)]
pub enum U0Spec {
    Zero,
    /// `sin(pi x / L)^ic_power`.
    Sine,
    /// `(x (L - x))^3`, peak one.
    Bump,
    /// Band-limited noise drawn from the seed.
    Random,
    /// One value per line on the interior nodes.
    File(PathBuf),
}

/// Initial history on `[-h, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Z0Spec {
    Zero,
    /// `sin(pi s / h)`.
    Sine,
    /// The history drawn together with `ic=random`.
    Random,
    /// One value per line on a uniform partition of `[-h, 0]`, oldest first.
    File(PathBuf),
}

/// Lyapunov weight: a number, or half the admissible supremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    HalfSup,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub cells: usize,
    pub dt: f64,
    pub t_end: f64,
    pub mode: Mode,
    pub mu1: Weight,
    pub mu2: Weight,
    /// Certificate radius; `None` means the H-norm of the initial data
    /// (simulate) or zero (certificate).
    pub radius: Option<f64>,
    pub seed: u64,

    pub ic: U0Spec,
    pub ic_power: i32,
    pub ic_modes: usize,
    pub ic_amplitude: f64,
    /// Rescale `(u0, z0)` to this fraction of the smallness radius.
    pub ic_radius_fraction: Option<f64>,
    pub z0: Z0Spec,
    pub z0_amplitude: f64,

    pub snapshots: Vec<f64>,
    pub record_every: usize,
    pub fit_window: Option<(f64, f64)>,

    pub scan_r: (f64, f64),
    pub scan_nr: usize,
    pub scan_l: (f64, f64),
    pub scan_nl: usize,

    pub critical_l: (f64, f64),

    /// Observability horizon; `None` means `2h`.
    pub obs_t: Option<f64>,
    pub obs_samples: usize,

    pub conv_cells: Vec<usize>,
    pub conv_dt: f64,
    pub conv_t: f64,
    pub conv_temporal_cells: usize,
    pub conv_dts: Vec<f64>,
    pub conv_dt_ref: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::reference(),
            cells: 300,
            dt: 1e-3,
            t_end: 20.0,
            mode: Mode::Nonlinear,
            mu1: Weight::HalfSup,
            mu2: Weight::HalfSup,
            radius: None,
            seed: 0,
            ic: U0Spec::Sine,
            ic_power: 4,
            ic_modes: 4,
            ic_amplitude: 1.0,
            ic_radius_fraction: None,
            z0: Z0Spec::Zero,
            z0_amplitude: 1.0,
            snapshots: Vec::new(),
            record_every: 1,
            fit_window: None,
            scan_r: (-2.0, 2.0),
            scan_nr: 100,
            scan_l: (0.1, 20.0),
            scan_nl: 100,
            critical_l: (0.0, 50.0),
            obs_t: None,
            obs_samples: 50,
            conv_cells: vec![64, 128, 256],
            conv_dt: 1e-4,
            conv_t: 0.5,
            conv_temporal_cells: 512,
            conv_dts: vec![4e-3, 2e-3, 1e-3],
            conv_dt_ref: 1.25e-4,
        }
    }
}

/// Keys in serialization order, with their help text.
pub const KEYS: &[(&str, &str)] = &[
    ("a", "first-order coefficient (1)"),
    ("b", "third-order coefficient (1)"),
    ("p", "nonlinearity exponent, 1 or 2 (2)"),
    ("alpha", "instantaneous gain (0.3)"),
    ("beta", "delayed gain (0.3)"),
    ("h", "delay (1)"),
    ("L", "interval length (3)"),
    ("N", "grid cells (300)"),
    ("dt", "time step (0.001)"),
    ("T", "final time (20)"),
    ("mode", "linear | nonlinear (nonlinear)"),
    ("mu1", "Lyapunov weight or 'half' (half)"),
    ("mu2", "Lyapunov weight or 'half' (half)"),
    ("r", "certificate radius or 'auto' (auto)"),
    ("seed", "random seed (0)"),
    ("ic", "zero | sine | bump | random | file:<path> (sine)"),
    ("ic_power", "exponent of the sine profile (4)"),
    ("ic_modes", "modes of the random profile (4)"),
    ("ic_amplitude", "factor on u0 (1)"),
    ("ic_radius_fraction", "scale (u0, z0) to this fraction of the smallness radius (none)"),
    ("z0", "zero | sine | random | file:<path> (zero)"),
    ("z0_amplitude", "factor on z0 (1)"),
    ("snapshots", "comma-separated snapshot times (none)"),
    ("record_every", "store every k-th step (1)"),
    ("fit_window", "t0,t1 for the decay fit (T/5,T)"),
    ("scan_r", "r range of the spectral scan (-2,2)"),
    ("scan_nr", "r points (100)"),
    ("scan_L", "L range of the spectral scan (0.1,20)"),
    ("scan_nL", "L points (100)"),
    ("critical_L", "L range for critical lengths (0,50)"),
    ("obs_T", "observability horizon (2h)"),
    ("obs_samples", "observability samples (50)"),
    ("conv_N", "grids of the spatial study (64,128,256)"),
    ("conv_dt", "time step of the spatial study (0.0001)"),
    ("conv_T", "final time of both studies (0.5)"),
    ("conv_temporal_N", "grid of the temporal study (512)"),
    ("conv_dts", "steps of the temporal study (0.004,0.002,0.001)"),
    ("conv_dt_ref", "reference step of the temporal study (0.000125)"),
];

pub fn help_text() -> String {
    let mut s = String::from("Config keys (key=value, '#' comments, default in parentheses):\n");
    for (k, h) in KEYS {
        let _ = writeln!(s, "  {k:<20} {h}");
    }
    s
}

fn num<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| e.to_string())
}

fn finite(v: &str) -> Result<f64, String> {
    let x: f64 = num(v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err("not finite".into())
    }
}

fn list<T: FromStr>(v: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    v.split(',').map(|s| num(s.trim())).collect()
}

fn pair(v: &str) -> Result<(f64, f64), String> {
    match list::<f64>(v)?.as_slice() {
        [x, y] if x.is_finite() && y.is_finite() => Ok((*x, *y)),
        _ => Err("expected two finite numbers 'lo,hi'".into()),
    }
}

fn weight(v: &str) -> Result<Weight, String> {
    if v == "half" {
        Ok(Weight::HalfSup)
    } else {
        finite(v).map(Weight::Value)
    }
}

fn file_spec(v: &str) -> Option<PathBuf> {
    v.strip_prefix("file:").map(PathBuf::from)
}

impl RunConfig {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "a" => self.params.a = finite(v)?,
            "b" => self.params.b = finite(v)?,
            "p" => self.params.p = num(v)?,
            "alpha" => self.params.alpha = finite(v)?,
            "beta" => self.params.beta = finite(v)?,
            "h" => self.params.h = finite(v)?,
            "L" => self.params.length = finite(v)?,
            "N" => self.cells = num(v)?,
            "dt" => self.dt = finite(v)?,
            "T" => self.t_end = finite(v)?,
            "mode" => {
                self.mode = match v {
                    "linear" => Mode::Linear,
                    "nonlinear" => Mode::Nonlinear,
                    _ => return Err("expected 'linear' or 'nonlinear'".into()),
                }
            }
            "mu1" => self.mu1 = weight(v)?,
            "mu2" => self.mu2 = weight(v)?,
            "r" => self.radius = if v == "auto" { None } else { Some(finite(v)?) },
            "seed" => self.seed = num(v)?,
            "ic" => {
                self.ic = match v {
                    "zero" => U0Spec::Zero,
                    "sine" => U0Spec::Sine,
                    "bump" => U0Spec::Bump,
                    "random" => U0Spec::Random,
                    _ => U0Spec::File(file_spec(v).ok_or("expected zero, sine, bump, random or file:<path>")?),
                }
            }
            "ic_power" => self.ic_power = num(v)?,
            "ic_modes" => self.ic_modes = num(v)?,
            "ic_amplitude" => self.ic_amplitude = finite(v)?,
            "ic_radius_fraction" => self.ic_radius_fraction = Some(finite(v)?),
            "z0" => {
                self.z0 = match v {
                    "zero" => Z0Spec::Zero,
                    "sine" => Z0Spec::Sine,
                    "random" => Z0Spec::Random,
                    _ => Z0Spec::File(file_spec(v).ok_or("expected zero, sine, random or file:<path>")?),
                }
            }
            "z0_amplitude" => self.z0_amplitude = finite(v)?,
            "snapshots" => self.snapshots = list(v)?,
            "record_every" => self.record_every = num(v)?,
            "fit_window" => self.fit_window = Some(pair(v)?),
            "scan_r" => self.scan_r = pair(v)?,
            "scan_nr" => self.scan_nr = num(v)?,
            "scan_L" => self.scan_l = pair(v)?,
            "scan_nL" => self.scan_nl = num(v)?,
            "critical_L" => self.critical_l = pair(v)?,
            "obs_T" => self.obs_t = Some(finite(v)?),
            "obs_samples" => self.obs_samples = num(v)?,
            "conv_N" => self.conv_cells = list(v)?,
            "conv_dt" => self.conv_dt = finite(v)?,
            "conv_T" => self.conv_t = finite(v)?,
            "conv_temporal_N" => self.conv_temporal_cells = num(v)?,
            "conv_dts" => self.conv_dts = list(v)?,
            "conv_dt_ref" => self.conv_dt_ref = finite(v)?,
            _ => unreachable!("key checked against KEYS"),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<String> {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        let weight = |w: Weight| match w {
            Weight::HalfSup => "half".to_string(),
            Weight::Value(x) => x.to_string(),
        };
        let p = &self.params;
        Some(match key {
            "a" => p.a.to_string(),
            "b" => p.b.to_string(),
            "p" => p.p.to_string(),
            "alpha" => p.alpha.to_string(),
            "beta" => p.beta.to_string(),
            "h" => p.h.to_string(),
            "L" => p.length.to_string(),
            "N" => self.cells.to_string(),
            "dt" => self.dt.to_string(),
            "T" => self.t_end.to_string(),
            "mode" => match self.mode {
                Mode::Linear => "linear".into(),
                Mode::Nonlinear => "nonlinear".into(),
            },
            "mu1" => weight(self.mu1),
            "mu2" => weight(self.mu2),
            "r" => self.radius.map_or("auto".into(), |r| r.to_string()),
            "seed" => self.seed.to_string(),
            "ic" => match &self.ic {
                U0Spec::Zero => "zero".into(),
                U0Spec::Sine => "sine".into(),
                U0Spec::Bump => "bump".into(),
                U0Spec::Random => "random".into(),
                U0Spec::File(p) => format!("file:{}", p.display()),
            },
            "ic_power" => self.ic_power.to_string(),
            "ic_modes" => self.ic_modes.to_string(),
            "ic_amplitude" => self.ic_amplitude.to_string(),
            "ic_radius_fraction" => self.ic_radius_fraction?.to_string(),
            "z0" => match &self.z0 {
                Z0Spec::Zero => "zero".into(),
                Z0Spec::Sine => "sine".into(),
                Z0Spec::Random => "random".into(),
                Z0Spec::File(p) => format!("file:{}", p.display()),
            },
            "z0_amplitude" => self.z0_amplitude.to_string(),
            "snapshots" if self.snapshots.is_empty() => return None,
            "snapshots" => join(&self.snapshots),
            "record_every" => self.record_every.to_string(),
            "fit_window" => {
                let (a, b) = self.fit_window?;
                format!("{a},{b}")
            }
            "scan_r" => format!("{},{}", self.scan_r.0, self.scan_r.1),
            "scan_nr" => self.scan_nr.to_string(),
            "scan_L" => format!("{},{}", self.scan_l.0, self.scan_l.1),
            "scan_nL" => self.scan_nl.to_string(),
            "critical_L" => format!("{},{}", self.critical_l.0, self.critical_l.1),
            "obs_T" => self.obs_t?.to_string(),
            "obs_samples" => self.obs_samples.to_string(),
            "conv_N" => join(&self.conv_cells),
            "conv_dt" => self.conv_dt.to_string(),
            "conv_T" => self.conv_t.to_string(),
            "conv_temporal_N" => self.conv_temporal_cells.to_string(),
            "conv_dts" => join(&self.conv_dts),
            "conv_dt_ref" => self.conv_dt_ref.to_string(),
            _ => return None,
        })
    }

    /// Canonical text: every set key once, in [`KEYS`] order, with the
    /// shortest decimal form that parses back to the same value.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, _) in KEYS {
            if let Some(v) = self.get(k) {
                let _ = writeln!(out, "{k}={v}");
            }
        }
        out
    }

    /// Key/value pairs of [`serialize`](Self::serialize), for JSON echoes.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        KEYS.iter().filter_map(|(k, _)| self.get(k).map(|v| (*k, v))).collect()
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::MissingValue {
                line,
                key: key.to_string(),
            });
        }
        cfg.set(key, value).map_err(|reason| ConfigError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
            reason,
        })?;
    }
    Ok(cfg)
}
