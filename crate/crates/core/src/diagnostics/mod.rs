//! Energy and Lyapunov functionals, decay fits, estimate checks,
//! the observability probe and manufactured-solution studies.

mod checks;
pub mod convergence;
mod observability;

use thiserror::Error;

use crate::model::SystemParams;
use crate::spatial::{l2_squared, quadrature, Weight};
use crate::timeloop::{InitialData, SimState, TimeloopError};
use crate::Scalar;

pub use checks::{dissipation_check, trace_estimate_check, DissipationReport, TraceEstimateReport};
pub use observability::{observability_estimate, ObservabilityReport, ObservabilitySample};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("need at least {need} positive samples in the window, found {found}")]
    TooFewSamples { need: usize, found: usize },
    #[error("check requires a linear-mode run")]
    NonlinearRun,
    #[error("records are not spaced one step apart")]
    SparseRecords,
    #[error("invalid argument: {0}")]
    Argument(&'static str),
    #[error(transparent)]
    Timeloop(#[from] TimeloopError),
}

/// One row of the diagnostic time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord<T> {
    pub t: T,
    pub e: T,
    pub v: Option<T>,
    /// `u_xx(t, 0)`.
    pub trace0: T,
    /// `z(t, 1) = u_xx(t - h, 0)`.
    pub z1: T,
    /// `int u^2 dx`.
    pub l2: T,
    /// `int_0^1 z^2 d rho`.
    pub zint: T,
}

/// `int u^2 dx + h |beta| int_0^1 z^2 d rho`.
pub fn energy<T: Scalar>(state: &SimState<T>, params: &SystemParams<T>) -> T {
    l2_squared(&state.u, &state.grid) + params.h * params.beta.abs() * state.line.square_integral()
}

/// `E + mu1 int x u^2 dx + mu2 h int_0^1 (1 - rho) z^2 d rho`.
pub fn lyapunov<T: Scalar>(state: &SimState<T>, params: &SystemParams<T>, mu1: T, mu2: T) -> T {
    let sq: Vec<T> = state.u.iter().map(|&v| v * v).collect();
    let v1 = quadrature(&sq, &state.grid, Weight::Morawetz);
    let v2 = params.h * state.line.weighted_square_integral(|rho| T::one() - rho);
    energy(state, params) + mu1 * v1 + mu2 * v2
}

pub fn record<T: Scalar>(state: &SimState<T>, params: &SystemParams<T>, mu: Option<(T, T)>) -> EnergyRecord<T> {
    let l2 = l2_squared(&state.u, &state.grid);
    let zint = state.line.square_integral();
    EnergyRecord {
        t: state.t,
        e: l2 + params.h * params.beta.abs() * zint,
        v: mu.map(|(m1, m2)| lyapunov(state, params, m1, m2)),
        trace0: state.line.back(0),
        z1: state.line.sample(T::one()),
        l2,
        zint,
    }
}

/// Discrete `||(u0, z0)||_H^2` on the simulation grid and history step.
pub fn h_norm_squared<T: Scalar>(
    ic: &InitialData<T>,
    params: &SystemParams<T>,
    grid: &crate::spatial::Grid<T>,
    dt: T,
) -> Result<T, TimeloopError> {
    let state = SimState::new(*grid, ic, params.h, dt)?;
    Ok(energy(&state, params))
}

/// `E <= V <= (1 + max{mu1 L, mu2 / |beta|}) E`, each side with relative
/// slack `1e-12`.
pub fn sandwich_check<T: Scalar>(e: T, v: T, params: &SystemParams<T>, mu1: T, mu2: T) -> bool {
    let slack = T::lit(1e-12);
    let kappa = T::one() + (mu1 * params.length).max(mu2 / params.beta.abs());
    let upper = kappa * e;
    e <= v + slack * v.abs().max(e.abs()) && v <= upper + slack * upper.abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit<T> {
    pub c: T,
    pub gamma: T,
    /// RMS of the log-linear residuals.
    pub residual: T,
    pub window: (T, T),
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Least squares of `ln E` against `t` over samples in `window` with
/// `E > 0`; returns `E ~ C exp(-gamma t)`.
pub fn fit_exponential<T: Scalar>(series: &[(T, T)], window: (T, T)) -> Result<DecayFit<T>, DiagnosticsError> {
    let pts: Vec<(T, T)> = series
        .iter()
        .filter(|(t, e)| *t >= window.0 && *t <= window.1 && *e > T::zero() && e.is_finite())
        .map(|&(t, e)| (t, e.ln()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(DiagnosticsError::TooFewSamples {
            need: MIN_FIT_SAMPLES,
            found: pts.len(),
        });
    }
    let n = T::count(pts.len());
    let mean_t = pts.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let mean_y = pts.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for &(t, y) in &pts {
        sxx += (t - mean_t) * (t - mean_t);
        sxy += (t - mean_t) * (y - mean_y);
    }
    if sxx == T::zero() {
        return Err(DiagnosticsError::Argument("window holds a single time"));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_t;
    let ss = pts.iter().fold(T::zero(), |a, &(t, y)| {
        let r = y - (intercept + slope * t);
        a + r * r
    });
    Ok(DecayFit {
        c: intercept.exp(),
        gamma: -slope,
        residual: (ss / n).sqrt(),
        window,
        samples: pts.len(),
    })
}

/// Default fit window `[0.2 T, T]`.
pub fn default_window<T: Scalar>(t_end: T) -> (T, T) {
    (T::lit(0.2) * t_end, t_end)
}
