use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::model::SystemParams;
use crate::spatial::build_grid;
use crate::timeloop::{profiles, simulate, Mode, SimOptions};
use crate::Scalar;

use super::{h_norm_squared, DiagnosticsError, EnergyRecord};

/// Sine modes in each random initial state.
pub const PROBE_MODES: usize = 4;

/// Denominators below this multiple of the initial norm flag a sample.
pub const OBSERVABILITY_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservabilitySample<T> {
    pub index: usize,
    /// `||(u0, z0)||_H^2`, one up to rounding.
    pub e0: T,
    pub e_t: T,
    /// `int_0^T (u_xx(t, 0)^2 + z(t, 1)^2) dt`.
    pub observed: T,
    pub ratio: T,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservabilityReport<T> {
    pub c_emp: T,
    pub gamma_emp: T,
    pub nu_emp: T,
    pub t_end: T,
    pub samples: Vec<ObservabilitySample<T>>,
}

impl<T: Scalar> ObservabilityReport<T> {
    /// Samples violating `E(T) <= gamma_emp E(0)`.
    pub fn contraction_failures(&self) -> Vec<usize> {
        self.samples
            .iter()
            .filter(|s| s.e_t > self.gamma_emp * s.e0)
            .map(|s| s.index)
            .collect()
    }
}

fn observed<T: Scalar>(rows: &[EnergyRecord<T>]) -> T {
    rows.windows(2).fold(T::zero(), |acc, w| {
        let f = |r: &EnergyRecord<T>| r.trace0 * r.trace0 + r.z1 * r.z1;
        acc + T::lit(0.5) * (f(&w[0]) + f(&w[1])) * (w[1].t - w[0].t)
    })
}

/// Runs the linear system from `n_samples` random states of unit H-norm
/// and returns `C_emp = max ||U0||^2 / int_0^T |eta|^2`,
/// `gamma_emp = C/(1 + C)` and `nu_emp = ln(1 + 1/C) / T`.
///
/// Sample `i` draws from stream `i` of a ChaCha8 generator seeded with
/// `seed`, so results do not depend on the thread count.
pub fn observability_estimate<T: Scalar>(
    params: &SystemParams<T>,
    t_end: T,
    n_samples: usize,
    seed: u64,
    cells: usize,
    dt: T,
) -> Result<ObservabilityReport<T>, DiagnosticsError> {
    if !(t_end > params.h) {
        return Err(DiagnosticsError::Argument("observability horizon must exceed h"));
    }
    if n_samples < 10 {
        return Err(DiagnosticsError::Argument("need at least 10 samples"));
    }
    let grid = build_grid(params.length, cells).map_err(crate::timeloop::TimeloopError::from)?;
    let opts = SimOptions::default();
    let samples: Result<Vec<ObservabilitySample<T>>, DiagnosticsError> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let raw = profiles::random_smooth(&mut rng, params.length, params.h, PROBE_MODES);
            let norm = h_norm_squared(&raw, params, &grid, dt)?.sqrt();
            let ic = raw.scaled(T::one() / norm);
            let run = simulate(params, &ic, t_end, cells, dt, Mode::Linear, &opts)?;
            let e0 = run.rows[0].e;
            let e_t = run.rows[run.rows.len() - 1].e;
            let obs = observed(&run.rows);
            let flagged = !(obs > T::lit(OBSERVABILITY_FLOOR) * e0);
            Ok(ObservabilitySample {
                index: i,
                e0,
                e_t,
                observed: obs,
                ratio: if flagged { T::infinity() } else { e0 / obs },
                flagged,
            })
        })
        .collect();
    let samples = samples?;
    let c_emp = samples.iter().fold(T::zero(), |acc, s| acc.max(s.ratio));
    let one = T::one();
    Ok(ObservabilityReport {
        c_emp,
        gamma_emp: c_emp / (one + c_emp),
        nu_emp: (one + one / c_emp).ln() / t_end,
        t_end,
        samples,
    })
}
