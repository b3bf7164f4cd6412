//! Time advancement of the coupled PDE and delay system.

mod delay;
mod integrator;
pub mod profiles;
mod transport;

use std::sync::Arc;

use thiserror::Error;

use crate::diagnostics::{energy, record, EnergyRecord};
use crate::model::{smallness_radius, validate_params, Constraint, SystemParams};
use crate::spatial::{build_grid, build_linear_operator, l2_squared, Grid, SolveError, SpatialError};
use crate::Scalar;

pub use delay::{feedback_value, init_delay_line, DelayLine};
pub use integrator::{FeedbackCoupling, Mode, Source, StepConfig, Startup, Stepper, STARTUP_SUBSTEPS};
pub use transport::UpwindTransport;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimeloopError {
    #[error("invalid step: {0}")]
    BadStep(&'static str),
    #[error("parameters violate {0:?}")]
    Inadmissible(Vec<Constraint>),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error("linear solve failed: {0}")]
    Solve(#[from] SolveError),
    #[error("feedback coupling makes the implicit system singular")]
    SingularCoupling,
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("initial data incompatible with the boundary conditions: {0}")]
    Incompatible(String),
}

/// A function of one variable, or samples of it.
#[derive(Clone)]
pub enum Field<T> {
    Function(Arc<dyn Fn(T) -> T + Send + Sync>),
    /// For `u0`: values on the interior nodes. For `z0`: values on a
    /// uniform partition of `[-h, 0]`, oldest first.
    Samples(Vec<T>),
}

impl<T: Scalar> Field<T> {
    pub fn function(f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Field::Function(Arc::new(f))
    }

    pub fn zero() -> Self {
        Field::function(|_| T::zero())
    }

    pub fn scaled(&self, c: T) -> Self {
        match self {
            Field::Function(f) => {
                let f = Arc::clone(f);
                Field::function(move |x| c * f(x))
            }
            Field::Samples(v) => Field::Samples(v.iter().map(|&x| c * x).collect()),
        }
    }
}

impl<T> std::fmt::Debug for Field<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Field::Function(_) => f.write_str("Field::Function(..)"),
            Field::Samples(v) => write!(f, "Field::Samples({} values)", v.len()),
        }
    }
}

/// `u(0, x) = u0(x)` and `u_xx(s, 0) = z0(s)` for `s` in `[-h, 0]`.
#[derive(Debug, Clone)]
pub struct InitialData<T> {
    pub u0: Field<T>,
    pub z0: Field<T>,
}

impl<T: Scalar> InitialData<T> {
    pub fn new(u0: Field<T>, z0: Field<T>) -> Self {
        Self { u0, z0 }
    }

    pub fn zero() -> Self {
        Self::new(Field::zero(), Field::zero())
    }

    pub fn scaled(&self, c: T) -> Self {
        Self::new(self.u0.scaled(c), self.z0.scaled(c))
    }

    pub fn sample_u0(&self, grid: &Grid<T>) -> Result<Vec<T>, TimeloopError> {
        match &self.u0 {
            Field::Function(f) => Ok(grid.sample(|x| f(x))),
            Field::Samples(v) if v.len() == grid.interior_len() => Ok(v.clone()),
            Field::Samples(v) => Err(SpatialError::Length {
                expected: grid.interior_len(),
                got: v.len(),
            }
            .into()),
        }
    }

    /// History as a function of `s <= 0`.
    pub fn history(&self, h: T) -> Arc<dyn Fn(T) -> T + Send + Sync> {
        match &self.z0 {
            Field::Function(f) => Arc::clone(f),
            Field::Samples(v) => {
                let v = v.clone();
                Arc::new(move |s: T| interpolate_history(&v, h, s))
            }
        }
    }

    pub fn delay_line(&self, h: T, dt: T) -> Result<DelayLine<T>, TimeloopError> {
        let z0 = self.history(h);
        init_delay_line(|s| z0(s), h, dt)
    }

    /// Checks `u0 = u0' = 0` at both ends to `tol` (relative to the largest
    /// sampled `|u0|`, or absolute if that is below one). Sampled data are
    /// not checked.
    pub fn check_compatibility(&self, length: T, tol: T) -> Result<(), TimeloopError> {
        let f = match &self.u0 {
            Field::Function(f) => f,
            Field::Samples(_) => return Ok(()),
        };
        let probes = 256;
        let scale = (0..=probes)
            .map(|k| f(length * T::count(k) / T::count(probes)).abs())
            .fold(T::one(), T::max);
        let d = length * T::lit(1e-4);
        let two = T::lit(2.0);
        let slope_left = (-T::lit(3.0) * f(T::zero()) + T::lit(4.0) * f(d) - f(two * d)) / (two * d);
        let slope_right =
            (T::lit(3.0) * f(length) - T::lit(4.0) * f(length - d) + f(length - two * d)) / (two * d);
        let checks = [
            ("u0(0)", f(T::zero()), tol),
            ("u0(L)", f(length), tol),
            // Finite-difference slopes carry an O(d^2) error.
            ("u0'(0)", slope_left, tol.max(T::lit(1e-6))),
            ("u0'(L)", slope_right, tol.max(T::lit(1e-6))),
        ];
        for (name, v, t) in checks {
            if v.abs() > t * scale {
                return Err(TimeloopError::Incompatible(format!("{name} = {}", v.to_f64_lossy())));
            }
        }
        Ok(())
    }
}

fn interpolate_history<T: Scalar>(v: &[T], h: T, s: T) -> T {
    match v.len() {
        0 => T::zero(),
        1 => v[0],
        n => {
            let pos = ((s + h) / h * T::count(n - 1)).max(T::zero()).min(T::count(n - 1));
            let k = pos.floor().to_usize().expect("history index").min(n - 2);
            let frac = pos - T::count(k);
            v[k] + (v[k + 1] - v[k]) * frac
        }
    }
}

/// Grid values of `u` at time `t` and the trace history.
#[derive(Debug, Clone)]
pub struct SimState<T> {
    pub grid: Grid<T>,
    pub u: Vec<T>,
    pub line: DelayLine<T>,
    pub t: T,
    pub steps: u64,
    /// Nonlinear term at the previous time level, for Adams–Bashforth.
    pub prev_nonlinear: Option<Vec<T>>,
}

impl<T: Scalar> SimState<T> {
    pub fn new(grid: Grid<T>, ic: &InitialData<T>, h: T, dt: T) -> Result<Self, TimeloopError> {
        Ok(Self {
            grid,
            u: ic.sample_u0(&grid)?,
            line: ic.delay_line(h, dt)?,
            t: T::zero(),
            steps: 0,
            prev_nonlinear: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub t: T,
    /// Interior values.
    pub u: Vec<T>,
}

#[derive(Clone)]
pub struct SimOptions<T> {
    pub coupling: FeedbackCoupling,
    pub startup: Startup,
    pub nonlinear_form: crate::spatial::NonlinearForm,
    /// Lyapunov weights `(mu1, mu2)`; when set, `V` is recorded.
    pub mu: Option<(T, T)>,
    pub snapshot_times: Vec<T>,
    /// Store every `record_every`-th step (the last step is always stored).
    pub record_every: usize,
    pub source: Option<Source<T>>,
}

impl<T: Scalar> Default for SimOptions<T> {
    fn default() -> Self {
        Self {
            coupling: FeedbackCoupling::Implicit,
            startup: Startup::Damped,
            nonlinear_form: crate::spatial::NonlinearForm::Advective,
            mu: None,
            snapshot_times: Vec::new(),
            record_every: 1,
            source: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord<T> {
    pub params: SystemParams<T>,
    pub mode: Mode,
    pub cells: usize,
    pub dt: T,
    pub rows: Vec<EnergyRecord<T>>,
    pub snapshots: Vec<Snapshot<T>>,
    /// `int u0^2 dx`.
    pub initial_l2: T,
    /// `int_0^1 z0(-h rho)^2 d rho`.
    pub initial_zint: T,
    /// Steps where `E` grew by more than a relative `1e-12`.
    pub monotonicity_violations: usize,
    pub warnings: Vec<String>,
    pub final_state: SimState<T>,
}

impl<T: Scalar> RunRecord<T> {
    pub fn grid(&self) -> Grid<T> {
        self.final_state.grid
    }
}

/// Number of steps of size `dt` reaching `t_end` (ratios within `1e-9` of
/// an integer are rounded).
pub fn step_count<T: Scalar>(t_end: T, dt: T) -> usize {
    if !(t_end > T::zero()) {
        return 0;
    }
    let r = t_end / dt;
    let n = r.round();
    let k = if (r - n).abs() <= T::lit(1e-9) * r.max(T::one()) {
        n
    } else {
        r.ceil()
    };
    k.to_usize().unwrap_or(0)
}

pub fn simulate<T: Scalar>(
    params: &SystemParams<T>,
    ic: &InitialData<T>,
    t_end: T,
    cells: usize,
    dt: T,
    mode: Mode,
    opts: &SimOptions<T>,
) -> Result<RunRecord<T>, TimeloopError> {
    let report = validate_params(params);
    if !report.is_admissible() {
        return Err(TimeloopError::Inadmissible(report.violations));
    }
    let grid = build_grid(params.length, cells)?;
    let ops = build_linear_operator(params, &grid)?;
    let config = StepConfig {
        mode,
        coupling: opts.coupling,
        startup: opts.startup,
        nonlinear_form: opts.nonlinear_form,
        source: opts.source.clone(),
    };
    let stepper = Stepper::new(*params, ops, dt, config)?;
    let mut state = SimState::new(grid, ic, params.h, dt)?;

    let mut warnings = Vec::new();
    let initial_l2 = l2_squared(&state.u, &grid);
    let initial_zint = state.line.square_integral();
    if mode == Mode::Nonlinear {
        let norm = (initial_l2 + params.h * params.beta.abs() * initial_zint).sqrt();
        match smallness_radius(params) {
            Ok(r) if norm >= r => warnings.push(format!(
                "initial H-norm {} is not below the smallness radius {}",
                norm.to_f64_lossy(),
                r.to_f64_lossy()
            )),
            Err(_) => warnings.push("L is beyond the certified length bound".to_string()),
            _ => {}
        }
    }

    let steps = step_count(t_end, dt);
    let every = opts.record_every.max(1);
    let mut times: Vec<T> = opts.snapshot_times.clone();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut pending = times.into_iter().peekable();
    let mut snapshots = Vec::new();
    let half_dt = T::lit(0.5) * dt;
    let mut take_snapshots = |state: &SimState<T>, snaps: &mut Vec<Snapshot<T>>| {
        while let Some(&tau) = pending.peek() {
            if state.t >= tau - half_dt {
                snaps.push(Snapshot {
                    t: state.t,
                    u: state.u.clone(),
                });
                pending.next();
            } else {
                break;
            }
        }
    };

    let mut rows = vec![record(&state, params, opts.mu)];
    take_snapshots(&state, &mut snapshots);
    let mut prev_e = rows[0].e;
    let mut violations = 0;
    for n in 1..=steps {
        stepper.step(&mut state)?;
        let e = energy(&state, params);
        if e > prev_e * (T::one() + T::lit(1e-12)) && e > T::zero() {
            violations += 1;
        }
        prev_e = e;
        if n % every == 0 || n == steps {
            rows.push(record(&state, params, opts.mu));
        }
        take_snapshots(&state, &mut snapshots);
    }

    Ok(RunRecord {
        params: *params,
        mode,
        cells,
        dt,
        rows,
        snapshots,
        initial_l2,
        initial_zint,
        monotonicity_violations: violations,
        warnings,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> SystemParams<f64> {
        SystemParams::reference()
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        for mode in [Mode::Linear, Mode::Nonlinear] {
            let run = simulate(&reference(), &InitialData::zero(), 0.2, 32, 0.01, mode, &SimOptions::default())
                .unwrap();
            assert!(run.rows.iter().all(|r| r.e == 0.0 && r.trace0 == 0.0));
            assert!(run.final_state.u.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn zero_horizon_records_only_initial_state() {
        let ic = InitialData::new(Field::function(|x: f64| x * x * (3.0 - x) * (3.0 - x)), Field::zero());
        let run = simulate(&reference(), &ic, 0.0, 32, 0.01, Mode::Linear, &SimOptions::default()).unwrap();
        assert_eq!(run.rows.len(), 1);
        assert_eq!(run.rows[0].t, 0.0);
        assert!(run.rows[0].e > 0.0);
    }

    #[test]
    fn rejects_step_beyond_delay_and_bad_gains() {
        let ic = InitialData::zero();
        let opts = SimOptions::default();
        assert!(matches!(
            simulate(&reference(), &ic, 1.0, 32, 2.0, Mode::Linear, &opts),
            Err(TimeloopError::BadStep(_))
        ));
        let bad = SystemParams { alpha: 0.6, beta: 0.5, ..reference() };
        assert!(matches!(
            simulate(&bad, &ic, 1.0, 32, 0.01, Mode::Linear, &opts),
            Err(TimeloopError::Inadmissible(_))
        ));
    }

    #[test]
    fn compatibility_check() {
        let good = InitialData::new(Field::function(|x: f64| (x * (1.0 - x)).powi(2)), Field::zero());
        assert!(good.check_compatibility(1.0, 1e-10).is_ok());
        let bad = InitialData::new(Field::function(|x: f64| x * (1.0 - x)), Field::zero());
        assert!(matches!(
            bad.check_compatibility(1.0, 1e-10),
            Err(TimeloopError::Incompatible(_))
        ));
        let shifted = InitialData::new(Field::function(|x: f64| 1.0 + x * x), Field::zero());
        assert!(shifted.check_compatibility(1.0, 1e-10).is_err());
    }

    #[test]
    fn sampled_history_interpolates() {
        let ic = InitialData::<f64>::new(Field::zero(), Field::Samples(vec![-1.0, 0.0, 1.0]));
        let z = ic.history(2.0);
        assert_eq!(z(-2.0), -1.0);
        assert_eq!(z(-1.0), 0.0);
        assert_eq!(z(-0.5), 0.5);
        assert_eq!(z(0.0), 1.0);
    }

    #[test]
    fn step_count_rounds_exact_ratios() {
        assert_eq!(step_count(20.0, 1e-3), 20_000);
        assert_eq!(step_count(1.0, 0.3), 4);
        assert_eq!(step_count(0.0, 0.1), 0);
    }
}
