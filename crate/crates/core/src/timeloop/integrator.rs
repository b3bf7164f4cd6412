use std::sync::Arc;

use crate::model::SystemParams;
use crate::spatial::{nonlinear_term_with, BandedLu, NonlinearForm, OperatorBundle};
use crate::Scalar;

use super::{SimState, TimeloopError};

/// Backward-Euler substeps replacing the first Crank–Nicolson step.
pub const STARTUP_SUBSTEPS: usize = 4;

/// Source term `f(x, t)` added to the right-hand side.
pub type Source<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    Linear,
    #[default]
    Nonlinear,
}

/// How the instantaneous feedback `alpha u_xx(t, 0)` enters the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeedbackCoupling {
    /// Solved together with the interior unknowns (rank-one update).
    #[default]
    Implicit,
    /// Evaluated at the old time level.
    Lagged,
}

/// First step of the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Startup {
    /// [`STARTUP_SUBSTEPS`] backward-Euler substeps, which damp the
    /// unresolved dispersive modes Crank–Nicolson would leave undamped.
    #[default]
    Damped,
    /// A plain Crank–Nicolson step.
    Plain,
}

#[derive(Clone, Default)]
pub struct StepConfig<T> {
    pub mode: Mode,
    pub coupling: FeedbackCoupling,
    pub startup: Startup,
    pub nonlinear_form: NonlinearForm,
    pub source: Option<Source<T>>,
}

/// Factorized `I - theta dt (A + c g l^T)` via Sherman–Morrison.
#[derive(Debug, Clone)]
struct ThetaSystem<T> {
    lu: BandedLu<T>,
    w: Vec<T>,
    coupling: T,
    denom: T,
}

impl<T: Scalar> ThetaSystem<T> {
    fn new(ops: &OperatorBundle<T>, theta_dt: T, coupling: T) -> Result<Self, TimeloopError> {
        let lu = ops.matrix.shifted(T::one(), -theta_dt).factor()?;
        let w = lu.solve(&ops.forcing);
        let denom = T::one() - coupling * ops.trace_left(&w);
        if denom == T::zero() || !denom.is_finite() {
            return Err(TimeloopError::SingularCoupling);
        }
        Ok(Self {
            lu,
            w,
            coupling,
            denom,
        })
    }

    fn solve(&self, ops: &OperatorBundle<T>, rhs: Vec<T>) -> Vec<T> {
        let mut y = rhs;
        self.lu.solve_in_place(&mut y);
        if self.coupling != T::zero() {
            let s = self.coupling * ops.trace_left(&y) / self.denom;
            for (yi, &wi) in y.iter_mut().zip(&self.w) {
                *yi += s * wi;
            }
        }
        y
    }
}

/// IMEX integrator: Crank–Nicolson on the linear part and the boundary
/// feedback, second-order Adams–Bashforth on the nonlinearity.
pub struct Stepper<T> {
    params: SystemParams<T>,
    ops: OperatorBundle<T>,
    dt: T,
    config: StepConfig<T>,
    cn: ThetaSystem<T>,
    damped: Option<ThetaSystem<T>>,
}

impl<T: Scalar> Stepper<T> {
    pub fn new(
        params: SystemParams<T>,
        ops: OperatorBundle<T>,
        dt: T,
        config: StepConfig<T>,
    ) -> Result<Self, TimeloopError> {
        if !(dt > T::zero()) {
            return Err(TimeloopError::BadStep("dt must be positive"));
        }
        if dt > params.h {
            return Err(TimeloopError::BadStep("dt must not exceed the delay h"));
        }
        let implicit = config.coupling == FeedbackCoupling::Implicit;
        let half_dt = T::lit(0.5) * dt;
        let alpha = |theta_dt: T| if implicit { theta_dt * params.alpha } else { T::zero() };
        let cn = ThetaSystem::new(&ops, half_dt, alpha(half_dt))?;
        let damped = match config.startup {
            Startup::Damped => {
                let sub = dt / T::count(STARTUP_SUBSTEPS);
                Some(ThetaSystem::new(&ops, sub, alpha(sub))?)
            }
            Startup::Plain => None,
        };
        Ok(Self {
            params,
            ops,
            dt,
            config,
            cn,
            damped,
        })
    }

    pub fn ops(&self) -> &OperatorBundle<T> {
        &self.ops
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    fn nonlinear(&self, u: &[T]) -> Vec<T> {
        match self.config.mode {
            Mode::Linear => vec![T::zero(); u.len()],
            Mode::Nonlinear => nonlinear_term_with(u, self.params.p, &self.ops.grid, self.config.nonlinear_form),
        }
    }

    /// One theta-scheme step of length `k` from time `t`.
    ///
    /// `d_old`, `d_new` are the delayed traces `u_xx(. - h, 0)` at both
    /// ends of the step; `explicit` is the extrapolated nonlinear term.
    #[allow(clippy::too_many_arguments)]
    fn theta_step(
        &self,
        sys: &ThetaSystem<T>,
        theta: T,
        k: T,
        u: &[T],
        t: T,
        d_old: T,
        d_new: T,
        explicit: &[T],
    ) -> Vec<T> {
        let p = &self.params;
        let ops = &self.ops;
        let lagged = self.config.coupling == FeedbackCoupling::Lagged;
        let trace = ops.trace_left(u);
        let explicit_weight = T::one() - theta;
        let mut rhs = u.to_vec();
        if explicit_weight > T::zero() {
            let phi_old = p.alpha * trace + p.beta * d_old;
            let au = ops.apply_with_boundary(u, phi_old);
            for (r, a) in rhs.iter_mut().zip(au) {
                *r += explicit_weight * k * a;
            }
        }
        let mut phi_new = p.beta * d_new;
        if lagged {
            phi_new += p.alpha * trace;
        }
        for (r, &g) in rhs.iter_mut().zip(&ops.forcing) {
            *r += theta * k * g * phi_new;
        }
        for (r, &n) in rhs.iter_mut().zip(explicit) {
            *r += k * n;
        }
        if let Some(src) = &self.config.source {
            let grid = &ops.grid;
            for (i, r) in rhs.iter_mut().enumerate() {
                let x = grid.x(i + 1);
                let f_new = src(x, t + k);
                let f = if explicit_weight > T::zero() {
                    theta * f_new + explicit_weight * src(x, t)
                } else {
                    f_new
                };
                *r += k * f;
            }
        }
        sys.solve(ops, rhs)
    }

    /// Advances `state` by one step of length `dt` and records the new left
    /// trace in the delay line.
    pub fn step(&self, state: &mut SimState<T>) -> Result<(), TimeloopError> {
        let dt = self.dt;
        let h = self.params.h;
        let first = state.steps == 0;
        let nl_now = self.nonlinear(&state.u);
        let next = match (&self.damped, first) {
            (Some(sys), true) => {
                let m = STARTUP_SUBSTEPS;
                let sub = dt / T::count(m);
                let mut u = state.u.clone();
                for j in 0..m {
                    let t = state.t + T::count(j) * sub;
                    let d_new = state.line.sample_at_lag(h - T::count(j + 1) * sub);
                    let nl = if j == 0 { nl_now.clone() } else { self.nonlinear(&u) };
                    u = self.theta_step(sys, T::one(), sub, &u, t, T::zero(), d_new, &nl);
                }
                u
            }
            _ => {
                let explicit = match &state.prev_nonlinear {
                    Some(prev) if !first => nl_now
                        .iter()
                        .zip(prev)
                        .map(|(&c, &p)| T::lit(1.5) * c - T::lit(0.5) * p)
                        .collect(),
                    _ => nl_now.clone(),
                };
                let d_old = state.line.sample_at_lag(h);
                let d_new = state.line.sample_at_lag(h - dt);
                self.theta_step(&self.cn, T::lit(0.5), dt, &state.u, state.t, d_old, d_new, &explicit)
            }
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(TimeloopError::NonFinite {
                t: (state.t + dt).to_f64_lossy(),
            });
        }
        state.prev_nonlinear = Some(nl_now);
        state.u = next;
        state.steps += 1;
        state.t = T::from_u64(state.steps).expect("step count") * dt;
        state.line.push(self.ops.trace_left(&state.u));
        Ok(())
    }
}
