//! Manufactured-solution convergence studies with
//! `u_m(x, t) = exp(-t) x^3 (L - x)^3`.
//!
//! `u_m` meets all boundary conditions with zero traces, so the delayed
//! feedback vanishes identically and only the source term is needed.

use std::sync::Arc;

use crate::model::SystemParams;
use crate::timeloop::{simulate, Field, InitialData, Mode, SimOptions, Source};
use crate::Scalar;

use super::DiagnosticsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured<T> {
    pub params: SystemParams<T>,
    /// `x^3 (L - x)^3 = sum c_k x^k`.
    coeffs: [T; 7],
}

impl<T: Scalar> Manufactured<T> {
    pub fn new(params: SystemParams<T>) -> Self {
        let l = params.length;
        let three = T::lit(3.0);
        let z = T::zero();
        Self {
            params,
            coeffs: [z, z, z, l * l * l, -three * l * l, three * l, -T::one()],
        }
    }

    /// `d^order/dx^order x^3 (L - x)^3`.
    pub fn profile(&self, x: T, order: usize) -> T {
        let mut acc = T::zero();
        for k in (order..7).rev() {
            let falling = ((k - order + 1)..=k).fold(T::one(), |f, j| f * T::count(j));
            acc += self.coeffs[k] * falling * x.powi((k - order) as i32);
        }
        acc
    }

    pub fn exact(&self, x: T, t: T) -> T {
        (-t).exp() * self.profile(x, 0)
    }

    /// `f = u_t + a u_x + b u_xxx - u_xxxxx (+ u^p u_x)` at `u_m`.
    pub fn source(&self, mode: Mode) -> Source<T> {
        let m = *self;
        Arc::new(move |x: T, t: T| {
            let e = (-t).exp();
            let u = e * m.profile(x, 0);
            let ux = e * m.profile(x, 1);
            let p = &m.params;
            let mut f = -u + p.a * ux + p.b * e * m.profile(x, 3) - e * m.profile(x, 5);
            if mode == Mode::Nonlinear {
                f += u.powi(p.p as i32) * ux;
            }
            f
        })
    }

    pub fn initial_data(&self) -> InitialData<T> {
        let m = *self;
        InitialData::new(Field::function(move |x| m.profile(x, 0)), Field::zero())
    }

    /// Interior values at time `t_end` on `cells` cells.
    pub fn run(&self, cells: usize, dt: T, t_end: T, mode: Mode) -> Result<(Vec<T>, T), DiagnosticsError> {
        let opts = SimOptions {
            source: Some(self.source(mode)),
            record_every: usize::MAX,
            ..SimOptions::default()
        };
        let run = simulate(&self.params, &self.initial_data(), t_end, cells, dt, mode, &opts)?;
        let t = run.final_state.t;
        Ok((run.final_state.u, t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderStudy<T> {
    /// Grid spacing or time step per level, coarse to fine.
    pub steps: Vec<T>,
    pub errors: Vec<T>,
    /// `log2(e_k / e_{k+1}) / log2(s_k / s_{k+1})`.
    pub orders: Vec<T>,
}

impl<T: Scalar> OrderStudy<T> {
    fn from_errors(steps: Vec<T>, errors: Vec<T>) -> Self {
        let orders = steps
            .windows(2)
            .zip(errors.windows(2))
            .map(|(s, e)| (e[0] / e[1]).ln() / (s[0] / s[1]).ln())
            .collect();
        Self { steps, errors, orders }
    }

    pub fn min_order(&self) -> T {
        self.orders.iter().copied().fold(T::infinity(), T::min)
    }
}

fn discrete_l2<T: Scalar>(a: &[T], b: &[T], dx: T) -> T {
    (a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y)) * dx).sqrt()
}

/// Error against `u_m` at `t_end` for each grid, with a common small `dt`.
pub fn spatial_study<T: Scalar>(
    params: &SystemParams<T>,
    cells: &[usize],
    dt: T,
    t_end: T,
    mode: Mode,
) -> Result<OrderStudy<T>, DiagnosticsError> {
    let m = Manufactured::new(*params);
    let mut steps = Vec::new();
    let mut errors = Vec::new();
    for &n in cells {
        let (u, t) = m.run(n, dt, t_end, mode)?;
        let dx = params.length / T::count(n);
        let exact: Vec<T> = (1..n).map(|j| m.exact(T::count(j) * dx, t)).collect();
        steps.push(dx);
        errors.push(discrete_l2(&u, &exact, dx));
    }
    Ok(OrderStudy::from_errors(steps, errors))
}

/// Error against a reference run with step `dt_ref` on the same grid, so
/// the spatial error cancels.
pub fn temporal_study<T: Scalar>(
    params: &SystemParams<T>,
    cells: usize,
    dts: &[T],
    dt_ref: T,
    t_end: T,
    mode: Mode,
) -> Result<OrderStudy<T>, DiagnosticsError> {
    let m = Manufactured::new(*params);
    let (reference, _) = m.run(cells, dt_ref, t_end, mode)?;
    let dx = params.length / T::count(cells);
    let mut errors = Vec::new();
    for &dt in dts {
        let (u, _) = m.run(cells, dt, t_end, mode)?;
        errors.push(discrete_l2(&u, &reference, dx));
    }
    Ok(OrderStudy::from_errors(dts.to_vec(), errors))
}
