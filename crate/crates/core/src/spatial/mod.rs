//! Uniform grid, finite-difference operator with boundary closures,
//! nonlinear term, boundary traces and trapezoidal quadrature.
//!
//! Grid functions are stored on interior nodes `x_1 .. x_{N-1}`; the
//! boundary values `u_0 = u_N = 0` are implicit.

mod banded;
mod operator;
mod weights;

use thiserror::Error;

use crate::Scalar;

pub use banded::{BandedLu, BandedMatrix, SolveError};
pub use operator::{build_linear_operator, OperatorBundle, StencilMeta, CLOSURE_NODES};
pub use weights::{hermite_weights, solve_dense, Datum};

pub const MIN_CELLS: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpatialError {
    #[error("need at least {MIN_CELLS} cells, got {0}")]
    TooFewCells(usize),
    #[error("interval length must be positive and finite")]
    BadLength,
    #[error("boundary closure polynomial is singular")]
    Closure,
    #[error("expected {expected} interior values, got {got}")]
    Length { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    pub length: T,
    pub cells: usize,
    pub dx: T,
}

impl<T: Scalar> Grid<T> {
    pub fn x(&self, j: usize) -> T {
        if j == self.cells {
            self.length
        } else {
            T::count(j) * self.dx
        }
    }

    pub fn interior_len(&self) -> usize {
        self.cells - 1
    }

    pub fn interior_nodes(&self) -> Vec<T> {
        (1..self.cells).map(|j| self.x(j)).collect()
    }

    /// Samples `f` on the interior nodes.
    pub fn sample(&self, f: impl Fn(T) -> T) -> Vec<T> {
        (1..self.cells).map(|j| f(self.x(j))).collect()
    }
}

pub fn build_grid<T: Scalar>(length: T, cells: usize) -> Result<Grid<T>, SpatialError> {
    if !(length > T::zero()) || !length.is_finite() {
        return Err(SpatialError::BadLength);
    }
    if cells < MIN_CELLS {
        return Err(SpatialError::TooFewCells(cells));
    }
    Ok(Grid {
        length,
        cells,
        dx: length / T::count(cells),
    })
}

/// `(2 u_0 - 5 u_1 + 4 u_2 - u_3) / dx^2` with `u_0 = 0`.
pub fn second_trace_left<T: Scalar>(u: &[T], grid: &Grid<T>) -> T {
    let dx2 = grid.dx * grid.dx;
    (-T::lit(5.0) * u[0] + T::lit(4.0) * u[1] - u[2]) / dx2
}

/// Mirror of [`second_trace_left`] at `x = L`.
pub fn second_trace_right<T: Scalar>(u: &[T], grid: &Grid<T>) -> T {
    let k = u.len();
    let dx2 = grid.dx * grid.dx;
    (-T::lit(5.0) * u[k - 1] + T::lit(4.0) * u[k - 2] - u[k - 3]) / dx2
}

/// Difference between the one-sided estimate of `u_xx(L)` and the imposed
/// datum `phi`.
pub fn feedback_mismatch<T: Scalar>(u: &[T], grid: &Grid<T>, phi: T) -> T {
    second_trace_right(u, grid) - phi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonlinearForm {
    /// `-u^p D1 u`.
    #[default]
    Advective,
    /// `-D1 (u^{p+1}) / (p + 1)`.
    Conservative,
}

/// `-u^p u_x` at interior nodes with the centered first difference.
pub fn nonlinear_term<T: Scalar>(u: &[T], p: u32, grid: &Grid<T>) -> Vec<T> {
    nonlinear_term_with(u, p, grid, NonlinearForm::Advective)
}

pub fn nonlinear_term_with<T: Scalar>(u: &[T], p: u32, grid: &Grid<T>, form: NonlinearForm) -> Vec<T> {
    let k = u.len();
    let at = |i: isize| -> T {
        if i < 0 || i as usize >= k {
            T::zero()
        } else {
            u[i as usize]
        }
    };
    let inv = T::one() / (T::lit(2.0) * grid.dx);
    let pi = p as i32;
    (0..k as isize)
        .map(|i| match form {
            NonlinearForm::Advective => -at(i).powi(pi) * (at(i + 1) - at(i - 1)) * inv,
            NonlinearForm::Conservative => {
                let q = pi + 1;
                -(at(i + 1).powi(q) - at(i - 1).powi(q)) * inv / T::count(q as usize)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    Unit,
    /// Multiplies the integrand by `x`.
    Morawetz,
}

/// Composite trapezoidal rule of interior `values` over `[0, L]`, with the
/// boundary values taken as zero.
pub fn quadrature<T: Scalar>(values: &[T], grid: &Grid<T>, weight: Weight) -> T {
    let sum = values
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, &v)| match weight {
            Weight::Unit => acc + v,
            Weight::Morawetz => acc + v * grid.x(i + 1),
        });
    sum * grid.dx
}

/// `int u^2 dx` by the trapezoidal rule.
pub fn l2_squared<T: Scalar>(u: &[T], grid: &Grid<T>) -> T {
    u.iter().fold(T::zero(), |acc, &v| acc + v * v) * grid.dx
}
