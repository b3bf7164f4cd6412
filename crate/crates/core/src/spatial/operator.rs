use crate::model::SystemParams;
use crate::Scalar;

use super::banded::BandedMatrix;
use super::weights::{hermite_weights, Datum};
use super::{Grid, NonlinearForm, SpatialError};

/// Interior nodes feeding each ghost-value extrapolation.
pub const CLOSURE_NODES: usize = 3;

/// Orders and widths of the stencils in an [`OperatorBundle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StencilMeta {
    pub interior_order: u32,
    pub d1_points: usize,
    pub d3_points: usize,
    pub d5_points: usize,
    /// Ghost values at each end come from a polynomial through this many
    /// interior nodes plus the boundary conditions.
    pub closure_nodes: usize,
    pub nonlinear: NonlinearForm,
}

/// Discrete `-a d/dx - b d^3/dx^3 + d^5/dx^5` on interior nodes with the
/// five boundary conditions folded in.
///
/// For a grid function `u` with boundary datum `phi = u_xx(L)`, the
/// semidiscrete right-hand side is `matrix * u + phi * forcing`.
#[derive(Debug, Clone)]
pub struct OperatorBundle<T> {
    pub grid: Grid<T>,
    pub matrix: BandedMatrix<T>,
    pub forcing: Vec<T>,
    /// Weights of `u_1, u_2, u_3` in the one-sided estimate of `u_xx(0)`.
    pub trace_weights: [T; 3],
    pub meta: StencilMeta,
}

impl<T: Scalar> OperatorBundle<T> {
    pub fn len(&self) -> usize {
        self.forcing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forcing.is_empty()
    }

    /// Boundary forcing for `u_xx(L) = phi`.
    pub fn g_gen(&self, phi: T) -> Vec<T> {
        self.forcing.iter().map(|&g| g * phi).collect()
    }

    pub fn apply(&self, u: &[T]) -> Vec<T> {
        self.matrix.matvec(u)
    }

    /// `matrix * u + phi * forcing`.
    pub fn apply_with_boundary(&self, u: &[T], phi: T) -> Vec<T> {
        let mut out = self.matrix.matvec(u);
        for (o, &g) in out.iter_mut().zip(&self.forcing) {
            *o += phi * g;
        }
        out
    }

    pub fn trace_left(&self, u: &[T]) -> T {
        self.trace_weights
            .iter()
            .zip(u)
            .fold(T::zero(), |acc, (&w, &v)| acc + w * v)
    }
}

/// Extended grid value as a combination of interior unknowns plus a
/// multiple of the boundary datum.
#[derive(Debug, Clone, Default)]
struct Ext<T> {
    terms: Vec<(usize, T)>,
    phi: T,
}

pub fn build_linear_operator<T: Scalar>(
    params: &SystemParams<T>,
    grid: &Grid<T>,
) -> Result<OperatorBundle<T>, SpatialError> {
    let n = grid.cells;
    let dx = grid.dx;
    let m = CLOSURE_NODES;

    let mut left = vec![Datum::value(T::zero()), Datum::derivative(T::zero(), 1)];
    left.extend((1..=m).map(|k| Datum::value(T::count(k))));
    let wl = hermite_weights(&left, &[-T::one(), -T::lit(2.0)]).ok_or(SpatialError::Closure)?;

    let mut right = vec![
        Datum::value(T::zero()),
        Datum::derivative(T::zero(), 1),
        Datum::derivative(T::zero(), 2),
    ];
    right.extend((1..=m).map(|k| Datum::value(-T::count(k))));
    let wr = hermite_weights(&right, &[T::one(), T::lit(2.0)]).ok_or(SpatialError::Closure)?;

    // j runs over -2..=n+2; column of interior node j is j-1.
    let ext = |j: isize| -> Ext<T> {
        let nn = n as isize;
        if j >= 1 && j < nn {
            return Ext {
                terms: vec![(j as usize - 1, T::one())],
                phi: T::zero(),
            };
        }
        if j == 0 || j == nn {
            return Ext::default();
        }
        if j < 0 {
            let w = &wl[(-j - 1) as usize];
            return Ext {
                terms: (1..=m).map(|k| (k - 1, w[1 + k])).collect(),
                phi: T::zero(),
            };
        }
        let w = &wr[(j - nn - 1) as usize];
        Ext {
            terms: (1..=m).map(|k| (n - k - 1, w[2 + k])).collect(),
            phi: w[2] * dx * dx,
        }
    };

    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let d1 = [-half, T::zero(), half].map(|c| c / dx);
    let d3 = [-half, T::one(), T::zero(), -T::one(), half].map(|c| c / dx.powi(3));
    let d5 = [-half, two, -T::lit(2.5), T::zero(), T::lit(2.5), -two, half].map(|c| c / dx.powi(5));
    let mut stencil = [T::zero(); 7];
    for (o, c) in d5.iter().enumerate() {
        stencil[o] += *c;
    }
    for (o, c) in d3.iter().enumerate() {
        stencil[o + 1] -= params.b * *c;
    }
    for (o, c) in d1.iter().enumerate() {
        stencil[o + 2] -= params.a * *c;
    }

    let rows = n - 1;
    let mut entries: Vec<Vec<(usize, T)>> = vec![Vec::new(); rows];
    let mut forcing = vec![T::zero(); rows];
    for (r, row) in entries.iter_mut().enumerate() {
        let j = r as isize + 1;
        for (o, &c) in stencil.iter().enumerate() {
            if c == T::zero() {
                continue;
            }
            let e = ext(j + o as isize - 3);
            for (col, w) in e.terms {
                row.push((col, c * w));
            }
            forcing[r] += c * e.phi;
        }
    }

    let (mut kl, mut ku) = (0, 0);
    for (r, row) in entries.iter().enumerate() {
        for &(c, _) in row {
            kl = kl.max(r.saturating_sub(c));
            ku = ku.max(c.saturating_sub(r));
        }
    }
    let mut matrix = BandedMatrix::zeros(rows, kl, ku);
    for (r, row) in entries.iter().enumerate() {
        for &(c, v) in row {
            matrix.add(r, c, v);
        }
    }

    let inv_dx2 = T::one() / (dx * dx);
    Ok(OperatorBundle {
        grid: *grid,
        matrix,
        forcing,
        trace_weights: [-T::lit(5.0) * inv_dx2, T::lit(4.0) * inv_dx2, -inv_dx2],
        meta: StencilMeta {
            interior_order: 2,
            d1_points: 3,
            d3_points: 5,
            d5_points: 7,
            closure_nodes: m,
            nonlinear: NonlinearForm::Advective,
        },
    })
}
