//! Roots of `q(xi) = xi^5 + xi^3 - xi + r`, Möbius and rank tests for the
//! stationary problem `lambda u + u' + u''' - u''''' = 0` with
//! `u = u' = u'' = 0` at both ends, and the explicit critical-length set.
//!
//! This module is `f64` only: it leans on nalgebra's complex eigenvalue
//! and SVD routines.

mod critical;
mod mobius;
mod rank;
mod scan;

use nalgebra::{Complex, Matrix5};
use thiserror::Error;

pub use critical::{
    critical_constants, critical_profile, find_critical_lengths, membership_residual, phase_mismatch,
    CriticalConstants, CriticalSetHit, CRITICAL_SCAN_STEP,
};
pub use mobius::{mobius_consistency, MobiusMap};
pub use rank::{alpha_matrix, alpha_rank_test, bvp_matrix, bvp_matrix_test, smallest_singular, AlphaTest};
pub use scan::{spectral_scan, ScanCell, ScanFlags, ScanResult, MAX_SCAN_CELLS};

pub type C64 = Complex<f64>;

/// Roots closer than this are treated as one repeated root.
pub const MULTIPLICITY_TOL: f64 = 1e-8;

/// Relative imaginary part below which a polished root counts as real.
pub const REAL_SNAP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("roots are not pairwise distinct")]
    Degenerate,
    #[error("invalid argument: {0}")]
    Argument(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    OneRealTwoConjugatePairs,
    /// `r = 0`: roots `0, +-rho` real and `+-k` purely imaginary.
    DegenerateRZero,
    Other { real_count: usize },
}

/// The five roots of `q(., r)` in canonical order.
///
/// With two conjugate pairs the order is `[c1, c2, conj c1, conj c2, x]`
/// with `Im c1, Im c2 > 0` and `x` real. With one pair it is
/// `[c, x1, conj c, x2, x3]`. Real roots ascend, pairs ascend by real part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSet {
    pub r: f64,
    pub roots: [C64; 5],
    /// Size of the cluster (within [`MULTIPLICITY_TOL`]) each root belongs to.
    pub multiplicities: [usize; 5],
    pub classification: Classification,
}

impl RootSet {
    pub fn is_distinct(&self) -> bool {
        self.multiplicities.iter().all(|&m| m == 1)
    }

    pub fn real_count(&self) -> usize {
        self.roots.iter().filter(|z| z.im == 0.0).count()
    }

    /// Cluster representatives with their multiplicities.
    pub fn clusters(&self) -> Vec<(C64, usize)> {
        let mut out: Vec<(C64, usize)> = Vec::new();
        let mut used = [false; 5];
        for i in 0..5 {
            if used[i] {
                continue;
            }
            let mut sum = self.roots[i];
            let mut m = 1;
            used[i] = true;
            for j in (i + 1)..5 {
                if !used[j] && (self.roots[j] - self.roots[i]).norm() < MULTIPLICITY_TOL {
                    used[j] = true;
                    sum += self.roots[j];
                    m += 1;
                }
            }
            out.push((sum / m as f64, m));
        }
        out
    }

    /// Largest `|q(xi, r)| / max(1, |xi|^5)` over the roots.
    pub fn max_residual(&self) -> f64 {
        self.roots
            .iter()
            .map(|&z| q(z, self.r).norm() / z.norm().powi(5).max(1.0))
            .fold(0.0, f64::max)
    }
}

pub fn q(xi: C64, r: f64) -> C64 {
    let x2 = xi * xi;
    xi * (x2 * x2 + x2 - 1.0) + r
}

pub fn q_prime(xi: C64) -> C64 {
    let x2 = xi * xi;
    x2 * x2 * 5.0 + x2 * 3.0 - 1.0
}

/// Critical points of `q`: `z1 = sqrt((-3 - sqrt 29)/10)` (purely imaginary,
/// principal branch) and the real `z2 = sqrt((-3 + sqrt 29)/10)`.
pub fn qprime_critical_points() -> (C64, f64) {
    let s = 29f64.sqrt();
    let z1 = C64::new(0.0, ((3.0 + s) / 10.0).sqrt());
    let z2 = ((s - 3.0) / 10.0).sqrt();
    (z1, z2)
}

/// `|r|` below which `q(., r)` has three real roots: `-(z2^5 + z2^3 - z2)`,
/// about 0.34411.
pub fn three_real_root_radius() -> f64 {
    let (_, z2) = qprime_critical_points();
    -(z2.powi(5) + z2.powi(3) - z2)
}

fn polish(mut z: C64, r: f64) -> C64 {
    for _ in 0..12 {
        let d = q_prime(z);
        if d.norm() == 0.0 {
            break;
        }
        let step = q(z, r) / d;
        let next = z - step;
        if q(next, r).norm() > q(z, r).norm() {
            break;
        }
        z = next;
        if step.norm() <= 1e-16 * z.norm().max(1.0) {
            break;
        }
    }
    z
}

fn canonical(roots: &[C64], r: f64) -> [C64; 5] {
    let mut reals: Vec<f64> = Vec::new();
    let mut upper: Vec<C64> = Vec::new();
    let mut lower: Vec<C64> = Vec::new();
    for &z in roots {
        if z.im.abs() <= REAL_SNAP_TOL * z.norm().max(1.0) {
            reals.push(polish(C64::new(z.re, 0.0), r).re);
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower.push(z);
        }
    }
    let mut pairs: Vec<C64> = Vec::new();
    if upper.len() == lower.len() {
        for u in upper {
            let (k, _) = lower
                .iter()
                .enumerate()
                .map(|(k, l)| (k, (l.conj() - u).norm()))
                .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
            let l = lower.swap_remove(k);
            pairs.push((u + l.conj()) * 0.5);
        }
    } else {
        // Unbalanced split; keep the raw upper-half roots and mirror them.
        let mut all: Vec<C64> = upper.into_iter().chain(lower.into_iter().map(|z| z.conj())).collect();
        all.truncate((5 - reals.len()) / 2);
        pairs = all;
    }
    reals.sort_by(f64::total_cmp);
    pairs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let re = |x: f64| C64::new(x, 0.0);
    match (pairs.len(), reals.len()) {
        (2, 1) => [pairs[0], pairs[1], pairs[0].conj(), pairs[1].conj(), re(reals[0])],
        (1, 3) => [pairs[0], re(reals[0]), pairs[0].conj(), re(reals[1]), re(reals[2])],
        _ => {
            let mut out: Vec<C64> = pairs.iter().copied().chain(pairs.iter().map(|z| z.conj())).collect();
            out.extend(reals.into_iter().map(re));
            out.resize(5, C64::new(f64::NAN, f64::NAN));
            [out[0], out[1], out[2], out[3], out[4]]
        }
    }
}

fn classify(r: f64, roots: &[C64; 5]) -> Classification {
    let real_count = roots.iter().filter(|z| z.im == 0.0).count();
    if r == 0.0 {
        Classification::DegenerateRZero
    } else if real_count == 1 {
        Classification::OneRealTwoConjugatePairs
    } else {
        Classification::Other { real_count }
    }
}

/// All five roots of `q(., r)`: companion-matrix eigenvalues polished by
/// Newton's method, then snapped to exact conjugate pairs and real values.
pub fn q_roots(r: f64) -> RootSet {
    // Monic coefficients c0..c4 of xi^5 + xi^3 - xi + r.
    let c = [r, -1.0, 0.0, 1.0, 0.0];
    let companion = Matrix5::from_fn(|i, j| {
        if j == 4 {
            -c[i]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let raw: Vec<C64> = companion.complex_eigenvalues().iter().map(|&z| polish(z, r)).collect();
    let roots = canonical(&raw, r);
    let mut multiplicities = [1usize; 5];
    for i in 0..5 {
        multiplicities[i] = (0..5)
            .filter(|&j| (roots[j] - roots[i]).norm() < MULTIPLICITY_TOL)
            .count();
    }
    RootSet {
        r,
        roots,
        multiplicities,
        classification: classify(r, &roots),
    }
}
