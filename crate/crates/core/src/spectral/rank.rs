use nalgebra::DMatrix;

use super::{RootSet, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaTest {
    pub sigma_min: f64,
    /// Right singular vector for `sigma_min`.
    pub null_alpha: [C64; 4],
    /// `alpha_1 alpha_3 - alpha_2 alpha_4` at `null_alpha`.
    pub d_alpha: C64,
}

fn falling(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64)
}

fn binomial(n: usize, k: usize) -> f64 {
    falling(n, k) / falling(k, k)
}

/// `d^k/dxi^k [i xi, -i xi e^{-i xi L}, 1, -e^{-i xi L}]`.
fn alpha_row(xi: C64, length: f64, k: usize) -> [C64; 4] {
    let i = C64::new(0.0, 1.0);
    let zero = C64::new(0.0, 0.0);
    let e = (-i * xi * length).exp();
    let d = -i * length;
    let dk = |k: usize| d.powu(k as u32);
    let first = match k {
        0 => i * xi,
        1 => i,
        _ => zero,
    };
    let second = if k == 0 {
        -i * xi * e
    } else {
        -i * (xi * dk(k) + dk(k - 1) * k as f64) * e
    };
    [first, second, if k == 0 { C64::new(1.0, 0.0) } else { zero }, -dk(k) * e]
}

/// `d^k/ds^k [1, s, s^2, E, s E, s^2 E]` with `E = e^{s L}`.
fn bvp_column(s: C64, length: f64, k: usize) -> [C64; 6] {
    let e = (s * length).exp();
    let poly = |m: usize| {
        if k > m {
            C64::new(0.0, 0.0)
        } else {
            s.powu((m - k) as u32) * falling(m, k)
        }
    };
    let shifted = |m: usize| {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..=k.min(m) {
            acc += s.powu((m - j) as u32) * (binomial(k, j) * falling(m, j) * length.powi((k - j) as i32));
        }
        acc * e
    };
    [poly(0), poly(1), poly(2), shifted(0), shifted(1), shifted(2)]
}

/// The 5x4 condition matrix, one row per root and one derivative row per
/// extra multiplicity. Rows are scaled to unit norm.
pub fn alpha_matrix(roots: &RootSet, length: f64) -> DMatrix<C64> {
    let mut rows: Vec<[C64; 4]> = Vec::new();
    for (xi, m) in roots.clusters() {
        for k in 0..m {
            rows.push(alpha_row(xi, length, k));
        }
    }
    let mut a = DMatrix::from_fn(rows.len(), 4, |i, j| rows[i][j]);
    for mut row in a.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row /= C64::new(n, 0.0);
        }
    }
    a
}

/// The 6x5 matrix of boundary functionals `[u, u', u'']` at `0` and `L`
/// applied to `e^{i xi_j x}`, with confluent columns for repeated roots.
/// Columns are scaled to unit norm.
pub fn bvp_matrix(roots: &RootSet, length: f64) -> DMatrix<C64> {
    let mut cols: Vec<[C64; 6]> = Vec::new();
    for (xi, m) in roots.clusters() {
        let s = C64::new(0.0, 1.0) * xi;
        for k in 0..m {
            cols.push(bvp_column(s, length, k));
        }
    }
    let mut b = DMatrix::from_fn(6, cols.len(), |i, j| cols[j][i]);
    for mut col in b.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= C64::new(n, 0.0);
        }
    }
    b
}

/// Smallest singular value and its right singular vector.
pub fn smallest_singular(a: &DMatrix<C64>) -> (f64, Vec<C64>) {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let (k, sigma) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
    let v = v_t.row(k).iter().map(|z| z.conj()).collect();
    (sigma, v)
}

/// Rank test for a nonzero `alpha` whose `N_alpha(., L)` vanishes at every
/// root of `q`: `sigma_min` near zero would certify one.
pub fn alpha_rank_test(roots: &RootSet, length: f64) -> AlphaTest {
    let (sigma_min, v) = smallest_singular(&alpha_matrix(roots, length));
    let null_alpha = [v[0], v[1], v[2], v[3]];
    AlphaTest {
        sigma_min,
        null_alpha,
        d_alpha: null_alpha[0] * null_alpha[2] - null_alpha[1] * null_alpha[3],
    }
}

/// Fifth singular value of the boundary matrix; zero exactly when the
/// stationary problem has a nontrivial exponential-sum solution.
pub fn bvp_matrix_test(roots: &RootSet, length: f64) -> f64 {
    smallest_singular(&bvp_matrix(roots, length)).0
}
