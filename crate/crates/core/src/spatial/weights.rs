use crate::Scalar;

/// One interpolation condition: the `order`-th derivative at local
/// coordinate `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Datum<T> {
    pub s: T,
    pub order: u32,
}

impl<T: Scalar> Datum<T> {
    pub fn value(s: T) -> Self {
        Self { s, order: 0 }
    }

    pub fn derivative(s: T, order: u32) -> Self {
        Self { s, order }
    }
}

/// `d^order/ds^order s^m` at `s`.
fn monomial_derivative<T: Scalar>(s: T, m: u32, order: u32) -> T {
    if order > m {
        return T::zero();
    }
    let falling = ((m - order + 1)..=m).fold(T::one(), |acc, k| acc * T::count(k as usize));
    falling * s.powi((m - order) as i32)
}

/// Weights `w[t][k]` such that the unique polynomial of degree
/// `data.len() - 1` matching the data takes the value `sum_k w[t][k] d_k`
/// at `targets[t]`. `None` if the data do not determine the polynomial.
pub fn hermite_weights<T: Scalar>(data: &[Datum<T>], targets: &[T]) -> Option<Vec<Vec<T>>> {
    let n = data.len();
    // Solve V^T w = e(target), V[k][m] = D^{order_k} s^m at s_k.
    let vt: Vec<Vec<T>> = (0..n)
        .map(|m| {
            data.iter()
                .map(|d| monomial_derivative(d.s, m as u32, d.order))
                .collect()
        })
        .collect();
    targets
        .iter()
        .map(|&t| {
            let rhs: Vec<T> = (0..n).map(|m| t.powi(m as i32)).collect();
            solve_dense(vt.clone(), rhs)
        })
        .collect()
}

/// Gaussian elimination with partial pivoting for small dense systems.
pub fn solve_dense<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| {
            a[i][k]
                .abs()
                .partial_cmp(&a[j][k].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[p][k] == T::zero() {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let l = a[i][k] / a[k][k];
            for j in k..n {
                let akj = a[k][j];
                a[i][j] -= l * akj;
            }
            let bk = b[k];
            b[i] -= l * bk;
        }
    }
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let s = (k + 1..n).fold(b[k], |acc, j| acc - a[k][j] * x[j]);
        x[k] = s / a[k][k];
    }
    Some(x)
}
