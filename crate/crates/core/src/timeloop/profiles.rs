//! Analytic initial profiles compatible with the boundary conditions.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::Scalar;

use super::{Field, InitialData};

/// `sin(pi x / L)^power`; compatible for `power >= 2`, and `u_xx(0) = 0`
/// for `power >= 3`.
pub fn sine_power<T: Scalar>(length: T, power: i32) -> Field<T> {
    Field::function(move |x: T| (T::PI() * x / length).sin().powi(power))
}

/// `(x (L - x))^3` scaled to peak value one.
pub fn polynomial_bump<T: Scalar>(length: T) -> Field<T> {
    let peak = (length * length / T::lit(4.0)).powi(3);
    Field::function(move |x: T| (x * (length - x)).powi(3) / peak)
}

/// Smoothed band-limited noise with `modes` sine modes, projected onto the
/// boundary conditions by the weight `(x (L - x))^3`. The history is a
/// sine series vanishing at `s = -h` and `s = 0`, matching `u0''(0) = 0`.
///
/// Amplitudes are standard normal over the mode number; the H-norm is left
/// to the caller.
pub fn random_smooth<T: Scalar, R: Rng + ?Sized>(rng: &mut R, length: T, h: T, modes: usize) -> InitialData<T> {
    let mut draw = |k: usize| -> T {
        let g: f64 = rng.sample(StandardNormal);
        T::lit(g / (k as f64))
    };
    let cu: Vec<T> = (1..=modes).map(&mut draw).collect();
    let cz: Vec<T> = (1..=modes).map(&mut draw).collect();
    let peak = (length * length / T::lit(4.0)).powi(3);
    let u0 = move |x: T| {
        let w = (x * (length - x)).powi(3) / peak;
        let s = cu
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (k, &c)| acc + c * (T::count(k + 1) * T::PI() * x / length).sin());
        w * s
    };
    let z0 = move |s: T| {
        cz.iter()
            .enumerate()
            .fold(T::zero(), |acc, (k, &c)| acc + c * (T::count(k + 1) * T::PI() * s / h).sin())
    };
    InitialData::new(Field::function(u0), Field::function(z0))
}
