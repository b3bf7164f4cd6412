//! Parameters, admissibility constraints, gain matrices and the closed-form
//! Lyapunov decay certificate.

use std::fmt;

use thiserror::Error;

use crate::Scalar;

/// Physical and control parameters.
///
/// `p` is the exponent of the nonlinearity `u^p u_x`; only 1 and 2 are
/// accepted because `u^p` has no sign-safe meaning for fractional `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams<T> {
    pub a: T,
    pub b: T,
    pub p: u32,
    pub alpha: T,
    pub beta: T,
    pub h: T,
    pub length: T,
}

impl<T: Scalar> SystemParams<T> {
    /// `a = b = 1`, `p = 2`, `alpha = beta = 0.3`, `h = 1`, `L = 3`.
    pub fn reference() -> Self {
        Self {
            a: T::one(),
            b: T::one(),
            p: 2,
            alpha: T::lit(0.3),
            beta: T::lit(0.3),
            h: T::one(),
            length: T::lit(3.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    PositiveA,
    PositiveB,
    PositiveDelay,
    PositiveLength,
    GainSum,
    Exponent,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Constraint::PositiveA => "a > 0",
            Constraint::PositiveB => "b > 0",
            Constraint::PositiveDelay => "h > 0",
            Constraint::PositiveLength => "L > 0",
            Constraint::GainSum => "|alpha| + |beta| < 1",
            Constraint::Exponent => "p in {1, 2}",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Constraint>,
    /// `L < sqrt(3b/a) pi`; needed only for certificates.
    pub length_ok: bool,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn is_certifiable(&self) -> bool {
        self.is_admissible() && self.length_ok
    }
}

pub fn validate_params<T: Scalar>(params: &SystemParams<T>) -> ValidationReport {
    let mut violations = Vec::new();
    // `!(x > 0)` also catches NaN.
    if !(params.a > T::zero()) {
        violations.push(Constraint::PositiveA);
    }
    if !(params.b > T::zero()) {
        violations.push(Constraint::PositiveB);
    }
    if !(params.h > T::zero()) {
        violations.push(Constraint::PositiveDelay);
    }
    if !(params.length > T::zero()) {
        violations.push(Constraint::PositiveLength);
    }
    if !(params.alpha.abs() + params.beta.abs() < T::one()) {
        violations.push(Constraint::GainSum);
    }
    if params.p != 1 && params.p != 2 {
        violations.push(Constraint::Exponent);
    }
    let length_ok = match length_bound(params.a, params.b) {
        Ok(l_max) => params.length > T::zero() && params.length < l_max,
        Err(_) => false,
    };
    ValidationReport {
        violations,
        length_ok,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(&'static str),
}

/// `sqrt(3b/a) pi`, the largest interval length covered by the certificate.
pub fn length_bound<T: Scalar>(a: T, b: T) -> Result<T, ModelError> {
    if !(a > T::zero()) || !(b > T::zero()) {
        return Err(ModelError::Domain("a and b must be positive"));
    }
    Ok((T::lit(3.0) * b / a).sqrt() * T::PI())
}

/// `(2/pi) sqrt((3 b pi^2 - L^2 a) / L)`.
pub fn smallness_radius<T: Scalar>(params: &SystemParams<T>) -> Result<T, ModelError> {
    let l_max = length_bound(params.a, params.b)?;
    let l = params.length;
    if !(l > T::zero()) || l >= l_max {
        return Err(ModelError::Domain("L must lie in (0, sqrt(3b/a) pi)"));
    }
    let pi = T::PI();
    let radicand = (T::lit(3.0) * params.b * pi * pi - l * l * params.a) / l;
    Ok(T::lit(2.0) / pi * radicand.max(T::zero()).sqrt())
}

/// Symmetric 2x2 matrix stored by its three independent entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainMatrix<T> {
    pub m11: T,
    pub m12: T,
    pub m22: T,
}

impl<T: Scalar> GainMatrix<T> {
    pub fn det(&self) -> T {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    pub fn is_negative_definite(&self) -> bool {
        is_negative_definite(self)
    }

    /// `(M v, v)` for `v = (x, y)`.
    pub fn quadratic_form(&self, x: T, y: T) -> T {
        self.m11 * x * x + T::lit(2.0) * self.m12 * x * y + self.m22 * y * y
    }

    /// Largest eigenvalue.
    pub fn max_eigenvalue(&self) -> T {
        let half = T::lit(0.5);
        let mean = half * (self.m11 + self.m22);
        let dev = (half * (self.m11 - self.m22)).hypot(self.m12);
        mean + dev
    }
}

pub fn is_negative_definite<T: Scalar>(m: &GainMatrix<T>) -> bool {
    m.m11 < T::zero() && m.det() > T::zero()
}

/// `[[alpha^2 - 1 + |beta|, alpha beta], [alpha beta, beta^2 - |beta|]]`.
pub fn gain_matrix_m<T: Scalar>(alpha: T, beta: T) -> GainMatrix<T> {
    GainMatrix {
        m11: alpha * alpha - T::one() + beta.abs(),
        m12: alpha * beta,
        m22: beta * beta - beta.abs(),
    }
}

/// Adjoint variant with off-diagonal `alpha |beta|`.
pub fn gain_matrix_mstar<T: Scalar>(alpha: T, beta: T) -> GainMatrix<T> {
    GainMatrix {
        m12: alpha * beta.abs(),
        ..gain_matrix_m(alpha, beta)
    }
}

/// `M + L mu1 [[alpha^2, alpha beta], [alpha beta, beta^2]] + mu2 [[1, 0], [0, 0]]`.
pub fn perturbed_matrix<T: Scalar>(alpha: T, beta: T, length: T, mu1: T, mu2: T) -> GainMatrix<T> {
    let m = gain_matrix_m(alpha, beta);
    let w = length * mu1;
    GainMatrix {
        m11: m.m11 + w * alpha * alpha + mu2,
        m12: m.m12 + w * alpha * beta,
        m22: m.m22 + w * beta * beta,
    }
}

/// Admissible windows for the Lyapunov weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuBounds<T> {
    pub alpha: T,
    pub beta: T,
    pub length: T,
    pub mu2_sup: T,
}

impl<T: Scalar> MuBounds<T> {
    /// Supremum of admissible `mu1` for a given `mu2 < mu2_sup`.
    ///
    /// Terms with `alpha^2` in the denominator are `+inf` when `alpha = 0`.
    /// Returns zero when `mu2` leaves no room.
    pub fn mu1_sup(&self, mu2: T) -> T {
        let (a2, b) = (self.alpha * self.alpha, self.beta.abs());
        let l = self.length;
        let first = if a2 == T::zero() {
            T::infinity()
        } else {
            (T::one() - b - mu2 - a2) / (l * a2)
        };
        let denom = l * (a2 - b * b + b * (T::one() - mu2));
        let second = if denom > T::zero() {
            ((b - T::one()).powi(2) - a2 - mu2 * (T::one() - b)) / denom
        } else {
            T::zero()
        };
        first.min(second).max(T::zero())
    }
}

pub fn mu_bounds<T: Scalar>(alpha: T, beta: T, length: T) -> Result<MuBounds<T>, ModelError> {
    let (a2, b) = (alpha * alpha, beta.abs());
    if !(alpha.abs() + b < T::one()) {
        return Err(ModelError::Domain("|alpha| + |beta| < 1 required"));
    }
    if b == T::zero() {
        return Err(ModelError::Domain("beta must be nonzero"));
    }
    if !(length > T::zero()) {
        return Err(ModelError::Domain("L must be positive"));
    }
    let one = T::one();
    let mu2_sup = (one - b - a2)
        .min(((b - one).powi(2) - a2) / (one - b))
        .min((a2 - beta * beta + b) / b);
    Ok(MuBounds {
        alpha,
        beta,
        length,
        mu2_sup,
    })
}

/// Weights at half their suprema: `mu2 = mu2_sup / 2`, `mu1 = mu1_sup(mu2) / 2`,
/// each clipped below 1.
pub fn half_sup_weights<T: Scalar>(params: &SystemParams<T>) -> Result<(T, T), ModelError> {
    let bounds = mu_bounds(params.alpha, params.beta, params.length)?;
    let half = T::lit(0.5);
    let below_one = T::one() - T::epsilon();
    let mu2 = (half * bounds.mu2_sup).min(below_one);
    let mu1 = (half * bounds.mu1_sup(mu2)).min(below_one);
    Ok((mu1, mu2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate<T> {
    pub mu1: T,
    pub mu2: T,
    pub r: T,
    pub lambda: T,
    pub kappa: T,
    pub m_negdef: bool,
    pub m_mu_negdef: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertificateError {
    #[error("parameters violate {0:?}")]
    Inadmissible(Vec<Constraint>),
    #[error("L is not below sqrt(3b/a) pi")]
    LengthTooLarge,
    #[error("beta = 0 leaves mu2/|beta| undefined")]
    ZeroDelayedGain,
    #[error("weights must lie in (0, 1), got mu1 = {mu1}, mu2 = {mu2}")]
    WeightOutOfRange { mu1: f64, mu2: f64 },
    #[error("radius r = {r} is outside [0, {r_max})")]
    RadiusOutOfRange { r: f64, r_max: f64 },
    #[error("perturbed gain matrix is not negative definite (m11 = {m11}, det = {det})")]
    NotNegativeDefinite { m11: f64, det: f64 },
}

/// Largest admissible decay exponent and overshoot constant for data of
/// H-norm below `r`.
///
/// `lambda = min{ mu2 / (2h(mu2 + |beta|)), (3b pi^2 - r^2 L - L^2 a) mu1 / (2 L^2 (1 + L mu1)) }`,
/// `kappa = 1 + max{ L mu1, mu2 / |beta| }`.
pub fn decay_certificate<T: Scalar>(
    params: &SystemParams<T>,
    mu1: T,
    mu2: T,
    r: T,
) -> Result<Certificate<T>, CertificateError> {
    let report = validate_params(params);
    if !report.is_admissible() {
        return Err(CertificateError::Inadmissible(report.violations));
    }
    if !report.length_ok {
        return Err(CertificateError::LengthTooLarge);
    }
    let b_abs = params.beta.abs();
    if b_abs == T::zero() {
        return Err(CertificateError::ZeroDelayedGain);
    }
    let unit = |v: T| v > T::zero() && v < T::one();
    if !unit(mu1) || !unit(mu2) {
        return Err(CertificateError::WeightOutOfRange {
            mu1: mu1.to_f64_lossy(),
            mu2: mu2.to_f64_lossy(),
        });
    }
    let r_max = smallness_radius(params).map_err(|_| CertificateError::LengthTooLarge)?;
    if !(r >= T::zero()) || r >= r_max {
        return Err(CertificateError::RadiusOutOfRange {
            r: r.to_f64_lossy(),
            r_max: r_max.to_f64_lossy(),
        });
    }
    let (l, h) = (params.length, params.h);
    let m = gain_matrix_m(params.alpha, params.beta);
    let m_mu = perturbed_matrix(params.alpha, params.beta, l, mu1, mu2);
    if !m_mu.is_negative_definite() {
        return Err(CertificateError::NotNegativeDefinite {
            m11: m_mu.m11.to_f64_lossy(),
            det: m_mu.det().to_f64_lossy(),
        });
    }
    let two = T::lit(2.0);
    let pi = T::PI();
    let delay_branch = mu2 / (two * h * (mu2 + b_abs));
    let space_branch = (T::lit(3.0) * params.b * pi * pi - r * r * l - l * l * params.a) * mu1
        / (two * l * l * (T::one() + l * mu1));
    Ok(Certificate {
        mu1,
        mu2,
        r,
        lambda: delay_branch.min(space_branch),
        kappa: T::one() + (l * mu1).max(mu2 / b_abs),
        m_negdef: m.is_negative_definite(),
        m_mu_negdef: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn validation_examples() {
        let p = SystemParams::<f64>::reference();
        let r = validate_params(&p);
        assert!(r.is_admissible() && r.length_ok);

        let bad = SystemParams { alpha: 0.6, beta: 0.5, ..p };
        assert_eq!(validate_params(&bad).violations, vec![Constraint::GainSum]);

        let long = SystemParams { length: 6.0, ..p };
        let r = validate_params(&long);
        assert!(r.is_admissible());
        assert!(!r.length_ok);

        let odd = SystemParams { p: 3, h: 0.0, ..p };
        assert_eq!(
            validate_params(&odd).violations,
            vec![Constraint::PositiveDelay, Constraint::Exponent]
        );
    }

    #[test]
    fn length_bound_examples() {
        let pi = std::f64::consts::PI;
        assert!(close(length_bound(1.0, 1.0).unwrap(), 3f64.sqrt() * pi, 1e-15));
        assert!(close(length_bound(3.0, 1.0).unwrap(), pi, 1e-15));
        assert!(close(length_bound(1.0, 1.0 / 3.0).unwrap(), pi, 1e-15));
        assert!(close(length_bound(1.0, 3.0).unwrap(), 3.0 * pi, 1e-14));
        assert!(length_bound(0.0, 1.0).is_err());
        assert!(length_bound(1.0, -1.0).is_err());
    }

    #[test]
    fn smallness_radius_examples() {
        let pi = std::f64::consts::PI;
        let base = SystemParams::<f64>::reference();
        let p = SystemParams { length: pi, ..base };
        assert!(close(smallness_radius(&p).unwrap(), 2.0 / pi * (2.0 * pi).sqrt(), 1e-14));

        let l_max = length_bound(1.0, 1.0).unwrap();
        let p = SystemParams { length: l_max * (1.0 - 1e-13), ..base };
        assert!(smallness_radius(&p).unwrap() < 1e-6);

        let p = SystemParams { b: 3.0, length: 1.0, ..base };
        assert!(close(
            smallness_radius(&p).unwrap(),
            2.0 / pi * (9.0 * pi * pi - 1.0).sqrt(),
            1e-14
        ));

        let p = SystemParams { length: 6.0, ..base };
        assert!(smallness_radius(&p).is_err());
    }

    #[test]
    fn gain_matrix_examples() {
        let m = gain_matrix_m(0.3, 0.3);
        assert!(close(m.m11, -0.61, 1e-15));
        assert!(close(m.m12, 0.09, 1e-15));
        assert!(close(m.m22, -0.21, 1e-15));
        assert!(close(m.det(), 0.12, 1e-15));
        assert!(m.is_negative_definite());

        let z = gain_matrix_m(0.0, 0.0);
        assert_eq!((z.m11, z.m12, z.m22), (-1.0, 0.0, 0.0));

        let s = gain_matrix_mstar(0.3, -0.3);
        assert!(close(s.m12, 0.09, 1e-15));
        assert!(close(gain_matrix_m(0.3, -0.3).m12, -0.09, 1e-15));
        assert_eq!(gain_matrix_mstar(0.3, 0.3), gain_matrix_m(0.3, 0.3));
    }

    #[test]
    fn negative_definite_examples() {
        let neg = GainMatrix { m11: -1.0, m12: 0.0, m22: -1.0 };
        let ind = GainMatrix { m11: 1.0, m12: 0.0, m22: -1.0 };
        assert!(is_negative_definite(&neg));
        assert!(!is_negative_definite(&ind));
        assert!(close(gain_matrix_m(0.3, 0.3).max_eigenvalue(), -0.41 + 0.0481f64.sqrt(), 1e-15));
    }

    #[test]
    fn perturbed_examples() {
        assert_eq!(perturbed_matrix(0.3, 0.3, 3.0, 0.0, 0.0), gain_matrix_m(0.3, 0.3));
        let m = perturbed_matrix(0.3, 0.3, 3.0, 0.01, 0.01);
        assert!(close(m.m11, -0.5973, 1e-12));
        assert!(close(m.m12, 0.0927, 1e-12));
        assert!(close(m.m22, -0.2073, 1e-12));
        assert!(m.is_negative_definite());
    }

    #[test]
    fn mu_bounds_examples() {
        let b = mu_bounds(0.3, 0.3, 3.0).unwrap();
        assert!(close(b.mu2_sup, 0.4 / 0.7, 1e-15));
        // (|beta| - 1)^2 = 0.49, so the second branch is 0.26 / 0.72.
        let want = (0.41f64 / 0.27).min(0.26 / 0.72);
        assert!(close(b.mu1_sup(0.2), want, 1e-14));

        let zero_alpha = mu_bounds(0.0, 0.3, 3.0).unwrap();
        assert!(close(zero_alpha.mu2_sup, 0.7, 1e-15));
        assert!(zero_alpha.mu1_sup(0.2).is_finite());

        assert!(mu_bounds(0.3, 0.0, 3.0).is_err());
        assert!(mu_bounds(0.6, 0.5, 3.0).is_err());
    }

    #[test]
    fn certificate_examples() {
        let p = SystemParams::<f64>::reference();
        let c = decay_certificate(&p, 0.01, 0.01, 0.0).unwrap();
        let pi = std::f64::consts::PI;
        let first = 0.01 / (2.0 * 0.31);
        let second = (3.0 * pi * pi - 9.0) * 0.01 / (18.0 * 1.03);
        assert!(close(first, 0.016_129_032_258_064_516, 1e-15));
        assert!(close(second, 0.011_115_864_726_681_81, 1e-12));
        assert_eq!(c.lambda, first.min(second));
        assert!(close(c.kappa, 1.0 + 0.01 / 0.3, 1e-15));
        assert!(c.m_negdef && c.m_mu_negdef);

        let r_max = smallness_radius(&p).unwrap();
        assert!(matches!(
            decay_certificate(&p, 0.01, 0.01, r_max),
            Err(CertificateError::RadiusOutOfRange { .. })
        ));
        let long = SystemParams { length: 6.0, ..p };
        assert_eq!(
            decay_certificate(&long, 0.01, 0.01, 0.0),
            Err(CertificateError::LengthTooLarge)
        );
        let no_delay_gain = SystemParams { beta: 0.0, ..p };
        assert_eq!(
            decay_certificate(&no_delay_gain, 0.01, 0.01, 0.0),
            Err(CertificateError::ZeroDelayedGain)
        );
        assert!(matches!(
            decay_certificate(&p, 0.9, 0.9, 0.0),
            Err(CertificateError::NotNegativeDefinite { .. })
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let p = SystemParams::<f32>::reference();
        let c = decay_certificate(&p, 0.01, 0.01, 0.0).unwrap();
        assert!((c.lambda - 0.011_115_86).abs() < 1e-6);
        assert!(gain_matrix_m(0.3f32, 0.3).is_negative_definite());
    }
}
