use super::{RootSet, SpectralError, C64};

/// Projective 2x2 matrix `[[m11, m12], [m21, m22]]` acting by
/// `z -> (m11 z + m12) / (m21 z + m22)`, scaled so its largest entry has
/// modulus one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub m: [[C64; 2]; 2],
}

impl MobiusMap {
    /// Cross-ratio map sending `z1, z2, z3` to `0, 1, inf`.
    fn cross_ratio(z: [C64; 3]) -> [[C64; 2]; 2] {
        let [z1, z2, z3] = z;
        [[z2 - z3, -z1 * (z2 - z3)], [z2 - z1, -z3 * (z2 - z1)]]
    }

    /// The unique map with `M(z_k) = w_k`. Points must be pairwise distinct.
    pub fn through(z: [C64; 3], w: [C64; 3]) -> Self {
        let s = Self::cross_ratio(z);
        let t = Self::cross_ratio(w);
        // Projective inverse of t is its adjugate.
        let ti = [[t[1][1], -t[0][1]], [-t[1][0], t[0][0]]];
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = ti[i][0] * s[0][j] + ti[i][1] * s[1][j];
            }
        }
        let scale = m.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
        if scale > 0.0 {
            for v in m.iter_mut().flatten() {
                *v /= scale;
            }
        }
        Self { m }
    }

    /// Image of `z` as homogeneous coordinates `(p, q)`.
    pub fn apply_projective(&self, z: C64) -> (C64, C64) {
        (self.m[0][0] * z + self.m[0][1], self.m[1][0] * z + self.m[1][1])
    }

    /// Chordal distance on the Riemann sphere between `M(z)` and `w`.
    pub fn chordal_residual(&self, z: C64, w: C64) -> f64 {
        let (p, q) = self.apply_projective(z);
        let denom = ((p.norm_sqr() + q.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt();
        2.0 * (p - w * q).norm() / denom
    }
}

fn target(xi: C64, length: f64) -> C64 {
    (C64::new(0.0, -length) * xi).exp()
}

/// Fits the Möbius map through `(xi_k, exp(-i L xi_k))` for the first three
/// canonical roots and returns the largest chordal distance between its
/// values at `xi_4, xi_5` and `exp(-i L xi_4), exp(-i L xi_5)`.
///
/// With two conjugate pairs the anchors are `c1, c2, conj c1` and the
/// tested quadruple is `{c1, c2, conj c1, conj c2}`. The chordal metric
/// keeps the residual bounded when `exp(-i L xi)` is huge.
pub fn mobius_consistency(roots: &RootSet, length: f64) -> Result<f64, SpectralError> {
    if !roots.is_distinct() {
        return Err(SpectralError::Degenerate);
    }
    mobius_residual_with(&roots.roots, [0, 1, 2], length)
}

/// Residual with the given anchor indices; the other two roots are tested.
pub(crate) fn mobius_residual_with(roots: &[C64; 5], anchors: [usize; 3], length: f64) -> Result<f64, SpectralError> {
    if anchors[0] == anchors[1] || anchors[1] == anchors[2] || anchors[0] == anchors[2] || anchors.iter().any(|&k| k > 4) {
        return Err(SpectralError::Argument("anchors must be three distinct root indices"));
    }
    let z = anchors.map(|k| roots[k]);
    let map = MobiusMap::through(z, z.map(|xi| target(xi, length)));
    Ok((0..5)
        .filter(|k| !anchors.contains(k))
        .map(|k| map.chordal_residual(roots[k], target(roots[k], length)))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::super::q_roots;
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn anchors_are_reproduced() {
        let z = [c(0.3, 1.0), c(-1.2, 0.4), c(0.3, -1.0)];
        let w = [c(2.0, 0.0), c(0.0, -5.0), c(1e-3, 1e-3)];
        let m = MobiusMap::through(z, w);
        for k in 0..3 {
            assert!(m.chordal_residual(z[k], w[k]) < 1e-14);
        }
    }

    #[test]
    fn known_map_is_recovered() {
        // M(z) = (2z + i) / (z - 3).
        let f = |z: C64| (z * 2.0 + c(0.0, 1.0)) / (z - 3.0);
        let z = [c(0.0, 0.0), c(1.0, 1.0), c(-2.0, 0.5)];
        let m = MobiusMap::through(z, z.map(f));
        let probe = c(0.7, -0.2);
        assert!(m.chordal_residual(probe, f(probe)) < 1e-13);
    }

    #[test]
    fn residual_at_reference_point_is_large() {
        let s = q_roots(1.0);
        let res = mobius_consistency(&s, 1.0).unwrap();
        assert!(res > 1e-6, "{res}");
    }

    #[test]
    fn anchor_order_does_not_matter() {
        let s = q_roots(1.0);
        let base = mobius_residual_with(&s.roots, [0, 1, 2], 1.7).unwrap();
        for perm in [[1, 0, 2], [2, 1, 0], [0, 2, 1], [1, 2, 0], [2, 0, 1]] {
            let other = mobius_residual_with(&s.roots, perm, 1.7).unwrap();
            assert!((other - base).abs() < 1e-9);
        }
    }

    #[test]
    fn repeated_roots_are_refused() {
        let s = q_roots(super::super::three_real_root_radius());
        assert_eq!(mobius_consistency(&s, 1.0), Err(SpectralError::Degenerate));
    }
}
