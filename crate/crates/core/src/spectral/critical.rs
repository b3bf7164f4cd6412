use super::{SpectralError, C64};

/// Step of the sign-change scan in `L`; the phase moves by far less than
/// `pi / 2` per step.
pub const CRITICAL_SCAN_STEP: f64 = 1e-2;

/// Points per unit length for the ODE residual.
const PROFILE_DENSITY: f64 = 200.0;

/// Constants of the steady state
/// `u(x) = C1 + C2 e^{a x} + C3 e^{-a x} + C4 cos(b x) + C5 sin(b x)`.
/// Here `a, b` are the roots `s^2 = (1 +- sqrt 5)/2` of the ODE's symbol,
/// not the coefficients of [`SystemParams`](crate::model::SystemParams).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalConstants {
    pub length: f64,
    pub a: f64,
    pub b: f64,
    pub big_a: f64,
    pub big_b: f64,
    /// `C1 .. C5`.
    pub c: [f64; 5],
}

impl CriticalConstants {
    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(C4 + i C5) / |C4 + i C5|`.
    pub fn unit_phase(&self) -> C64 {
        let z = C64::new(self.c[3], self.c[4]);
        z / z.norm()
    }
}

pub fn critical_constants(length: f64) -> CriticalConstants {
    let s5 = 5f64.sqrt();
    let a = ((s5 + 1.0) / 2.0).sqrt();
    let b = ((s5 - 1.0) / 2.0).sqrt();
    let c2 = -(-a * length).exp_m1();
    let c3 = (a * length).exp_m1();
    let big_a = c2 + c3;
    let big_b = c2 - c3;
    let ratio = a * a / (b * b);
    CriticalConstants {
        length,
        a,
        b,
        big_a,
        big_b,
        c: [-(1.0 + ratio) * big_a, c2, c3, ratio * big_a, -(a / b) * big_b],
    }
}

/// `|e^{i b L} - ((C4 + i C5)/|C4 + i C5|)^2|`.
pub fn membership_residual(length: f64) -> f64 {
    let k = critical_constants(length);
    let u = k.unit_phase();
    (C64::from_polar(1.0, k.b * length) - u * u).norm()
}

/// `Im(e^{i b L / 2} conj(c))` with `c = (C4 + i C5)/|C4 + i C5|`.
///
/// Zero exactly when `e^{i b L / 2} = +-c`, i.e. on the critical set. Unlike
/// a difference of arguments it has no branch cuts to unwrap.
pub fn phase_mismatch(length: f64) -> f64 {
    let k = critical_constants(length);
    (C64::from_polar(1.0, k.b * length / 2.0) * k.unit_phase().conj()).im
}

/// `d^order u / dx^order` at `x`.
pub fn critical_profile(k: &CriticalConstants, x: f64, order: u32) -> f64 {
    let (a, b) = (k.a, k.b);
    let n = order as i32;
    let shift = order as f64 * std::f64::consts::FRAC_PI_2;
    let constant = if order == 0 { k.c[0] } else { 0.0 };
    constant
        + k.c[1] * a.powi(n) * (a * x).exp()
        + k.c[2] * (-a).powi(n) * (-a * x).exp()
        + k.c[3] * b.powi(n) * (b * x + shift).cos()
        + k.c[4] * b.powi(n) * (b * x + shift).sin()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalSetHit {
    pub length: f64,
    pub membership_residual: f64,
    pub constants: CriticalConstants,
    /// `max |-u''''' + u''' + u'|` over a uniform grid, divided by `max |u|`.
    pub ode_residual: f64,
    /// `u, u', u''` at `0` then at `L`, each divided by `max |C_i|`.
    pub bc_residuals: [f64; 6],
    pub max_u: f64,
}

fn hit(length: f64) -> CriticalSetHit {
    let k = critical_constants(length);
    let n = ((length * PROFILE_DENSITY).ceil() as usize).max(100);
    let mut max_u: f64 = 0.0;
    let mut max_res: f64 = 0.0;
    for i in 0..=n {
        let x = length * i as f64 / n as f64;
        max_u = max_u.max(critical_profile(&k, x, 0).abs());
        let res = -critical_profile(&k, x, 5) + critical_profile(&k, x, 3) + critical_profile(&k, x, 1);
        max_res = max_res.max(res.abs());
    }
    let scale = k.max_abs();
    let mut bc = [0.0; 6];
    for (slot, (x, order)) in [(0.0, 0), (0.0, 1), (0.0, 2), (length, 0), (length, 1), (length, 2)]
        .into_iter()
        .enumerate()
    {
        bc[slot] = critical_profile(&k, x, order).abs() / scale;
    }
    CriticalSetHit {
        length,
        membership_residual: membership_residual(length),
        constants: k,
        ode_residual: max_res / max_u,
        bc_residuals: bc,
        max_u,
    }
}

fn bisect(mut lo: f64, mut hi: f64) -> f64 {
    let mut g_lo = phase_mismatch(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = phase_mismatch(mid);
        if g == 0.0 {
            return mid;
        }
        if (g < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g;
        } else {
            hi = mid;
        }
    }
    if phase_mismatch(lo).abs() <= phase_mismatch(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Lengths in `[l_min, l_max]` on the critical set, located by sign
/// changes of [`phase_mismatch`] on a step of [`CRITICAL_SCAN_STEP`] and
/// refined by bisection to machine precision.
pub fn find_critical_lengths(l_min: f64, l_max: f64) -> Result<Vec<CriticalSetHit>, SpectralError> {
    if !(l_min >= 0.0 && l_min < l_max && l_max <= 200.0) {
        return Err(SpectralError::Argument("length range must satisfy 0 <= min < max <= 200"));
    }
    let start = l_min.max(CRITICAL_SCAN_STEP);
    let steps = ((l_max - start) / CRITICAL_SCAN_STEP).ceil() as usize;
    let mut hits = Vec::new();
    let mut prev = (start, phase_mismatch(start));
    if prev.1 == 0.0 {
        hits.push(hit(start));
    }
    for i in 1..=steps {
        let l = (start + i as f64 * CRITICAL_SCAN_STEP).min(l_max);
        let g = phase_mismatch(l);
        if g == 0.0 {
            hits.push(hit(l));
        } else if prev.1 != 0.0 && (g < 0.0) != (prev.1 < 0.0) {
            hits.push(hit(bisect(prev.0, l)));
        }
        prev = (l, g);
    }
    Ok(hits)
}
