use crate::Scalar;

use super::TimeloopError;

/// Relative distance to the nearest integer under which a sample position
/// counts as exactly on a stored sample.
const SNAP: f64 = 1e-9;

/// Ring buffer of left traces `u_xx(s, 0)` for `s` in `[t - h, t]`,
/// sampled every `dt`.
///
/// `z(t, rho) = u_xx(t - h rho, 0)` is read back by [`DelayLine::sample`].
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine<T> {
    buffer: Vec<T>,
    head: usize,
    h: T,
    dt: T,
    t0: T,
    pushes: u64,
}

impl<T: Scalar> DelayLine<T> {
    fn with_capacity(h: T, dt: T, t0: T) -> Result<Self, TimeloopError> {
        if !(h > T::zero()) || !(dt > T::zero()) {
            return Err(TimeloopError::BadStep("h and dt must be positive"));
        }
        if dt > h {
            return Err(TimeloopError::BadStep("dt must not exceed the delay h"));
        }
        let cap = steps_covering(h, dt) + 1;
        Ok(Self {
            buffer: vec![T::zero(); cap],
            head: cap - 1,
            h,
            dt,
            t0,
            pushes: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.buffer.len()
    }

    pub fn delay(&self) -> T {
        self.h
    }

    pub fn step(&self) -> T {
        self.dt
    }

    /// Time of the most recent sample.
    pub fn t_current(&self) -> T {
        self.t0 + T::from_u64(self.pushes).expect("step count") * self.dt
    }

    /// `k`-th most recent sample, `k = 0` being the newest.
    pub fn back(&self, k: usize) -> T {
        let cap = self.buffer.len();
        assert!(k < cap, "lag index {k} beyond capacity {cap}");
        self.buffer[(self.head + cap - k) % cap]
    }

    pub fn push(&mut self, value: T) {
        self.head = (self.head + 1) % self.buffer.len();
        self.buffer[self.head] = value;
        self.pushes += 1;
    }

    /// Trace at time `t_current - lag`, `0 <= lag <= h`.
    ///
    /// Linear interpolation between neighbouring samples; a stored value is
    /// returned untouched when `lag / dt` is an integer.
    pub fn sample_at_lag(&self, lag: T) -> T {
        let pos = (lag / self.dt).max(T::zero());
        let nearest = pos.round();
        let tol = T::lit(SNAP) * T::one().max(pos);
        let last = T::count(self.buffer.len() - 1);
        if (pos - nearest).abs() <= tol {
            let k = nearest.min(last).to_usize().expect("lag index");
            return self.back(k);
        }
        let pos = pos.min(last);
        let k = pos.floor();
        let frac = pos - k;
        let k = k.to_usize().expect("lag index");
        let near = self.back(k);
        let far = self.back((k + 1).min(self.buffer.len() - 1));
        near + (far - near) * frac
    }

    /// `z(t, rho)` for `rho` in `[0, 1]`.
    pub fn sample(&self, rho: T) -> T {
        self.sample_at_lag(self.h * rho)
    }

    /// `int_0^1 w(rho) z(rho)^2 d rho` by the trapezoidal rule on the stored
    /// samples, closing with a partial panel when `h / dt` is fractional.
    pub fn weighted_square_integral(&self, weight: impl Fn(T) -> T) -> T {
        let drho = self.dt / self.h;
        let full = steps_below(self.h, self.dt);
        let half = T::lit(0.5);
        let f = |rho: T, z: T| weight(rho) * z * z;
        let mut acc = T::zero();
        let mut prev = f(T::zero(), self.back(0));
        for k in 1..=full {
            let rho = (T::count(k) * drho).min(T::one());
            let cur = f(rho, self.back(k));
            acc += half * (prev + cur) * drho;
            prev = cur;
        }
        let covered = T::count(full) * drho;
        if covered < T::one() - T::lit(SNAP) {
            let cur = f(T::one(), self.sample(T::one()));
            acc += half * (prev + cur) * (T::one() - covered);
        }
        acc
    }

    pub fn square_integral(&self) -> T {
        self.weighted_square_integral(|_| T::one())
    }
}

/// `ceil(h / dt)` with exact ratios snapped.
fn steps_covering<T: Scalar>(h: T, dt: T) -> usize {
    let r = h / dt;
    let n = r.round();
    let k = if (r - n).abs() <= T::lit(SNAP) * r.max(T::one()) {
        n
    } else {
        r.ceil()
    };
    k.to_usize().expect("delay steps")
}

/// `floor(h / dt)` with exact ratios snapped.
fn steps_below<T: Scalar>(h: T, dt: T) -> usize {
    let r = h / dt;
    let n = r.round();
    let k = if (r - n).abs() <= T::lit(SNAP) * r.max(T::one()) {
        n
    } else {
        r.floor()
    };
    k.to_usize().expect("delay steps")
}

/// Fills the line with `z0(-k dt)`, `k = 0 ..= ceil(h/dt)`.
///
/// When `h / dt` is fractional the oldest sample lies slightly before `-h`,
/// so `z0` is evaluated there too.
pub fn init_delay_line<T: Scalar>(
    z0: impl Fn(T) -> T,
    h: T,
    dt: T,
) -> Result<DelayLine<T>, TimeloopError> {
    let mut line = DelayLine::with_capacity(h, dt, T::zero())?;
    let cap = line.capacity();
    for k in (0..cap).rev() {
        let s = -T::count(k) * dt;
        line.buffer[(line.head + cap - k) % cap] = z0(s);
    }
    Ok(line)
}

/// `alpha * current_trace + beta * z(t, 1)`.
pub fn feedback_value<T: Scalar>(line: &DelayLine<T>, alpha: T, beta: T, current_trace: T) -> T {
    alpha * current_trace + beta * line.sample(T::one())
}
