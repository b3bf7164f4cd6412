use crate::Scalar;

use super::TimeloopError;

/// First-order upwind discretization of `h z_t + z_rho = 0` on `rho` in
/// `(0, 1)` with inflow `z(t, 0)`.
///
/// Kept only to cross-check the ring buffer, which realizes the same
/// transport exactly.
#[derive(Debug, Clone)]
pub struct UpwindTransport<T> {
    h: T,
    z: Vec<T>,
}

impl<T: Scalar> UpwindTransport<T> {
    /// Nodes `rho_j = j / cells`, initialized with `z(0, rho) = z0(-h rho)`.
    pub fn new(cells: usize, h: T, z0: impl Fn(T) -> T) -> Result<Self, TimeloopError> {
        if cells == 0 || !(h > T::zero()) {
            return Err(TimeloopError::BadStep("need at least one cell and h > 0"));
        }
        let drho = T::one() / T::count(cells);
        let z = (0..=cells).map(|j| z0(-h * T::count(j) * drho)).collect();
        Ok(Self { h, z })
    }

    pub fn cells(&self) -> usize {
        self.z.len() - 1
    }

    /// Advances by `dt` with the inflow varying linearly from `inflow_start`
    /// to `inflow_end`; substeps keep the Courant number at most one.
    pub fn advance(&mut self, dt: T, inflow_start: T, inflow_end: T) {
        let cells = self.cells();
        let drho = T::one() / T::count(cells);
        let speed = T::one() / self.h;
        let sub = (dt * speed / drho).ceil().max(T::one());
        let substeps = sub.to_usize().expect("substep count");
        let tau = dt / sub;
        let nu = speed * tau / drho;
        for s in 0..substeps {
            let w = T::count(s + 1) / sub;
            let next_inflow = inflow_start + (inflow_end - inflow_start) * w;
            for j in (1..=cells).rev() {
                let (here, upwind) = (self.z[j], self.z[j - 1]);
                self.z[j] = here - nu * (here - upwind);
            }
            self.z[0] = next_inflow;
        }
    }

    /// `z(t, 1)`.
    pub fn outflow(&self) -> T {
        self.z[self.z.len() - 1]
    }

    pub fn values(&self) -> &[T] {
        &self.z
    }
}
