//! Fifth-order Kawahara equation on a bounded interval under a delayed
//! boundary damping law.
//!
//! The system is
//!
//! ```text
//! u_t + a u_x + b u_xxx - u_xxxxx + u^p u_x = 0      on (0, L)
//! u = u_x = 0 at x = 0 and x = L
//! u_xx(t, L) = alpha u_xx(t, 0) + beta u_xx(t - h, 0)
//! ```
//!
//! Modules:
//! * [`model`]: parameters, gain matrices, Lyapunov decay certificates.
//! * [`spatial`]: grid, finite-difference operator, traces, quadrature.
//! * [`timeloop`]: delay line and IMEX Crank–Nicolson integrator.
//! * [`diagnostics`]: energy, Lyapunov functional, fits and estimate checks.
//! * [`spectral`]: roots of `q`, Möbius and rank tests, critical lengths.
//!
//! Everything except [`spectral`] is generic over [`Scalar`]; the aliases
//! below fix `f64`, which is what the command line tool uses.

pub mod diagnostics;
pub mod model;
pub mod scalar;
pub mod spatial;
pub mod spectral;
pub mod timeloop;

pub use scalar::Scalar;

pub type SystemParams = model::SystemParams<f64>;
pub type GainMatrix = model::GainMatrix<f64>;
pub type Certificate = model::Certificate<f64>;
pub type Grid = spatial::Grid<f64>;
pub type OperatorBundle = spatial::OperatorBundle<f64>;
pub type DelayLine = timeloop::DelayLine<f64>;
pub type SimState = timeloop::SimState<f64>;
pub type InitialData = timeloop::InitialData<f64>;
pub type RunRecord = timeloop::RunRecord<f64>;
pub type EnergyRecord = diagnostics::EnergyRecord<f64>;
pub type DecayFit = diagnostics::DecayFit<f64>;
