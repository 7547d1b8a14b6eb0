//! Pseudospectral laboratory for the coupled nonlinear Schrödinger (CNLS)
//! equations and the two-phase Whitham modulation equations they reduce to.
//!
//! The crate is split by role:
//!
//! - [`spectral`]: periodic Fourier fields, Gevrey norms, dealiased products
//!   and the Gevrey-space inequality toolkit.
//! - [`cnls`]: the CNLS system in `Ψ` variables, plane waves, split-step
//!   integration and the polar transform to modulation variables.
//! - [`whitham`]: the quasilinear modulation system `u_T = M(u) u_X`,
//!   characteristic classification, viscous integrators and the
//!   analyticity-strip monitor.
//! - [`correctors`]: higher-order modulation approximations, residuals and
//!   log-log order fitting.
//! - [`validate`]: end-to-end validity experiments and report emission.

pub mod cnls;
pub mod correctors;
pub mod spectral;
pub mod validate;
pub mod whitham;

pub use num_complex::Complex64;
