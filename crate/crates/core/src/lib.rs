//! Numerical engine for the N-layer shallow water system with eddy-induced
//! (Gent–McWilliams) diffusivity, together with the discrete vertical operator
//! algebra it is built on, the associated norm dictionary, projections of
//! continuously stratified profiles, and a verification harness measuring the
//! O(1/N^2) consistency and solution-convergence rates toward the continuously
//! stratified hydrostatic limit.
//!
//! Layout:
//! - [`spectral`]: periodic pseudo-spectral grid (derivative, fractional
//!   smoothing, exact heat propagation, 2/3-rule dealiasing),
//! - [`layers`]: density grid and the matrix-free vertical operator dictionary
//!   (integration, differentiation, averaging, trace, reductions, coupling),
//! - [`norms`]: normalized l^q, mixed, discrete Sobolev and composite solution
//!   norms,
//! - [`profile`]: separable analytic stratified profiles, layer projections,
//!   the continuous coupling integral and the consistency remainder,
//! - [`solver`]: integrating-factor SSP-RK3 time stepping with diagnostics,
//! - [`harness`]: rate-fitting studies (consistency, self-convergence,
//!   dispersion),
//! - [`identities`]: seeded exact-identity suite over a range of layer counts.

pub mod error;
pub mod harness;
pub mod identities;
pub mod layers;
pub mod norms;
pub mod profile;
pub mod quadrature;
pub mod solver;
pub mod spectral;

pub use error::Error;
pub use layers::DensityGrid;
pub use spectral::SpatialGrid;

/// Layer-by-point field: row `i` is layer `i`, column `j` is grid node `x_j`.
pub type LayerField = ndarray::Array2<f64>;

/// Finite and strictly positive (rejects NaN and infinities).
pub(crate) fn positive_finite(v: f64) -> bool {
    v.is_finite() && v > 0.0
}
