//! Direct scattering for the two-dimensional Schrödinger operator at the fixed
//! negative energy `E = -1`.
//!
//! The crate computes the Faddeev-type Green's function `g(z, λ)`, solves the
//! integral equation for the exponentially growing solutions `μ(z, λ)`, and
//! evaluates the scattering data `a(λ)`, `b(λ)` together with the modified
//! Fredholm determinant `Δ(λ)`. The [`verify`] module turns the identities
//! these objects satisfy into measured residuals.
//!
//! Conventions: `z = x₁ + i x₂`, fields are sampled on a square [`Grid`], and
//! integrals over the plane use the trapezoid rule on that grid.

pub mod error;
pub mod grid;
pub mod greens;
pub mod lippmann;
pub mod potential;
pub mod quad;
pub mod scattering;
pub mod special;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{make_grid, Grid};
pub use greens::{build_greens_table, greens_g, reference_g_on_circle, GreensTable};
pub use lippmann::{
    build_kernel, detect_exceptional, modified_fredholm_det, solve_mu, DeterminantSample,
    KernelMatrix, MuField, SolverOptions,
};
pub use num_complex::Complex64;
pub use potential::{fourier_hat_v, sample_potential, translate_potential, Family, Potential};
pub use scattering::{born_b, compute_a, compute_b, scan, ScanOptions, ScatteringData};
pub use spectral::{LambdaGrid, Region, SpectralPoint};
pub use verify::{assemble_report, CheckRecord, Status, VerificationReport};
