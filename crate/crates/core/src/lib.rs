//! Discrete spherical averages on the integer lattice.
//!
//! The crate computes the objects that control the `l^p`-improving behaviour of
//! the lattice sphere average
//!
//! ```text
//! A_λ f(x) = λ^{-(d-2)} Σ_{|n| = λ} f(x - n)
//! ```
//!
//! and checks the quantitative bounds around it numerically:
//!
//! * [`arith`]: factorization, `σ_b`, the weight `ρ(q, λ)` and its divisor-sum bounds.
//! * [`lattice`]: lattice points on spheres, admissible radii, counting.
//! * [`expsums`]: quadratic Gauss sums and the Kloosterman-type sums `K(λ, q, ℓ)`.
//! * [`continuum`]: the smooth cutoff `Φ` and the Fourier transform of sphere measure.
//! * [`multiplier`]: the multiplier `a_λ`, its main term `c_λ`, residual and lifts.
//! * [`operator`]: spatial convolution, localized norms, improving ratios.
//! * [`extremal`]: the sphere self-average and its superlevel sets.
//!
//! Every bound is reported as a [`NormCertificate`] carrying both sides of the
//! inequality and the full parameter tuple.

pub mod arith;
pub mod certificate;
pub mod commands;
pub mod continuum;
pub mod error;
pub mod expsums;
pub mod extremal;
pub mod fft;
pub mod grid;
pub mod lattice;
pub mod multiplier;
pub mod numeric;
pub mod operator;
pub mod oracle;
pub mod selftest;
pub mod stats;

pub use certificate::{CertParams, NormCertificate};
pub use error::{Error, Result};
pub use grid::GridFunction;
pub use lattice::SpherePointSet;
