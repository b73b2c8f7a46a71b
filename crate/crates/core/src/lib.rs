//! Sharp Poincaré-type inequality for vector fields on the unit sphere.
//!
//! The crate builds the real vector spherical harmonic basis
//! `y⁽¹⁾ = Y n`, `y⁽²⁾ = ∇*Y / √n*`, `y⁽³⁾ = n × y⁽²⁾`, evaluates the
//! micromagnetic energy
//!
//! ```text
//! F_κ(u) = ∫ |∇*u|² + κ ∫ (u·n)²
//! ```
//!
//! both by quadrature and in coefficient space, and exposes the sharp constant
//! `γ(κ)` together with the complete family of fields attaining it.
//!
//! Module map:
//!
//! * [`legendre`]: associated Legendre functions and real scalar harmonics.
//! * [`grid`]: Gauss–Legendre × uniform-longitude quadrature, tangent frames and
//!   the scalar-harmonic analysis used as an independent energy oracle.
//! * [`vsh`]: vector harmonics, coefficient tables, synthesis and analysis.
//! * [`spectral`]: coefficient-space energies.
//! * [`sharp`]: closed-form `γ(κ)` and the equality family.
//! * [`eigensolver`]: block-diagonal numeric recovery of `γ(κ)`.
//! * [`flow`]: saturated-constraint Euler–Lagrange residual, second variation
//!   and projected gradient flow.
//! * [`par`]: sequential / rayon execution switch used by the batch routines.

// `!(x < y)` is used on purpose so that NaN lands on the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigensolver;
pub mod error;
pub mod flow;
pub mod grid;
pub mod legendre;
pub mod par;
pub mod sharp;
pub mod spectral;
pub mod vsh;

pub use error::{Error, Result};
pub use par::Execution;

/// Cartesian 3-vector used for field samples and frames.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Surface area of the unit sphere.
pub const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Laplace–Beltrami eigenvalue `n(n+1)` of degree-`n` harmonics.
#[inline]
pub fn n_star(n: usize) -> f64 {
    (n * (n + 1)) as f64
}
