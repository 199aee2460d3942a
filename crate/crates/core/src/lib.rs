//! Numerical laboratory for maximum-modulus estimates of the backward heat
//! equation `∂_t u + Δu + b·Du = -f`, `u(T, ·) = 0`, with singular drift.
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the aliases below fix it to `f64`, which is what the
//! experiment harness uses.

pub mod counterexamples;
pub mod error;
pub mod fields;
pub mod kernels;
pub mod morrey;
pub mod pde;
pub mod quadrature;
pub mod scalar;
pub mod sde;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid64 = fields::Grid<f64>;
pub type ScalarField64 = fields::ScalarField<f64>;
pub type VectorField64 = fields::VectorField<f64>;
pub type MixedNormSpec64 = fields::MixedNormSpec<f64>;

pub type Grid32 = fields::Grid<f32>;
pub type ScalarField32 = fields::ScalarField<f32>;
pub type VectorField32 = fields::VectorField<f32>;
