//! Numerical toolkit for projected-difference fractional seminorms on the
//! half-space and the whole space.

pub mod constants;
pub mod error;
pub mod extension;
pub mod field;
pub mod integrate;
pub mod params;
pub mod quad;
pub mod special;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use field::{DomainTag, FieldSpec, VectorField};
pub use params::FracParams;
