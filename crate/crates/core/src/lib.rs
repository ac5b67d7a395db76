//! Locally constrained inverse mean curvature flow of axisymmetric spacelike
//! graphs in the upper branch of de Sitter space, with the geometric
//! functionals, integral identities and Gauss-map duality used to verify it.

pub mod axigraph;
pub mod duality;
pub mod error;
pub mod flowcore;
pub mod functionals;
pub mod quadrature;
pub mod shell;
pub mod spaceform;

pub use error::{Error, Result};
