//! Symbolic-numeric free probability: exact non-commutative polynomial
//! calculus (free difference quotients, cyclic gradients, conjugate
//! variables), exact semicircular traces, truncated realizations of the free
//! Laplacian, curvature certificates, and the Obata rigidity pipeline.

pub mod calculus;
pub mod curvature;
pub mod eigen;
pub mod error;
pub mod exact;
pub mod mc_oracle;
pub mod ncpoly;
pub mod rational;
pub mod rigidity;
pub mod spectral;
pub mod state;

pub use error::{Error, Result};
pub use ncpoly::{NcPoly, TensorPoly2, TensorPoly3, Word};
pub use rational::Rational;
