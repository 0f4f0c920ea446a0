//! Numerical study of Frobenius manifolds near their caustics: polynomial potentials, the
//! caustic frame and Hertling invariant, formal and Levelt solutions of the deformed flat
//! connection, Stokes and connection matrices, and their constancy along caustic curves.

pub mod caustic;
pub mod error;
pub mod fixtures;
pub mod frobenius;
pub mod isocheck;
pub mod linalg;
pub mod monodromy;
pub mod poly;
pub mod series;
pub mod specfile;

pub use error::{Error, Result};
pub use frobenius::{FrobeniusManifold, ManifoldSpec};
pub use poly::MultiPoly;
