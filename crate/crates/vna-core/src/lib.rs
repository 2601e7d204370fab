//! Numerical classification of the von Neumann algebra generated by the
//! self-adjoint commutant of a tuple of multiplication operators on the
//! Bergman space of a bounded domain.
//!
//! The pipeline: solve fibers of the symbol map numerically, compute the
//! monodromy action of loops on fiber points, partition fiber points into
//! equivalence classes of local inverses, decide which classes stay inside
//! the domain (admissibility), and cross-check the predicted dimension
//! against a truncated-matrix commutant computation on a graded monomial
//! basis.

pub mod bergman;
pub mod classify;
pub mod domain;
pub mod fiber;
pub mod monodromy;
pub mod poly;
pub mod registry;
pub mod report;
pub mod symbolic;

mod linalg;
mod rng;

pub use domain::{Domain, PointClass};
pub use poly::{parse_poly, Poly, PolyMap};

