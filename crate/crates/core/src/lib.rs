//! Algebra of covariant-derivative K\u{e4}hler tensors for almost
//! para-Hermitian and almost pseudo-Hermitian structures of arbitrary
//! admissible signature: the constrained tensor space, its four-part
//! orthogonal decomposition and 16-class classifier, the quadratic
//! invariants, the algebraic realization maps, and a finite-difference
//! differential-geometry engine that cross-validates the pointwise
//! realizability statements.

pub mod error;
pub mod geometry;
pub mod hspace;
pub mod invariants;
pub mod job;
pub mod realize;
pub mod space;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use space::{HermitianSpace, Kind};
pub use tensor::{EndoOneForm, Tensor3};
