//! Rationality certificates for operators built from free semicircular elements.
//!
//! The crate ties three views of a noncommutative series together: Hankel
//! ranks of coefficient tables, weighted automata `(λ, μ, γ)`, and commutators
//! with right annihilation operators on a truncated full Fock space.

pub mod expr;
pub mod fock;
pub mod hankel;
pub mod linalg;
pub mod pipeline;
pub mod realize;
pub mod scalar;
pub mod series;
pub mod sparse;
pub mod wfa;
pub mod word;

pub use expr::RationalExpr;
pub use scalar::Q;
pub use series::SeriesTable;
pub use wfa::LinearRepresentation;
pub use word::{Letter, Quotient, Word};
