//! Exact laboratory for the Sato Grassmannian of a `C((z))`-algebra with a
//! prime-order automorphism.
//!
//! Scalars live in the cyclotomic field `Q(xi_p)`; flow parameters live in
//! truncated jet rings; subspaces are windowed echelon frames.

pub mod baker;
pub mod cli;
pub mod error;
pub mod flows;
pub mod grass;
pub mod jets;
pub mod krichever;
pub mod linalg;
pub mod scalars;
pub mod series;
pub mod vseries;

pub use error::{Error, Result};
pub use scalars::{Coeff, Cyclo, Rat};
