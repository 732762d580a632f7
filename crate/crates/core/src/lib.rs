//! Covering families over `Z_p`: constructions, exhaustive verification,
//! and the product-dimension and prophet-inequality consequences.
//!
//! A family of distinct vectors in `Z_p^ell` is `S`-covering when every
//! ordered pair of distinct members realizes every element of `S` as a
//! coordinatewise difference.

pub mod balanced;
pub mod bounds;
pub mod certify;
pub mod constructions;
pub mod error;
pub mod family;
pub mod prophet;
pub mod zp;

pub use error::{Error, Result};
pub use family::{CoverSet, CoverageReport, CoveringFamily, MemoryBudget};
pub use zp::PrimeModulus;
