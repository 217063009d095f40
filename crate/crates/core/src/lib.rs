//! Exact and numerical tools for exponential sums and the values they share
//! with their derivatives.

pub mod battery;
pub mod dsl;
pub mod expr;
pub mod expsum;
pub mod families;
pub mod laurent;
pub mod nevanlinna;
pub mod roots;
pub mod scalar;
pub mod sharing;

pub use dsl::{expsum_from_json, expsum_to_json, DslError};
pub use expsum::{ExpSum, NumericSum, Term};
pub use laurent::{LaurentError, LaurentPoly};
pub use scalar::{GaussRat, Mode, Scalar};
