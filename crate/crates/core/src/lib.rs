//! Aliquot cycles of elliptic curves over the rationals, exact
//! Hurwitz-Kronecker class numbers, and averages of the aliquot-cycle
//! counting function over the two-parameter family `y^2 = x^3 + ax + b`.

pub mod aliquot;
pub mod arith;
pub mod classnum;
pub mod conjectures;
pub mod curves;
pub mod error;
pub mod family;

pub use error::{Error, Result};
