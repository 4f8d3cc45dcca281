//! Identification of piecewise-constant Lamé parameters from a local
//! Dirichlet-to-Neumann map.

pub mod error;
pub mod fem;
pub mod geometry;
pub mod inverse;
pub mod lame;
pub mod quadrature;
pub mod rongved;
pub mod ucp;

pub use error::{Error, Result};
