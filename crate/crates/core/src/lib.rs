//! Spectral toolkit for Hill operators `-d^2/dx^2 + q` with rough periodic
//! potentials.

pub mod birkhoff;
pub mod error;
pub mod galerkin;
pub mod kdv;
pub mod operator;
pub mod phase;
pub mod reduction;
pub mod seq;

pub use error::{HillError, Result};
pub use operator::{BoundaryCondition, Potential};
pub use seq::{FourierSeq, Weight};
