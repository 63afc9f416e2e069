pub mod algebra;
pub mod arith;
pub mod cli;
pub mod counting;
pub mod curve;
pub mod error;
pub mod galois;
pub mod gf;
pub mod invariants;
pub mod livne;
pub mod newform;
pub mod quadfield;
pub mod residue;
pub mod shimura;

pub use error::{Error, Result};
