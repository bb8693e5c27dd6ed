pub mod engine;
pub mod error;
pub mod events;
pub mod harmonic;
pub mod lab;
pub mod kernel;
pub mod lattice;
pub mod martingale;
pub mod rng;

pub use error::{Error, Result};
pub use lattice::{Dihedral, Direction, LatticePoint};
