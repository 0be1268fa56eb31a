//! Approximate closest-lattice-point decoding with the nearest-plane (Babai)
//! algorithm: decoding, error-probability geometry in two and three
//! dimensions, and the communication protocols that compute the Babai point
//! when the target's coordinates live on different network nodes.

pub mod babai;
pub mod error;
pub mod error2d;
pub mod error3d;
pub mod geometry;
pub mod io;
pub mod lattice;
pub mod protocol;
pub mod reduction;
pub mod rng;

pub use error::{LatticeError, Result};
