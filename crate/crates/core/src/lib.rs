//! Continued-fraction synthesis and coarse verification of barycentric
//! limit sets along Teichmuller rays of a three-slit-torus surface.

pub mod cli;
pub mod coarse;
pub mod constructor;
pub mod contfrac;
pub mod error;
pub mod flatsurf;
pub mod numeric;
pub mod serde_num;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
