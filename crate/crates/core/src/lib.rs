//! Models for a magnetically levitated superconducting sphere in superfluid
//! ⁴He: helium media properties, damping channels, inductive position
//! detection, ring-down analysis and ³He concentration fitting.

pub mod constants;
pub mod damping;
pub mod detection;
pub mod error;
pub mod fitting;
pub mod format;
pub mod media;
pub mod ringdown;

pub use error::{Error, Result};
