//! Configuration files, CSV output and experiment drivers for the `elastica`
//! solver; the `elastica` binary is a thin wrapper over this crate.

pub mod config;
pub mod csvout;
pub mod drive;
