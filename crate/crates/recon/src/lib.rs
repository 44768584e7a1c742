//! Experiment harness for consistent reconstruction: seeded parallel Monte
//! Carlo sweeps, CSV output, instance files, power-law fits and the `recon`
//! command-line tool.

pub mod cli;
pub mod config;
pub mod csv;
pub mod error;
pub mod fit;
pub mod instance_io;
pub mod sweep;

pub use recon_core;
