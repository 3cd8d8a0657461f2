//! Library surface of the command-line front end: configuration parsing,
//! report rendering, and the command implementations, exposed so integration
//! tests can drive them without spawning processes.

pub mod commands;
pub mod config;
pub mod report;
