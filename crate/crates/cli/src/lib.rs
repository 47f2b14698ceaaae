//! Batch front end for the retkit pipeline: configuration, subcommands and
//! output files.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod units;
