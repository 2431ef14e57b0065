//! Command-line layer: JSON documents, exit-code mapping and subcommands.

pub mod commands;
pub mod documents;
pub mod error;
