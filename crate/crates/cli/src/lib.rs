//! Pieces of the `pauliest` command-line harness.

pub mod commands;
pub mod config;
pub mod manifest;
