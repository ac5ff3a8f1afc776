//! Experiment orchestration for the morpho phototaxis study: configuration,
//! output formats, manifests and the subcommands behind the `morpho` binary.

pub mod commands;
pub mod config;
pub mod formats;
pub mod manifest;
