//! File formats, manifests and subcommands of the `auditsel` tool.

pub mod cli;
pub mod commands;
pub mod io;
pub mod manifest;

pub use auditsel_core as core;
