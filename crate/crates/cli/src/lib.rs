//! Command implementations behind the `fcmm` binary.
//!
//! [`manifest`] turns config files and flags into a [`manifest::RunManifest`];
//! [`commands`] runs it and writes traces, memberships and summaries.

pub mod commands;
pub mod manifest;

pub use commands::{cmd_compare, cmd_run, cmd_validate};
pub use manifest::{DatasetSource, Overrides, RunManifest};
