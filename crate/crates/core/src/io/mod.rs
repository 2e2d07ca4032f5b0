//! Run configuration, field snapshots and export.

mod config;
mod run;
mod snapshot;
mod vtk;

pub use config::{config_schema, RheologySource, SimConfig, Timing};
pub use run::{execute, prepare, PreparedRun};
pub use snapshot::{FieldSnapshot, SiteRecord, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use vtk::{export_vtk, write_fields_vtk, write_wss_vtk};

use crate::error::Result;
use serde::Serialize;
use std::path::Path;

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}
