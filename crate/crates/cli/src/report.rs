//! Report serialization: JSON documents with stable key order (struct field
//! order) and CSV tables with a header row and LF line endings. Files are
//! written to a temporary sibling and renamed into place. Floating-point
//! values use the shortest representation that round-trips exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub fn ensure_dir(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), String> {
    let tmp: PathBuf = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| format!("cannot write {}: {e}", tmp.display()))?;
    fs::rename(&tmp, path).map_err(|e| format!("cannot move into {}: {e}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| format!("cannot serialize {}: {e}", path.display()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), String> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| format!("cannot serialize row for {}: {e}", path.display()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| format!("cannot flush {}: {e}", path.display()))?;
    write_atomic(path, &bytes)
}
