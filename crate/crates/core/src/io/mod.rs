//! File formats: binary pools, JSON selection and schedule documents,
//! JSON target maps and plain-text id sequences.

mod documents;
mod pool_file;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

pub use documents::{
    ScheduleFile, ScheduleFileStep, SelectionEntry, SelectionFile, SelectionFileMetrics, StageSeconds,
};
pub use pool_file::{
    decode_pool, encode_pool, parse_ids, read_pool, sidecar_path, write_pool, LoadedPool, FLAG_UNIT_NORMALIZED,
    HEADER_LEN, POOL_MAGIC, POOL_VERSION,
};

use crate::error::{HullftError, Result};

/// Writes `bytes` to a temp file next to `path`, then renames it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| HullftError::Io(e.error))?;
    Ok(())
}

/// Reads a plain-text sequence, one id per line; blank lines are skipped.
pub fn read_sequence(path: &Path) -> Result<Vec<String>> {
    Ok(fs::read_to_string(path)?
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// Reads a JSON object mapping example id to target vector.
pub fn read_targets(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| HullftError::format(format!("targets file {}: {e}", path.display())))
}
