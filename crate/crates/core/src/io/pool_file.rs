//! Binary pool files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "HFT1"
//! 4       4     version (u32) = 1
//! 8       4     K (u32)
//! 12      4     d (u32)
//! 16      4     flags (u32); bit 0 = rows are unit-normalized
//! 20      4Kd   f32 payload, row-major
//! ```
//!
//! Ids live in an optional UTF-8 sidecar, one per line. By default the
//! sidecar is the pool path with `.ids` appended.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{HullftError, Result};
use crate::geometry::{squared_norm, CandidatePool};
use crate::io::atomic_write;

pub const POOL_MAGIC: &[u8; 4] = b"HFT1";
pub const POOL_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;
pub const FLAG_UNIT_NORMALIZED: u32 = 1;

/// Rows count as unit-normalized within this distance of norm 1.
const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedPool {
    pub pool: CandidatePool,
    /// The normalization flag after verification.
    pub unit_normalized: bool,
    pub warnings: Vec<String>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".ids");
    PathBuf::from(s)
}

fn read_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4-byte slice"))
}

fn rows_are_unit(pool: &CandidatePool) -> Option<usize> {
    pool.rows().position(|r| (squared_norm(r).sqrt() - 1.0).abs() > UNIT_NORM_TOLERANCE)
}

/// Parses a pool from raw bytes plus optional ids.
pub fn decode_pool(bytes: &[u8], ids: Option<Vec<String>>) -> Result<LoadedPool> {
    if bytes.len() < HEADER_LEN {
        return Err(HullftError::format(format!(
            "truncated header: expected {HEADER_LEN} bytes, found {}",
            bytes.len()
        )));
    }
    if &bytes[0..4] != POOL_MAGIC {
        return Err(HullftError::format(format!("bad magic {:?}, expected \"HFT1\"", &bytes[0..4])));
    }
    let version = read_u32(bytes, 4);
    if version != POOL_VERSION {
        return Err(HullftError::format(format!("unsupported pool version {version}")));
    }
    let k = read_u32(bytes, 8) as usize;
    let d = read_u32(bytes, 12) as usize;
    let flags = read_u32(bytes, 16);
    if k == 0 || d == 0 {
        return Err(HullftError::format(format!("empty pool (K={k}, d={d})")));
    }
    let expected = k
        .checked_mul(d)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| HullftError::format(format!("payload size K*d*4 overflows (K={k}, d={d})")))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        let what = if payload.len() < expected { "truncated payload" } else { "trailing bytes after payload" };
        return Err(HullftError::format(format!(
            "{what}: expected {expected} bytes for K={k}, d={d}, found {}",
            payload.len()
        )));
    }

    let data: Vec<f64> =
        payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")) as f64).collect();
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(HullftError::format(format!("non-finite value at row {} column {}", pos / d, pos % d)));
    }
    let pool = CandidatePool::from_flat(data, d, ids).map_err(|e| match e {
        HullftError::Contract(msg) => HullftError::Format(msg),
        other => other,
    })?;

    let mut warnings = Vec::new();
    let mut unit_normalized = flags & FLAG_UNIT_NORMALIZED != 0;
    if unit_normalized {
        if let Some(row) = rows_are_unit(&pool) {
            warnings.push(format!(
                "normalization flag set but row {row} has norm {:.9}; flag cleared",
                squared_norm(pool.row(row)).sqrt()
            ));
            unit_normalized = false;
        }
    }
    Ok(LoadedPool { pool, unit_normalized, warnings })
}

pub fn parse_ids(text: &str) -> Vec<String> {
    text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect()
}

/// Reads a pool file. `ids_path` overrides the default sidecar; when neither
/// exists ids default to row numbers.
pub fn read_pool(path: &Path, ids_path: Option<&Path>) -> Result<LoadedPool> {
    let bytes = fs::read(path)?;
    let ids = match ids_path {
        Some(p) => Some(parse_ids(&fs::read_to_string(p)?)),
        None => {
            let side = sidecar_path(path);
            if side.exists() {
                Some(parse_ids(&fs::read_to_string(side)?))
            } else {
                None
            }
        }
    };
    decode_pool(&bytes, ids)
}

/// Serializes coordinates as f32; the unit flag is set when every row has
/// norm 1 within 1e-6.
pub fn encode_pool(pool: &CandidatePool) -> Result<Vec<u8>> {
    let k = u32::try_from(pool.len()).map_err(|_| HullftError::format("K does not fit in u32"))?;
    let d = u32::try_from(pool.dim()).map_err(|_| HullftError::format("d does not fit in u32"))?;
    let flags = if rows_are_unit(pool).is_none() { FLAG_UNIT_NORMALIZED } else { 0 };
    let mut out = Vec::with_capacity(HEADER_LEN + pool.as_flat().len() * 4);
    out.extend_from_slice(POOL_MAGIC);
    out.extend_from_slice(&POOL_VERSION.to_le_bytes());
    out.extend_from_slice(&k.to_le_bytes());
    out.extend_from_slice(&d.to_le_bytes());
    out.extend_from_slice(&flags.to_le_bytes());
    for &x in pool.as_flat() {
        out.extend_from_slice(&(x as f32).to_le_bytes());
    }
    Ok(out)
}

/// Writes the pool and its `.ids` sidecar, each via temp file and rename.
pub fn write_pool(pool: &CandidatePool, path: &Path) -> Result<()> {
    let bytes = encode_pool(pool)?;
    let mut ids = pool.ids().join("\n");
    ids.push('\n');
    atomic_write(path, &bytes)?;
    atomic_write(&sidecar_path(path), ids.as_bytes())
}
