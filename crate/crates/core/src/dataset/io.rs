//! Dataset files.
//!
//! Text: one trajectory per line, `{"states": [[f, ...], ...], "terminal": bool}`.
//! Blank lines are skipped.
//!
//! Binary: `TTGS`, version byte, then little-endian `u32` trajectory count and
//! `u32` state dimension, followed per trajectory by a `u32` length, a `u8`
//! terminal flag and `length × dim` packed `f32` values.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::{DatasetError, Trajectory, TrajectoryDataset};
use crate::codec::{put_f32s, put_u32, Reader};

pub const BINARY_MAGIC: &[u8; 4] = b"TTGS";
pub const BINARY_VERSION: u8 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    states: Vec<Vec<f32>>,
    terminal: bool,
}

/// Loads a dataset, choosing the binary or text decoder by magic bytes.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<TrajectoryDataset, DatasetError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if bytes.starts_with(BINARY_MAGIC) {
        decode_binary(&bytes)
    } else {
        let text = std::str::from_utf8(&bytes).map_err(|e| DatasetError::Malformed {
            line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
            message: "invalid UTF-8".into(),
        })?;
        decode_text(text)
    }
}

fn decode_text(text: &str) -> Result<TrajectoryDataset, DatasetError> {
    let mut trajectories = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(line).map_err(|e| DatasetError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if rec.states.is_empty() {
            return Err(DatasetError::Malformed {
                line: line_no,
                message: "trajectory has no states".into(),
            });
        }
        let expected = *dim.get_or_insert(rec.states[0].len());
        if expected == 0 {
            return Err(DatasetError::Malformed {
                line: line_no,
                message: "zero-dimensional state".into(),
            });
        }
        if let Some(bad) = rec.states.iter().find(|s| s.len() != expected) {
            return Err(DatasetError::DimensionMismatch {
                line: line_no,
                expected,
                found: bad.len(),
            });
        }
        if rec.states.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DatasetError::Malformed {
                line: line_no,
                message: "non-finite state value".into(),
            });
        }
        trajectories.push(Trajectory::new(rec.states, rec.terminal)?);
    }
    TrajectoryDataset::new(trajectories)
}

fn decode_binary(bytes: &[u8]) -> Result<TrajectoryDataset, DatasetError> {
    let corrupt = |t: crate::codec::Truncated| DatasetError::Binary {
        offset: t.offset,
        message: t.message,
    };
    let mut r = Reader::new(bytes);
    r.take(4, "magic").map_err(corrupt)?;
    let version = r.u8("version").map_err(corrupt)?;
    if version != BINARY_VERSION {
        return Err(DatasetError::Binary {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let n = r.u32("trajectory count").map_err(corrupt)? as usize;
    let dim = r.u32("state dimension").map_err(corrupt)? as usize;
    if dim == 0 {
        return Err(DatasetError::Binary {
            offset: 9,
            message: "zero state dimension".into(),
        });
    }
    let mut trajectories = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let at = r.offset();
        let len = r.u32("trajectory length").map_err(corrupt)? as usize;
        if len == 0 {
            return Err(DatasetError::Binary {
                offset: at,
                message: "empty trajectory".into(),
            });
        }
        let terminal = match r.u8("terminal flag").map_err(corrupt)? {
            0 => false,
            1 => true,
            other => {
                return Err(DatasetError::Binary {
                    offset: at + 4,
                    message: format!("terminal flag {other}"),
                })
            }
        };
        let flat = r.f32_vec(len * dim, "states").map_err(corrupt)?;
        let states = flat.chunks_exact(dim).map(<[f32]>::to_vec).collect();
        trajectories.push(Trajectory::new(states, terminal)?);
    }
    if r.remaining() != 0 {
        return Err(DatasetError::Binary {
            offset: r.offset(),
            message: format!("{} trailing bytes", r.remaining()),
        });
    }
    TrajectoryDataset::new(trajectories)
}

pub(crate) fn encode_binary(ds: &TrajectoryDataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + ds.num_states() * ds.state_dim() * 4);
    out.extend_from_slice(BINARY_MAGIC);
    out.push(BINARY_VERSION);
    put_u32(&mut out, ds.trajectories().len() as u32);
    put_u32(&mut out, ds.state_dim() as u32);
    for t in ds.trajectories() {
        put_u32(&mut out, t.len() as u32);
        out.push(u8::from(t.terminal()));
        for s in t.states() {
            put_f32s(&mut out, s);
        }
    }
    out
}

pub fn save_dataset_binary(ds: &TrajectoryDataset, path: impl AsRef<Path>) -> std::io::Result<()> {
    fs::write(path, encode_binary(ds))
}

pub fn save_dataset_text(ds: &TrajectoryDataset, path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut out = String::new();
    for t in ds.trajectories() {
        let line = serde_json::json!({ "states": t.states(), "terminal": t.terminal() });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    fs::write(path, out)
}
