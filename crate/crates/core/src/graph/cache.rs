//! Graph cache file.
//!
//! Layout (little-endian): `TTGG`, version `u8`, `M: u32`, `τ: f64`,
//! fingerprint `[u8; 32]`, `state_dim: u32`, sampling seed `u64`, vertex
//! states `M × state_dim` `f32`, provenance `M × (u32, u32)`, weights
//! `M × M` `f64` (row-major, `+∞` as the IEEE infinity pattern).

use std::fs;
use std::path::Path;

use super::{GraphError, PlanningGraph};
use crate::codec::{put_f32s, put_u32, Reader, Truncated};
use crate::dataset::VertexSet;
use crate::distance::Fingerprint;

pub const GRAPH_MAGIC: &[u8; 4] = b"TTGG";
pub const GRAPH_VERSION: u8 = 1;

pub(crate) fn encode(graph: &PlanningGraph) -> Vec<u8> {
    let m = graph.len();
    let dim = graph.vertices().state_dim();
    let mut out = Vec::with_capacity(64 + m * dim * 4 + m * 8 + m * m * 8);
    out.extend_from_slice(GRAPH_MAGIC);
    out.push(GRAPH_VERSION);
    put_u32(&mut out, m as u32);
    out.extend_from_slice(&graph.tau().to_le_bytes());
    out.extend_from_slice(&graph.fingerprint().0);
    put_u32(&mut out, dim as u32);
    out.extend_from_slice(&graph.vertices().seed().to_le_bytes());
    for v in graph.vertices().vertices() {
        put_f32s(&mut out, v);
    }
    for &(i, t) in graph.vertices().provenance() {
        put_u32(&mut out, i as u32);
        put_u32(&mut out, t as u32);
    }
    for w in graph.weights() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn save_graph(graph: &PlanningGraph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let path = path.as_ref();
    fs::write(path, encode(graph)).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a cached graph. With `expected` set, a different stored
/// fingerprint is rejected as stale.
pub fn load_graph(
    path: impl AsRef<Path>,
    expected: Option<&Fingerprint>,
) -> Result<PlanningGraph, GraphError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode(&bytes, expected)
}

fn corrupt(t: Truncated) -> GraphError {
    GraphError::Corrupt {
        offset: t.offset,
        message: t.message,
    }
}

pub(crate) fn decode(bytes: &[u8], expected: Option<&Fingerprint>) -> Result<PlanningGraph, GraphError> {
    let mut r = Reader::new(bytes);
    if r.take(4, "magic").map_err(corrupt)? != GRAPH_MAGIC {
        return Err(GraphError::Corrupt {
            offset: 0,
            message: "bad magic".into(),
        });
    }
    let version = r.u8("version").map_err(corrupt)?;
    if version != GRAPH_VERSION {
        return Err(GraphError::Version {
            found: version,
            expected: GRAPH_VERSION,
        });
    }
    let m = r.u32("vertex count").map_err(corrupt)? as usize;
    let tau = r.f64("tau").map_err(corrupt)?;
    let fp = Fingerprint(r.take(32, "fingerprint").map_err(corrupt)?.try_into().unwrap());
    if let Some(exp) = expected {
        if *exp != fp {
            return Err(GraphError::StaleFingerprint {
                found: fp.to_hex(),
                expected: exp.to_hex(),
            });
        }
    }
    let dim = r.u32("state dimension").map_err(corrupt)? as usize;
    let seed = r.u64("seed").map_err(corrupt)?;
    if m == 0 || dim == 0 {
        return Err(GraphError::Corrupt {
            offset: r.offset(),
            message: format!("empty graph (M = {m}, dim = {dim})"),
        });
    }
    let flat = r.f32_vec(m * dim, "vertex states").map_err(corrupt)?;
    let mut provenance = Vec::with_capacity(m);
    for _ in 0..m {
        let i = r.u32("provenance").map_err(corrupt)? as usize;
        let t = r.u32("provenance").map_err(corrupt)? as usize;
        provenance.push((i, t));
    }
    let weights = r.f64_vec(m * m, "weights").map_err(corrupt)?;
    if r.remaining() != 0 {
        return Err(GraphError::Corrupt {
            offset: r.offset(),
            message: format!("{} trailing bytes", r.remaining()),
        });
    }
    let vertices = VertexSet::new(flat.chunks_exact(dim).map(<[f32]>::to_vec).collect(), provenance, seed)
        .map_err(|e| GraphError::Corrupt {
            offset: 0,
            message: e.to_string(),
        })?;
    Ok(PlanningGraph {
        vertices,
        weights,
        tau,
        fingerprint: fp,
    })
}
