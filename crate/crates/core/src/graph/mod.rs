//! Planning graph over sampled dataset states.
//!
//! The graph is complete and directed. Edge weights are predicted distances,
//! except that edges at or beyond the soft horizon `τ` pay a superlinear
//! penalty `p(x) = x · 1000^(x/τ)` and self-loops are removed (`+∞`).

mod cache;
mod search;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::VertexSet;
use crate::distance::{BatchError, Distance, DistanceError, Fingerprint};

pub use cache::{load_graph, save_graph, GRAPH_MAGIC, GRAPH_VERSION};
pub use search::{nearest_vertex_from, nearest_vertex_to, shortest_path, GuidePath};

/// Base of the penalty exponent.
pub const PENALTY_BASE: f64 = 1000.0;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("predictor failed on pair ({i}, {j}): {source}")]
    Predictor {
        i: usize,
        j: usize,
        #[source]
        source: DistanceError,
    },
    #[error("predictor failed on query: {0}")]
    Query(#[from] DistanceError),
    #[error("graph has no vertices")]
    Empty,
    #[error("vertex index {index} out of range for {m} vertices")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("no finite-weight path from vertex {from} to vertex {target}")]
    NoPath { from: usize, target: usize },
    #[error("invalid graph parameter: {0}")]
    InvalidParameter(String),
    #[error("graph cache I/O on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("graph cache corrupt at byte {offset}: {message}")]
    Corrupt { offset: usize, message: String },
    #[error("graph cache version {found} unsupported (expected {expected})")]
    Version { found: u8, expected: u8 },
    #[error("stale graph cache: fingerprint {found} does not match {expected}")]
    StaleFingerprint { found: String, expected: String },
}

/// Dense row-major matrix of predicted distances `D[i][j] = d̂(v_i, v_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    m: usize,
    entries: Vec<f64>,
    clipped: u64,
}

impl DistanceMatrix {
    /// Wraps precomputed entries; all must be finite and `≥ 1`.
    pub fn from_entries(m: usize, entries: Vec<f64>) -> Result<Self, GraphError> {
        if m == 0 {
            return Err(GraphError::Empty);
        }
        if entries.len() != m * m {
            return Err(GraphError::InvalidParameter(format!(
                "{} entries for a {m}×{m} matrix",
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|d| !(d.is_finite() && **d >= 1.0)) {
            return Err(GraphError::InvalidParameter(format!("invalid distance entry {bad}")));
        }
        Ok(Self {
            m,
            entries,
            clipped: 0,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Number of queries whose raw value was clipped into range.
    pub fn clipped_queries(&self) -> u64 {
        self.clipped
    }
}

/// Evaluates the predictor on every ordered vertex pair, `batch_size` pairs
/// per predictor call. Rows run in parallel; the result does not depend on
/// batching or scheduling.
pub fn build_distance_matrix<D: Distance + ?Sized>(
    predictor: &D,
    vertices: &VertexSet,
    batch_size: usize,
) -> Result<DistanceMatrix, GraphError> {
    if batch_size == 0 {
        return Err(GraphError::InvalidParameter("batch size must be positive".into()));
    }
    let m = vertices.len();
    let rows: Vec<(Vec<f64>, u64)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(m);
            let mut clipped = 0u64;
            let src = vertices.vertex(i);
            for start in (0..m).step_by(batch_size) {
                let end = (start + batch_size).min(m);
                let pairs: Vec<(&[f32], &[f32])> =
                    (start..end).map(|j| (src, vertices.vertex(j))).collect();
                let evals = predictor.evaluate_batch(&pairs).map_err(
                    |BatchError { index, source }| GraphError::Predictor {
                        i,
                        j: start + index,
                        source,
                    },
                )?;
                for e in evals {
                    clipped += u64::from(e.clipped);
                    row.push(e.distance.get());
                }
            }
            Ok((row, clipped))
        })
        .collect::<Result<_, GraphError>>()?;

    let mut entries = Vec::with_capacity(m * m);
    let mut clipped = 0;
    for (row, c) in rows {
        entries.extend(row);
        clipped += c;
    }
    Ok(DistanceMatrix {
        m,
        entries,
        clipped,
    })
}

/// Soft-horizon edge weight for an off-diagonal entry.
///
/// Below `tau` the distance is kept as is. From `tau` on it becomes
/// `x · 1000^(x/τ)`; when that exceeds the largest finite `f64` the edge gets
/// `+∞`.
pub fn penalized_weight(d: f64, tau: f64) -> f64 {
    if d < tau {
        return d;
    }
    let log_p = d.ln() + (d / tau) * PENALTY_BASE.ln();
    if log_p > f64::MAX.ln() {
        return f64::INFINITY;
    }
    d * PENALTY_BASE.powf(d / tau)
}

/// Penalized, directed, complete graph over the vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningGraph {
    vertices: VertexSet,
    weights: Vec<f64>,
    tau: f64,
    fingerprint: Fingerprint,
}

impl PlanningGraph {
    /// Applies the soft-horizon penalty to `matrix`.
    pub fn from_matrix(
        vertices: VertexSet,
        matrix: &DistanceMatrix,
        tau: f64,
        fingerprint: Fingerprint,
    ) -> Result<Self, GraphError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(GraphError::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        if vertices.len() != matrix.m() {
            return Err(GraphError::InvalidParameter(format!(
                "{} vertices for a {}×{} matrix",
                vertices.len(),
                matrix.m(),
                matrix.m()
            )));
        }
        Ok(Self {
            weights: apply_penalty(matrix, tau)?,
            vertices,
            tau,
            fingerprint,
        })
    }

    /// Builds a graph from explicit weights, e.g. for synthetic tests.
    /// Diagonal entries are forced to `+∞`.
    pub fn from_weights(
        vertices: VertexSet,
        mut weights: Vec<f64>,
        tau: f64,
        fingerprint: Fingerprint,
    ) -> Result<Self, GraphError> {
        let m = vertices.len();
        if weights.len() != m * m {
            return Err(GraphError::InvalidParameter(format!(
                "{} weights for {m} vertices",
                weights.len()
            )));
        }
        for i in 0..m {
            weights[i * m + i] = f64::INFINITY;
        }
        if let Some(w) = weights.iter().find(|w| w.is_nan() || **w < 1.0) {
            return Err(GraphError::InvalidParameter(format!("weight {w} below 1")));
        }
        Ok(Self {
            vertices,
            weights,
            tau,
            fingerprint,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &VertexSet {
        &self.vertices
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.len() + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.len();
        &self.weights[i * m..(i + 1) * m]
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }
}

/// Weight matrix `w̃` for `matrix` under horizon `tau`.
pub fn apply_penalty(matrix: &DistanceMatrix, tau: f64) -> Result<Vec<f64>, GraphError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(GraphError::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let m = matrix.m();
    Ok(matrix
        .entries()
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            if k / m == k % m {
                f64::INFINITY
            } else {
                penalized_weight(d, tau)
            }
        })
        .collect())
}
