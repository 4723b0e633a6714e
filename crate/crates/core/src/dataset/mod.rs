//! Offline trajectory datasets and graph-vertex selection.

mod io;
mod select;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::{BatchError, Fingerprint};

pub use io::{load_dataset, save_dataset_binary, save_dataset_text, BINARY_MAGIC, BINARY_VERSION};
pub use select::{
    greedy_cluster, select_vertices, temporal_efficiency_filter, uniform_sample, CandidateSource,
    SamplingMethod, DEFAULT_CLUSTER_BATCH, DEFAULT_FILTER_EPS,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: state dimension {found} does not match {expected}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("dataset is empty")]
    Empty,
    #[error("trajectory has no states")]
    EmptyTrajectory,
    #[error("binary dataset truncated or corrupt at byte {offset}: {message}")]
    Binary { offset: usize, message: String },
    #[error("requested {requested} vertices but the dataset holds only {available} states")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("invalid selection parameter: {0}")]
    InvalidParameter(String),
    #[error("no candidate states survived filtering")]
    NoCandidates,
    #[error("distance query failed: {0}")]
    Distance(#[from] BatchError),
}

/// One recorded trajectory. Actions are not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    states: Vec<Vec<f32>>,
    terminal: bool,
}

impl Trajectory {
    pub fn new(states: Vec<Vec<f32>>, terminal: bool) -> Result<Self, DatasetError> {
        let first = states.first().ok_or(DatasetError::EmptyTrajectory)?.len();
        if let Some(bad) = states.iter().find(|s| s.len() != first) {
            return Err(DatasetError::DimensionMismatch {
                line: 0,
                expected: first,
                found: bad.len(),
            });
        }
        Ok(Self { states, terminal })
    }

    pub fn states(&self) -> &[Vec<f32>] {
        &self.states
    }

    pub fn terminal(&self) -> bool {
        self.terminal
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset {
    trajectories: Vec<Trajectory>,
    state_dim: usize,
}

impl TrajectoryDataset {
    pub fn new(trajectories: Vec<Trajectory>) -> Result<Self, DatasetError> {
        let state_dim = trajectories.first().ok_or(DatasetError::Empty)?.dim();
        for (i, t) in trajectories.iter().enumerate() {
            if t.dim() != state_dim {
                return Err(DatasetError::DimensionMismatch {
                    line: i + 1,
                    expected: state_dim,
                    found: t.dim(),
                });
            }
        }
        Ok(Self {
            trajectories,
            state_dim,
        })
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn num_states(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn num_transitions(&self) -> usize {
        self.trajectories.iter().map(|t| t.len() - 1).sum()
    }

    pub fn state(&self, traj: usize, time: usize) -> &[f32] {
        &self.trajectories[traj].states[time]
    }

    /// All `(trajectory, time)` positions in storage order.
    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.trajectories
            .iter()
            .enumerate()
            .flat_map(|(i, t)| (0..t.len()).map(move |j| (i, j)))
    }

    /// Content hash over the binary encoding.
    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint::of(&io::encode_binary(self))
    }
}

/// Selected graph vertices together with where each came from.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexSet {
    vertices: Vec<Vec<f32>>,
    provenance: Vec<(usize, usize)>,
    seed: u64,
}

impl VertexSet {
    pub fn new(
        vertices: Vec<Vec<f32>>,
        provenance: Vec<(usize, usize)>,
        seed: u64,
    ) -> Result<Self, DatasetError> {
        if vertices.is_empty() {
            return Err(DatasetError::Empty);
        }
        if vertices.len() != provenance.len() {
            return Err(DatasetError::InvalidParameter(format!(
                "{} vertices but {} provenance entries",
                vertices.len(),
                provenance.len()
            )));
        }
        let dim = vertices[0].len();
        if let Some(v) = vertices.iter().find(|v| v.len() != dim) {
            return Err(DatasetError::DimensionMismatch {
                line: 0,
                expected: dim,
                found: v.len(),
            });
        }
        Ok(Self {
            vertices,
            provenance,
            seed,
        })
    }

    pub(crate) fn from_positions(
        dataset: &TrajectoryDataset,
        positions: Vec<(usize, usize)>,
        seed: u64,
    ) -> Result<Self, DatasetError> {
        let vertices = positions
            .iter()
            .map(|&(i, t)| dataset.state(i, t).to_vec())
            .collect();
        Self::new(vertices, positions, seed)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vec<f32>] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &[f32] {
        &self.vertices[i]
    }

    pub fn provenance(&self) -> &[(usize, usize)] {
        &self.provenance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn state_dim(&self) -> usize {
        self.vertices[0].len()
    }
}
