//! Discrete maze testbed: layouts, exact BFS distances, offline dataset
//! generators, a synthetic distance-limited policy and closed-form values.

mod datagen;
mod maze;
mod oracle;
mod policy;
mod value;

use thiserror::Error;

use crate::dataset::DatasetError;

pub use datagen::{expert_rollout, generate_dataset, Regime, EXPERT_NOISE, EXPLORE_LENGTH, STITCH_CAP};
pub use maze::{generate_maze, recursive_division, Action, Cell, Layout, MazeGrid, Preset};
pub use oracle::OracleDistance;
pub use policy::{MazeEnv, ReliabilityProfile, SyntheticPolicy};
pub use value::SyntheticValue;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("maze layout: {0}")]
    Layout(String),
    #[error("invalid reliability profile {0}")]
    Profile(String),
    #[error("state {0:?} is not a free maze cell")]
    NotACell(Vec<f32>),
    #[error("{0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
