//! Configuration, evaluation protocol, sweeps, result tables and SVG
//! rendering on top of the maze testbed.

mod commands;
mod config;
mod report;
mod run;
pub mod stats;
mod svg;

use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::distance::DistanceError;
use crate::graph::GraphError;
use crate::planner::{ExternalError, PlanError};
use crate::simenv::SimError;

pub use commands::{
    cmd_build_graph, cmd_curve, cmd_eval, cmd_gen_dataset, cmd_sweep, cmd_viz, with_workers, BuildReport,
    EvalOutput, SweepOutput,
};
pub use config::{RunConfig, SamplingKind, SweepCell};
pub use report::{Comparison, EpisodeSummary, ResultTable, SweepRow, TableRow};
pub use run::{episode_seed, success_by_distance, CurvePoint, Experiment};
pub use svg::render_svg;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        precondition: bool,
        #[source]
        source: ExternalError,
    },
    #[error("task {task}, seed {seed}, episode {episode}: {source}")]
    Episode {
        task: usize,
        seed: usize,
        episode: usize,
        #[source]
        source: PlanError,
    },
    #[error("writing {path}: {source}", path = path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// 2 for configuration and precondition failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Stage { precondition: true, .. } => 2,
            _ => 1,
        }
    }
}

/// Whether a module error reflects bad inputs rather than a fault.
pub(crate) trait Precondition: std::error::Error + Send + Sync + Sized + 'static {
    fn is_precondition(&self) -> bool;

    fn at(self, stage: &'static str) -> HarnessError {
        HarnessError::Stage {
            stage,
            precondition: self.is_precondition(),
            source: Box::new(self),
        }
    }
}

impl Precondition for DistanceError {
    fn is_precondition(&self) -> bool {
        !matches!(self, DistanceError::NonFinite { .. } | DistanceError::Source(_))
    }
}

impl Precondition for DatasetError {
    fn is_precondition(&self) -> bool {
        !matches!(self, DatasetError::Distance(_))
    }
}

impl Precondition for GraphError {
    fn is_precondition(&self) -> bool {
        matches!(
            self,
            GraphError::InvalidParameter(_)
                | GraphError::Io { .. }
                | GraphError::Corrupt { .. }
                | GraphError::Version { .. }
                | GraphError::StaleFingerprint { .. }
        )
    }
}

impl Precondition for SimError {
    fn is_precondition(&self) -> bool {
        !matches!(self, SimError::NotACell(_))
    }
}

impl Precondition for PlanError {
    fn is_precondition(&self) -> bool {
        match self {
            PlanError::InvalidBudget(_) => true,
            PlanError::Graph(g) => g.is_precondition(),
            _ => false,
        }
    }
}
