use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::distance::RewardConvention;
use crate::simenv::Regime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingKind {
    Uniform,
    FilterCluster,
}

/// Flat run configuration. Every field has a default and can be set from a
/// TOML file or overridden on the command line as `--<field> <value>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Maze layout: `medium`, `large`, `giant` or `seed:<n>[:<w>x<h>]`.
    pub maze: String,
    /// Dataset file; when empty a dataset is generated in the maze.
    pub dataset: String,
    pub regime: Regime,
    pub n_transitions: usize,
    pub dataset_seed: u64,

    pub convention: RewardConvention,
    pub gamma: f64,
    pub epsilon_clip: f64,
    /// Position slice as `start:end`; empty means the whole state.
    pub position_slice: String,
    /// Multiplicative noise on the synthetic value source.
    pub value_noise: f64,
    pub value_asymmetric: bool,
    pub value_seed: u64,

    pub sampling: SamplingKind,
    pub m: usize,
    pub sample_seed: u64,
    pub horizon: usize,
    pub filter_eps: f64,
    /// Cluster radius; 0 means `horizon / 2`.
    pub radius: f64,
    pub cluster_batch: usize,
    /// Uniform presample size for filtering; 0 filters every state.
    pub candidates: usize,
    pub batch_size: usize,

    pub tau: f64,
    pub budget: f64,
    pub max_steps: usize,
    /// Waypoint look-ahead window; 0 disables windowing.
    pub window: usize,

    pub n_tasks: usize,
    pub rollouts: usize,
    pub n_seeds: usize,
    pub master_seed: u64,
    pub bootstrap: usize,

    pub r_near: f64,
    pub d_reliable: f64,
    pub r_far: f64,
    pub d_max: f64,

    /// Sweep cells as `tau:budget[:m]`, comma separated.
    pub sweep: String,
    /// Goal distances for the one-shot success curve, comma separated.
    pub curve_points: String,
    pub curve_rollouts: usize,
    /// Task whose start and goal are drawn by `viz`.
    pub viz_task: usize,
    pub out_dir: String,
    /// Graph cache file; empty means `<out_dir>/graph.ttgg` for
    /// `build-graph` and no caching for the other commands.
    pub graph_cache: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            maze: "giant".into(),
            dataset: String::new(),
            regime: Regime::Stitch,
            n_transitions: 200_000,
            dataset_seed: 1,
            convention: RewardConvention::PerStepPenalty,
            gamma: 0.99,
            epsilon_clip: crate::distance::DEFAULT_EPSILON_CLIP,
            position_slice: String::new(),
            value_noise: 0.1,
            value_asymmetric: true,
            value_seed: 7,
            sampling: SamplingKind::Uniform,
            m: 4000,
            sample_seed: 0,
            horizon: 10,
            filter_eps: crate::dataset::DEFAULT_FILTER_EPS,
            radius: 0.0,
            cluster_batch: crate::dataset::DEFAULT_CLUSTER_BATCH,
            candidates: 0,
            batch_size: 256,
            tau: 24.0,
            budget: 48.0,
            max_steps: 400,
            window: 0,
            n_tasks: 5,
            rollouts: 50,
            n_seeds: 8,
            master_seed: 0,
            bootstrap: 10_000,
            r_near: 0.97,
            d_reliable: 12.0,
            r_far: 0.25,
            d_max: 60.0,
            sweep: "12:24,24:24,24:48,24:96,48:96".into(),
            curve_points: "5,10,20,40,80".into(),
            curve_rollouts: 500,
            viz_task: 0,
            out_dir: "out".into(),
            graph_cache: String::new(),
        }
    }
}

/// One sweep grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    pub tau: f64,
    pub budget: f64,
    pub m: usize,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `(field, value)` overrides. Values are read as TOML literals;
    /// string-typed fields also accept bare text.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self, HarnessError> {
        let mut table = toml::Table::try_from(self).expect("config serializes");
        for (key, raw) in overrides {
            let key = key.replace('-', "_");
            let current = table
                .get(&key)
                .ok_or_else(|| HarnessError::Config(format!("unknown field `{key}`")))?;
            let literal = format!("v = {raw}")
                .parse::<toml::Table>()
                .ok()
                .and_then(|mut t| t.remove("v"));
            let value = match (current, literal) {
                (toml::Value::String(_), Some(v @ toml::Value::String(_))) => v,
                (toml::Value::String(_), _) | (_, None) => toml::Value::String(raw.clone()),
                (_, Some(v)) => v,
            };
            table.insert(key, value);
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))
    }

    pub fn sweep_cells(&self) -> Result<Vec<SweepCell>, HarnessError> {
        let bad = |s: &str| HarnessError::Config(format!("bad sweep cell {s:?}, expected tau:budget[:m]"));
        let cells: Vec<SweepCell> = self
            .sweep
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                let parts: Vec<&str> = s.split(':').collect();
                if !(2..=3).contains(&parts.len()) {
                    return Err(bad(s));
                }
                let tau = parts[0].parse().map_err(|_| bad(s))?;
                let budget = parts[1].parse().map_err(|_| bad(s))?;
                let m = match parts.get(2) {
                    Some(p) => p.parse().map_err(|_| bad(s))?,
                    None => self.m,
                };
                Ok(SweepCell { tau, budget, m })
            })
            .collect::<Result<_, _>>()?;
        if cells.is_empty() {
            return Err(HarnessError::Config("sweep grid is empty".into()));
        }
        Ok(cells)
    }

    pub fn curve_distances(&self) -> Result<Vec<u32>, HarnessError> {
        self.curve_points
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| HarnessError::Config(format!("bad curve distance {s:?}")))
            })
            .collect()
    }

    pub fn cell(&self) -> SweepCell {
        SweepCell {
            tau: self.tau,
            budget: self.budget,
            m: self.m,
        }
    }

    pub fn cluster_radius(&self) -> f64 {
        if self.radius > 0.0 {
            self.radius
        } else {
            self.horizon as f64 / 2.0
        }
    }

    pub fn slice(&self) -> Result<Option<std::ops::Range<usize>>, HarnessError> {
        if self.position_slice.is_empty() {
            return Ok(None);
        }
        let bad = || HarnessError::Config(format!("bad position_slice {:?}, expected start:end", self.position_slice));
        let (a, b) = self.position_slice.split_once(':').ok_or_else(bad)?;
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a >= b {
            return Err(bad());
        }
        Ok(Some(a..b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(RunConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn overrides_parse_types() {
        let c = RunConfig::default()
            .with_overrides(&[
                ("tau".into(), "12".into()),
                ("budget".into(), "24.5".into()),
                ("maze".into(), "medium".into()),
                ("dataset".into(), "7".into()),
                ("value-asymmetric".into(), "false".into()),
                ("regime".into(), "explore".into()),
                ("out_dir".into(), "/tmp/x y".into()),
            ])
            .unwrap();
        assert_eq!(c.tau, 12.0);
        assert_eq!(c.budget, 24.5);
        assert_eq!(c.maze, "medium");
        assert_eq!(c.dataset, "7");
        assert!(!c.value_asymmetric);
        assert_eq!(c.regime, Regime::Explore);
        assert_eq!(c.out_dir, "/tmp/x y");
    }

    #[test]
    fn bad_overrides_are_config_errors() {
        let c = RunConfig::default();
        assert!(matches!(
            c.with_overrides(&[("nope".into(), "1".into())]),
            Err(HarnessError::Config(_))
        ));
        assert!(matches!(
            c.with_overrides(&[("m".into(), "many".into())]),
            Err(HarnessError::Config(_))
        ));
        assert!(RunConfig::from_toml("tau = 1\nbogus = 2").is_err());
    }

    #[test]
    fn sweep_grid_parsing() {
        let c = RunConfig::default();
        let cells = c.sweep_cells().unwrap();
        assert_eq!(cells.len(), 5);
        assert_eq!(cells[0], SweepCell { tau: 12.0, budget: 24.0, m: 4000 });
        let c = c.with_overrides(&[("sweep".into(), "8:16:500".into())]).unwrap();
        assert_eq!(c.sweep_cells().unwrap(), vec![SweepCell { tau: 8.0, budget: 16.0, m: 500 }]);
        let c = c.with_overrides(&[("sweep".into(), "\"\"".into())]).unwrap();
        assert!(c.sweep_cells().is_err());
    }

    #[test]
    fn slice_parsing() {
        let mut c = RunConfig::default();
        assert_eq!(c.slice().unwrap(), None);
        c.position_slice = "0:2".into();
        assert_eq!(c.slice().unwrap(), Some(0..2));
        c.position_slice = "2:2".into();
        assert!(c.slice().is_err());
    }
}
