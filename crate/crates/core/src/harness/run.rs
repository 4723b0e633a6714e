use std::path::Path;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{RunConfig, SamplingKind, SweepCell};
use super::report::EpisodeSummary;
use super::stats::bootstrap_rate_interval;
use super::{HarnessError, Precondition};
use crate::dataset::{
    load_dataset, select_vertices, CandidateSource, SamplingMethod, TrajectoryDataset, VertexSet,
};
use crate::distance::{
    average_step_length, DiscountFactor, Distance, DistancePredictor, Fingerprint, PredictorConfig,
    RewardConvention,
};
use crate::graph::{build_distance_matrix, load_graph, save_graph, DistanceMatrix, PlanningGraph};
use crate::planner::{plan_episode, run_direct_episode, run_planned_episode, PlannerState, StepBudget};
use crate::simenv::{
    generate_dataset, generate_maze, Cell, Layout, MazeEnv, MazeGrid, OracleDistance, ReliabilityProfile,
    SyntheticPolicy, SyntheticValue,
};

/// Everything an evaluation needs except the graph: maze, oracle, dataset,
/// predictor, policy profile and tasks.
pub struct Experiment {
    config: RunConfig,
    maze: Arc<MazeGrid>,
    oracle: OracleDistance,
    dataset: TrajectoryDataset,
    predictor: DistancePredictor,
    profile: ReliabilityProfile,
    tasks: Vec<(Cell, Cell)>,
}

impl Experiment {
    pub fn prepare(config: &RunConfig) -> Result<Self, HarnessError> {
        let layout: Layout = config.maze.parse().map_err(|e: crate::simenv::SimError| e.at("maze"))?;
        let maze = Arc::new(generate_maze(layout));
        let oracle = OracleDistance::new(maze.clone());
        let dataset = if config.dataset.is_empty() {
            generate_dataset(&oracle, config.regime, config.n_transitions, config.dataset_seed)
                .map_err(|e| e.at("dataset"))?
        } else {
            load_dataset(&config.dataset).map_err(|e| e.at("dataset"))?
        };
        let predictor = build_predictor(config, &oracle, &dataset)?;
        let profile = ReliabilityProfile {
            r_near: config.r_near,
            d_reliable: config.d_reliable,
            r_far: config.r_far,
            d_max: config.d_max,
        };
        profile.validate().map_err(|e| e.at("policy"))?;
        let all = maze.tasks(&oracle);
        if config.n_tasks > all.len() {
            return Err(HarnessError::Config(format!(
                "n_tasks = {} but the maze defines {} tasks",
                config.n_tasks,
                all.len()
            )));
        }
        StepBudget::new(config.budget).map_err(|e| e.at("planner"))?;
        Ok(Self {
            config: config.clone(),
            maze,
            oracle,
            dataset,
            predictor,
            profile,
            tasks: all[..config.n_tasks].to_vec(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn maze(&self) -> &Arc<MazeGrid> {
        &self.maze
    }

    pub fn oracle(&self) -> &OracleDistance {
        &self.oracle
    }

    pub fn dataset(&self) -> &TrajectoryDataset {
        &self.dataset
    }

    pub fn predictor(&self) -> &DistancePredictor {
        &self.predictor
    }

    pub fn tasks(&self) -> &[(Cell, Cell)] {
        &self.tasks
    }

    fn sampling_method(&self, m: usize) -> SamplingMethod {
        let c = &self.config;
        match c.sampling {
            SamplingKind::Uniform => SamplingMethod::Uniform { m },
            SamplingKind::FilterCluster => SamplingMethod::FilterCluster {
                horizon: c.horizon,
                eps: c.filter_eps,
                radius: c.cluster_radius(),
                update_every: c.cluster_batch,
                source: match c.candidates {
                    0 => CandidateSource::All,
                    n => CandidateSource::UniformPresample(n),
                },
            },
        }
    }

    /// Identifies a graph: predictor, dataset, vertex selection and `τ`.
    pub fn graph_key(&self, m: usize, tau: f64) -> Fingerprint {
        let sampling = format!("{:?};seed={}", self.sampling_method(m), self.config.sample_seed);
        Fingerprint::combine(&[
            b"ttgs-graph",
            &self.predictor.fingerprint().0,
            &self.dataset.fingerprint().0,
            sampling.as_bytes(),
            &tau.to_le_bytes(),
        ])
    }

    pub fn vertices_and_matrix(&self, m: usize) -> Result<(VertexSet, DistanceMatrix), HarnessError> {
        let vertices = select_vertices(&self.dataset, &self.sampling_method(m), &self.predictor, self.config.sample_seed)
            .map_err(|e| e.at("sampling"))?;
        let matrix = build_distance_matrix(&self.predictor, &vertices, self.config.batch_size)
            .map_err(|e| e.at("distance matrix"))?;
        Ok((vertices, matrix))
    }

    pub fn graph_from_matrix(
        &self,
        vertices: VertexSet,
        matrix: &DistanceMatrix,
        cell: SweepCell,
    ) -> Result<PlanningGraph, HarnessError> {
        PlanningGraph::from_matrix(vertices, matrix, cell.tau, self.graph_key(cell.m, cell.tau))
            .map_err(|e| e.at("graph"))
    }

    /// Builds the graph for `cell`, or loads it from `graph_cache` when that
    /// file exists. A freshly built graph is written to `graph_cache`.
    pub fn graph(&self, cell: SweepCell) -> Result<PlanningGraph, HarnessError> {
        let cache = &self.config.graph_cache;
        let key = self.graph_key(cell.m, cell.tau);
        if !cache.is_empty() && Path::new(cache).exists() {
            return load_graph(cache, Some(&key)).map_err(|e| e.at("graph cache"));
        }
        let (vertices, matrix) = self.vertices_and_matrix(cell.m)?;
        let graph = self.graph_from_matrix(vertices, &matrix, cell)?;
        if !cache.is_empty() {
            save_graph(&graph, cache).map_err(|e| e.at("graph cache"))?;
        }
        Ok(graph)
    }

    fn policy(&self, seed: u64) -> SyntheticPolicy {
        SyntheticPolicy::new(self.profile, self.oracle.clone(), seed).expect("profile validated")
    }

    fn jobs(&self) -> Vec<(usize, usize, usize)> {
        let c = &self.config;
        let mut jobs = Vec::with_capacity(c.n_seeds * self.tasks.len() * c.rollouts);
        for seed in 0..c.n_seeds {
            for task in 0..self.tasks.len() {
                for rollout in 0..c.rollouts {
                    jobs.push((seed, task, rollout));
                }
            }
        }
        jobs
    }

    /// One-shot control: the policy sees the final goal at every step.
    pub fn run_base(&self) -> Result<Vec<EpisodeSummary>, HarnessError> {
        self.jobs()
            .into_par_iter()
            .map(|(seed, task, rollout)| {
                let (start, goal) = self.tasks[task];
                let mut env = MazeEnv::new(self.maze.clone(), start).expect("task start is free");
                let mut policy = self.policy(episode_seed(self.config.master_seed, seed, task, rollout));
                let record = run_direct_episode(&mut env, &mut policy, &goal.to_state(), self.config.max_steps)
                    .map_err(|source| HarnessError::Episode {
                        task,
                        seed,
                        episode: rollout,
                        source,
                    })?;
                Ok(EpisodeSummary::new("base", "base", (seed, task, rollout), &record, 0))
            })
            .collect()
    }

    /// Plans one guide path per task and runs every rollout along it.
    pub fn run_ttgs(&self, graph: &PlanningGraph, budget: f64, label: &str) -> Result<Vec<EpisodeSummary>, HarnessError> {
        let budget = StepBudget::new(budget).map_err(|e| e.at("planner"))?;
        let window = (self.config.window > 0).then_some(self.config.window);
        let plans: Vec<PlannerState> = self
            .tasks
            .iter()
            .map(|&(start, goal)| {
                plan_episode(graph, &self.predictor, &start.to_state(), &goal.to_state(), budget)
                    .map(|p| p.with_window(window))
                    .map_err(|e| e.at("plan"))
            })
            .collect::<Result<_, _>>()?;
        self.jobs()
            .into_par_iter()
            .map(|(seed, task, rollout)| {
                let (start, _) = self.tasks[task];
                let mut env = MazeEnv::new(self.maze.clone(), start).expect("task start is free");
                let mut policy = self.policy(episode_seed(self.config.master_seed, seed, task, rollout));
                let plan = plans[task].clone();
                let waypoints = plan.guide().len();
                let record = run_planned_episode(&mut env, &mut policy, plan, &self.predictor, self.config.max_steps)
                    .map_err(|source| HarnessError::Episode {
                        task,
                        seed,
                        episode: rollout,
                        source,
                    })?;
                Ok(EpisodeSummary::new(label, "ttgs", (seed, task, rollout), &record, waypoints))
            })
            .collect()
    }
}

fn build_predictor(
    config: &RunConfig,
    oracle: &OracleDistance,
    dataset: &TrajectoryDataset,
) -> Result<DistancePredictor, HarnessError> {
    let slice = config.slice()?;
    let gamma = DiscountFactor::new(config.gamma).map_err(|e| e.at("predictor"))?;
    if config.convention == RewardConvention::EuclideanNormalized {
        let slice = slice.unwrap_or(0..dataset.state_dim());
        let avg = average_step_length(dataset, slice.clone()).map_err(|e| e.at("predictor"))?;
        return DistancePredictor::new(
            PredictorConfig {
                convention: config.convention,
                gamma,
                epsilon_clip: config.epsilon_clip,
                position_slice: Some(slice),
                avg_step_length: Some(avg),
            },
            None,
        )
        .map_err(|e| e.at("predictor"));
    }
    if !(0.0..1.0).contains(&config.value_noise) {
        return Err(HarnessError::Config(format!(
            "value_noise must lie in [0, 1), got {}",
            config.value_noise
        )));
    }
    let noisy = oracle
        .clone()
        .with_noise(config.value_noise, config.value_asymmetric, config.value_seed);
    let source = SyntheticValue::new(noisy, config.convention, gamma).map_err(|e| e.at("predictor"))?;
    DistancePredictor::new(
        PredictorConfig {
            convention: config.convention,
            gamma,
            epsilon_clip: config.epsilon_clip,
            position_slice: slice,
            avg_step_length: None,
        },
        Some(Arc::new(source)),
    )
    .map_err(|e| e.at("predictor"))
}

/// Policy RNG seed for one episode. Base and TTGS share it, which pairs the
/// two conditions.
pub fn episode_seed(master: u64, seed: usize, task: usize, rollout: usize) -> u64 {
    let fp = Fingerprint::combine(&[
        b"episode",
        &master.to_le_bytes(),
        &(seed as u64).to_le_bytes(),
        &(task as u64).to_le_bytes(),
        &(rollout as u64).to_le_bytes(),
    ]);
    u64::from_le_bytes(fp.0[..8].try_into().expect("8 bytes"))
}

/// One-shot success at one goal distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: u32,
    pub rollouts: usize,
    pub successes: usize,
    pub rate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl CurvePoint {
    /// No point is significantly above its predecessor: each lower band edge
    /// stays at or below the previous upper edge.
    pub fn non_increasing_within_bands(points: &[CurvePoint]) -> bool {
        points.windows(2).all(|w| w[1].lo <= w[0].hi)
    }
}

/// One-shot success within `ceil(1.5 n)` steps for each goal distance `n`,
/// with start/goal pairs drawn uniformly among free-cell pairs exactly `n`
/// steps apart, and 95% bootstrap bands.
pub fn success_by_distance(
    oracle: &OracleDistance,
    profile: ReliabilityProfile,
    ns: &[u32],
    rollouts: usize,
    seed: u64,
    resamples: usize,
) -> Result<Vec<CurvePoint>, HarnessError> {
    profile.validate().map_err(|e| e.at("policy"))?;
    ns.iter()
        .map(|&n| {
            let pairs = oracle.pairs_at(n);
            if pairs.is_empty() {
                return Err(HarnessError::Config(format!("no free-cell pairs at distance {n}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(n).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let picks: Vec<(Cell, Cell)> = (0..rollouts).map(|_| *pairs.choose(&mut rng).expect("nonempty")).collect();
            let max_steps = (1.5 * f64::from(n)).ceil() as usize;
            let successes = picks
                .par_iter()
                .enumerate()
                .map(|(r, &(start, goal))| {
                    let mut env = MazeEnv::new(oracle.maze().clone(), start).expect("free cell");
                    let mut policy = SyntheticPolicy::new(profile, oracle.clone(), episode_seed(seed, n as usize, 0, r))
                        .expect("profile validated");
                    run_direct_episode(&mut env, &mut policy, &goal.to_state(), max_steps)
                        .map(|rec| usize::from(rec.success))
                        .map_err(|source| HarnessError::Episode {
                            task: n as usize,
                            seed: 0,
                            episode: r,
                            source,
                        })
                })
                .sum::<Result<usize, HarnessError>>()?;
            let (lo, hi) = bootstrap_rate_interval(successes, rollouts, 0.95, resamples, seed.wrapping_add(u64::from(n)));
            Ok(CurvePoint {
                n,
                rollouts,
                successes,
                rate: if rollouts == 0 { 0.0 } else { successes as f64 / rollouts as f64 },
                lo,
                hi,
            })
        })
        .collect()
}
