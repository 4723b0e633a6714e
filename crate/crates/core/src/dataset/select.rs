//! Vertex selection: uniform sampling, the temporal-efficiency filter and
//! single-pass greedy clustering.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetError, TrajectoryDataset, VertexSet};
use crate::distance::Distance;

/// Default tolerance band for the temporal-efficiency filter.
pub const DEFAULT_FILTER_EPS: f64 = 0.005;

/// Assignments between medoid refreshes during clustering.
pub const DEFAULT_CLUSTER_BATCH: usize = 256;

/// Where filter candidates come from before scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateSource {
    /// Score every dataset state.
    All,
    /// Score a uniform presample of this many states.
    UniformPresample(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SamplingMethod {
    Uniform {
        m: usize,
    },
    FilterCluster {
        horizon: usize,
        eps: f64,
        radius: f64,
        update_every: usize,
        source: CandidateSource,
    },
}

/// Samples `m` distinct dataset positions uniformly without replacement.
///
/// Positions are drawn from the storage-order flattening of the dataset, so
/// the result depends only on the flattened contents, `m` and `seed`.
pub fn uniform_sample(
    dataset: &TrajectoryDataset,
    m: usize,
    seed: u64,
) -> Result<VertexSet, DatasetError> {
    VertexSet::from_positions(dataset, sample_positions(dataset, m, seed)?, seed)
}

fn sample_positions(
    dataset: &TrajectoryDataset,
    m: usize,
    seed: u64,
) -> Result<Vec<(usize, usize)>, DatasetError> {
    let total = dataset.num_states();
    if m == 0 {
        return Err(DatasetError::InvalidParameter("vertex count must be positive".into()));
    }
    if m > total {
        return Err(DatasetError::SampleTooLarge {
            requested: m,
            available: total,
        });
    }
    let mut starts = Vec::with_capacity(dataset.trajectories().len());
    let mut acc = 0;
    for t in dataset.trajectories() {
        starts.push(acc);
        acc += t.len();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, total, m)
        .into_iter()
        .map(|flat| {
            let traj = starts.partition_point(|&s| s <= flat) - 1;
            (traj, flat - starts[traj])
        })
        .collect())
}

/// Keeps positions `t` whose temporal efficiency `d̂(s_t, s_{t+h}) / h` lies
/// in `[1 − eps, 1 + eps]`. Positions without a successor `h` steps later in
/// the same trajectory are dropped.
pub fn temporal_efficiency_filter<D: Distance + ?Sized>(
    dataset: &TrajectoryDataset,
    predictor: &D,
    h: usize,
    eps: f64,
) -> Result<Vec<(usize, usize)>, DatasetError> {
    let positions: Vec<_> = dataset.positions().collect();
    filter_positions(dataset, &positions, predictor, h, eps)
}

fn filter_positions<D: Distance + ?Sized>(
    dataset: &TrajectoryDataset,
    positions: &[(usize, usize)],
    predictor: &D,
    h: usize,
    eps: f64,
) -> Result<Vec<(usize, usize)>, DatasetError> {
    if h == 0 {
        return Err(DatasetError::InvalidParameter("horizon must be at least 1".into()));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(DatasetError::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let eligible: Vec<(usize, usize)> = positions
        .iter()
        .copied()
        .filter(|&(i, t)| t + h < dataset.trajectories()[i].len())
        .collect();
    let mut kept = Vec::new();
    for chunk in eligible.chunks(1024) {
        let pairs: Vec<(&[f32], &[f32])> = chunk
            .iter()
            .map(|&(i, t)| (dataset.state(i, t), dataset.state(i, t + h)))
            .collect();
        let evals = predictor.evaluate_batch(&pairs)?;
        for (&pos, e) in chunk.iter().zip(evals) {
            let score = e.distance.get() / h as f64;
            if (1.0 - eps..=1.0 + eps).contains(&score) {
                kept.push(pos);
            }
        }
    }
    Ok(kept)
}

pub(crate) struct Clustering {
    /// Candidate index of each current center.
    pub centers: Vec<usize>,
    /// Candidate indices per cluster, in arrival order.
    pub members: Vec<Vec<usize>>,
    /// For every center creation: (candidate index, min distance to existing centers).
    pub created: Vec<(usize, f64)>,
}

pub(crate) fn cluster_candidates<D: Distance + ?Sized>(
    states: &[&[f32]],
    predictor: &D,
    radius: f64,
    update_every: usize,
) -> Result<Clustering, DatasetError> {
    if states.is_empty() {
        return Err(DatasetError::NoCandidates);
    }
    if radius.is_nan() || radius <= 0.0 {
        return Err(DatasetError::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    if update_every == 0 {
        return Err(DatasetError::InvalidParameter("update cadence must be positive".into()));
    }

    let mut c = Clustering {
        centers: vec![0],
        members: vec![vec![0]],
        created: vec![(0, f64::INFINITY)],
    };
    // sums[k][i]: total distance from member i of cluster k to its cluster mates.
    let mut sums: Vec<Vec<f64>> = vec![vec![0.0]];
    let mut dirty = vec![false];
    let mut assignments = 0usize;

    for x in 1..states.len() {
        let pairs: Vec<(&[f32], &[f32])> =
            c.centers.iter().map(|&v| (states[x], states[v])).collect();
        let dists = predictor.evaluate_batch(&pairs)?;
        let (nearest, m) = dists
            .iter()
            .map(|e| e.distance.get())
            .enumerate()
            .fold((0, f64::INFINITY), |best, (k, d)| if d < best.1 { (k, d) } else { best });

        if m > radius {
            c.centers.push(x);
            c.members.push(vec![x]);
            c.created.push((x, m));
            sums.push(vec![0.0]);
            dirty.push(false);
            continue;
        }

        let mates = &c.members[nearest];
        let to_x: Vec<(&[f32], &[f32])> = mates.iter().map(|&j| (states[j], states[x])).collect();
        let from_x: Vec<(&[f32], &[f32])> = mates.iter().map(|&j| (states[x], states[j])).collect();
        let to_x = predictor.evaluate_batch(&to_x)?;
        let from_x = predictor.evaluate_batch(&from_x)?;
        for (s, e) in sums[nearest].iter_mut().zip(&to_x) {
            *s += e.distance.get();
        }
        sums[nearest].push(from_x.iter().map(|e| e.distance.get()).sum());
        c.members[nearest].push(x);
        dirty[nearest] = true;

        assignments += 1;
        if assignments.is_multiple_of(update_every) {
            refresh_centers(&mut c, &sums, &mut dirty);
        }
    }
    refresh_centers(&mut c, &sums, &mut dirty);
    Ok(c)
}

fn refresh_centers(c: &mut Clustering, sums: &[Vec<f64>], dirty: &mut [bool]) {
    for k in 0..c.centers.len() {
        if !dirty[k] {
            continue;
        }
        let best = sums[k]
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, &s)| if s < best.1 { (i, s) } else { best });
        c.centers[k] = c.members[k][best.0];
        dirty[k] = false;
    }
}

/// Single-pass greedy clustering of `candidates` (dataset positions) with
/// radius `radius`. A candidate farther than `radius` from every current
/// center opens a new cluster; otherwise it joins its nearest center. Every
/// `update_every` assignments, and once at the end, each changed cluster's
/// center moves to its member with the least total distance to the others.
pub fn greedy_cluster<D: Distance + ?Sized>(
    dataset: &TrajectoryDataset,
    candidates: &[(usize, usize)],
    predictor: &D,
    radius: f64,
    update_every: usize,
    seed: u64,
) -> Result<VertexSet, DatasetError> {
    let states: Vec<&[f32]> = candidates.iter().map(|&(i, t)| dataset.state(i, t)).collect();
    let c = cluster_candidates(&states, predictor, radius, update_every)?;
    let positions = c.centers.iter().map(|&k| candidates[k]).collect();
    VertexSet::from_positions(dataset, positions, seed)
}

/// Runs the configured vertex-selection pipeline.
pub fn select_vertices<D: Distance + ?Sized>(
    dataset: &TrajectoryDataset,
    method: &SamplingMethod,
    predictor: &D,
    seed: u64,
) -> Result<VertexSet, DatasetError> {
    match *method {
        SamplingMethod::Uniform { m } => uniform_sample(dataset, m, seed),
        SamplingMethod::FilterCluster {
            horizon,
            eps,
            radius,
            update_every,
            source,
        } => {
            let positions: Vec<(usize, usize)> = match source {
                CandidateSource::All => dataset.positions().collect(),
                CandidateSource::UniformPresample(n) => {
                    let mut p = sample_positions(dataset, n, seed)?;
                    p.sort_unstable();
                    p
                }
            };
            let kept = filter_positions(dataset, &positions, predictor, horizon, eps)?;
            if kept.is_empty() {
                return Err(DatasetError::NoCandidates);
            }
            greedy_cluster(dataset, &kept, predictor, radius, update_every, seed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Trajectory;
    use crate::distance::{DistanceError, Evaluation, Fingerprint, StepDistance};

    /// |a − b| on the first coordinate.
    struct AbsDiff;

    impl Distance for AbsDiff {
        fn evaluate(&self, s: &[f32], g: &[f32]) -> Result<Evaluation, DistanceError> {
            Ok(Evaluation {
                distance: StepDistance::clamped(f64::from((s[0] - g[0]).abs())),
                clipped: false,
            })
        }
        fn fingerprint(&self) -> Fingerprint {
            Fingerprint::of(b"absdiff")
        }
    }

    fn line_dataset(lens: &[usize]) -> TrajectoryDataset {
        let mut next = 0.0;
        let trajs = lens
            .iter()
            .map(|&n| {
                let states = (0..n)
                    .map(|_| {
                        next += 1.0;
                        vec![next, 0.0]
                    })
                    .collect();
                Trajectory::new(states, true).unwrap()
            })
            .collect();
        TrajectoryDataset::new(trajs).unwrap()
    }

    #[test]
    fn exhaustive_sample_returns_every_state() {
        let ds = line_dataset(&[4, 6]);
        let vs = uniform_sample(&ds, 10, 3).unwrap();
        let mut got: Vec<f32> = vs.vertices().iter().map(|v| v[0]).collect();
        got.sort_by(f32::total_cmp);
        assert_eq!(got, (1..=10).map(|x| x as f32).collect::<Vec<_>>());
        for (v, &(i, t)) in vs.vertices().iter().zip(vs.provenance()) {
            assert_eq!(v.as_slice(), ds.state(i, t));
        }
    }

    #[test]
    fn sample_larger_than_dataset_fails() {
        let ds = line_dataset(&[10]);
        assert!(matches!(
            uniform_sample(&ds, 11, 0),
            Err(DatasetError::SampleTooLarge { requested: 11, available: 10 })
        ));
        assert!(uniform_sample(&ds, 0, 0).is_err());
    }

    #[test]
    fn large_sample_is_deterministic() {
        let ds = line_dataset(&[100; 100]);
        let a = uniform_sample(&ds, 4000, 42).unwrap();
        let b = uniform_sample(&ds, 4000, 42).unwrap();
        assert_eq!(a, b);
        let c = uniform_sample(&ds, 4000, 43).unwrap();
        assert_ne!(a, c);
        let mut seen = a.provenance().to_vec();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 4000, "sampling is without replacement");
    }

    #[test]
    fn sample_depends_only_on_flattening() {
        // Same flattened contents split into different trajectories.
        let a = line_dataset(&[30, 20, 50]);
        let b = line_dataset(&[10, 90]);
        let mut sa: Vec<f32> = uniform_sample(&a, 37, 9).unwrap().vertices().iter().map(|v| v[0]).collect();
        let mut sb: Vec<f32> = uniform_sample(&b, 37, 9).unwrap().vertices().iter().map(|v| v[0]).collect();
        sa.sort_by(f32::total_cmp);
        sb.sort_by(f32::total_cmp);
        assert_eq!(sa, sb);
    }

    #[test]
    fn filter_keeps_efficient_segments() {
        // Unit-speed motion along a line: every eligible index scores exactly 1.
        let ds = line_dataset(&[25, 5]);
        let kept = temporal_efficiency_filter(&ds, &AbsDiff, 10, DEFAULT_FILTER_EPS).unwrap();
        let expected: Vec<_> = (0..15).map(|t| (0, t)).collect();
        assert_eq!(kept, expected);
    }

    #[test]
    fn filter_drops_looping_segments() {
        // 0 1 2 3 4 3 2 1 0 1 2 3 4: s_0 → s_10 covers 2 units in 10 steps.
        let xs = [0, 1, 2, 3, 4, 3, 2, 1, 0, 1, 2, 3, 4];
        let states = xs.iter().map(|&x| vec![x as f32]).collect();
        let ds = TrajectoryDataset::new(vec![Trajectory::new(states, true).unwrap()]).unwrap();
        let kept = temporal_efficiency_filter(&ds, &AbsDiff, 10, DEFAULT_FILTER_EPS).unwrap();
        assert!(kept.is_empty());
        assert!(temporal_efficiency_filter(&ds, &AbsDiff, 0, 0.1).is_err());
        assert!(temporal_efficiency_filter(&ds, &AbsDiff, 1, 0.0).is_err());
    }

    #[test]
    fn one_clump_gives_one_center() {
        let states: Vec<Vec<f32>> = (0..20).map(|i| vec![10.0 + 0.1 * i as f32]).collect();
        let refs: Vec<&[f32]> = states.iter().map(Vec::as_slice).collect();
        let c = cluster_candidates(&refs, &AbsDiff, 5.0, DEFAULT_CLUSTER_BATCH).unwrap();
        assert_eq!(c.centers.len(), 1);
        assert_eq!(c.members[0].len(), 20);
    }

    #[test]
    fn two_clumps_give_two_centers() {
        let mut states: Vec<Vec<f32>> = Vec::new();
        for i in 0..30 {
            let base = if i % 2 == 0 { 0.0 } else { 100.0 };
            states.push(vec![base + (i % 7) as f32 * 0.5]);
        }
        let refs: Vec<&[f32]> = states.iter().map(Vec::as_slice).collect();
        let c = cluster_candidates(&refs, &AbsDiff, 10.0, 4).unwrap();
        assert_eq!(c.centers.len(), 2);
        for (k, members) in c.members.iter().enumerate() {
            let center = states[c.centers[k]][0];
            assert!(members.iter().all(|&m| (states[m][0] - center).abs() < 10.0));
        }
    }

    #[test]
    fn center_moves_to_medoid() {
        // First candidate sits at the edge of its cluster; the medoid is 3.
        let states: Vec<Vec<f32>> = [1.0, 2.0, 3.0, 4.0, 5.0].iter().map(|&x| vec![x]).collect();
        let refs: Vec<&[f32]> = states.iter().map(Vec::as_slice).collect();
        let c = cluster_candidates(&refs, &AbsDiff, 10.0, 256).unwrap();
        assert_eq!(c.centers, vec![2]);
    }

    #[test]
    fn select_filter_cluster_pipeline() {
        let ds = line_dataset(&[60]);
        let method = SamplingMethod::FilterCluster {
            horizon: 10,
            eps: DEFAULT_FILTER_EPS,
            radius: 5.0,
            update_every: DEFAULT_CLUSTER_BATCH,
            source: CandidateSource::All,
        };
        let a = select_vertices(&ds, &method, &AbsDiff, 1).unwrap();
        let b = select_vertices(&ds, &method, &AbsDiff, 1).unwrap();
        assert_eq!(a, b);
        // 50 eligible unit-spaced states, radius 5 → centers every 6 units.
        assert!(a.len() >= 8 && a.len() <= 9, "{}", a.len());

        let presampled = SamplingMethod::FilterCluster {
            horizon: 10,
            eps: DEFAULT_FILTER_EPS,
            radius: 5.0,
            update_every: DEFAULT_CLUSTER_BATCH,
            source: CandidateSource::UniformPresample(30),
        };
        let p = select_vertices(&ds, &presampled, &AbsDiff, 1).unwrap();
        assert!(p.len() <= a.len() + 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn centers_separated_at_creation(xs in proptest::collection::vec(0.0f32..200.0, 1..120),
                                             radius in 1.0f64..30.0,
                                             every in 1usize..20) {
                let states: Vec<Vec<f32>> = xs.iter().map(|&x| vec![x]).collect();
                let refs: Vec<&[f32]> = states.iter().map(Vec::as_slice).collect();
                let c = cluster_candidates(&refs, &AbsDiff, radius, every).unwrap();
                for &(_, m) in &c.created[1..] {
                    prop_assert!(m > radius);
                }
                let total: usize = c.members.iter().map(Vec::len).sum();
                prop_assert_eq!(total, xs.len());
                for (k, members) in c.members.iter().enumerate() {
                    prop_assert!(members.contains(&c.centers[k]));
                }
            }
        }
    }
}
