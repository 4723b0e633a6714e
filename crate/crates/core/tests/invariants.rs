use std::sync::Arc;

use proptest::prelude::*;
use ttgs_core::dataset::VertexSet;
use ttgs_core::distance::{
    per_step_penalty_to_distance, sparse_terminal_to_distance, DiscountFactor, Distance, DistancePredictor,
    Fingerprint, RewardConvention, ValueEstimate, DEFAULT_EPSILON_CLIP,
};
use ttgs_core::graph::{build_distance_matrix, penalized_weight, shortest_path, PlanningGraph};
use ttgs_core::planner::{select_from_distances, DecisionKind};
use ttgs_core::simenv::{generate_maze, Layout, OracleDistance, Preset, SyntheticValue};

/// All-pairs shortest paths by Floyd–Warshall, as an independent oracle.
fn floyd_warshall(m: usize, w: &[f64]) -> Vec<f64> {
    let mut d = w.to_vec();
    for i in 0..m {
        d[i * m + i] = 0.0;
    }
    for k in 0..m {
        for i in 0..m {
            for j in 0..m {
                let c = d[i * m + k] + d[k * m + j];
                if c < d[i * m + j] {
                    d[i * m + j] = c;
                }
            }
        }
    }
    d
}

fn graph_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2usize..12).prop_flat_map(|m| {
        let weight = prop_oneof![3 => (1u32..50).prop_map(f64::from), 1 => Just(f64::INFINITY)];
        (Just(m), proptest::collection::vec(weight, m * m))
    })
}

proptest! {
    #[test]
    fn transforms_are_finite_and_at_least_one(v in -1e6f64..1e6, gamma in 0.5f64..0.999) {
        let g = DiscountFactor::new(gamma).unwrap();
        let v = ValueEstimate::new(v).unwrap();
        for (d, _) in [
            per_step_penalty_to_distance(v, g, DEFAULT_EPSILON_CLIP),
            sparse_terminal_to_distance(v, g, DEFAULT_EPSILON_CLIP),
        ] {
            prop_assert!(d.get().is_finite());
            prop_assert!(d.get() >= 1.0);
        }
    }

    #[test]
    fn per_step_transform_is_monotone(a in -99.0f64..-0.01, b in -99.0f64..-0.01) {
        let g = DiscountFactor::new(0.99).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (d_lo, _) = per_step_penalty_to_distance(ValueEstimate::new(lo).unwrap(), g, DEFAULT_EPSILON_CLIP);
        let (d_hi, _) = per_step_penalty_to_distance(ValueEstimate::new(hi).unwrap(), g, DEFAULT_EPSILON_CLIP);
        // A more negative value means a longer path.
        prop_assert!(d_lo.get() >= d_hi.get());
    }

    #[test]
    fn penalty_is_identity_below_horizon_and_grows_above(d in 1.0f64..500.0, tau in 1.0f64..100.0) {
        let p = penalized_weight(d, tau);
        if d < tau {
            prop_assert_eq!(p, d);
        } else {
            prop_assert!(p >= d * 1000.0);
        }
    }

    #[test]
    fn dijkstra_matches_floyd_warshall((m, weights) in graph_strategy(), s in 0usize..12, t in 0usize..12) {
        let (s, t) = (s % m, t % m);
        let vertices = VertexSet::new((0..m).map(|i| vec![i as f32]).collect(), (0..m).map(|i| (0, i)).collect(), 0).unwrap();
        let graph = PlanningGraph::from_weights(vertices, weights, 1.0, Fingerprint::of(b"fw")).unwrap();
        let all = floyd_warshall(m, graph.weights());
        match shortest_path(&graph, s, t) {
            Ok(path) => {
                prop_assert_eq!(path.total_cost, all[s * m + t]);
                prop_assert_eq!(path.waypoint_indices.first(), Some(&s));
                prop_assert_eq!(path.waypoint_indices.last(), Some(&t));
                prop_assert_eq!(path.waypoint_states.len(), path.waypoint_indices.len());
            }
            Err(_) => prop_assert!(all[s * m + t].is_infinite()),
        }
    }

    #[test]
    fn selection_never_moves_backward(
        deltas in proptest::collection::vec(0.0f64..100.0, 1..20),
        delta_goal in 0.0f64..150.0,
        budget in 1.0f64..60.0,
        k_seed in 0usize..20,
    ) {
        let k_prev = k_seed % deltas.len();
        let s = select_from_distances(&deltas, delta_goal, budget, k_prev);
        prop_assert!(s.updated_k >= k_prev);
        if let Some(i) = s.chosen_index {
            prop_assert!(i > s.updated_k || i == deltas.len() - 1);
            if s.kind == DecisionKind::FarthestReachable {
                prop_assert!(deltas[i] <= budget);
            }
        }
        prop_assert_eq!(s.kind == DecisionKind::FinalGoal, delta_goal <= budget);
    }
}

#[test]
fn batch_matrix_equals_scalar_queries() {
    let oracle = OracleDistance::new(Arc::new(generate_maze(Layout::Preset(Preset::Medium)))).with_noise(0.1, true, 3);
    let gamma = DiscountFactor::new(0.99).unwrap();
    let value = SyntheticValue::new(oracle.clone(), RewardConvention::PerStepPenalty, gamma).unwrap();
    let predictor = DistancePredictor::per_step_penalty(0.99, Arc::new(value)).unwrap();
    let cells = &oracle.maze().free_cells()[..30];
    let vertices = VertexSet::new(
        cells.iter().map(|c| c.to_state()).collect(),
        (0..cells.len()).map(|i| (0, i)).collect(),
        0,
    )
    .unwrap();
    for batch in [1, 7, 64, 4096] {
        let matrix = build_distance_matrix(&predictor, &vertices, batch).unwrap();
        for i in 0..cells.len() {
            for j in 0..cells.len() {
                if i == j {
                    continue;
                }
                let scalar = predictor.distance(vertices.vertex(i), vertices.vertex(j)).unwrap();
                assert_eq!(matrix.get(i, j).to_bits(), scalar.to_bits(), "batch {batch} entry ({i}, {j})");
            }
        }
    }
}
