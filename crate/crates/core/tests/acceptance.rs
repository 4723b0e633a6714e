//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Pass numbers as arguments to run a subset, e.g.
//! `cargo test -p ttgs-core --test acceptance -- 1 5`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttgs_core::dataset::VertexSet;
use ttgs_core::distance::{
    per_step_penalty_to_distance, sparse_terminal_to_distance, DiscountFactor, Distance, DistancePredictor,
    Fingerprint, RewardConvention, ValueEstimate, DEFAULT_EPSILON_CLIP,
};
use ttgs_core::graph::{apply_penalty, penalized_weight, shortest_path, DistanceMatrix, PlanningGraph};
use ttgs_core::harness::{self, CurvePoint, RunConfig};
use ttgs_core::planner::{select_from_distances, DecisionKind};
use ttgs_core::simenv::{generate_maze, Layout, OracleDistance, Preset, SyntheticValue};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: u64) -> (bool, String) {
    (elapsed.as_secs_f64() < limit_s as f64, format!("{:.2} s (limit {limit_s} s)", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------------------
// 1. Transform round-trips

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let eps = DEFAULT_EPSILON_CLIP;
    let mut failures: BTreeMap<(&str, u32), (usize, u32)> = BTreeMap::new();
    let mut total = 0;
    for gamma in [0.9, 0.99, 0.995] {
        let g = DiscountFactor::new(gamma).unwrap();
        for d in 1..=500u32 {
            let df = f64::from(d);
            let per_step = -(1.0 - gamma.powi(d as i32)) / (1.0 - gamma);
            let sparse = gamma.powi(d as i32);
            let (a, _) = per_step_penalty_to_distance(ValueEstimate::new(per_step).unwrap(), g, eps);
            let (b, _) = sparse_terminal_to_distance(ValueEstimate::new(sparse).unwrap(), g, eps);
            for (name, got) in [("per-step", a.get()), ("sparse", b.get())] {
                total += 1;
                if (got - df).abs() / df >= 1e-6 {
                    let key = (name, (gamma * 1000.0) as u32);
                    let e = failures.entry(key).or_insert((0, d));
                    e.0 += 1;
                }
            }
        }
    }
    let (fast, time) = within(start.elapsed(), 1);
    let mut detail = format!("{} of {total} (gamma, d) cases recovered within 1e-6", total - failures.values().map(|v| v.0).sum::<usize>());
    for ((name, g), (count, first)) in &failures {
        detail.push_str(&format!(
            "; {name} gamma=0.{g}: {count} failures from d={first}"
        ));
    }
    detail.push_str(&format!("; {time}"));
    outcome(failures.is_empty() && fast, detail)
}

// ---------------------------------------------------------------------------
// 2. Clipping conformance

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    for gamma in [0.9, 0.99, 0.995] {
        let g = DiscountFactor::new(gamma).unwrap();
        let floor = -1.0 / (1.0 - gamma);
        for v in [floor, floor - 1e-9, floor * 2.0, -1e12] {
            let (d, clipped) = per_step_penalty_to_distance(ValueEstimate::new(v).unwrap(), g, DEFAULT_EPSILON_CLIP);
            ok &= d.get().is_finite() && clipped;
        }
    }
    let (d, _) = per_step_penalty_to_distance(
        ValueEstimate::new(-200.0).unwrap(),
        DiscountFactor::new(0.99).unwrap(),
        DEFAULT_EPSILON_CLIP,
    );
    // At the clip boundary 1 + (1 − γ)·v = (1 − γ)·ε, so d = ln((1 − γ)ε) / ln γ.
    let oracle = ((1.0 - 0.99) * DEFAULT_EPSILON_CLIP).ln() / 0.99f64.ln();
    let close = (d.get() - oracle).abs() < 1e-9 && (d.get() - 1145.6).abs() < 0.1;
    let (fast, time) = within(start.elapsed(), 1);
    outcome(
        ok && close && fast,
        format!("floor values finite: {ok}; V=-200 -> {:.3} (oracle {oracle:.3}); {time}", d.get()),
    )
}

// ---------------------------------------------------------------------------
// 3. Penalty exactness

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut below_exact = true;
    let mut checked = 0;
    for _ in 0..100_000 {
        let tau = rng.random_range(1.0..200.0);
        let d = rng.random_range(1.0..tau);
        if d < tau {
            checked += 1;
            below_exact &= penalized_weight(d, tau).to_bits() == d.to_bits();
        }
    }
    let at_tau = penalized_weight(24.0, 24.0);
    let matrix = DistanceMatrix::from_entries(3, vec![1.0, 5.0, 30.0, 2.0, 1.0, 7.0, 40.0, 3.0, 1.0]).unwrap();
    let w = apply_penalty(&matrix, 24.0).unwrap();
    let self_loops = (0..3).all(|i| w[i * 3 + i] == f64::INFINITY);
    let mut increasing = true;
    for tau in [1.0, 12.0, 24.0, 48.0, 96.0] {
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=10_000 {
            let x = tau + 9.0 * tau * f64::from(k) / 10_000.0;
            let p = penalized_weight(x, tau);
            increasing &= p > prev && p.is_finite();
            prev = p;
        }
    }
    let (fast, time) = within(start.elapsed(), 1);
    outcome(
        below_exact && at_tau == 24_000.0 && self_loops && increasing && fast,
        format!(
            "{checked} sub-horizon cases bit-exact: {below_exact}; p(24; 24) = {at_tau}; self-loops +inf: {self_loops}; strictly increasing on [tau, 10 tau]: {increasing}; {time}"
        ),
    )
}

// ---------------------------------------------------------------------------
// 4. Dijkstra against Bellman-Ford

fn bellman_ford(m: usize, w: &[f64], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; m];
    dist[source] = 0.0;
    for _ in 0..m {
        let mut changed = false;
        for u in 0..m {
            if dist[u] == f64::INFINITY {
                continue;
            }
            for v in 0..m {
                let c = dist[u] + w[u * m + v];
                if c < dist[v] {
                    dist[v] = c;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut queries = 0;
    let mut mismatches = 0;
    let mut invalid = 0;
    for _ in 0..100 {
        let m = rng.random_range(2..=50);
        let p_inf = rng.random_range(0.0..0.7);
        let weights: Vec<f64> = (0..m * m)
            .map(|_| {
                if rng.random_bool(p_inf) {
                    f64::INFINITY
                } else {
                    // Integer weights keep every path sum exact.
                    f64::from(rng.random_range(1u32..=100))
                }
            })
            .collect();
        let vertices = VertexSet::new((0..m).map(|i| vec![i as f32]).collect(), (0..m).map(|i| (0, i)).collect(), 0).unwrap();
        let graph = PlanningGraph::from_weights(vertices, weights, 1.0, Fingerprint::of(b"bf")).unwrap();
        let w = graph.weights().to_vec();
        for source in 0..m {
            let oracle = bellman_ford(m, &w, source);
            for (target, &expected) in oracle.iter().enumerate() {
                queries += 1;
                match shortest_path(&graph, source, target) {
                    Ok(path) => {
                        if path.total_cost != expected {
                            mismatches += 1;
                        }
                        let idx = &path.waypoint_indices;
                        let sum: f64 = idx.windows(2).map(|e| w[e[0] * m + e[1]]).sum();
                        if idx.first() != Some(&source) || idx.last() != Some(&target) || sum != path.total_cost {
                            invalid += 1;
                        }
                    }
                    Err(_) => {
                        if expected.is_finite() {
                            mismatches += 1;
                        }
                    }
                }
            }
        }
    }
    let (fast, time) = within(start.elapsed(), 5);
    outcome(
        mismatches == 0 && invalid == 0 && fast,
        format!("{queries} queries on 100 graphs: {mismatches} cost mismatches, {invalid} invalid paths; {time}"),
    )
}

// ---------------------------------------------------------------------------
// 5. Subgoal selection traces

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let a = select_from_distances(&[0.0, 8.0, 30.0], 10.0, 24.0, 0);
    let b = select_from_distances(&[0.0, 8.0, 15.0, 26.0, 40.0], 60.0, 24.0, 0);
    let c = select_from_distances(&[0.0, 30.0, 50.0], 100.0, 24.0, 0);
    let traces = a.kind == DecisionKind::FinalGoal
        && a.chosen_index.is_none()
        && b.kind == DecisionKind::FarthestReachable
        && b.chosen_index == Some(2)
        && b.updated_k == 0
        && c.kind == DecisionKind::FallbackNext
        && c.chosen_index == Some(1);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    for _ in 0..10_000 {
        let len = rng.random_range(1..=30);
        let deltas: Vec<f64> = (0..len).map(|_| f64::from(rng.random_range(1u32..=80))).collect();
        let delta_goal = f64::from(rng.random_range(1u32..=120));
        let budget = f64::from(rng.random_range(1u32..=60));
        let k_prev = rng.random_range(0..len);
        let s = select_from_distances(&deltas, delta_goal, budget, k_prev);
        let last = len - 1;
        // Independent argmin: first index attaining the minimum.
        let min = deltas.iter().copied().fold(f64::INFINITY, f64::min);
        let argmin = deltas.iter().position(|&d| d == min).unwrap();
        let k = argmin.max(k_prev);
        let ok = s.updated_k == k
            && s.updated_k >= k_prev
            && match s.kind {
                DecisionKind::FinalGoal => delta_goal <= budget && s.chosen_index.is_none(),
                DecisionKind::FarthestReachable => {
                    let i = s.chosen_index.unwrap();
                    delta_goal > budget && i > k && deltas[i] <= budget && (i + 1..len).all(|j| deltas[j] > budget)
                }
                DecisionKind::FallbackNext => {
                    delta_goal > budget
                        && s.chosen_index == Some((k + 1).min(last))
                        && (k + 1..len).all(|j| deltas[j] > budget)
                }
            };
        violations += usize::from(!ok);
    }
    let (fast, time) = within(start.elapsed(), 5);
    outcome(
        traces && violations == 0 && fast,
        format!("hand traces exact: {traces}; 10000 randomized cases, {violations} invariant violations; {time}"),
    )
}

// ---------------------------------------------------------------------------
// 6. Calibration identity

fn criterion_6(artifacts: &mut Vec<(String, Vec<u8>)>) -> Outcome {
    let start = Instant::now();
    let oracle = OracleDistance::new(Arc::new(generate_maze(Layout::Preset(Preset::Medium))));
    let gamma = DiscountFactor::new(0.99).unwrap();
    let source = SyntheticValue::new(oracle.clone(), RewardConvention::PerStepPenalty, gamma).unwrap();
    let predictor = DistancePredictor::per_step_penalty(0.99, Arc::new(source)).unwrap();
    let free = oracle.maze().free_cells();
    let mut pairs = 0usize;
    let mut max_err = 0.0f64;
    for &a in free {
        for &b in free {
            let d = f64::from(oracle.steps(a, b));
            if d < 1.0 {
                continue;
            }
            pairs += 1;
            let got = predictor.distance(&a.to_state(), &b.to_state()).unwrap();
            max_err = max_err.max((got - d).abs());
        }
    }
    artifacts.push(("calibration.csv".into(), format!("pairs,max_abs_error\n{pairs},{max_err:e}\n").into_bytes()));
    let (fast, time) = within(start.elapsed(), 30);
    outcome(
        max_err < 1e-6 && fast,
        format!("{pairs} medium-maze pairs, max |d_hat - d| = {max_err:.3e}; {time}"),
    )
}

// ---------------------------------------------------------------------------
// 7. One-shot success against goal distance

fn criterion_7(out: &Path, artifacts: &mut Vec<(String, Vec<u8>)>) -> Outcome {
    let start = Instant::now();
    let config = RunConfig {
        out_dir: out.join("curve").display().to_string(),
        ..RunConfig::default()
    };
    let points = harness::cmd_curve(&config).unwrap();
    artifacts.push(("curve.csv".into(), std::fs::read(out.join("curve/curve.csv")).unwrap()));
    let monotone = CurvePoint::non_increasing_within_bands(&points);
    let rates: Vec<String> = points
        .iter()
        .map(|p| format!("n={}: {:.3} [{:.3}, {:.3}]", p.n, p.rate, p.lo, p.hi))
        .collect();
    let (fast, time) = within(start.elapsed(), 120);
    outcome(monotone && fast, format!("{}; {time}", rates.join(", ")))
}

// ---------------------------------------------------------------------------
// 8. Headline lift

fn headline_config(out: &Path) -> RunConfig {
    RunConfig {
        tau: 12.0,
        budget: 24.0,
        m: 4000,
        n_tasks: 5,
        rollouts: 50,
        n_seeds: 8,
        out_dir: out.display().to_string(),
        ..RunConfig::default()
    }
}

fn criterion_8(out: &Path, artifacts: &mut Vec<(String, Vec<u8>)>) -> Outcome {
    let start = Instant::now();
    let dir = out.join("headline");
    let config = headline_config(&dir);
    let result = harness::cmd_eval(&config).unwrap();
    let svg = harness::cmd_viz(&config).unwrap();
    for name in ["results.csv", "comparison.csv", "episodes.jsonl"] {
        artifacts.push((format!("headline/{name}"), std::fs::read(dir.join(name)).unwrap()));
    }
    artifacts.push(("headline/viz.svg".into(), std::fs::read(svg).unwrap()));
    let c = &result.comparison;
    let (fast, time) = within(start.elapsed(), 600);
    outcome(
        c.lift >= 60.0 && c.p_value < 0.01 && fast,
        format!(
            "base {:.2} +- {:.2}, TTGS {:.2} +- {:.2}, lift {:.2} pp, p = {:.5}; {time}",
            c.base_mean, c.base_std, c.ttgs_mean, c.ttgs_std, c.lift, c.p_value
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. Sweep robustness

fn criterion_9(out: &Path, artifacts: &mut Vec<(String, Vec<u8>)>) -> Outcome {
    let start = Instant::now();
    let dir = out.join("sweep");
    let config = RunConfig {
        sweep: "12:24,24:24,24:48,24:96,48:96".into(),
        ..headline_config(&dir)
    };
    let result = harness::cmd_sweep(&config).unwrap();
    for name in ["sweep.csv", "results.csv"] {
        artifacts.push((format!("sweep/{name}"), std::fs::read(dir.join(name)).unwrap()));
    }
    let mut robust = result.rows.len() == 5;
    let mut cells = Vec::new();
    for row in &result.rows {
        match &row.outcome {
            Ok(c) => {
                robust &= c.robust();
                cells.push(format!(
                    "({},{}) {:.1} vs base {:.1}",
                    row.cell.tau, row.cell.budget, c.ttgs_mean, c.base_mean
                ));
            }
            Err(e) => {
                robust = false;
                cells.push(format!("({},{}) error {e}", row.cell.tau, row.cell.budget));
            }
        }
    }
    let (fast, time) = within(start.elapsed(), 1800);
    outcome(robust && fast, format!("{}; {time}", cells.join(", ")))
}

// ---------------------------------------------------------------------------
// 10. Determinism

fn run_6_to_9(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut artifacts = Vec::new();
    criterion_6(&mut artifacts);
    criterion_7(out, &mut artifacts);
    criterion_8(out, &mut artifacts);
    criterion_9(out, &mut artifacts);
    artifacts
}

fn criterion_10(first: Option<Vec<(String, Vec<u8>)>>) -> Outcome {
    let start = Instant::now();
    let a_dir = tempfile::tempdir().unwrap();
    let b_dir = tempfile::tempdir().unwrap();
    let first = first.unwrap_or_else(|| run_6_to_9(a_dir.path()));
    // The second pass runs on a two-thread pool so scheduling differs.
    let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
    let second = pool.install(|| run_6_to_9(b_dir.path()));
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.0.as_str())
        .collect();
    let same = first.len() == second.len() && differing.is_empty();
    outcome(
        same,
        format!(
            "{} artifacts compared ({}); differing: {:?}; {:.2} s",
            names.len(),
            names.join(", "),
            differing,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |n: u32| args.is_empty() || args.iter().any(|a| a == &n.to_string());
    let workdir = tempfile::tempdir().unwrap();
    let out = workdir.path();
    let mut artifacts = Vec::new();
    let mut ran_6_to_9 = true;
    let mut failed = 0;
    let mut report = |n: u32, name: &str, o: Outcome| {
        println!("criterion {n:>2} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    };
    type Criterion = (u32, &'static str, fn() -> Outcome);
    let criteria: [Criterion; 5] = [
        (1, "transform round-trips", criterion_1),
        (2, "clipping conformance", criterion_2),
        (3, "penalty exactness", criterion_3),
        (4, "dijkstra oracle equivalence", criterion_4),
        (5, "subgoal selection traces", criterion_5),
    ];
    for (n, name, f) in criteria {
        if selected(n) {
            report(n, name, f());
        }
    }
    if selected(6) {
        report(6, "calibration identity", criterion_6(&mut artifacts));
    } else {
        ran_6_to_9 = false;
    }
    if selected(7) {
        report(7, "one-shot success vs distance", criterion_7(out, &mut artifacts));
    } else {
        ran_6_to_9 = false;
    }
    if selected(8) {
        report(8, "headline lift", criterion_8(out, &mut artifacts));
    } else {
        ran_6_to_9 = false;
    }
    if selected(9) {
        report(9, "sweep robustness", criterion_9(out, &mut artifacts));
    } else {
        ran_6_to_9 = false;
    }
    if selected(10) {
        report(10, "determinism", criterion_10(ran_6_to_9.then_some(artifacts)));
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
