use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{GraphError, PlanningGraph};
use crate::distance::Distance;

/// Waypoint sequence `p_0 … p_L` from a shortest-path query.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidePath {
    pub waypoint_indices: Vec<usize>,
    pub waypoint_states: Vec<Vec<f32>>,
    pub total_cost: f64,
}

impl GuidePath {
    /// Index of the last waypoint, `L`.
    pub fn last_index(&self) -> usize {
        self.waypoint_indices.len() - 1
    }

    pub fn len(&self) -> usize {
        self.waypoint_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoint_indices.is_empty()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    vertex: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Min-heap on cost, then on vertex index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-weight path from `source` to `target` (Dijkstra, binary heap,
/// dense adjacency). On equal costs the lower-index predecessor wins.
pub fn shortest_path(
    graph: &PlanningGraph,
    source: usize,
    target: usize,
) -> Result<GuidePath, GraphError> {
    let m = graph.len();
    for index in [source, target] {
        if index >= m {
            return Err(GraphError::IndexOutOfRange { index, m });
        }
    }
    let mut dist = vec![f64::INFINITY; m];
    let mut pred = vec![usize::MAX; m];
    let mut done = vec![false; m];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry {
        cost: 0.0,
        vertex: source,
    });

    while let Some(Entry { cost, vertex: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == target {
            break;
        }
        for (v, &w) in graph.row(u).iter().enumerate() {
            if done[v] || w == f64::INFINITY {
                continue;
            }
            let alt = cost + w;
            if alt < dist[v] || (alt == dist[v] && u < pred[v]) {
                let improved = alt < dist[v];
                dist[v] = alt;
                pred[v] = u;
                if improved {
                    heap.push(Entry { cost: alt, vertex: v });
                }
            }
        }
    }

    if !dist[target].is_finite() {
        return Err(GraphError::NoPath { from: source, target });
    }
    let mut indices = vec![target];
    let mut cur = target;
    while cur != source {
        cur = pred[cur];
        indices.push(cur);
    }
    indices.reverse();
    let states = indices
        .iter()
        .map(|&i| graph.vertices().vertex(i).to_vec())
        .collect();
    Ok(GuidePath {
        waypoint_indices: indices,
        waypoint_states: states,
        total_cost: dist[target],
    })
}

fn argmin<F>(m: usize, mut dist: F) -> Result<usize, GraphError>
where
    F: FnMut(usize) -> Result<f64, GraphError>,
{
    if m == 0 {
        return Err(GraphError::Empty);
    }
    let mut best = (0, f64::INFINITY);
    for i in 0..m {
        let d = dist(i)?;
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok(best.0)
}

/// `argmin_i d̂(state, v_i)`, lowest index on ties.
pub fn nearest_vertex_from<D: Distance + ?Sized>(
    state: &[f32],
    graph: &PlanningGraph,
    predictor: &D,
) -> Result<usize, GraphError> {
    let vs = graph.vertices();
    argmin(graph.len(), |i| Ok(predictor.distance(state, vs.vertex(i))?))
}

/// `argmin_i d̂(v_i, goal)`, lowest index on ties.
pub fn nearest_vertex_to<D: Distance + ?Sized>(
    goal: &[f32],
    graph: &PlanningGraph,
    predictor: &D,
) -> Result<usize, GraphError> {
    let vs = graph.vertices();
    argmin(graph.len(), |i| Ok(predictor.distance(vs.vertex(i), goal)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::VertexSet;
    use crate::distance::{DistanceError, Evaluation, Fingerprint, StepDistance};

    fn vertices(m: usize) -> VertexSet {
        VertexSet::new(
            (0..m).map(|i| vec![i as f32]).collect(),
            (0..m).map(|i| (0, i)).collect(),
            0,
        )
        .unwrap()
    }

    fn graph(m: usize, weights: Vec<f64>) -> PlanningGraph {
        PlanningGraph::from_weights(vertices(m), weights, 1.0, Fingerprint::of(b"t")).unwrap()
    }

    #[test]
    fn single_edge() {
        let inf = f64::INFINITY;
        let g = graph(2, vec![inf, 5.0, inf, inf]);
        let p = shortest_path(&g, 0, 1).unwrap();
        assert_eq!(p.waypoint_indices, vec![0, 1]);
        assert_eq!(p.total_cost, 5.0);
        assert_eq!(p.waypoint_states, vec![vec![0.0], vec![1.0]]);
        assert!(matches!(
            shortest_path(&g, 1, 0),
            Err(GraphError::NoPath { from: 1, target: 0 })
        ));
    }

    #[test]
    fn source_equals_target() {
        let g = graph(5, vec![3.0; 25]);
        let p = shortest_path(&g, 3, 3).unwrap();
        assert_eq!(p.waypoint_indices, vec![3]);
        assert_eq!(p.total_cost, 0.0);
        assert_eq!(p.last_index(), 0);
    }

    #[test]
    fn ties_prefer_lower_predecessor() {
        // 0→1→3 and 0→2→3 both cost 4; vertex 1 must be the predecessor.
        let inf = f64::INFINITY;
        #[rustfmt::skip]
        let w = vec![
            inf, 2.0, 2.0, inf,
            inf, inf, inf, 2.0,
            inf, inf, inf, 2.0,
            inf, inf, inf, inf,
        ];
        let p = shortest_path(&graph(4, w.clone()), 0, 3).unwrap();
        assert_eq!(p.waypoint_indices, vec![0, 1, 3]);
        // Relabel so the cheaper-index route is discovered second.
        #[rustfmt::skip]
        let w2 = vec![
            inf, 2.0, inf, 1.0,
            inf, inf, 2.0, inf,
            inf, inf, inf, inf,
            inf, inf, 3.0, inf,
        ];
        let p = shortest_path(&graph(4, w2), 0, 2).unwrap();
        assert_eq!(p.waypoint_indices, vec![0, 1, 2]);
    }

    #[test]
    fn out_of_range_index() {
        let g = graph(2, vec![1.0; 4]);
        assert!(matches!(shortest_path(&g, 0, 2), Err(GraphError::IndexOutOfRange { .. })));
    }

    /// d̂(a, b) = |a − b| when a ≤ b, else 2|a − b|.
    struct Lopsided;

    impl Distance for Lopsided {
        fn evaluate(&self, s: &[f32], g: &[f32]) -> Result<Evaluation, DistanceError> {
            let d = f64::from((s[0] - g[0]).abs());
            let d = if s[0] <= g[0] { d } else { 2.0 * d };
            Ok(Evaluation {
                distance: StepDistance::clamped(d),
                clipped: false,
            })
        }
        fn fingerprint(&self) -> Fingerprint {
            Fingerprint::of(b"lopsided")
        }
    }

    fn scalar_graph(xs: &[f32]) -> PlanningGraph {
        let vs = VertexSet::new(
            xs.iter().map(|&x| vec![x]).collect(),
            (0..xs.len()).map(|i| (0, i)).collect(),
            0,
        )
        .unwrap();
        let m = xs.len();
        PlanningGraph::from_weights(vs, vec![1.0; m * m], 1.0, Fingerprint::of(b"s")).unwrap()
    }

    #[test]
    fn nearest_vertex_examples() {
        let g = scalar_graph(&[0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0]);
        assert_eq!(nearest_vertex_from(&[70.0], &g, &Lopsided).unwrap(), 7);
        assert_eq!(nearest_vertex_to(&[0.0], &g, &Lopsided).unwrap(), 0);

        // Equidistant from vertices 2 and 5 under a symmetric distance.
        let g = scalar_graph(&[100.0, 200.0, 0.0, 300.0, 400.0, 10.0]);
        let sym = crate::graph::tests::AbsDiff;
        assert_eq!(nearest_vertex_from(&[5.0], &g, &sym).unwrap(), 2);
        assert_eq!(nearest_vertex_to(&[5.0], &g, &sym).unwrap(), 2);
    }

    #[test]
    fn nearest_to_respects_argument_order() {
        let g = scalar_graph(&[0.0, 6.0]);
        // d̂(v, 10): 0 → 10 costs 10, 6 → 10 costs 4.
        assert_eq!(nearest_vertex_to(&[10.0], &g, &Lopsided).unwrap(), 1);
        // d̂(10, v): 10 → 0 costs 20, 10 → 6 costs 8.
        assert_eq!(nearest_vertex_from(&[10.0], &g, &Lopsided).unwrap(), 1);
        // An ordering where the two directions disagree.
        let g = scalar_graph(&[5.0, 13.0]);
        assert_eq!(nearest_vertex_to(&[10.0], &g, &Lopsided).unwrap(), 0);
        assert_eq!(nearest_vertex_from(&[10.0], &g, &Lopsided).unwrap(), 1);
    }
}
