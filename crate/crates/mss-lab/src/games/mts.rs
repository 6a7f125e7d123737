//! Metrical task systems: engine, exact optimum, and the translations that
//! tie MSS, MTS and layered graph traversal together.
//!
//! An MSS request over a finite space becomes the MTS cost vector that
//! charges infinity exactly on the points the server may not occupy and 0
//! elsewhere; an MTS instance becomes a layered graph whose `s -> t`
//! shortest path equals the offline optimum.

use crate::games::CostLedger;
use crate::metrics::{ExplicitGraph, MetricSpace};
use crate::rational::{format_len, Len};
use crate::requests::RequestSeq;
use crate::{Error, PointAddr, Result};
use num::Zero;

/// One request: a cost per state, `None` meaning infinity (state forbidden).
pub type CostVec = Vec<Option<Len>>;

#[derive(Debug, Clone, PartialEq)]
pub struct MtsInstance {
    /// The finite state set, canonical and sorted.
    pub points: Vec<PointAddr>,
    pub vectors: Vec<CostVec>,
}

impl MtsInstance {
    pub fn state_of(&self, p: &PointAddr) -> Option<usize> {
        self.points.binary_search(p).ok()
    }
}

/// An MTS policy: chooses the next state given the instance, step and
/// current state.
pub trait MtsPolicy {
    fn reset(&mut self, inst: &MtsInstance, start: usize);
    fn decide(&mut self, inst: &MtsInstance, step: usize, current: usize) -> usize;
}

/// Stays put unless the current state is forbidden, then moves to the state
/// minimizing movement + service cost.
pub struct LazyMts;

impl MtsPolicy for LazyMts {
    fn reset(&mut self, _: &MtsInstance, _: usize) {}

    fn decide(&mut self, inst: &MtsInstance, step: usize, current: usize) -> usize {
        if inst.vectors[step][current] == Some(Len::zero()) {
            return current;
        }
        (0..inst.points.len())
            .filter(|&y| inst.vectors[step][y].is_some())
            .min_by_key(|&y| inst.vectors[step][y].unwrap())
            .unwrap_or(current)
    }
}

/// Runs an MTS game: each step adds `d(prev, next) + vector[next]`.
/// Choosing a forbidden state is a hard failure.
pub fn run_mts(
    space: &MetricSpace,
    inst: &MtsInstance,
    policy: &mut dyn MtsPolicy,
    start: usize,
) -> Result<(Len, Vec<usize>)> {
    policy.reset(inst, start);
    let mut current = start;
    let mut states = Vec::with_capacity(inst.vectors.len());
    let mut total = Len::zero();
    for step in 0..inst.vectors.len() {
        let next = policy.decide(inst, step, current);
        let service = inst.vectors[step]
            .get(next)
            .copied()
            .flatten()
            .ok_or_else(|| Error::IllegalMove {
                step,
                reason: "policy selected a state with infinite cost".into(),
            })?;
        total += space.distance(&inst.points[current], &inst.points[next])? + service;
        current = next;
        states.push(next);
    }
    Ok((total, states))
}

/// MTS cost of a fixed state trajectory (used to mirror MSS runs).
pub fn mts_cost_of_trajectory(
    space: &MetricSpace,
    inst: &MtsInstance,
    start: usize,
    states: &[usize],
) -> Result<Len> {
    let mut current = start;
    let mut total = Len::zero();
    for (step, &next) in states.iter().enumerate() {
        let service = inst.vectors[step][next].ok_or_else(|| Error::IllegalMove {
            step,
            reason: "trajectory visits a forbidden state".into(),
        })?;
        total += space.distance(&inst.points[current], &inst.points[next])? + service;
        current = next;
    }
    Ok(total)
}

/// Exact MTS optimum by dynamic programming over all states.
pub fn opt_mts_dp(space: &MetricSpace, inst: &MtsInstance, start: usize) -> Result<(Len, Vec<usize>)> {
    let n = inst.points.len();
    let mut dist = vec![vec![Len::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            dist[i][j] = space.distance(&inst.points[i], &inst.points[j])?;
        }
    }
    let mut prev: Vec<Option<(Len, usize)>> = vec![None; n];
    prev[start] = Some((Len::zero(), usize::MAX));
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(inst.vectors.len());
    for vec_t in &inst.vectors {
        let mut next: Vec<Option<(Len, usize)>> = vec![None; n];
        let mut back_t = vec![usize::MAX; n];
        for (y, service) in vec_t.iter().enumerate() {
            let Some(service) = service else { continue };
            for (x, entry) in prev.iter().enumerate() {
                let Some((cx, _)) = entry else { continue };
                let total = *cx + dist[x][y] + *service;
                if next[y].map_or(true, |(b, _)| total < b) {
                    next[y] = Some((total, x));
                    back_t[y] = x;
                }
            }
        }
        back.push(back_t);
        prev = next;
    }
    let (mut idx, opt) = prev
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.map(|(c, _)| (i, c)))
        .min_by_key(|&(i, c)| (c, i))
        .ok_or_else(|| Error::Infeasible { step: inst.vectors.len(), reason: "no feasible state".into() })?;
    let mut states = vec![0usize; inst.vectors.len()];
    for t in (0..inst.vectors.len()).rev() {
        states[t] = idx;
        idx = back[t][idx];
    }
    Ok((opt, states))
}

/// Translates an MSS sequence into MTS cost vectors over the enumerated
/// space: infinity exactly on points the request forbids, 0 elsewhere.
pub fn mss_to_mts(space: &MetricSpace, seq: &RequestSeq, cap: u64) -> Result<MtsInstance> {
    let points = space.enumerate_points(cap)?;
    let vectors = seq
        .requests
        .iter()
        .map(|req| {
            points
                .iter()
                .map(|p| if req.satisfied_by(p) { Some(Len::zero()) } else { None })
                .collect()
        })
        .collect();
    Ok(MtsInstance { points, vectors })
}

/// Mirrors an MSS cost ledger into MTS states and checks the cost agrees.
pub fn mirror_ledger_to_mts(
    space: &MetricSpace,
    inst: &MtsInstance,
    start: &PointAddr,
    ledger: &CostLedger,
) -> Result<Len> {
    let start_idx = inst
        .state_of(start)
        .ok_or_else(|| Error::InvalidParams("start is not a state".into()))?;
    let states = ledger
        .positions
        .iter()
        .map(|p| inst.state_of(p).ok_or_else(|| Error::InvalidParams(format!("position {p} is not a state"))))
        .collect::<Result<Vec<_>>>()?;
    mts_cost_of_trajectory(space, inst, start_idx, &states)
}

/// Layered graph built from an MTS instance: one layer per cost vector,
/// complete bipartite edges of length `d(x, y) + vector(y)` (forbidden
/// states get no edge), a single source holding the start state, and a
/// virtual sink joined to the last layer by zero-length edges.
#[derive(Debug, Clone)]
pub struct LayeredGraph {
    pub points: Vec<PointAddr>,
    pub layers: usize,
    /// (layer index >= 1, state in layer-1 [usize::MAX for the source],
    /// state in layer, length).
    pub edges: Vec<(usize, usize, usize, Len)>,
    pub start: usize,
}

pub fn mts_to_layered_graph(space: &MetricSpace, inst: &MtsInstance, start: usize) -> Result<LayeredGraph> {
    let n = inst.points.len();
    let mut edges = Vec::new();
    for (t, vec_t) in inst.vectors.iter().enumerate() {
        let layer = t + 1;
        for (y, service) in vec_t.iter().enumerate() {
            let Some(service) = service else { continue };
            if t == 0 {
                let d = space.distance(&inst.points[start], &inst.points[y])?;
                edges.push((layer, usize::MAX, y, d + *service));
            } else {
                for x in 0..n {
                    if inst.vectors[t - 1][x].is_none() {
                        continue;
                    }
                    let d = space.distance(&inst.points[x], &inst.points[y])?;
                    edges.push((layer, x, y, d + *service));
                }
            }
        }
    }
    Ok(LayeredGraph { points: inst.points.clone(), layers: inst.vectors.len(), edges, start })
}

impl LayeredGraph {
    /// Layer-indexed edge list: `layer x y length` per line, with `s` as the
    /// source marker and a trailing zero-length sink layer.
    pub fn export(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# layers {} states {}\n", self.layers, self.points.len()));
        for (layer, x, y, w) in &self.edges {
            let xs = if *x == usize::MAX { "s".to_string() } else { x.to_string() };
            out.push_str(&format!("{layer} {xs} {y} {}\n", format_len(*w)));
        }
        out
    }

    /// Flattens into an explicit graph with a source and a virtual sink
    /// (zero-length edges from the last layer), so generic shortest-path
    /// code can traverse it.
    pub fn to_explicit(&self) -> ExplicitGraph {
        let n = self.points.len();
        let vid = |layer: usize, y: usize| 1 + (layer - 1) * n + y;
        let sink = 1 + self.layers * n;
        let mut g = ExplicitGraph::new(sink + 1);
        for (layer, x, y, w) in &self.edges {
            let from = if *x == usize::MAX { 0 } else { vid(layer - 1, *x) };
            g.add_edge(from, vid(*layer, *y), *w);
        }
        if self.layers == 0 {
            g.add_edge(0, sink, Len::zero());
        } else {
            for y in 0..n {
                g.add_edge(vid(self.layers, y), sink, Len::zero());
            }
        }
        g
    }

    /// Shortest source-to-sink path length via Dijkstra on the flattened
    /// graph — an independent route to the MTS optimum.
    pub fn shortest_st(&self) -> Result<Len> {
        let g = self.to_explicit();
        let sink = g.vertex_count() - 1;
        g.dijkstra(0)[sink].ok_or_else(|| Error::Infeasible {
            step: self.layers,
            reason: "layered graph has no feasible path".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{line_metric, uniform_metric};
    use crate::rational::{frac, len};

    fn two_point_instance() -> (MetricSpace, MtsInstance) {
        let sp = line_metric(1).unwrap();
        let points = sp.enumerate_points(10).unwrap();
        let inst = MtsInstance {
            points,
            vectors: vec![vec![None, Some(Len::zero())]],
        };
        (sp, inst)
    }

    #[test]
    fn all_zero_vectors_cost_nothing() {
        let sp = uniform_metric(3, len(5)).unwrap();
        let points = sp.enumerate_points(10).unwrap();
        let inst = MtsInstance {
            points,
            vectors: vec![vec![Some(Len::zero()); 3]; 4],
        };
        let (cost, states) = run_mts(&sp, &inst, &mut LazyMts, 1).unwrap();
        assert_eq!(cost, len(0));
        assert!(states.iter().all(|&s| s == 1));
    }

    #[test]
    fn forced_move_pays_distance() {
        let (sp, inst) = two_point_instance();
        let (cost, states) = run_mts(&sp, &inst, &mut LazyMts, 0).unwrap();
        assert_eq!(cost, len(1));
        assert_eq!(states, vec![1]);
    }

    #[test]
    fn service_costs_accumulate() {
        let sp = line_metric(2).unwrap();
        let points = sp.enumerate_points(10).unwrap();
        let inst = MtsInstance {
            points,
            vectors: vec![
                vec![Some(frac(1, 2)), Some(len(3)), Some(len(3))],
                vec![None, Some(frac(1, 4)), None],
            ],
        };
        let (opt, states) = opt_mts_dp(&sp, &inst, 0).unwrap();
        // Stay at 0 (pay 1/2), then forced to 1 (move 1, pay 1/4).
        assert_eq!(opt, frac(1, 2) + len(1) + frac(1, 4));
        assert_eq!(states, vec![0, 1]);
    }

    #[test]
    fn layered_edge_lengths_follow_the_formula() {
        let sp = line_metric(1).unwrap();
        let points = sp.enumerate_points(10).unwrap();
        let inst = MtsInstance {
            points,
            vectors: vec![vec![Some(Len::zero()), Some(frac(1, 2))]],
        };
        let lg = mts_to_layered_graph(&sp, &inst, 0).unwrap();
        // d(0,1) = 1, service 1/2 -> edge 3/2.
        let e = lg.edges.iter().find(|(_, _, y, _)| *y == 1).unwrap();
        assert_eq!(e.3, frac(3, 2));
        let e0 = lg.edges.iter().find(|(_, _, y, _)| *y == 0).unwrap();
        assert_eq!(e0.3, len(0));
        assert!(lg.export().contains("1 s 1 3/2"));
    }

    #[test]
    fn zero_vectors_make_edges_equal_distances() {
        let sp = line_metric(3).unwrap();
        let points = sp.enumerate_points(10).unwrap();
        let inst = MtsInstance { points: points.clone(), vectors: vec![vec![Some(Len::zero()); 4]; 2] };
        let lg = mts_to_layered_graph(&sp, &inst, 0).unwrap();
        for (layer, x, y, w) in &lg.edges {
            if *layer >= 2 {
                assert_eq!(*w, sp.distance(&points[*x], &points[*y]).unwrap());
            }
        }
    }

    #[test]
    fn layered_shortest_path_equals_mts_dp() {
        let sp = line_metric(3).unwrap();
        let points = sp.enumerate_points(10).unwrap();
        let inst = MtsInstance {
            points,
            vectors: vec![
                vec![Some(len(2)), Some(Len::zero()), None, Some(Len::zero())],
                vec![None, Some(len(1)), Some(Len::zero()), None],
                vec![Some(Len::zero()), None, None, Some(frac(1, 3))],
            ],
        };
        let (opt, _) = opt_mts_dp(&sp, &inst, 0).unwrap();
        let lg = mts_to_layered_graph(&sp, &inst, 0).unwrap();
        assert_eq!(lg.shortest_st().unwrap(), opt);
    }

    #[test]
    fn forbidden_choice_is_illegal() {
        let (sp, inst) = two_point_instance();
        struct Sitter;
        impl MtsPolicy for Sitter {
            fn reset(&mut self, _: &MtsInstance, _: usize) {}
            fn decide(&mut self, _: &MtsInstance, _: usize, current: usize) -> usize {
                current
            }
        }
        assert!(matches!(
            run_mts(&sp, &inst, &mut Sitter, 0),
            Err(Error::IllegalMove { step: 0, .. })
        ));
    }
}
