//! Exact offline optimum by dynamic programming.
//!
//! For `MustBeIn` requests the server's position at step t must be one of
//! the request's atoms, so the DP state space is exactly the atom list per
//! step (any trajectory can be lazified to move only when forced, directly
//! to a requested point, without extra cost). For `MustNotBeIn` requests
//! the candidates are the enumerated complement.

use crate::games::{run_mss, CostLedger, Replay};
use crate::metrics::MetricSpace;
use crate::rational::Len;
use crate::requests::{eligible_points, RequestSeq};
use crate::{Error, PointAddr, Result};
use num::Zero;

pub const DEFAULT_DP_BUDGET: u64 = 200_000_000;

/// Exact optimal cost and a witness trajectory (one position per request).
pub fn opt_cost_dp(
    space: &MetricSpace,
    seq: &RequestSeq,
    start: &PointAddr,
    budget: u64,
) -> Result<(Len, Vec<PointAddr>)> {
    let start = space.canonicalize(start)?;
    if seq.is_empty() {
        return Ok((Len::zero(), Vec::new()));
    }
    let mut spent: u64 = 0;
    // Frontier: (position, best cost, backpointer into previous frontier).
    let mut frontiers: Vec<Vec<(PointAddr, Len, usize)>> = Vec::with_capacity(seq.len());
    let mut prev: Vec<(PointAddr, Len, usize)> = vec![(start, Len::zero(), usize::MAX)];
    for (step, request) in seq.requests.iter().enumerate() {
        let cands = eligible_points(space, request, crate::metrics::graph::DEFAULT_MATERIALIZE_CAP)?;
        if cands.is_empty() {
            return Err(Error::Infeasible { step, reason: "no eligible point".into() });
        }
        spent += (cands.len() * prev.len()) as u64;
        if spent > budget {
            return Err(Error::BudgetExceeded(spent));
        }
        let mut next = Vec::with_capacity(cands.len());
        for c in cands {
            let mut best: Option<(Len, usize)> = None;
            for (j, (p, cost, _)) in prev.iter().enumerate() {
                let total = *cost + space.distance(p, &c)?;
                if best.map_or(true, |(b, _)| total < b) {
                    best = Some((total, j));
                }
            }
            let (cost, back) = best.unwrap();
            next.push((c, cost, back));
        }
        frontiers.push(next.clone());
        prev = next;
    }
    // Optimal endpoint, then backtrack the witness.
    let (mut idx, _) = prev
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| (a.1, &a.0).cmp(&(b.1, &b.0)))
        .map(|(i, e)| (i, e.1))
        .unwrap();
    let opt = prev[idx].1;
    let mut trajectory = vec![PointAddr::base(0); seq.len()];
    for step in (0..seq.len()).rev() {
        let (p, _, back) = &frontiers[step][idx];
        trajectory[step] = p.clone();
        idx = *back;
    }
    Ok((opt, trajectory))
}

/// Replays a DP witness through the game engine, checking legality and that
/// the realized cost equals the claimed optimum.
pub fn replay_witness(
    space: &MetricSpace,
    seq: &RequestSeq,
    start: &PointAddr,
    claimed: Len,
    trajectory: Vec<PointAddr>,
) -> Result<CostLedger> {
    let mut replay = Replay::new(trajectory);
    let ledger = run_mss(space, seq, &mut replay, start, None)?;
    if ledger.total != claimed {
        return Err(Error::InvalidParams(format!(
            "witness replay cost {} differs from claimed optimum {}",
            crate::rational::format_len(ledger.total),
            crate::rational::format_len(claimed)
        )));
    }
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{explicit, line_metric, ExplicitGraph};
    use crate::rational::{frac, len};
    use crate::requests::{Polarity, RequestSet};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn line_sweep_is_beta() {
        let sp = line_metric(4).unwrap();
        let seq = RequestSeq::from_requests(
            (1..=4).map(|i| RequestSet::singleton(PointAddr::base(i))).collect(),
        );
        let (opt, w) = opt_cost_dp(&sp, &seq, &PointAddr::base(0), 1_000_000).unwrap();
        assert_eq!(opt, len(4));
        replay_witness(&sp, &seq, &PointAddr::base(0), opt, w).unwrap();
    }

    #[test]
    fn empty_sequence_is_free() {
        let sp = line_metric(4).unwrap();
        let seq = RequestSeq::default();
        let (opt, w) = opt_cost_dp(&sp, &seq, &PointAddr::base(2), 1000).unwrap();
        assert_eq!(opt, len(0));
        assert!(w.is_empty());
    }

    #[test]
    fn infeasible_and_budget_errors() {
        let sp = line_metric(4).unwrap();
        let seq = RequestSeq::from_requests(vec![RequestSet::empty()]);
        assert!(matches!(
            opt_cost_dp(&sp, &seq, &PointAddr::base(0), 1000),
            Err(Error::Infeasible { .. })
        ));
        let seq = RequestSeq::from_requests(vec![
            RequestSet::must_be_in(vec![PointAddr::base(1), PointAddr::base(2)]),
            RequestSet::must_be_in(vec![PointAddr::base(3), PointAddr::base(4)]),
        ]);
        assert!(matches!(
            opt_cost_dp(&sp, &seq, &PointAddr::base(0), 3),
            Err(Error::BudgetExceeded(_))
        ));
    }

    /// Brute-force oracle: enumerate all response tuples.
    fn brute_force_opt(
        space: &MetricSpace,
        seq: &RequestSeq,
        start: &PointAddr,
    ) -> Len {
        fn rec(
            space: &MetricSpace,
            seq: &RequestSeq,
            step: usize,
            at: &PointAddr,
            acc: Len,
            best: &mut Option<Len>,
        ) {
            if step == seq.len() {
                *best = Some(match *best {
                    Some(b) if b <= acc => b,
                    _ => acc,
                });
                return;
            }
            let cands =
                eligible_points(space, &seq.requests[step], 10_000).unwrap();
            for c in cands {
                let d = space.distance(at, &c).unwrap();
                rec(space, seq, step + 1, &c, acc + d, best);
            }
        }
        let mut best = None;
        rec(space, seq, 0, start, Len::zero(), &mut best);
        best.unwrap()
    }

    #[test]
    fn dp_matches_exhaustive_enumeration_on_random_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for case in 0..200 {
            // Random 6-point weighted graph, then its shortest-path metric.
            let n = 6usize;
            let mut g = ExplicitGraph::new(n);
            for u in 0..n - 1 {
                g.add_edge(u, u + 1, frac(rng.gen_range(1..8), rng.gen_range(1..3)));
            }
            for _ in 0..4 {
                let u = rng.gen_range(0..n);
                let v = rng.gen_range(0..n);
                if u != v {
                    g.add_edge(u.min(v), u.max(v), frac(rng.gen_range(1..8), rng.gen_range(1..3)));
                }
            }
            let sp = explicit(g);
            let points = sp.enumerate_points(100).unwrap();
            let steps = rng.gen_range(1..=5);
            let seq = RequestSeq::from_requests(
                (0..steps)
                    .map(|_| {
                        let k = rng.gen_range(1..=3);
                        let atoms: Vec<PointAddr> =
                            (0..k).map(|_| points.choose(&mut rng).unwrap().clone()).collect();
                        let polarity = if rng.gen_bool(0.25) {
                            Polarity::MustNotBeIn
                        } else {
                            Polarity::MustBeIn
                        };
                        RequestSet::new(atoms, polarity)
                    })
                    .collect(),
            );
            let start = points.choose(&mut rng).unwrap();
            let (opt, w) = opt_cost_dp(&sp, &seq, start, 10_000_000).unwrap();
            let brute = brute_force_opt(&sp, &seq, start);
            assert_eq!(opt, brute, "case {case}");
            replay_witness(&sp, &seq, start, opt, w).unwrap();
        }
    }
}
