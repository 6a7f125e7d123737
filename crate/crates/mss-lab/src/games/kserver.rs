//! The (n-1)-server problem through the anti-server view.
//!
//! With k = n-1 servers exactly one point is uncovered — the anti-server —
//! and its motion mirrors an MSS server: serving a request at the uncovered
//! point p moves some server from q to p, which relocates the anti-server
//! from p to q at the same cost. An MSS request S translates to one round
//! of k-server requests covering every forbidden point; the round repeats
//! until the anti-server sits inside S.
//!
//! The engine drives *lazy* MSS algorithms (those that stay put while
//! compliant); any algorithm can be lazified without increasing its cost,
//! and all mirrored agents here are lazy by construction.

use crate::games::{GameView, OnlineAlgorithm};
use crate::metrics::MetricSpace;
use crate::rational::Len;
use crate::requests::RequestSeq;
use crate::{Error, PointAddr, Result};
use num::Zero;

/// One translated request: the k-server requests issued for one MSS request.
#[derive(Debug, Clone, PartialEq)]
pub struct KsRound {
    pub original_step: usize,
    /// Forbidden points (requested k-server positions), canonical order.
    pub points: Vec<PointAddr>,
}

/// Translates an MSS sequence: each request becomes the round of k-server
/// requests at every point the server may not occupy.
pub fn mss_to_kserver(space: &MetricSpace, seq: &RequestSeq, cap: u64) -> Result<Vec<KsRound>> {
    let all = space.enumerate_points(cap)?;
    Ok(seq
        .requests
        .iter()
        .enumerate()
        .map(|(i, req)| KsRound {
            original_step: i,
            points: all.iter().filter(|p| !req.satisfied_by(p)).cloned().collect(),
        })
        .collect())
}

/// Runs the (n-1)-server game against the translated rounds, mirroring the
/// given MSS algorithm: the algorithm is consulted once per round, and its
/// response becomes the anti-server's new position when a request forces a
/// move. Total cost equals the anti-server's travelled distance.
pub fn run_kserver_antiserver(
    space: &MetricSpace,
    rounds: &[KsRound],
    seq: &RequestSeq,
    alg: &mut dyn OnlineAlgorithm,
    start: &PointAddr,
) -> Result<Len> {
    let mut anti = space.canonicalize(start)?;
    alg.reset(space, &anti);
    let mut total = Len::zero();
    let n = space.point_count() as usize;
    for round in rounds {
        let request = &seq.requests[round.original_step];
        let view = GameView {
            space,
            position: &anti,
            step: round.original_step,
            escape: None,
            accrued: total,
        };
        let target = match alg.decide(&view, request) {
            crate::games::Move::To(p) => space.canonicalize(&p)?,
            crate::games::Move::Escape => {
                return Err(Error::IllegalMove {
                    step: round.original_step,
                    reason: "escape is not available in the k-server game".into(),
                })
            }
        };
        if !request.satisfied_by(&target) {
            return Err(Error::IllegalMove {
                step: round.original_step,
                reason: format!("mirrored response {target} violates the request"),
            });
        }
        if request.satisfied_by(&anti) && target != anti {
            return Err(Error::IllegalMove {
                step: round.original_step,
                reason: "mirrored algorithm must be lazy (moved while compliant)".into(),
            });
        }
        let mut passes = 0usize;
        while !request.satisfied_by(&anti) {
            // One pass over the round's requests. A request at the
            // anti-server's point forces a server move from the mirrored
            // target, relocating the anti-server there; requests at covered
            // points are no-ops.
            let hit = round.points.iter().any(|p| *p == anti);
            if hit {
                total += space.distance(&anti, &target)?;
                anti = target.clone();
            }
            passes += 1;
            if passes > n + 1 {
                return Err(Error::Infeasible {
                    step: round.original_step,
                    reason: "anti-server failed to stabilize inside the request".into(),
                });
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::Greedy;
    use crate::metrics::line_metric;
    use crate::rational::len;
    use crate::requests::{RequestSet, RequestSeq};

    #[test]
    fn complement_of_singleton_is_one_request() {
        // Request S = M \ {p} translates to the single k-server request p.
        let sp = line_metric(3).unwrap();
        let all = sp.enumerate_points(10).unwrap();
        let s: Vec<PointAddr> = all.iter().filter(|p| p.base != 2).cloned().collect();
        let seq = RequestSeq::from_requests(vec![RequestSet::must_be_in(s)]);
        let rounds = mss_to_kserver(&sp, &seq, 100).unwrap();
        assert_eq!(rounds[0].points, vec![PointAddr::base(2)]);
    }

    #[test]
    fn anti_server_cost_mirrors_mss() {
        let sp = line_metric(4).unwrap();
        let seq = RequestSeq::from_requests(vec![
            RequestSet::singleton(PointAddr::base(3)),
            RequestSet::must_be_in(vec![PointAddr::base(1), PointAddr::base(3)]),
            RequestSet::singleton(PointAddr::base(0)),
        ]);
        let rounds = mss_to_kserver(&sp, &seq, 100).unwrap();
        let mut mirrored = Greedy::new();
        let ks = run_kserver_antiserver(&sp, &rounds, &seq, &mut mirrored, &PointAddr::base(0)).unwrap();
        let mut fresh = Greedy::new();
        let mss = crate::games::run_mss(&sp, &seq, &mut fresh, &PointAddr::base(0), None).unwrap();
        assert_eq!(ks, mss.total);
        assert_eq!(ks, len(3 + 0 + 3));
    }
}
