//! Game engines with escape-price semantics.
//!
//! [`run_mss`] drives one online algorithm through one request sequence,
//! enforcing membership under the request's polarity and accounting costs
//! per request. The escape option, when granted, lets the online player pay
//! a fixed price once and ignore every later request — the relaxation under
//! which the chunked lower bounds are stated. Offline optima live in
//! [`opt`], the MTS engine and problem translations in [`mts`], and the
//! (n-1)-server anti-server engine in [`kserver`].

pub mod kserver;
pub mod mts;
pub mod opt;

use crate::metrics::MetricSpace;
use crate::rational::Len;
use crate::requests::{RequestSeq, RequestSet};
use crate::{Error, PointAddr, Result};
use num::Zero;

/// Escape price available on an inclusive window of request indices.
#[derive(Debug, Clone, PartialEq)]
pub struct EscapeOption {
    pub price: Len,
    pub window: (usize, usize),
}

impl EscapeOption {
    /// Escape available on the whole sequence.
    pub fn whole(price: Len) -> EscapeOption {
        EscapeOption { price, window: (0, usize::MAX) }
    }

    pub fn on_window(price: Len, from: usize, to: usize) -> EscapeOption {
        EscapeOption { price, window: (from, to) }
    }

    pub fn active_at(&self, step: usize) -> bool {
        self.window.0 <= step && step <= self.window.1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Move {
    To(PointAddr),
    Escape,
}

/// What an algorithm sees when deciding.
pub struct GameView<'a> {
    pub space: &'a MetricSpace,
    pub position: &'a PointAddr,
    pub step: usize,
    /// Escape option, present only when its window covers this step.
    pub escape: Option<&'a EscapeOption>,
    pub accrued: Len,
}

/// An online algorithm. `reset` is called once per run; `decide` must return
/// a legal move or a legal escape for every reachable state.
pub trait OnlineAlgorithm {
    fn name(&self) -> String;
    fn reset(&mut self, space: &MetricSpace, start: &PointAddr);
    fn decide(&mut self, view: &GameView<'_>, request: &RequestSet) -> Move;
}

/// Per-request cost attribution for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct CostLedger {
    pub per_request: Vec<Len>,
    /// Position after each request (unchanged after an escape).
    pub positions: Vec<PointAddr>,
    pub escaped_at: Option<usize>,
    pub total: Len,
}

impl CostLedger {
    pub fn prefix_total(&self, upto: usize) -> Len {
        self.per_request[..upto].iter().copied().sum()
    }

    /// Per-chunk aggregation following the sequence's chunk boundaries.
    pub fn chunk_totals(&self, seq: &RequestSeq) -> Vec<Len> {
        seq.chunks
            .iter()
            .map(|c| self.per_request[c.start..c.end.min(self.per_request.len())].iter().copied().sum())
            .collect()
    }
}

/// Runs one MSS game. Request atoms must be canonical (generator output is;
/// parsed sequences should be canonicalized first). An illegal response is a
/// hard failure, never silently corrected.
pub fn run_mss(
    space: &MetricSpace,
    seq: &RequestSeq,
    alg: &mut dyn OnlineAlgorithm,
    start: &PointAddr,
    escape: Option<&EscapeOption>,
) -> Result<CostLedger> {
    let mut position = space.canonicalize(start)?;
    alg.reset(space, &position);
    let mut ledger = CostLedger {
        per_request: Vec::with_capacity(seq.len()),
        positions: Vec::with_capacity(seq.len()),
        escaped_at: None,
        total: Len::zero(),
    };
    for (step, request) in seq.requests.iter().enumerate() {
        if ledger.escaped_at.is_some() {
            ledger.per_request.push(Len::zero());
            ledger.positions.push(position.clone());
            continue;
        }
        let escape_here = escape.filter(|e| e.active_at(step));
        let view = GameView {
            space,
            position: &position,
            step,
            escape: escape_here,
            accrued: ledger.total,
        };
        match alg.decide(&view, request) {
            Move::Escape => {
                let Some(e) = escape_here else {
                    return Err(Error::IllegalMove {
                        step,
                        reason: "escape taken outside its window".into(),
                    });
                };
                ledger.escaped_at = Some(step);
                ledger.per_request.push(e.price);
                ledger.total += e.price;
                ledger.positions.push(position.clone());
            }
            Move::To(p) => {
                let p = space.canonicalize(&p)?;
                if !request.satisfied_by(&p) {
                    return Err(Error::IllegalMove {
                        step,
                        reason: format!("response {p} violates the request"),
                    });
                }
                let d = space.distance(&position, &p)?;
                position = p;
                ledger.per_request.push(d);
                ledger.total += d;
                ledger.positions.push(position.clone());
            }
        }
    }
    Ok(ledger)
}

/// Replays a fixed trajectory (one position per request).
pub struct Replay {
    pub trajectory: Vec<PointAddr>,
    step: usize,
}

impl Replay {
    pub fn new(trajectory: Vec<PointAddr>) -> Replay {
        Replay { trajectory, step: 0 }
    }
}

impl OnlineAlgorithm for Replay {
    fn name(&self) -> String {
        "replay".into()
    }

    fn reset(&mut self, _space: &MetricSpace, _start: &PointAddr) {
        self.step = 0;
    }

    fn decide(&mut self, _view: &GameView<'_>, _request: &RequestSet) -> Move {
        let p = self.trajectory[self.step].clone();
        self.step += 1;
        Move::To(p)
    }
}

/// Structured JSON transcript of a run: per-step request id, response,
/// cost, and escape status.
pub fn transcript_json(seq: &RequestSeq, ledger: &CostLedger) -> serde_json::Value {
    let steps: Vec<serde_json::Value> = (0..seq.len())
        .map(|i| {
            serde_json::json!({
                "request": i,
                "response": ledger.positions[i].to_string(),
                "cost": crate::rational::format_len(ledger.per_request[i]),
                "escaped": ledger.escaped_at.map_or(false, |e| i >= e),
            })
        })
        .collect();
    serde_json::json!({
        "total": crate::rational::format_len(ledger.total),
        "escaped_at": ledger.escaped_at,
        "steps": steps,
    })
}
