//! Online algorithms to race against the adversaries.
//!
//! The lower bounds quantify over all algorithms; these are the
//! representatives the harness measures. All of them are lazy (they stay
//! put while compliant), total, and deterministic given their seed.

use crate::games::{GameView, Move, OnlineAlgorithm};
use crate::metrics::MetricSpace;
use crate::rational::Len;
use crate::requests::{eligible_points, nearest_in, RequestSet};
use crate::{PointAddr, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Moves to the nearest eligible point; never escapes.
pub struct Greedy;

impl Greedy {
    pub fn new() -> Greedy {
        Greedy
    }
}

impl Default for Greedy {
    fn default() -> Self {
        Greedy
    }
}

impl OnlineAlgorithm for Greedy {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn reset(&mut self, _: &MetricSpace, _: &PointAddr) {}

    fn decide(&mut self, view: &GameView<'_>, request: &RequestSet) -> Move {
        let (p, _) = nearest_in(view.space, request, view.position)
            .expect("greedy requires a feasible request");
        Move::To(p)
    }
}

/// Work function algorithm over the per-request candidate sets: maintains
/// w_t(x), the cheapest cost of serving the prefix and ending at x, and
/// moves to the candidate minimizing w_t(x) + d(current, x). Ties prefer
/// the current position, then the lexicographically smallest address.
pub struct WorkFunction {
    pool: Vec<(PointAddr, Len)>,
}

impl WorkFunction {
    pub fn new() -> WorkFunction {
        WorkFunction { pool: Vec::new() }
    }

    /// Work-function values after the last processed request.
    pub fn values(&self) -> &[(PointAddr, Len)] {
        &self.pool
    }
}

impl Default for WorkFunction {
    fn default() -> Self {
        Self::new()
    }
}

impl OnlineAlgorithm for WorkFunction {
    fn name(&self) -> String {
        "wfa".into()
    }

    fn reset(&mut self, _: &MetricSpace, start: &PointAddr) {
        self.pool = vec![(start.clone(), Len::from_integer(0))];
    }

    fn decide(&mut self, view: &GameView<'_>, request: &RequestSet) -> Move {
        let cands = eligible_points(view.space, request, crate::metrics::graph::DEFAULT_MATERIALIZE_CAP)
            .expect("work function requires an enumerable candidate set");
        assert!(!cands.is_empty(), "work function requires a feasible request");
        let mut next_pool = Vec::with_capacity(cands.len());
        for c in cands {
            let w = self
                .pool
                .iter()
                .map(|(p, wp)| *wp + view.space.distance(p, &c).unwrap())
                .min()
                .unwrap();
            next_pool.push((c, w));
        }
        let mut best: Option<(Len, &PointAddr)> = None;
        for (c, w) in &next_pool {
            let score = *w + view.space.distance(view.position, c).unwrap();
            let better = match best {
                None => true,
                Some((bs, bp)) => {
                    score < bs
                        || (score == bs && c == view.position)
                        || (score == bs && bp != view.position && c < bp)
                }
            };
            if better {
                best = Some((score, c));
            }
        }
        let target = best.unwrap().1.clone();
        self.pool = next_pool;
        Move::To(target)
    }
}

/// Stays while compliant; otherwise relocates to a uniformly random
/// eligible point.
pub struct RandomEligible {
    rng: ChaCha8Rng,
    seed: u64,
}

impl RandomEligible {
    pub fn new(seed: u64) -> RandomEligible {
        RandomEligible { rng: ChaCha8Rng::seed_from_u64(seed), seed }
    }
}

impl OnlineAlgorithm for RandomEligible {
    fn name(&self) -> String {
        "random".into()
    }

    fn reset(&mut self, _: &MetricSpace, _: &PointAddr) {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
    }

    fn decide(&mut self, view: &GameView<'_>, request: &RequestSet) -> Move {
        if request.satisfied_by(view.position) {
            return Move::To(view.position.clone());
        }
        let cands = eligible_points(view.space, request, crate::metrics::graph::DEFAULT_MATERIALIZE_CAP)
            .expect("random relocation requires an enumerable candidate set");
        let p = cands.choose(&mut self.rng).expect("feasible request").clone();
        Move::To(p)
    }
}

/// Wraps a base algorithm with an escape policy: escapes as soon as the
/// accrued cost plus the base move's cost would reach `factor` times the
/// escape price. `factor = None` never escapes; `factor = 0` escapes at the
/// first opportunity.
pub struct EscapeAware<B: OnlineAlgorithm> {
    base: B,
    factor: Option<Len>,
}

impl<B: OnlineAlgorithm> EscapeAware<B> {
    pub fn new(base: B, factor: Option<Len>) -> EscapeAware<B> {
        EscapeAware { base, factor }
    }
}

impl<B: OnlineAlgorithm> OnlineAlgorithm for EscapeAware<B> {
    fn name(&self) -> String {
        match self.factor {
            Some(f) => format!("{}-esc{}", self.base.name(), crate::rational::format_len(f)),
            None => self.base.name(),
        }
    }

    fn reset(&mut self, space: &MetricSpace, start: &PointAddr) {
        self.base.reset(space, start);
    }

    fn decide(&mut self, view: &GameView<'_>, request: &RequestSet) -> Move {
        let mv = self.base.decide(view, request);
        let (Some(factor), Some(escape)) = (self.factor, view.escape) else {
            return mv;
        };
        let projected = match &mv {
            Move::To(p) => view.accrued + view.space.distance(view.position, p).unwrap(),
            Move::Escape => return Move::Escape,
        };
        if projected >= factor * escape.price {
            Move::Escape
        } else {
            mv
        }
    }
}

/// The open algorithm registry: resolves CLI names to boxed algorithms.
/// Escape-aware variants use the suffix `-esc<factor>`, e.g. `greedy-esc2`.
pub fn by_name(name: &str, seed: u64) -> Result<Box<dyn OnlineAlgorithm>> {
    let (stem, factor) = match name.split_once("-esc") {
        Some((stem, f)) => (stem, Some(crate::rational::parse_len(f)?)),
        None => (name, None),
    };
    let boxed: Box<dyn OnlineAlgorithm> = match (stem, factor) {
        ("greedy", None) => Box::new(Greedy::new()),
        ("greedy", f @ Some(_)) => Box::new(EscapeAware::new(Greedy::new(), f)),
        ("wfa", None) => Box::new(WorkFunction::new()),
        ("wfa", f @ Some(_)) => Box::new(EscapeAware::new(WorkFunction::new(), f)),
        ("random", None) => Box::new(RandomEligible::new(seed)),
        ("random", f @ Some(_)) => Box::new(EscapeAware::new(RandomEligible::new(seed), f)),
        _ => return Err(crate::Error::InvalidParams(format!("unknown algorithm {name:?}"))),
    };
    Ok(boxed)
}
