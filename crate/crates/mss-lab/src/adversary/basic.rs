//! Hard random sequences for the basic diamond construction, including the
//! bounded-width variant used for layered graph traversal.
//!
//! The three-stage shape per level: stage 1 walks the first third of both
//! paths simultaneously (the same recursive sequence shown on both sides);
//! stage 2 flips a fair coin per round, advancing the chosen side one copy
//! while the other side is held by repeated requests to its frontier
//! terminal; stage 3 kills the side that advanced more and drives the other
//! to the target. A single offline server following the surviving path
//! serves everything at cost exactly d(s, t).
//!
//! The bounded-width variant replaces stage 1 by a deterministic
//! alternation over the `m^2` rescaled copies, so request cardinality grows
//! by at most one per level instead of doubling.

use crate::metrics::{diamond_basic, lgt_variant, MetricSpace, Side};
use crate::rational::Len;
use crate::requests::{RequestSeq, RequestSet, StageTag};
use crate::{PointAddr, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct BasicGenConfig {
    pub w: u32,
    pub m: Vec<u32>,
    pub seed: u64,
    /// Bounded-width mode: alternating stage 1 on the rescaled first third.
    pub width_bounded: bool,
}

#[derive(Debug, Clone)]
pub struct BasicGenOutput {
    pub space: MetricSpace,
    pub seq: RequestSeq,
    /// Final stage-2 counters (left, right) per composite level, in the
    /// order the recursion closed them (top level last).
    pub counters: Vec<(u32, u32)>,
    /// d(s, t): the offline optimum certified by the surviving path.
    pub opt_cost: Len,
}

/// Generates the three-stage hard sequence for `diamond_basic(w, m)`, or
/// its bounded-width sibling when the config says so.
pub fn gen_basic_sequence(cfg: &BasicGenConfig) -> Result<BasicGenOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    gen_basic_with_coins(cfg, &mut move || rng.gen_bool(0.5))
}

/// Same construction with an injectable coin source (tests force the
/// Bernoulli outcomes).
pub fn gen_basic_with_coins(cfg: &BasicGenConfig, coin: &mut dyn FnMut() -> bool) -> Result<BasicGenOutput> {
    let space = if cfg.width_bounded {
        lgt_variant(cfg.w, &cfg.m)?
    } else {
        diamond_basic(cfg.w, &cfg.m)?
    };
    let mut counters = Vec::new();
    let mut local = Vec::new();
    {
        let mut gen = Builder { cfg, coin, counters: &mut counters };
        gen.body_into(cfg.w, &mut local);
    }
    let mut seq = RequestSeq::default();
    // Every generated sequence starts with {s}.
    seq.push_chunk(
        vec![RequestSet::singleton(space.s())],
        None,
        StageTag::Base,
    );
    for (req, stage) in local {
        seq.push_chunk(vec![req.canonicalized(&space)?], None, stage);
    }
    let opt_cost = space.distance(&space.s(), &space.t())?;
    Ok(BasicGenOutput { space, seq, counters, opt_cost })
}

struct Builder<'a> {
    cfg: &'a BasicGenConfig,
    coin: &'a mut dyn FnMut() -> bool,
    counters: &'a mut Vec<(u32, u32)>,
}

impl Builder<'_> {
    fn body_into(&mut self, lvl: u32, out: &mut Vec<(RequestSet, StageTag)>) {
        if lvl == 0 {
            // Base sequence on the single edge: one request to its target.
            out.push((RequestSet::singleton(PointAddr::base(1)), StageTag::Base));
            return;
        }
        let mw = self.cfg.m[lvl as usize - 1];
        if self.cfg.width_bounded {
            self.lgt_stage1(lvl, mw, out);
        } else {
            self.basic_stage1(lvl, mw, out);
        }
        self.stages_2_and_3(lvl, mw, out);
    }

    /// Target terminal of a level-(lvl-1) copy, in that copy's local
    /// coordinates (deepest-left t-form; canonicalized at the end).
    fn child_t(&self, lvl: u32) -> PointAddr {
        let mut levels = Vec::new();
        let mut l = lvl - 1;
        while l > 0 {
            let last = if self.cfg.width_bounded {
                let m = self.cfg.m[l as usize - 1];
                m * m + 2 * m + 1
            } else {
                3 * self.cfg.m[l as usize - 1]
            };
            levels.push(crate::metrics::sel(Side::Left, last));
            l -= 1;
        }
        PointAddr::new(levels, 1)
    }

    /// Stage 1 of the plain construction: the same recursive sequence on
    /// copy i of both paths, for i = 1..=m.
    fn basic_stage1(&mut self, lvl: u32, mw: u32, out: &mut Vec<(RequestSet, StageTag)>) {
        for i in 1..=mw {
            let mut child = Vec::new();
            self.body_into(lvl - 1, &mut child);
            for (req, _) in child {
                let both = req.embed(Side::Left, i).union_atoms(req.embed(Side::Right, i).atoms());
                out.push((both, StageTag::Stage1));
            }
        }
    }

    /// Bounded-width stage 1: deterministic alternation over the m^2
    /// rescaled copies (segment indices 2..=m^2+1; segment 1 is the extra
    /// edge), staying put on the other side.
    fn lgt_stage1(&mut self, lvl: u32, mw: u32, out: &mut Vec<(RequestSet, StageTag)>) {
        let copies = mw * mw;
        // Frontier terminals: the shared source until a side advances.
        let local_s = PointAddr::new(vec![crate::metrics::sel(Side::Left, 1)], 0);
        let mut frontier = [local_s.clone(), local_s];
        for k in 1..=copies {
            for side in [Side::Left, Side::Right] {
                let seg = k + 1;
                let mut child = Vec::new();
                self.body_into(lvl - 1, &mut child);
                let stay = frontier[side.other() as usize].clone();
                for (req, _) in child {
                    out.push((req.embed(side, seg).union_atoms(&[stay.clone()]), StageTag::Stage1));
                }
                frontier[side as usize] = self.child_t(lvl).embed(side, seg);
            }
        }
    }

    /// Stages 2 and 3, shared by both modes: `m` Bernoulli rounds advance
    /// one middle-third copy each, then the side that advanced more is
    /// killed and the other driven to the target.
    fn stages_2_and_3(&mut self, lvl: u32, mw: u32, out: &mut Vec<(RequestSet, StageTag)>) {
        // Segment indices of the middle+last thirds.
        let first_full = if self.cfg.width_bounded { mw * mw + 2 } else { mw + 1 };
        let last_seg = if self.cfg.width_bounded { mw * mw + 2 * mw + 1 } else { 3 * mw };
        // done[side] = middle-third copies completed on that side.
        let mut done = [0u32, 0u32];
        let seg_of = |advanced: u32| first_full + advanced - 1;
        let frontier_of = |b: &Builder<'_>, side: Side, done_side: u32| -> PointAddr {
            if done_side == 0 {
                // End of the first third on that side.
                b.child_t(lvl).embed(side, first_full - 1)
            } else {
                b.child_t(lvl).embed(side, seg_of(done_side))
            }
        };
        for _ in 0..mw {
            let side = if (self.coin)() { Side::Left } else { Side::Right };
            let other = side.other();
            done[side as usize] += 1;
            let seg = seg_of(done[side as usize]);
            let stay = frontier_of(self, other, done[other as usize]);
            let mut child = Vec::new();
            self.body_into(lvl - 1, &mut child);
            for (req, _) in child {
                out.push((req.embed(side, seg).union_atoms(&[stay.clone()]), StageTag::Stage2a));
            }
        }
        // Counters in the paper's terms: left(m) = m + #left advances.
        self.counters
            .push((mw + done[Side::Left as usize], mw + done[Side::Right as usize]));
        // Kill the side that advanced more; ties kill the left path.
        let survivor = if done[Side::Left as usize] >= done[Side::Right as usize] {
            Side::Right
        } else {
            Side::Left
        };
        let mut seg = seg_of(done[survivor as usize].max(0)) + 1;
        if done[survivor as usize] == 0 {
            seg = first_full;
        }
        while seg <= last_seg {
            let mut child = Vec::new();
            self.body_into(lvl - 1, &mut child);
            for (req, _) in child {
                out.push((req.embed(survivor, seg), StageTag::Stage3));
            }
            seg += 1;
        }
    }
}
