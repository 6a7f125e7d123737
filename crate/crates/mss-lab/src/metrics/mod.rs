//! Metric spaces for the lower-bound constructions.
//!
//! The recursive families (basic diamond, refined diamond, the bounded-width
//! variant) all share one shape: a level is a cycle of two equal-length
//! *paths* between terminals `s` and `t`, each path a chain of *segments*,
//! each segment a scaled copy of the previous level (or a plain edge).
//! Points are hierarchical addresses ([`PointAddr`]): one [`CopySelector`]
//! per level and a base coordinate at the bottom. Distances are evaluated
//! recursively without materializing the graph; [`graph::materialize`]
//! provides the explicit-graph Dijkstra oracle used by tests.
//!
//! Gluing identifies a segment's terminal with its neighbor's; every glued
//! point has one canonical address (lexicographically smallest: Left before
//! Right, smaller index first), produced by [`MetricSpace::canonicalize`].

pub mod graph;
pub mod hst;

use crate::rational::{base_level, frac, isqrt, len, Len};
use crate::{Error, Result};
use num::Zero;
use serde::{Deserialize, Serialize};
use std::fmt;

pub use graph::ExplicitGraph;
pub use hst::Hst;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// One level of a hierarchical address: which copy on which path.
/// Indices are 1-based along the path from `s` to `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CopySelector {
    pub side: Side,
    pub index: u32,
}

pub fn sel(side: Side, index: u32) -> CopySelector {
    CopySelector { side, index }
}

/// Hierarchical address of a point: level-by-level copy selectors ending in
/// a base coordinate. The derived order is the canonical tie-break order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PointAddr {
    pub levels: Vec<CopySelector>,
    pub base: u32,
}

impl PointAddr {
    pub fn base(base: u32) -> PointAddr {
        PointAddr { levels: Vec::new(), base }
    }

    pub fn new(levels: Vec<CopySelector>, base: u32) -> PointAddr {
        PointAddr { levels, base }
    }

    /// Prefixes this address with one more (outer) level.
    pub fn embed(&self, side: Side, index: u32) -> PointAddr {
        let mut levels = Vec::with_capacity(self.levels.len() + 1);
        levels.push(sel(side, index));
        levels.extend_from_slice(&self.levels);
        PointAddr { levels, base: self.base }
    }
}

impl fmt::Display for PointAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.levels.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            let c = match s.side {
                Side::Left => 'L',
                Side::Right => 'R',
            };
            write!(f, "{}{}", c, s.index)?;
        }
        write!(f, ":{}", self.base)
    }
}

impl std::str::FromStr for PointAddr {
    type Err = Error;

    fn from_str(s: &str) -> Result<PointAddr> {
        let (lv, base) = s
            .rsplit_once(':')
            .ok_or_else(|| Error::Parse(format!("address missing base: {s:?}")))?;
        let base = base
            .trim()
            .parse::<u32>()
            .map_err(|_| Error::Parse(format!("bad base coordinate in {s:?}")))?;
        let mut levels = Vec::new();
        for part in lv.split('.').filter(|p| !p.trim().is_empty()) {
            let part = part.trim();
            let side = match part.chars().next() {
                Some('L') => Side::Left,
                Some('R') => Side::Right,
                _ => return Err(Error::Parse(format!("bad selector {part:?} in {s:?}"))),
            };
            let index = part[1..]
                .parse::<u32>()
                .map_err(|_| Error::Parse(format!("bad selector {part:?} in {s:?}")))?;
            levels.push(sel(side, index));
        }
        Ok(PointAddr { levels, base })
    }
}

/// Space family descriptor, as exposed in the key-value document format.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceKind {
    /// `beta + 1` equally spaced points; `s = 0`, `t = beta`.
    Line { beta: u32 },
    /// `n` points, all pairwise at distance `diam`.
    Uniform { n: u32, diam: Len },
    /// Cycle of `6 m_{w-1}` copies per level over a single base edge.
    DiamondBasic { m: Vec<u32> },
    /// Six copies per level over a `beta + 1`-point line base; levels with
    /// `alpha * w^2 <= 1` collapse into the base case.
    DiamondRefined { w: u32, beta: u32, alpha: Len },
    /// Bounded-width variant: the first third of each path is an extra edge
    /// followed by `m^2` copies scaled by `1/m`.
    LgtVariant { m: Vec<u32> },
    /// Ultrametric given by a hierarchically separated tree.
    Ultrametric(Hst),
    /// Explicit weighted graph (shortest-path metric).
    Explicit(ExplicitGraph),
}

/// Child of a cycle segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ChildKind {
    /// A plain unit edge (two points, distance 1 before scaling).
    Edge,
    /// The full space one level below.
    Below,
}

#[derive(Debug, Clone)]
struct Segment {
    child: ChildKind,
    scale: Len,
    /// Start position along the path, in base units.
    offset: Len,
    /// `scale * diam(child)`.
    length: Len,
}

/// One composite level: both paths carry the same segment chain.
#[derive(Debug, Clone)]
struct CycleLevel {
    segments: Vec<Segment>,
    /// Path length = d(s, t) at this level, in base units.
    path_len: Len,
}

#[derive(Debug, Clone)]
enum Structure {
    Line { beta: u32 },
    Uniform { n: u32, diam: Len },
    /// `levels[0]` is the lowest composite level (just above the base),
    /// `levels.last()` is the top. The base is a line of `base_beta` edges.
    Cycle { base_beta: u32, levels: Vec<CycleLevel> },
    Hst(Hst),
    Graph(ExplicitGraph),
}

/// An immutable metric space; distance queries are pure and shareable.
#[derive(Debug, Clone)]
pub struct MetricSpace {
    kind: SpaceKind,
    unit: Len,
    structure: Structure,
}

/// `beta + 1` equally spaced points on a line.
pub fn line_metric(beta: u32) -> Result<MetricSpace> {
    if beta == 0 {
        return Err(Error::InvalidParams("line metric needs beta >= 1 (s = t otherwise)".into()));
    }
    Ok(MetricSpace {
        kind: SpaceKind::Line { beta },
        unit: len(1),
        structure: Structure::Line { beta },
    })
}

/// `n`-point uniform metric of diameter `diam`.
pub fn uniform_metric(n: u32, diam: Len) -> Result<MetricSpace> {
    if n < 2 || diam <= Len::zero() {
        return Err(Error::InvalidParams("uniform metric needs n >= 2, diam > 0".into()));
    }
    Ok(MetricSpace {
        kind: SpaceKind::Uniform { n, diam },
        unit: len(1),
        structure: Structure::Uniform { n, diam },
    })
}

/// Level-`w` basic diamond: level 0 is a single unit edge, level `i` a cycle
/// of `6 m_{i-1}` copies of level `i-1` with antipodal terminals.
pub fn diamond_basic(w: u32, m: &[u32]) -> Result<MetricSpace> {
    check_m_sequence(w, m)?;
    let mut levels = Vec::new();
    let mut child_diam = len(1);
    for lvl in 0..w {
        let copies = 3 * m[lvl as usize];
        let segments = uniform_segments(copies, ChildKind::Below, len(1), child_diam);
        let path_len = child_diam * len(copies as i64);
        levels.push(CycleLevel { segments, path_len });
        child_diam = path_len;
    }
    Ok(MetricSpace {
        kind: SpaceKind::DiamondBasic { m: m[..w as usize].to_vec() },
        unit: len(1),
        structure: Structure::Cycle { base_beta: 1, levels },
    })
}

/// Level-`w` refined diamond: a `beta`-edge line while `alpha * w'^2 <= 1`,
/// then six copies per level glued in a circle.
pub fn diamond_refined(w: u32, beta: u32, alpha: Len) -> Result<MetricSpace> {
    if beta < 2 {
        return Err(Error::InvalidParams("refined diamond needs beta >= 2".into()));
    }
    if alpha <= Len::zero() {
        return Err(Error::InvalidParams("alpha must be positive".into()));
    }
    let w0 = base_level(alpha);
    let rec_levels = w.saturating_sub(w0);
    let mut levels = Vec::new();
    let mut child_diam = len(beta as i64);
    for _ in 0..rec_levels {
        let segments = uniform_segments(3, ChildKind::Below, len(1), child_diam);
        let path_len = child_diam * len(3);
        levels.push(CycleLevel { segments, path_len });
        child_diam = path_len;
    }
    Ok(MetricSpace {
        kind: SpaceKind::DiamondRefined { w, beta, alpha },
        unit: len(1),
        structure: Structure::Cycle { base_beta: beta, levels },
    })
}

/// Lower-bound constants `C_w` for the bounded-width variant: integral
/// schedule `C_0 = 1`, `C_{k+1} = C_k + floor(sqrt(C_k))`, which grows like
/// `w^2/4` and keeps the initial extra edge `C_w / m_w <= 1` whenever
/// `m_w >= C_w`.
pub fn lgt_constant(level: u32) -> i64 {
    let mut c = 1i64;
    for _ in 0..level {
        c += isqrt(c);
    }
    c
}

/// Level-`w` bounded-width variant: per level, each path is one edge of
/// length `C/m` followed by `m^2` copies scaled by `1/m` and then `2m` full
/// copies of the previous level.
pub fn lgt_variant(w: u32, m: &[u32]) -> Result<MetricSpace> {
    check_m_sequence(w, m)?;
    let mut levels = Vec::new();
    let mut child_diam = len(1);
    for lvl in 0..w {
        let mw = m[lvl as usize] as i64;
        let c = lgt_constant(lvl);
        if c > mw {
            return Err(Error::InvalidParams(format!(
                "lgt variant needs m_{lvl} >= C_{lvl} = {c} so the extra edge has length <= 1 (got m_{lvl} = {mw})"
            )));
        }
        let mut segments = Vec::with_capacity(1 + (mw * mw) as usize + 2 * mw as usize);
        let mut offset = Len::zero();
        let mut push = |segments: &mut Vec<Segment>, child, scale: Len, diam: Len| {
            let length = scale * diam;
            segments.push(Segment { child, scale, offset, length });
            offset += length;
        };
        push(&mut segments, ChildKind::Edge, frac(c, mw), len(1));
        for _ in 0..mw * mw {
            push(&mut segments, ChildKind::Below, frac(1, mw), child_diam);
        }
        for _ in 0..2 * mw {
            push(&mut segments, ChildKind::Below, len(1), child_diam);
        }
        let path_len = offset;
        levels.push(CycleLevel { segments, path_len });
        child_diam = path_len;
    }
    Ok(MetricSpace {
        kind: SpaceKind::LgtVariant { m: m[..w as usize].to_vec() },
        unit: len(1),
        structure: Structure::Cycle { base_beta: 1, levels },
    })
}

/// Ultrametric space over the leaves of an HST.
pub fn ultrametric(hst: Hst) -> MetricSpace {
    MetricSpace {
        kind: SpaceKind::Ultrametric(hst.clone()),
        unit: len(1),
        structure: Structure::Hst(hst),
    }
}

/// Shortest-path metric of an explicit weighted graph.
pub fn explicit(graph: ExplicitGraph) -> MetricSpace {
    MetricSpace {
        kind: SpaceKind::Explicit(graph.clone()),
        unit: len(1),
        structure: Structure::Graph(graph),
    }
}

fn check_m_sequence(w: u32, m: &[u32]) -> Result<()> {
    if (m.len() as u32) < w {
        return Err(Error::InvalidParams(format!(
            "m-sequence has {} entries but {w} levels are requested",
            m.len()
        )));
    }
    if m.iter().any(|&x| x == 0) {
        return Err(Error::InvalidParams("m-sequence entries must be positive".into()));
    }
    if m.windows(2).any(|p| p[0] > p[1]) {
        return Err(Error::InvalidParams("m-sequence must be non-decreasing".into()));
    }
    Ok(())
}

fn uniform_segments(copies: u32, child: ChildKind, scale: Len, child_diam: Len) -> Vec<Segment> {
    let length = scale * child_diam;
    (0..copies)
        .map(|i| Segment { child, scale, offset: length * len(i as i64), length })
        .collect()
}

impl MetricSpace {
    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn unit(&self) -> Len {
        self.unit
    }

    pub fn with_unit(mut self, unit: Len) -> Self {
        assert!(unit > Len::zero(), "unit must be positive");
        self.unit = unit;
        self
    }

    /// Number of points, exact.
    pub fn point_count(&self) -> u64 {
        match &self.structure {
            Structure::Line { beta } => *beta as u64 + 1,
            Structure::Uniform { n, .. } => *n as u64,
            Structure::Cycle { base_beta, levels } => {
                let mut count = *base_beta as u64 + 1;
                for lvl in levels {
                    let per_path: u64 = lvl
                        .segments
                        .iter()
                        .map(|s| match s.child {
                            ChildKind::Edge => 2u64,
                            ChildKind::Below => count,
                        })
                        .sum();
                    count = 2 * per_path - 2 * lvl.segments.len() as u64;
                }
                count
            }
            Structure::Hst(h) => h.leaf_count() as u64,
            Structure::Graph(g) => g.vertex_count() as u64,
        }
    }

    /// Diameter in external units.
    pub fn diameter(&self) -> Len {
        self.unit * self.diameter_units()
    }

    fn diameter_units(&self) -> Len {
        match &self.structure {
            Structure::Line { beta } => len(*beta as i64),
            Structure::Uniform { diam, .. } => *diam,
            Structure::Cycle { base_beta, levels } => levels
                .last()
                .map(|l| l.path_len)
                .unwrap_or_else(|| len(*base_beta as i64)),
            Structure::Hst(h) => h.diameter(),
            Structure::Graph(g) => g.diameter(),
        }
    }

    /// Source terminal (canonical address).
    pub fn s(&self) -> PointAddr {
        match &self.structure {
            Structure::Line { .. } | Structure::Uniform { .. } => PointAddr::base(0),
            Structure::Cycle { levels, .. } => self.terminal_addr(levels.len(), false),
            Structure::Hst(_) | Structure::Graph(_) => PointAddr::base(0),
        }
    }

    /// Target terminal (canonical address).
    pub fn t(&self) -> PointAddr {
        match &self.structure {
            Structure::Line { beta } => PointAddr::base(*beta),
            Structure::Uniform { n, .. } => PointAddr::base(*n - 1),
            Structure::Cycle { levels, .. } => self.terminal_addr(levels.len(), true),
            Structure::Hst(h) => PointAddr::base(h.leaf_count() as u32 - 1),
            Structure::Graph(g) => PointAddr::base(g.vertex_count() as u32 - 1),
        }
    }

    /// s (if `t_side` is false) or t of the sub-space spanning the lowest
    /// `depth` composite levels.
    fn terminal_addr(&self, depth: usize, t_side: bool) -> PointAddr {
        let Structure::Cycle { base_beta, levels } = &self.structure else {
            unreachable!("terminal_addr is cycle-only")
        };
        let mut out = Vec::with_capacity(depth);
        let mut d = depth;
        while d > 0 {
            let lvl = &levels[d - 1];
            let index = if t_side { lvl.segments.len() as u32 } else { 1 };
            out.push(sel(Side::Left, index));
            let seg = &lvl.segments[index as usize - 1];
            match seg.child {
                ChildKind::Edge => {
                    return PointAddr::new(out, if t_side { 1 } else { 0 });
                }
                ChildKind::Below => d -= 1,
            }
        }
        PointAddr::new(out, if t_side { *base_beta } else { 0 })
    }

    /// Exact distance between two canonical addresses, in external units.
    pub fn distance(&self, x: &PointAddr, y: &PointAddr) -> Result<Len> {
        Ok(self.unit * self.distance_units(x, y)?)
    }

    fn distance_units(&self, x: &PointAddr, y: &PointAddr) -> Result<Len> {
        match &self.structure {
            Structure::Line { beta } => {
                self.check_base(*beta, x)?;
                self.check_base(*beta, y)?;
                let (a, b) = (x.base as i64, y.base as i64);
                Ok(len((a - b).abs()))
            }
            Structure::Uniform { n, diam } => {
                self.check_base(n - 1, x)?;
                self.check_base(n - 1, y)?;
                Ok(if x.base == y.base { Len::zero() } else { *diam })
            }
            Structure::Hst(h) => h.leaf_distance(x, y),
            Structure::Graph(g) => g.shortest_path_len(x, y),
            Structure::Cycle { levels, .. } => {
                let d = levels.len();
                self.cycle_distance(d, &x.levels[..], x.base, &y.levels[..], y.base)
            }
        }
    }

    fn check_base(&self, max: u32, p: &PointAddr) -> Result<()> {
        if !p.levels.is_empty() || p.base > max {
            return Err(Error::BadAddress {
                addr: p.to_string(),
                reason: format!("expected a bare coordinate in 0..={max}"),
            });
        }
        Ok(())
    }

    /// Distance within the sub-space spanning the lowest `depth` composite
    /// levels, with addresses given as (remaining selector slice, base).
    fn cycle_distance(&self, depth: usize, xl: &[CopySelector], xb: u32, yl: &[CopySelector], yb: u32) -> Result<Len> {
        let Structure::Cycle { base_beta, levels } = &self.structure else { unreachable!() };
        if depth == 0 {
            let (a, b) = (xb as i64, yb as i64);
            if xl.is_empty() && yl.is_empty() && xb <= *base_beta && yb <= *base_beta {
                return Ok(len((a - b).abs()));
            }
            return Err(Error::BadAddress {
                addr: format!("{}", PointAddr::new(xl.to_vec(), xb)),
                reason: "address deeper than the space".into(),
            });
        }
        let lvl = &levels[depth - 1];
        let (sx, rx) = split_level(xl, xb, lvl)?;
        let (sy, ry) = split_level(yl, yb, lvl)?;
        if sx == sy {
            let seg = &lvl.segments[sx.index as usize - 1];
            let inner = self.child_distance(depth, seg, rx, ry)?;
            return Ok(seg.scale_applied(inner));
        }
        // Different segments: exit via terminals, travel along cycle arcs.
        // A same-segment detour around the cycle can never be shorter than
        // the within-copy metric (the rest of the cycle spans >= 5 segment
        // lengths); the Dijkstra oracle validates this in tests.
        let circumference = lvl.path_len * len(2);
        let mut best: Option<Len> = None;
        for (exit_x, jx) in self.exits(depth, lvl, sx, rx)? {
            for (exit_y, jy) in self.exits(depth, lvl, sy, ry)? {
                let gap = if jx >= jy { jx - jy } else { jy - jx };
                let arc = gap.min(circumference - gap);
                let total = exit_x + arc + exit_y;
                best = Some(match best {
                    Some(b) if b <= total => b,
                    _ => total,
                });
            }
        }
        Ok(best.unwrap())
    }

    /// Distances from a point inside a segment to the segment's two
    /// terminals, paired with each terminal's position on the cycle.
    fn exits(
        &self,
        depth: usize,
        lvl: &CycleLevel,
        s: CopySelector,
        rest: (&[CopySelector], u32),
    ) -> Result<[(Len, Len); 2]> {
        let seg = &lvl.segments[s.index as usize - 1];
        let to_s = seg.scale_applied(self.child_terminal_distance(depth, seg, rest, false)?);
        let to_t = seg.scale_applied(self.child_terminal_distance(depth, seg, rest, true)?);
        // Cycle coordinate: left-path position p maps to p, right-path to
        // circumference - p (both paths share s at 0 and t at path_len).
        let pos = |path_pos: Len| match s.side {
            Side::Left => path_pos,
            Side::Right => {
                if path_pos == Len::zero() || path_pos == lvl.path_len {
                    path_pos
                } else {
                    lvl.path_len * len(2) - path_pos
                }
            }
        };
        Ok([(to_s, pos(seg.offset)), (to_t, pos(seg.offset + seg.length))])
    }

    fn child_distance(
        &self,
        depth: usize,
        seg: &Segment,
        x: (&[CopySelector], u32),
        y: (&[CopySelector], u32),
    ) -> Result<Len> {
        match seg.child {
            ChildKind::Edge => {
                let v = |(l, b): (&[CopySelector], u32)| -> Result<i64> {
                    if !l.is_empty() || b > 1 {
                        return Err(Error::BadAddress {
                            addr: format!("{}", PointAddr::new(l.to_vec(), b)),
                            reason: "edge segments have coordinates 0 and 1".into(),
                        });
                    }
                    Ok(b as i64)
                };
                Ok(len((v(x)? - v(y)?).abs()))
            }
            ChildKind::Below => self.cycle_distance(depth - 1, x.0, x.1, y.0, y.1),
        }
    }

    fn child_terminal_distance(
        &self,
        depth: usize,
        seg: &Segment,
        x: (&[CopySelector], u32),
        t_side: bool,
    ) -> Result<Len> {
        match seg.child {
            ChildKind::Edge => {
                if !x.0.is_empty() || x.1 > 1 {
                    return Err(Error::BadAddress {
                        addr: PointAddr::new(x.0.to_vec(), x.1).to_string(),
                        reason: "edge segments have coordinates 0 and 1".into(),
                    });
                }
                let b = x.1 as i64;
                Ok(len(if t_side { 1 - b } else { b }))
            }
            ChildKind::Below => {
                let term = self.terminal_addr(depth - 1, t_side);
                self.cycle_distance(depth - 1, x.0, x.1, &term.levels, term.base)
            }
        }
    }

    /// Rewrites an address to canonical form; errors if it is out of range.
    pub fn canonicalize(&self, p: &PointAddr) -> Result<PointAddr> {
        match &self.structure {
            Structure::Line { beta } => {
                self.check_base(*beta, p)?;
                Ok(p.clone())
            }
            Structure::Uniform { n, .. } => {
                self.check_base(n - 1, p)?;
                Ok(p.clone())
            }
            Structure::Hst(h) => {
                self.check_base(h.leaf_count() as u32 - 1, p)?;
                Ok(p.clone())
            }
            Structure::Graph(g) => {
                self.check_base(g.vertex_count() as u32 - 1, p)?;
                Ok(p.clone())
            }
            Structure::Cycle { levels, .. } => self.canonicalize_at(levels.len(), &p.levels, p.base),
        }
    }

    fn canonicalize_at(&self, depth: usize, lv: &[CopySelector], base: u32) -> Result<PointAddr> {
        let Structure::Cycle { base_beta, levels } = &self.structure else { unreachable!() };
        if depth == 0 {
            if lv.is_empty() && base <= *base_beta {
                return Ok(PointAddr::base(base));
            }
            return Err(Error::BadAddress {
                addr: PointAddr::new(lv.to_vec(), base).to_string(),
                reason: "address does not match space depth".into(),
            });
        }
        let lvl = &levels[depth - 1];
        let (s, (rl, rb)) = split_level(lv, base, lvl)?;
        let seg = &lvl.segments[s.index as usize - 1];
        let inner = match seg.child {
            ChildKind::Edge => {
                if !rl.is_empty() || rb > 1 {
                    return Err(Error::BadAddress {
                        addr: PointAddr::new(lv.to_vec(), base).to_string(),
                        reason: "edge segments have coordinates 0 and 1".into(),
                    });
                }
                PointAddr::base(rb)
            }
            ChildKind::Below => self.canonicalize_at(depth - 1, rl, rb)?,
        };
        let last = lvl.segments.len() as u32;
        let is_s = inner == self.segment_terminal(depth, seg, false);
        let is_t = inner == self.segment_terminal(depth, seg, true);
        let rebuilt = |s: CopySelector, inner: PointAddr| {
            let mut out = Vec::with_capacity(1 + inner.levels.len());
            out.push(s);
            out.extend_from_slice(&inner.levels);
            PointAddr::new(out, inner.base)
        };
        if is_s {
            if s.index == 1 {
                // Global s: shared by both paths' first segments.
                let seg1 = &lvl.segments[0];
                return Ok(rebuilt(sel(Side::Left, 1), self.segment_terminal(depth, seg1, false)));
            }
            // Junction: expressed as t of the previous segment on this path.
            let prev = &lvl.segments[s.index as usize - 2];
            return Ok(rebuilt(sel(s.side, s.index - 1), self.segment_terminal(depth, prev, true)));
        }
        if is_t && s.index == last {
            let segl = &lvl.segments[last as usize - 1];
            return Ok(rebuilt(sel(Side::Left, last), self.segment_terminal(depth, segl, true)));
        }
        Ok(rebuilt(s, inner))
    }

    /// Canonical s/t address of a segment's child space.
    fn segment_terminal(&self, depth: usize, seg: &Segment, t_side: bool) -> PointAddr {
        match seg.child {
            ChildKind::Edge => PointAddr::base(if t_side { 1 } else { 0 }),
            ChildKind::Below => self.terminal_addr(depth - 1, t_side),
        }
    }

    /// The s<->t reflection automorphism (segment i -> last+1-i on each
    /// path, recursively). Used to mirror request sequences for repetition.
    pub fn reflect(&self, p: &PointAddr) -> Result<PointAddr> {
        match &self.structure {
            Structure::Line { beta } => {
                self.check_base(*beta, p)?;
                Ok(PointAddr::base(*beta - p.base))
            }
            Structure::Cycle { levels, .. } => {
                let q = self.reflect_at(levels.len(), &p.levels, p.base)?;
                self.canonicalize(&q)
            }
            _ => Err(Error::InvalidParams("reflection is defined for line and diamond families".into())),
        }
    }

    fn reflect_at(&self, depth: usize, lv: &[CopySelector], base: u32) -> Result<PointAddr> {
        let Structure::Cycle { base_beta, levels } = &self.structure else { unreachable!() };
        if depth == 0 {
            return Ok(PointAddr::base(*base_beta - base));
        }
        let lvl = &levels[depth - 1];
        let (s, (rl, rb)) = split_level(lv, base, lvl)?;
        let seg = &lvl.segments[s.index as usize - 1];
        let last = lvl.segments.len() as u32;
        let mirrored_index = last + 1 - s.index;
        // Segment chains are palindromic only for the uniform families; the
        // bounded-width variant is not reflection-symmetric, so reject it.
        let mseg = &lvl.segments[mirrored_index as usize - 1];
        if mseg.child != seg.child || mseg.scale != seg.scale {
            return Err(Error::InvalidParams("space is not reflection-symmetric".into()));
        }
        let inner = match seg.child {
            ChildKind::Edge => PointAddr::base(1 - rb.min(1)),
            ChildKind::Below => self.reflect_at(depth - 1, rl, rb)?,
        };
        let mut out = Vec::with_capacity(1 + inner.levels.len());
        out.push(sel(s.side, mirrored_index));
        out.extend_from_slice(&inner.levels);
        Ok(PointAddr::new(out, inner.base))
    }

    /// All points, canonical and sorted. Errors above the cap.
    pub fn enumerate_points(&self, cap: u64) -> Result<Vec<PointAddr>> {
        let count = self.point_count();
        if count > cap {
            return Err(Error::CapExceeded { count, cap });
        }
        match &self.structure {
            Structure::Line { beta } => Ok((0..=*beta).map(PointAddr::base).collect()),
            Structure::Uniform { n, .. } => Ok((0..*n).map(PointAddr::base).collect()),
            Structure::Hst(h) => Ok((0..h.leaf_count() as u32).map(PointAddr::base).collect()),
            Structure::Graph(g) => Ok((0..g.vertex_count() as u32).map(PointAddr::base).collect()),
            Structure::Cycle { levels, .. } => {
                let mut set = std::collections::BTreeSet::new();
                self.enumerate_at(levels.len(), &mut |p| {
                    set.insert(p);
                })?;
                Ok(set.into_iter().collect())
            }
        }
    }

    fn enumerate_at(&self, depth: usize, emit: &mut dyn FnMut(PointAddr)) -> Result<()> {
        let Structure::Cycle { base_beta, levels } = &self.structure else { unreachable!() };
        if depth == 0 {
            for b in 0..=*base_beta {
                emit(PointAddr::base(b));
            }
            return Ok(());
        }
        let lvl = &levels[depth - 1];
        for side in [Side::Left, Side::Right] {
            for (i, seg) in lvl.segments.iter().enumerate() {
                let index = i as u32 + 1;
                let mut inner_emit = |inner: PointAddr| {
                    let p = inner.embed(side, index);
                    let c = self
                        .canonicalize_at(depth, &p.levels, p.base)
                        .expect("enumerated address is valid");
                    emit(c);
                };
                match seg.child {
                    ChildKind::Edge => {
                        inner_emit(PointAddr::base(0));
                        inner_emit(PointAddr::base(1));
                    }
                    ChildKind::Below => self.enumerate_at(depth - 1, &mut inner_emit)?,
                }
            }
        }
        Ok(())
    }

    /// Underlying weighted edges (canonical endpoints), for materialization.
    pub(crate) fn raw_edges(&self) -> Result<Vec<(PointAddr, PointAddr, Len)>> {
        match &self.structure {
            Structure::Line { beta } => Ok((0..*beta)
                .map(|i| (PointAddr::base(i), PointAddr::base(i + 1), self.unit))
                .collect()),
            Structure::Uniform { n, diam } => {
                let mut out = Vec::new();
                for i in 0..*n {
                    for j in i + 1..*n {
                        out.push((PointAddr::base(i), PointAddr::base(j), self.unit * *diam));
                    }
                }
                Ok(out)
            }
            Structure::Hst(h) => {
                let n = h.leaf_count() as u32;
                let mut out = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        let d = h.leaf_distance(&PointAddr::base(i), &PointAddr::base(j))?;
                        out.push((PointAddr::base(i), PointAddr::base(j), self.unit * d));
                    }
                }
                Ok(out)
            }
            Structure::Graph(g) => Ok(g.edges().to_vec()),
            Structure::Cycle { levels, .. } => {
                let mut out = Vec::new();
                self.edges_at(levels.len(), len(1), &mut |u, v, w| out.push((u, v, w * self.unit)))?;
                Ok(out)
            }
        }
    }

    fn edges_at(
        &self,
        depth: usize,
        scale: Len,
        emit: &mut dyn FnMut(PointAddr, PointAddr, Len),
    ) -> Result<()> {
        let Structure::Cycle { base_beta, levels } = &self.structure else { unreachable!() };
        if depth == 0 {
            for b in 0..*base_beta {
                emit(PointAddr::base(b), PointAddr::base(b + 1), scale);
            }
            return Ok(());
        }
        let lvl = &levels[depth - 1];
        for side in [Side::Left, Side::Right] {
            for (i, seg) in lvl.segments.iter().enumerate() {
                let index = i as u32 + 1;
                let mut inner_emit = |u: PointAddr, v: PointAddr, w: Len| {
                    let ue = u.embed(side, index);
                    let ve = v.embed(side, index);
                    let cu = self.canonicalize_at(depth, &ue.levels, ue.base).expect("valid edge endpoint");
                    let cv = self.canonicalize_at(depth, &ve.levels, ve.base).expect("valid edge endpoint");
                    emit(cu, cv, w);
                };
                match seg.child {
                    ChildKind::Edge => {
                        inner_emit(PointAddr::base(0), PointAddr::base(1), scale * seg.scale);
                    }
                    ChildKind::Below => {
                        self.edges_at(depth - 1, scale * seg.scale, &mut inner_emit)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Serializes the space descriptor to the key-value document format.
    pub fn descriptor(&self) -> String {
        use crate::rational::format_len;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        match &self.kind {
            SpaceKind::Line { beta } => {
                kv("kind", "line".into());
                kv("beta", beta.to_string());
            }
            SpaceKind::Uniform { n, diam } => {
                kv("kind", "uniform".into());
                kv("points", n.to_string());
                kv("diam", format_len(*diam));
            }
            SpaceKind::DiamondBasic { m } => {
                kv("kind", "diamond_basic".into());
                kv("w", m.len().to_string());
                kv("m", m.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
            }
            SpaceKind::DiamondRefined { w, beta, alpha } => {
                kv("kind", "diamond_refined".into());
                kv("w", w.to_string());
                kv("beta", beta.to_string());
                kv("alpha", format_len(*alpha));
            }
            SpaceKind::LgtVariant { m } => {
                kv("kind", "lgt_variant".into());
                kv("w", m.len().to_string());
                kv("m", m.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
            }
            SpaceKind::Ultrametric(_) => {
                kv("kind", "ultrametric".into());
                kv("leaves", self.point_count().to_string());
            }
            SpaceKind::Explicit(_) => {
                kv("kind", "explicit".into());
                kv("vertices", self.point_count().to_string());
            }
        }
        kv("unit", format_len(self.unit));
        out
    }

    /// Parses a key-value descriptor produced by [`Self::descriptor`].
    pub fn from_descriptor(doc: &str) -> Result<MetricSpace> {
        let mut map = std::collections::BTreeMap::new();
        for line in doc.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("descriptor line without '=': {line:?}")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            map.get(k)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("descriptor missing key {k:?}")))
        };
        let parse_u32 = |s: String| s.parse::<u32>().map_err(|_| Error::Parse(format!("bad integer {s:?}")));
        let parse_m = |s: String| -> Result<Vec<u32>> {
            s.split(',')
                .map(|x| x.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad m-sequence {s:?}"))))
                .collect()
        };
        let kind = get("kind")?;
        let mut space = match kind.as_str() {
            "line" => line_metric(parse_u32(get("beta")?)?)?,
            "uniform" => uniform_metric(parse_u32(get("points")?)?, crate::rational::parse_len(&get("diam")?)?)?,
            "diamond_basic" => {
                let m = parse_m(get("m")?)?;
                diamond_basic(m.len() as u32, &m)?
            }
            "diamond_refined" => diamond_refined(
                parse_u32(get("w")?)?,
                parse_u32(get("beta")?)?,
                crate::rational::parse_len(&get("alpha")?)?,
            )?,
            "lgt_variant" => {
                let m = parse_m(get("m")?)?;
                lgt_variant(m.len() as u32, &m)?
            }
            other => return Err(Error::Parse(format!("unknown space kind {other:?}"))),
        };
        if let Some(u) = map.get("unit") {
            space = space.with_unit(crate::rational::parse_len(u)?);
        }
        Ok(space)
    }
}

impl Segment {
    fn scale_applied(&self, inner: Len) -> Len {
        self.scale * inner
    }
}

fn split_level<'a>(
    lv: &'a [CopySelector],
    base: u32,
    lvl: &CycleLevel,
) -> Result<(CopySelector, (&'a [CopySelector], u32))> {
    let Some((first, rest)) = lv.split_first() else {
        return Err(Error::BadAddress {
            addr: PointAddr::new(lv.to_vec(), base).to_string(),
            reason: "address shallower than the space".into(),
        });
    };
    if first.index == 0 || first.index as usize > lvl.segments.len() {
        return Err(Error::BadAddress {
            addr: PointAddr::new(lv.to_vec(), base).to_string(),
            reason: format!("segment index {} out of 1..={}", first.index, lvl.segments.len()),
        });
    }
    Ok((*first, (rest, base)))
}

#[cfg(test)]
mod tests;
