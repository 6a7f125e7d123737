//! Symbolic request sets and sequences shared by all adversaries and games.
//!
//! Every set the constructions emit is a finite union of copy-prefixed
//! singleton atoms (the hierarchical [`PointAddr`] encoding carries the copy
//! path), so membership and nearest-point queries run in time proportional
//! to address depth times the atom count — the space itself is never
//! enumerated. Polarity distinguishes the two conventions in play: requests
//! the server must move *into*, and (for the universal construction on
//! ultrametrics) requests naming where the server must *not* be.

use crate::metrics::MetricSpace;
use crate::rational::Len;
use crate::{Error, PointAddr, Result, Side};
use num::BigRational;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    MustBeIn,
    MustNotBeIn,
}

/// An immutable request: a union of singleton atoms plus a polarity.
/// Atoms are canonical, sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RequestSet {
    atoms: Vec<PointAddr>,
    polarity: Polarity,
}

impl RequestSet {
    pub fn new(mut atoms: Vec<PointAddr>, polarity: Polarity) -> RequestSet {
        atoms.sort();
        atoms.dedup();
        RequestSet { atoms, polarity }
    }

    pub fn must_be_in(atoms: Vec<PointAddr>) -> RequestSet {
        RequestSet::new(atoms, Polarity::MustBeIn)
    }

    pub fn must_not_be_in(atoms: Vec<PointAddr>) -> RequestSet {
        RequestSet::new(atoms, Polarity::MustNotBeIn)
    }

    pub fn singleton(p: PointAddr) -> RequestSet {
        RequestSet::new(vec![p], Polarity::MustBeIn)
    }

    pub fn empty() -> RequestSet {
        RequestSet::new(Vec::new(), Polarity::MustBeIn)
    }

    pub fn atoms(&self) -> &[PointAddr] {
        &self.atoms
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn cardinality(&self) -> usize {
        self.atoms.len()
    }

    /// Polarity-free membership: whether `p` is one of the atoms.
    pub fn contains(&self, p: &PointAddr) -> bool {
        self.atoms.binary_search(p).is_ok()
    }

    /// Whether a server at `p` satisfies this request under its polarity.
    pub fn satisfied_by(&self, p: &PointAddr) -> bool {
        match self.polarity {
            Polarity::MustBeIn => self.contains(p),
            Polarity::MustNotBeIn => !self.contains(p),
        }
    }

    /// Atoms whose outermost copy selector lies on `side`.
    pub fn atoms_on_side(&self, side: Side) -> Vec<PointAddr> {
        self.atoms
            .iter()
            .filter(|a| a.levels.first().map(|s| s.side) == Some(side))
            .cloned()
            .collect()
    }

    /// New set with every atom embedded one level deeper.
    pub fn embed(&self, side: Side, index: u32) -> RequestSet {
        RequestSet::new(
            self.atoms.iter().map(|a| a.embed(side, index)).collect(),
            self.polarity,
        )
    }

    /// Union with extra atoms (polarity preserved).
    pub fn union_atoms(&self, extra: &[PointAddr]) -> RequestSet {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(extra);
        RequestSet::new(atoms, self.polarity)
    }

    /// Canonicalizes every atom within the given space.
    pub fn canonicalized(&self, space: &MetricSpace) -> Result<RequestSet> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| space.canonicalize(a))
            .collect::<Result<Vec<_>>>()?;
        Ok(RequestSet::new(atoms, self.polarity))
    }
}

/// Points a server may legally occupy while serving `set` in `space`.
/// `MustBeIn` requests list their atoms; `MustNotBeIn` requests enumerate
/// the complement, which needs an enumerable space.
pub fn eligible_points(space: &MetricSpace, set: &RequestSet, cap: u64) -> Result<Vec<PointAddr>> {
    match set.polarity() {
        Polarity::MustBeIn => Ok(set.atoms().to_vec()),
        Polarity::MustNotBeIn => {
            let all = space.enumerate_points(cap)?;
            Ok(all.into_iter().filter(|p| !set.contains(p)).collect())
        }
    }
}

/// Nearest point of the (polarity-resolved) set, with its distance.
/// Ties break to the lexicographically smallest canonical address.
pub fn nearest_in(space: &MetricSpace, set: &RequestSet, from: &PointAddr) -> Result<(PointAddr, Len)> {
    if set.satisfied_by(from) {
        return Ok((from.clone(), Len::from_integer(0)));
    }
    let candidates = eligible_points(space, set, crate::metrics::graph::DEFAULT_MATERIALIZE_CAP)?;
    let mut best: Option<(PointAddr, Len)> = None;
    for c in candidates {
        let d = space.distance(from, &c)?;
        let better = match &best {
            Some((bp, bd)) => (d, &c) < (*bd, bp),
            None => true,
        };
        if better {
            best = Some((c, d));
        }
    }
    best.ok_or(Error::Infeasible {
        step: 0,
        reason: "request admits no eligible point".into(),
    })
}

/// Stage/provenance tag attached to a chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StageTag {
    Base,
    Stage1,
    Stage2a,
    Stage2b,
    Stage3,
    /// Universal-construction chunk issued in subspace `U_i`.
    Universal(u32),
}

impl fmt::Display for StageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageTag::Base => write!(f, "base"),
            StageTag::Stage1 => write!(f, "1"),
            StageTag::Stage2a => write!(f, "2a"),
            StageTag::Stage2b => write!(f, "2b"),
            StageTag::Stage3 => write!(f, "3"),
            StageTag::Universal(i) => write!(f, "U{i}"),
        }
    }
}

impl std::str::FromStr for StageTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<StageTag> {
        Ok(match s {
            "base" => StageTag::Base,
            "1" => StageTag::Stage1,
            "2a" => StageTag::Stage2a,
            "2b" => StageTag::Stage2b,
            "3" => StageTag::Stage3,
            u if u.starts_with('U') => StageTag::Universal(
                u[1..].parse().map_err(|_| Error::Parse(format!("bad stage tag {s:?}")))?,
            ),
            _ => return Err(Error::Parse(format!("bad stage tag {s:?}"))),
        })
    }
}

/// Chunk boundary metadata: the chunk covers requests `[start, end)`.
/// The size, when present, is a function of the strictly preceding chunks
/// only (it is fixed before the chunk's own requests are revealed).
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkMeta {
    pub start: usize,
    pub end: usize,
    pub size: Option<BigRational>,
    pub stage: StageTag,
}

/// An ordered request sequence with optional chunk decomposition.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RequestSeq {
    pub requests: Vec<RequestSet>,
    pub chunks: Vec<ChunkMeta>,
}

impl RequestSeq {
    pub fn from_requests(requests: Vec<RequestSet>) -> RequestSeq {
        RequestSeq { requests, chunks: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn push_chunk(&mut self, requests: Vec<RequestSet>, size: Option<BigRational>, stage: StageTag) {
        let start = self.requests.len();
        self.requests.extend(requests);
        self.chunks.push(ChunkMeta { start, end: self.requests.len(), size, stage });
    }

    pub fn chunk_requests(&self, i: usize) -> &[RequestSet] {
        let c = &self.chunks[i];
        &self.requests[c.start..c.end]
    }

    /// Concatenation; chunk boundaries of `other` are shifted and appended.
    pub fn extend(&mut self, other: RequestSeq) {
        let off = self.requests.len();
        self.requests.extend(other.requests);
        self.chunks.extend(other.chunks.into_iter().map(|c| ChunkMeta {
            start: c.start + off,
            end: c.end + off,
            ..c
        }));
    }

    /// Line-oriented text format: one request per line (`IN`/`OUT` polarity
    /// token followed by atom addresses), chunk boundaries as comments.
    pub fn format_text(&self) -> String {
        let mut out = String::new();
        let mut boundary = 0usize;
        for (i, req) in self.requests.iter().enumerate() {
            while boundary < self.chunks.len() && self.chunks[boundary].start == i {
                let c = &self.chunks[boundary];
                out.push_str(&format!("# chunk {} ", boundary + 1));
                if let Some(size) = &c.size {
                    out.push_str(&format!("size={} ", size));
                }
                out.push_str(&format!("stage={}\n", c.stage));
                boundary += 1;
            }
            let tok = match req.polarity() {
                Polarity::MustBeIn => "IN",
                Polarity::MustNotBeIn => "OUT",
            };
            out.push_str(tok);
            for a in req.atoms() {
                out.push_str(&format!(" {a}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text format. Chunk comment lines re-establish boundaries;
    /// arbitrary other comments are ignored.
    pub fn parse_text(text: &str) -> Result<RequestSeq> {
        let mut seq = RequestSeq::default();
        let mut open_chunk: Option<(usize, Option<BigRational>, StageTag)> = None;
        let mut close = |seq: &mut RequestSeq, open: &mut Option<(usize, Option<BigRational>, StageTag)>| {
            if let Some((start, size, stage)) = open.take() {
                let end = seq.requests.len();
                seq.chunks.push(ChunkMeta { start, end, size, stage });
            }
        };
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if rest.starts_with("chunk") {
                    close(&mut seq, &mut open_chunk);
                    let mut size = None;
                    let mut stage = StageTag::Base;
                    for tok in rest.split_whitespace().skip(2) {
                        if let Some(v) = tok.strip_prefix("size=") {
                            let r: BigRational = v
                                .parse()
                                .map_err(|_| Error::Parse(format!("bad chunk size {v:?}")))?;
                            size = Some(r);
                        } else if let Some(v) = tok.strip_prefix("stage=") {
                            stage = v.parse()?;
                        }
                    }
                    open_chunk = Some((seq.requests.len(), size, stage));
                }
                continue;
            }
            let mut toks = line.split_whitespace();
            let polarity = match toks.next() {
                Some("IN") => Polarity::MustBeIn,
                Some("OUT") => Polarity::MustNotBeIn,
                other => return Err(Error::Parse(format!("bad polarity token {other:?}"))),
            };
            let atoms = toks.map(|t| t.parse::<PointAddr>()).collect::<Result<Vec<_>>>()?;
            seq.requests.push(RequestSet::new(atoms, polarity));
        }
        close(&mut seq, &mut open_chunk);
        Ok(seq)
    }

    /// Maps every atom through the space's s<->t reflection, producing the
    /// mirrored instance that drives a server back from t to s.
    pub fn mirrored(&self, space: &MetricSpace) -> Result<RequestSeq> {
        let requests = self
            .requests
            .iter()
            .map(|r| {
                let atoms = r.atoms().iter().map(|a| space.reflect(a)).collect::<Result<Vec<_>>>()?;
                Ok(RequestSet::new(atoms, r.polarity()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RequestSeq { requests, chunks: self.chunks.clone() })
    }
}
