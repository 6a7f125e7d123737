//! Hierarchically separated trees (HSTs) and the ultrametrics they define.
//!
//! An HST is a rooted node-weighted tree: internal weights are positive and
//! non-increasing from root to leaf, leaves have weight 0 and are the points
//! of the space, and the distance between two leaves is the weight of their
//! least common ancestor. Preprocessing rounds weights up to powers of two
//! and contracts equal-weight edges, turning any HST into a 2-HST while
//! distorting distances by at most a factor of 2.

use crate::rational::{len, Len};
use crate::{Error, PointAddr, Result};
use num::Zero;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum HstNode {
    Internal { weight: Len, children: Vec<HstNode> },
    Leaf { label: String },
}

impl HstNode {
    pub fn leaf(label: impl Into<String>) -> HstNode {
        HstNode::Leaf { label: label.into() }
    }

    pub fn internal(weight: Len, children: Vec<HstNode>) -> HstNode {
        HstNode::Internal { weight, children }
    }

    fn leaf_count(&self) -> usize {
        match self {
            HstNode::Leaf { .. } => 1,
            HstNode::Internal { children, .. } => children.iter().map(|c| c.leaf_count()).sum(),
        }
    }
}

#[derive(Debug, Clone)]
struct ArenaNode {
    weight: Len,
    children: Vec<usize>,
    /// Half-open leaf-index range covered by this subtree.
    range: (u32, u32),
}

/// An HST with a prebuilt index for O(depth) leaf-distance queries.
/// Leaves are addressed by their depth-first index.
#[derive(Debug, Clone)]
pub struct Hst {
    root_node: HstNode,
    arena: Vec<ArenaNode>,
    leaf_labels: Vec<String>,
}

impl PartialEq for Hst {
    fn eq(&self, other: &Self) -> bool {
        self.root_node == other.root_node
    }
}

impl Hst {
    pub fn new(root: HstNode) -> Result<Hst> {
        validate(&root, None)?;
        let mut arena = Vec::new();
        let mut leaf_labels = Vec::new();
        build_arena(&root, &mut arena, &mut leaf_labels);
        Ok(Hst { root_node: root, arena, leaf_labels })
    }

    pub fn root(&self) -> &HstNode {
        &self.root_node
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_labels.len()
    }

    pub fn leaf_labels(&self) -> &[String] {
        &self.leaf_labels
    }

    pub fn leaf_index(&self, label: &str) -> Option<u32> {
        self.leaf_labels.iter().position(|l| l == label).map(|i| i as u32)
    }

    /// Weight of the least common ancestor; 0 iff the leaves are equal.
    pub fn leaf_distance(&self, a: &PointAddr, b: &PointAddr) -> Result<Len> {
        let ai = self.check_leaf(a)?;
        let bi = self.check_leaf(b)?;
        if ai == bi {
            return Ok(Len::zero());
        }
        let mut node = 0usize;
        loop {
            let n = &self.arena[node];
            let next = n
                .children
                .iter()
                .copied()
                .find(|&c| contains(self.arena[c].range, ai) && contains(self.arena[c].range, bi));
            match next {
                Some(c) => node = c,
                None => return Ok(n.weight),
            }
        }
    }

    fn check_leaf(&self, p: &PointAddr) -> Result<u32> {
        if !p.levels.is_empty() || p.base as usize >= self.leaf_count() {
            return Err(Error::BadAddress {
                addr: p.to_string(),
                reason: format!("expected a leaf index in 0..{}", self.leaf_count()),
            });
        }
        Ok(p.base)
    }

    /// Largest pairwise distance: the weight of the highest branching node.
    pub fn diameter(&self) -> Len {
        let mut node = 0usize;
        loop {
            let n = &self.arena[node];
            match n.children.len() {
                0 => return Len::zero(),
                1 => node = n.children[0],
                _ => return n.weight,
            }
        }
    }

    /// Children of the root as (sub-Hst, leaf count) pairs, passing through
    /// single-child chains.
    pub fn branching_children(&self) -> Vec<Hst> {
        let mut node = &self.root_node;
        loop {
            match node {
                HstNode::Leaf { .. } => return Vec::new(),
                HstNode::Internal { children, .. } if children.len() == 1 => node = &children[0],
                HstNode::Internal { children, .. } => {
                    return children
                        .iter()
                        .map(|c| Hst::new(c.clone()).expect("subtree of a valid HST is valid"))
                        .collect()
                }
            }
        }
    }

    /// Rounds internal weights up to powers of two, contracts equal-weight
    /// parent/child pairs and splices single-child chains. Weights below 1
    /// are first scaled up uniformly by a power of two. The result is a
    /// 2-HST; every leaf-pair distance is distorted by a factor in [1, 2]
    /// relative to the (rescaled) input.
    pub fn preprocess(&self) -> Result<Hst> {
        let mut min_w: Option<Len> = None;
        min_weight(&self.root_node, &mut min_w);
        let scale = match min_w {
            Some(w) => {
                if w <= Len::zero() {
                    return Err(Error::InvalidParams("HST weights must be positive".into()));
                }
                let mut s = len(1);
                while s * w < len(1) {
                    s = s * len(2);
                }
                s
            }
            None => len(1),
        };
        let rounded = round_up(&self.root_node, scale);
        let contracted = contract(rounded);
        Hst::new(contracted)
    }

    /// True if every internal weight is a power of two >= 1 and every
    /// parent/child weight ratio is >= 2 (with >= 2 children per internal
    /// node, single-child chains counting as violations).
    pub fn is_preprocessed(&self) -> bool {
        fn check(node: &HstNode, parent_w: Option<Len>) -> bool {
            match node {
                HstNode::Leaf { .. } => true,
                HstNode::Internal { weight, children } => {
                    if children.len() < 2 || !is_power_of_two_ge1(*weight) {
                        return false;
                    }
                    if let Some(pw) = parent_w {
                        if *weight * len(2) > pw {
                            return false;
                        }
                    }
                    children.iter().all(|c| check(c, Some(*weight)))
                }
            }
        }
        check(&self.root_node, None)
    }

    /// Restriction of the ultrametric to a subset of leaves (by index).
    /// Unreferenced subtrees are pruned and chains spliced; leaf order is
    /// preserved. Returns the restricted tree and, for each of its leaves,
    /// the original leaf index.
    pub fn restrict(&self, keep: &[u32]) -> Result<(Hst, Vec<u32>)> {
        let keep_set: std::collections::BTreeSet<u32> = keep.iter().copied().collect();
        if keep_set.is_empty() {
            return Err(Error::InvalidParams("cannot restrict to an empty leaf set".into()));
        }
        let mut next_leaf = 0u32;
        let pruned = prune(&self.root_node, &keep_set, &mut next_leaf)
            .ok_or_else(|| Error::InvalidParams("no kept leaf is present in the tree".into()))?;
        let hst = Hst::new(contract_chains_only(pruned))?;
        Ok((hst, keep_set.into_iter().collect()))
    }

    /// Indented text format: internal nodes print their weight, leaves their
    /// label, children indented by two spaces.
    pub fn format_text(&self) -> String {
        let mut out = String::new();
        fn rec(node: &HstNode, depth: usize, out: &mut String) {
            let pad = "  ".repeat(depth);
            match node {
                HstNode::Leaf { label } => out.push_str(&format!("{pad}{label}\n")),
                HstNode::Internal { weight, children } => {
                    out.push_str(&format!("{pad}{}\n", crate::rational::format_len(*weight)));
                    for c in children {
                        rec(c, depth + 1, out);
                    }
                }
            }
        }
        rec(&self.root_node, 0, &mut out);
        out
    }

    pub fn parse_text(text: &str) -> Result<Hst> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .map(|l| {
                let indent = l.len() - l.trim_start().len();
                (indent / 2, l.trim())
            })
            .collect();
        if lines.is_empty() {
            return Err(Error::Parse("empty HST document".into()));
        }
        let mut pos = 0usize;
        let root = parse_node(&lines, &mut pos, 0)?;
        if pos != lines.len() {
            return Err(Error::Parse(format!("trailing content at line {}", pos + 1)));
        }
        Hst::new(root)
    }

    /// Random HST for test corpora: branching factor in `2..=max_children`,
    /// depth at most `max_depth`, adjacent weight ratios a power of two in
    /// `2..=8`, roughly `max_leaves` leaves (may overshoot by one branching
    /// factor).
    pub fn random(rng: &mut impl Rng, max_depth: u32, max_children: u32, max_leaves: usize) -> Hst {
        fn make_leaf(label_seq: &mut u32, budget: &mut usize) -> HstNode {
            *budget = budget.saturating_sub(1);
            let l = *label_seq;
            *label_seq += 1;
            HstNode::leaf(format!("p{l}"))
        }
        fn gen(
            rng: &mut impl Rng,
            weight: Len,
            depth_left: u32,
            budget: &mut usize,
            max_children: u32,
            label_seq: &mut u32,
        ) -> HstNode {
            if depth_left == 0 || *budget < 2 || weight < len(2) || rng.gen_bool(0.25) {
                return make_leaf(label_seq, budget);
            }
            let k = rng.gen_range(2..=max_children);
            let children = (0..k)
                .map(|_| {
                    let ratio = len(1 << rng.gen_range(1..=3));
                    let cw = weight / ratio;
                    if cw < len(1) || *budget == 0 {
                        make_leaf(label_seq, budget)
                    } else {
                        gen(rng, cw, depth_left - 1, budget, max_children, label_seq)
                    }
                })
                .collect();
            HstNode::internal(weight, children)
        }
        let mut budget = max_leaves;
        let mut label_seq = 0;
        let top = len(1 << rng.gen_range(3..=6));
        let root = gen(rng, top, max_depth, &mut budget, max_children, &mut label_seq);
        // A bare leaf is a degenerate space; wrap it with a sibling.
        let root = match root {
            HstNode::Leaf { .. } => HstNode::internal(
                top,
                vec![HstNode::leaf("p0"), HstNode::leaf("p1")],
            ),
            r => r,
        };
        Hst::new(root).expect("randomly generated HST is valid")
    }
}

fn validate(node: &HstNode, parent_w: Option<Len>) -> Result<()> {
    match node {
        HstNode::Leaf { .. } => Ok(()),
        HstNode::Internal { weight, children } => {
            if *weight <= Len::zero() {
                return Err(Error::InvalidParams("HST internal weights must be positive".into()));
            }
            if let Some(pw) = parent_w {
                if *weight > pw {
                    return Err(Error::InvalidParams(
                        "HST weights must be non-increasing from root to leaf".into(),
                    ));
                }
            }
            if children.is_empty() {
                return Err(Error::InvalidParams("HST internal nodes need at least one child".into()));
            }
            for c in children {
                validate(c, Some(*weight))?;
            }
            Ok(())
        }
    }
}

fn build_arena(node: &HstNode, arena: &mut Vec<ArenaNode>, labels: &mut Vec<String>) -> usize {
    let id = arena.len();
    arena.push(ArenaNode { weight: Len::zero(), children: Vec::new(), range: (0, 0) });
    match node {
        HstNode::Leaf { label } => {
            let leaf = labels.len() as u32;
            labels.push(label.clone());
            arena[id].range = (leaf, leaf + 1);
        }
        HstNode::Internal { weight, children } => {
            let start = labels.len() as u32;
            let kids: Vec<usize> = children.iter().map(|c| build_arena(c, arena, labels)).collect();
            let end = labels.len() as u32;
            arena[id].weight = *weight;
            arena[id].children = kids;
            arena[id].range = (start, end);
        }
    }
    id
}

fn contains(range: (u32, u32), i: u32) -> bool {
    range.0 <= i && i < range.1
}

fn min_weight(node: &HstNode, acc: &mut Option<Len>) {
    if let HstNode::Internal { weight, children } = node {
        *acc = Some(match *acc {
            Some(m) if m <= *weight => m,
            _ => *weight,
        });
        for c in children {
            min_weight(c, acc);
        }
    }
}

fn round_up(node: &HstNode, scale: Len) -> HstNode {
    match node {
        HstNode::Leaf { label } => HstNode::leaf(label.clone()),
        HstNode::Internal { weight, children } => {
            let w = *weight * scale;
            let mut p = len(1);
            while p < w {
                p = p * len(2);
            }
            HstNode::internal(p, children.iter().map(|c| round_up(c, scale)).collect())
        }
    }
}

/// Merges equal-weight children into their parent and splices single-child
/// internal nodes.
fn contract(node: HstNode) -> HstNode {
    match node {
        HstNode::Leaf { .. } => node,
        HstNode::Internal { weight, children } => {
            let mut out = Vec::new();
            let mut stack: Vec<HstNode> = children.into_iter().rev().collect();
            while let Some(c) = stack.pop() {
                match c {
                    HstNode::Internal { weight: cw, children: gs } if cw == weight => {
                        // Same weight: the edge contracts; grandchildren rise.
                        for g in gs.into_iter().rev() {
                            stack.push(g);
                        }
                    }
                    other => out.push(contract(other)),
                }
            }
            if out.len() == 1 {
                return out.pop().unwrap();
            }
            HstNode::internal(weight, out)
        }
    }
}

fn contract_chains_only(node: HstNode) -> HstNode {
    match node {
        HstNode::Leaf { .. } => node,
        HstNode::Internal { weight, children } => {
            let kids: Vec<HstNode> = children.into_iter().map(contract_chains_only).collect();
            if kids.len() == 1 {
                return kids.into_iter().next().unwrap();
            }
            HstNode::internal(weight, kids)
        }
    }
}

fn prune(node: &HstNode, keep: &std::collections::BTreeSet<u32>, next_leaf: &mut u32) -> Option<HstNode> {
    match node {
        HstNode::Leaf { label } => {
            let idx = *next_leaf;
            *next_leaf += 1;
            keep.contains(&idx).then(|| HstNode::leaf(label.clone()))
        }
        HstNode::Internal { weight, children } => {
            let kept: Vec<HstNode> = children.iter().filter_map(|c| prune(c, keep, next_leaf)).collect();
            match kept.len() {
                0 => None,
                _ => Some(HstNode::internal(*weight, kept)),
            }
        }
    }
}

fn is_power_of_two_ge1(w: Len) -> bool {
    if w.denom() != &1 || w < len(1) {
        return false;
    }
    let n = *w.numer();
    n & (n - 1) == 0
}

fn parse_node(lines: &[(usize, &str)], pos: &mut usize, depth: usize) -> Result<HstNode> {
    let (ind, text) = lines[*pos];
    if ind != depth {
        return Err(Error::Parse(format!(
            "line {}: expected indent {depth}, found {ind}",
            *pos + 1
        )));
    }
    *pos += 1;
    match crate::rational::parse_len(text) {
        Ok(weight) => {
            let mut children = Vec::new();
            while *pos < lines.len() && lines[*pos].0 == depth + 1 {
                children.push(parse_node(lines, pos, depth + 1)?);
            }
            if children.is_empty() {
                return Err(Error::Parse(format!(
                    "line {}: internal node {text:?} has no children",
                    *pos
                )));
            }
            Ok(HstNode::internal(weight, children))
        }
        Err(_) => Ok(HstNode::leaf(text)),
    }
}
