//! The complete candidate tree: every place `(I|O)` with `■ ∉ I`, `▶ ∉ O`,
//! reached from exactly one root `(a|b)` by red edges (grow `I`, only while
//! `|O| = 1`) followed by blue edges (grow `O`).
//!
//! Traversal is breadth-first and streaming. Subtrees are skipped by
//! monotonicity: the blue subtree of an underfed place is skipped entirely
//! and counted in closed form; the red-only descendants of an overfed place
//! are marked unfitting without evaluation while their own blue subtrees are
//! still explored, since adding outputs may repair an overfed place.

use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fitness::{FitnessError, FitnessEvaluator, FitnessMetric, PlaceVerdict, Threshold};
use crate::log::EventLog;
use crate::petri::Place;
use crate::sets::{ActivityId, ActivitySet};

/// Largest alphabet the brute-force oracle accepts without an override.
pub const BRUTE_FORCE_LIMIT: usize = 12;

/// Nodes evaluated together before the sequential barrier.
const CHUNK: usize = 2048;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("ordering is not a permutation of the {0} activities")]
    InvalidOrdering(usize),
    #[error("depth cutoff must be at least 2, got {0}")]
    DepthTooSmall(usize),
    #[error("brute-force enumeration over {activities} activities exceeds the limit of {limit}")]
    BudgetExceeded { activities: usize, limit: usize },
    #[error(transparent)]
    Fitness(#[from] FitnessError),
}

/// How the two activity orderings are derived from a log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum OrderingKind {
    /// `▶` first, then activity names, then `■`.
    #[default]
    Lexicographic,
    /// Most frequent first, ties broken lexicographically.
    FrequencyDescending,
}

impl OrderingKind {
    pub fn name(self) -> &'static str {
        match self {
            OrderingKind::Lexicographic => "lex",
            OrderingKind::FrequencyDescending => "freq",
        }
    }
}

impl fmt::Display for OrderingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderingKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lex" | "lexicographic" => Ok(OrderingKind::Lexicographic),
            "freq" | "frequency" => Ok(OrderingKind::FrequencyDescending),
            _ => Err(format!("unknown ordering `{s}` (lex|freq)")),
        }
    }
}

impl Serialize for OrderingKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Total orders `>_i` and `>_o`, stored as ranks (higher rank = greater).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityOrderings {
    ingoing_rank: Vec<usize>,
    outgoing_rank: Vec<usize>,
    ingoing_seq: Vec<ActivityId>,
    outgoing_seq: Vec<ActivityId>,
}

fn ranks(seq: &[ActivityId], n: usize) -> Option<Vec<usize>> {
    let mut rank = vec![usize::MAX; n];
    for (r, &a) in seq.iter().enumerate() {
        if a >= n || rank[a] != usize::MAX {
            return None;
        }
        rank[a] = r;
    }
    (seq.len() == n).then_some(rank)
}

impl ActivityOrderings {
    /// Both sequences list the activities from smallest to greatest.
    pub fn new(ingoing: Vec<ActivityId>, outgoing: Vec<ActivityId>) -> Result<Self, TreeError> {
        let n = ingoing.len();
        let bad = || TreeError::InvalidOrdering(n);
        Ok(ActivityOrderings {
            ingoing_rank: ranks(&ingoing, n).ok_or_else(bad)?,
            outgoing_rank: ranks(&outgoing, n).ok_or_else(bad)?,
            ingoing_seq: ingoing,
            outgoing_seq: outgoing,
        })
    }

    pub fn for_log(log: &EventLog, kind: OrderingKind) -> Self {
        let ends = log.endpoints();
        let class = |a: ActivityId| match ends {
            Some(e) if a == e.start => 0,
            Some(e) if a == e.end => 2,
            _ => 1,
        };
        let mut seq: Vec<ActivityId> = (0..log.activity_count()).collect();
        match kind {
            OrderingKind::Lexicographic => seq.sort_by(|&a, &b| (class(a), log.name(a)).cmp(&(class(b), log.name(b)))),
            OrderingKind::FrequencyDescending => {
                let freq = log.activity_frequencies();
                seq.sort_by_key(|&a| (Reverse(freq[a]), class(a), log.name(a)));
            }
        }
        ActivityOrderings::new(seq.clone(), seq).expect("permutation of the alphabet")
    }

    pub fn ingoing_rank(&self, a: ActivityId) -> usize {
        self.ingoing_rank[a]
    }

    pub fn outgoing_rank(&self, a: ActivityId) -> usize {
        self.outgoing_rank[a]
    }

    pub fn ingoing_sequence(&self) -> &[ActivityId] {
        &self.ingoing_seq
    }

    pub fn outgoing_sequence(&self) -> &[ActivityId] {
        &self.outgoing_seq
    }

    fn max_in(&self, set: ActivitySet) -> Option<ActivityId> {
        set.iter().max_by_key(|&a| self.ingoing_rank[a])
    }

    fn max_out(&self, set: ActivitySet) -> Option<ActivityId> {
        set.iter().max_by_key(|&a| self.outgoing_rank[a])
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Candidate forest over one alphabet.
#[derive(Debug, Clone)]
pub struct CandidateSpace {
    orderings: ActivityOrderings,
    ingoing_allowed: ActivitySet,
    outgoing_allowed: ActivitySet,
}

impl CandidateSpace {
    /// `start` may not be an output and `end` may not be an input.
    pub fn new(orderings: ActivityOrderings, start: Option<ActivityId>, end: Option<ActivityId>) -> Self {
        let all = ActivitySet::full(orderings.ingoing_seq.len());
        let ingoing_allowed = end.map_or(all, |e| all.without(e));
        let outgoing_allowed = start.map_or(all, |s| all.without(s));
        CandidateSpace { orderings, ingoing_allowed, outgoing_allowed }
    }

    pub fn for_log(log: &EventLog, kind: OrderingKind) -> Self {
        let ends = log.endpoints();
        CandidateSpace::new(ActivityOrderings::for_log(log, kind), ends.map(|e| e.start), ends.map(|e| e.end))
    }

    pub fn orderings(&self) -> &ActivityOrderings {
        &self.orderings
    }

    pub fn activity_count(&self) -> usize {
        self.orderings.ingoing_seq.len()
    }

    /// Largest possible `|I| + |O|`.
    pub fn max_depth(&self) -> usize {
        self.ingoing_allowed.len() + self.outgoing_allowed.len()
    }

    pub fn contains(&self, p: &Place) -> bool {
        !p.ingoing.is_empty()
            && !p.outgoing.is_empty()
            && p.ingoing.is_subset(self.ingoing_allowed)
            && p.outgoing.is_subset(self.outgoing_allowed)
    }

    /// All `(a|b)` in `>_i`-major, `>_o`-minor order.
    pub fn roots(&self) -> Vec<Place> {
        let mut out = Vec::new();
        for &i in &self.orderings.ingoing_seq {
            if !self.ingoing_allowed.contains(i) {
                continue;
            }
            for &o in &self.orderings.outgoing_seq {
                if self.outgoing_allowed.contains(o) {
                    out.push(Place::new(ActivitySet::singleton(i), ActivitySet::singleton(o)));
                }
            }
        }
        out
    }

    fn red_extensions(&self, p: &Place) -> impl Iterator<Item = ActivityId> + '_ {
        let from = if p.outgoing.len() == 1 {
            self.orderings.max_in(p.ingoing).map_or(0, |m| self.orderings.ingoing_rank[m] + 1)
        } else {
            usize::MAX
        };
        self.orderings.ingoing_seq.iter().skip(from).copied().filter(|&a| self.ingoing_allowed.contains(a))
    }

    fn blue_extensions(&self, p: &Place) -> impl Iterator<Item = ActivityId> + '_ {
        let from = self.orderings.max_out(p.outgoing).map_or(0, |m| self.orderings.outgoing_rank[m] + 1);
        self.orderings.outgoing_seq.iter().skip(from).copied().filter(|&a| self.outgoing_allowed.contains(a))
    }

    pub fn red_children(&self, p: &Place) -> Vec<Place> {
        self.red_extensions(p).map(|a| Place::new(p.ingoing.with(a), p.outgoing)).collect()
    }

    pub fn blue_children(&self, p: &Place) -> Vec<Place> {
        self.blue_extensions(p).map(|a| Place::new(p.ingoing, p.outgoing.with(a))).collect()
    }

    /// Red children first, then blue.
    pub fn children(&self, p: &Place) -> Vec<Place> {
        let mut out = self.red_children(p);
        out.extend(self.blue_children(p));
        out
    }

    /// Inverse of the edge relation; `None` for roots and non-candidates.
    pub fn parent(&self, p: &Place) -> Option<Place> {
        if !self.contains(p) {
            return None;
        }
        if p.outgoing.len() >= 2 {
            let m = self.orderings.max_out(p.outgoing)?;
            Some(Place::new(p.ingoing, p.outgoing.without(m)))
        } else if p.ingoing.len() >= 2 {
            let m = self.orderings.max_in(p.ingoing)?;
            Some(Place::new(p.ingoing.without(m), p.outgoing))
        } else {
            None
        }
    }

    /// Number of candidates with `|I| + |O| = depth`.
    pub fn level_size(&self, depth: usize) -> u128 {
        level_size(self.ingoing_allowed.len(), self.outgoing_allowed.len(), depth)
    }

    /// Number of candidates with depth in `2..=d_cut`.
    pub fn total_candidates(&self, d_cut: usize) -> u128 {
        (2..=d_cut.min(self.max_depth())).map(|k| self.level_size(k)).sum()
    }

    /// Size of the blue subtree below `p` (excluding `p`) per extra depth
    /// `1..=span`.
    fn blue_subtree_levels(&self, p: &Place, span: usize) -> impl Iterator<Item = u128> {
        let m = self.blue_extensions(p).count();
        (1..=span).map(move |j| binomial(m, j))
    }
}

/// Candidates of depth `k` when `a` activities may be inputs and `b` outputs.
pub fn level_size(a: usize, b: usize, k: usize) -> u128 {
    (1..k).map(|i| binomial(a, i) * binomial(b, k - i)).sum()
}

/// Candidates over an augmented alphabet of `n` activities, all depths.
pub fn complete_tree_size(n: usize) -> u128 {
    let side = (1u128 << (n - 1)) - 1;
    side * side
}

/// Depth cutoff and pruning switch for one traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraversalConfig {
    d_cut: usize,
    prune: bool,
}

impl TraversalConfig {
    pub fn new(d_cut: usize) -> Result<Self, TreeError> {
        if d_cut < 2 {
            return Err(TreeError::DepthTooSmall(d_cut));
        }
        Ok(TraversalConfig { d_cut, prune: true })
    }

    pub fn without_pruning(mut self) -> Self {
        self.prune = false;
        self
    }

    pub fn d_cut(&self) -> usize {
        self.d_cut
    }

    pub fn prunes(&self) -> bool {
        self.prune
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LevelStats {
    pub depth: usize,
    /// closed-form level size
    pub candidates: u64,
    pub visited: u64,
    pub fitting: u64,
    pub skipped_underfed: u64,
    pub skipped_overfed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TraversalStats {
    pub visited: u64,
    pub fitting: u64,
    pub skipped_underfed: u64,
    pub skipped_overfed: u64,
    pub levels: Vec<LevelStats>,
}

impl TraversalStats {
    pub fn skipped(&self) -> u64 {
        self.skipped_underfed + self.skipped_overfed
    }
}

/// Receives traversal events in deterministic order.
pub trait TraversalVisitor {
    /// Called before the first candidate of each depth.
    fn on_level(&mut self, _depth: usize) {}
    /// Called for every evaluated candidate.
    fn on_candidate(&mut self, place: &Place, verdict: &PlaceVerdict);
}

impl<F: FnMut(&Place, &PlaceVerdict)> TraversalVisitor for F {
    fn on_candidate(&mut self, place: &Place, verdict: &PlaceVerdict) {
        self(place, verdict)
    }
}

#[derive(Clone, Copy)]
struct Node {
    place: Place,
    /// on a red-only path below an overfed place
    known_overfed: bool,
}

fn to_u64(x: u128) -> u64 {
    u64::try_from(x).unwrap_or(u64::MAX)
}

/// Breadth-first traversal up to `config.d_cut`; candidate evaluation runs in
/// parallel within a level, everything else is sequential.
pub fn bfs_traverse<E, F, V>(
    space: &CandidateSpace,
    config: TraversalConfig,
    evaluate: F,
    visitor: &mut V,
) -> Result<TraversalStats, E>
where
    E: Send,
    F: Fn(&Place) -> Result<PlaceVerdict, E> + Sync,
    V: TraversalVisitor + ?Sized,
{
    let d_cut = config.d_cut.min(space.max_depth());
    let mut stats = TraversalStats {
        levels: (2..=d_cut)
            .map(|depth| LevelStats { depth, candidates: to_u64(space.level_size(depth)), ..Default::default() })
            .collect(),
        ..Default::default()
    };
    let mut frontier: Vec<Node> = space.roots().into_iter().map(|place| Node { place, known_overfed: false }).collect();
    let mut depth = 2;
    while !frontier.is_empty() && depth <= d_cut {
        visitor.on_level(depth);
        let mut next = Vec::new();
        for chunk in frontier.chunks(CHUNK) {
            let verdicts: Vec<Option<PlaceVerdict>> = chunk
                .par_iter()
                .map(|n| if n.known_overfed { Ok(None) } else { evaluate(&n.place).map(Some) })
                .collect::<Result<_, E>>()?;
            for (node, verdict) in chunk.iter().zip(verdicts) {
                let level = depth - 2;
                let (underfed, overfed) = match &verdict {
                    None => {
                        stats.levels[level].skipped_overfed += 1;
                        (false, true)
                    }
                    Some(v) => {
                        stats.levels[level].visited += 1;
                        if v.status.is_fitting() {
                            stats.levels[level].fitting += 1;
                        }
                        visitor.on_candidate(&node.place, v);
                        (v.status.is_underfed(), v.status.is_overfed())
                    }
                };
                if depth == d_cut {
                    continue;
                }
                for place in space.red_children(&node.place) {
                    next.push(Node { place, known_overfed: config.prune && overfed });
                }
                if config.prune && underfed {
                    for (j, count) in space.blue_subtree_levels(&node.place, d_cut - depth).enumerate() {
                        stats.levels[level + 1 + j].skipped_underfed += to_u64(count);
                    }
                } else {
                    next.extend(space.blue_children(&node.place).into_iter().map(|place| Node { place, known_overfed: false }));
                }
            }
        }
        frontier = next;
        depth += 1;
    }
    for l in &stats.levels {
        stats.visited += l.visited;
        stats.fitting += l.fitting;
        stats.skipped_underfed += l.skipped_underfed;
        stats.skipped_overfed += l.skipped_overfed;
    }
    Ok(stats)
}

/// Fitting candidates found by a pruned traversal, sorted by place.
pub fn traverse_fitting(
    log: &EventLog,
    space: &CandidateSpace,
    config: TraversalConfig,
    tau: Threshold,
    metric: FitnessMetric,
) -> Result<(Vec<(Place, PlaceVerdict)>, TraversalStats), TreeError> {
    let ev = FitnessEvaluator::new(log);
    let mut found = Vec::new();
    let stats = bfs_traverse(space, config, |p| ev.classify(p, tau, metric), &mut |p: &Place, v: &PlaceVerdict| {
        if v.status.is_fitting() {
            found.push((*p, v.clone()));
        }
    })?;
    found.sort_by_key(|(p, _)| *p);
    Ok((found, stats))
}

/// Evaluates every candidate of depth `≤ d_cut` by direct subset enumeration,
/// independent of the tree structure. Refuses alphabets above
/// [`BRUTE_FORCE_LIMIT`] unless `override_limit` is set.
pub fn brute_force_fitting(
    log: &EventLog,
    tau: Threshold,
    metric: FitnessMetric,
    d_cut: usize,
    override_limit: bool,
) -> Result<Vec<(Place, PlaceVerdict)>, TreeError> {
    let n = log.activity_count();
    if n > BRUTE_FORCE_LIMIT && !override_limit {
        return Err(TreeError::BudgetExceeded { activities: n, limit: BRUTE_FORCE_LIMIT });
    }
    let ends = log.endpoints();
    let all = ActivitySet::full(n);
    let ins = ends.map_or(all, |e| all.without(e.end));
    let outs = ends.map_or(all, |e| all.without(e.start));
    let subsets = |allowed: ActivitySet| -> Vec<ActivitySet> {
        let members: Vec<ActivityId> = allowed.iter().collect();
        (1u64..1 << members.len())
            .map(|mask| members.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &a)| a).collect())
            .filter(|s: &ActivitySet| s.len() < d_cut)
            .collect()
    };
    let (ins, outs) = (subsets(ins), subsets(outs));
    let candidates: Vec<Place> = ins
        .iter()
        .flat_map(|&i| outs.iter().filter(move |o| i.len() + o.len() <= d_cut).map(move |&o| Place::new(i, o)))
        .collect();
    let ev = FitnessEvaluator::new(log);
    let mut found: Vec<(Place, PlaceVerdict)> = candidates
        .par_iter()
        .map(|p| ev.classify(p, tau, metric).map(|v| (*p, v)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|(_, v)| v.status.is_fitting())
        .collect();
    found.sort_by_key(|(p, _)| *p);
    Ok(found)
}
