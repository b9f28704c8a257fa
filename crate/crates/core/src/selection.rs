//! Greedy place selection during candidate traversal.
//!
//! Every fitting candidate is tested against the places accepted so far:
//! it is discarded when the combined net would replay fewer than `τ·|L|`
//! traces (`keep`), accepted when it costs at most an adapted share `δ` of
//! the currently replayable traces (`add`), and queued otherwise. The queue
//! is revisited whenever the traversal descends a level, and after the
//! traversal with optional extra passes at artificial depths.

use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::fitness::{FitnessEvaluator, FitnessMetric, PlaceVerdict, Threshold};
use crate::log::EventLog;
use crate::petri::Place;
use crate::sets::VariantSet;
use crate::tree::{bfs_traverse, ActivityOrderings, CandidateSpace, OrderingKind, TraversalConfig, TraversalStats, TraversalVisitor, TreeError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("steepness must be a positive integer")]
    Steepness,
    #[error("queue limit must be positive")]
    QueueLimit,
    #[error("depth cutoff must be at least 2, got {0}")]
    DepthCutoff(usize),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SelectionError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// How δ is scaled by place complexity and traversal depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AdaptKind {
    NoDelta,
    Constant,
    Linear,
    Sigmoid,
}

impl AdaptKind {
    pub const ALL: [AdaptKind; 4] = [AdaptKind::NoDelta, AdaptKind::Constant, AdaptKind::Linear, AdaptKind::Sigmoid];

    pub fn name(self) -> &'static str {
        match self {
            AdaptKind::NoDelta => "noDelta",
            AdaptKind::Constant => "constant",
            AdaptKind::Linear => "linear",
            AdaptKind::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for AdaptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdaptKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "nodelta" | "none" => Ok(AdaptKind::NoDelta),
            "constant" => Ok(AdaptKind::Constant),
            "linear" => Ok(AdaptKind::Linear),
            "sigmoid" => Ok(AdaptKind::Sigmoid),
            _ => Err(format!("unknown delta adaption `{s}` (noDelta|constant|linear|sigmoid)")),
        }
    }
}

impl Serialize for AdaptKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Parameters of one discovery run.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DiscoveryConfig {
    pub tau: Threshold,
    pub delta: Threshold,
    pub metric: FitnessMetric,
    pub adapt: AdaptKind,
    pub steepness: u32,
    /// `None` is unlimited.
    pub queue_limit: Option<usize>,
    pub d_plus: usize,
    pub d_cut: usize,
    pub ordering: OrderingKind,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            tau: Threshold::new(3, 5).expect("valid"),
            delta: Threshold::new(3, 20).expect("valid"),
            metric: FitnessMetric::Combined,
            adapt: AdaptKind::Sigmoid,
            steepness: 3,
            queue_limit: Some(1000),
            d_plus: 0,
            d_cut: 5,
            ordering: OrderingKind::Lexicographic,
        }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.steepness == 0 {
            return Err(ConfigError::Steepness);
        }
        if self.queue_limit == Some(0) {
            return Err(ConfigError::QueueLimit);
        }
        if self.d_cut < 2 {
            return Err(ConfigError::DepthCutoff(self.d_cut));
        }
        Ok(())
    }
}

/// Result of δ adaption: exact for rational formulas, floating for sigmoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdaptedDelta {
    Exact(Ratio<u128>),
    Approx(f64),
}

impl AdaptedDelta {
    pub fn as_f64(self) -> f64 {
        match self {
            AdaptedDelta::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            AdaptedDelta::Approx(x) => x,
        }
    }

    /// `reduction ≤ self · total`.
    pub fn allows(self, reduction: u64, total: u64) -> bool {
        match self {
            AdaptedDelta::Exact(r) => {
                let lhs = (reduction as u128).checked_mul(*r.denom());
                let rhs = r.numer().checked_mul(total as u128);
                match (lhs, rhs) {
                    (Some(l), Some(r)) => l <= r,
                    _ => reduction as f64 <= self.as_f64() * total as f64,
                }
            }
            AdaptedDelta::Approx(x) => reduction as f64 <= x * total as f64,
        }
    }
}

/// δ scaled for a place of `complexity` activities seen at traversal `depth`.
pub fn adapt_delta(kind: AdaptKind, delta: Threshold, complexity: usize, depth: usize, d_max: usize, steepness: u32) -> AdaptedDelta {
    let d = Ratio::new(*delta.ratio().numer() as u128, *delta.ratio().denom() as u128);
    let k = complexity as u128;
    let gap = depth.saturating_sub(complexity);
    match kind {
        AdaptKind::NoDelta => AdaptedDelta::Exact(Ratio::from_integer(1)),
        AdaptKind::Constant => AdaptedDelta::Exact(d),
        AdaptKind::Linear => {
            let span = d_max.saturating_sub(2).max(1) as u128;
            let v = d * Ratio::new(steepness as u128 * gap as u128, k * span);
            AdaptedDelta::Exact(if v > d { d } else { v })
        }
        AdaptKind::Sigmoid => {
            if gap == 0 {
                return AdaptedDelta::Exact(Ratio::zero());
            }
            let x = steepness as f64 / complexity as f64 * gap as f64;
            AdaptedDelta::Approx(delta.as_f64() * (2.0 / (1.0 + (-x).exp()) - 1.0))
        }
    }
}

/// `|fitting(P) ∩ fitting(p)| ≥ τ·|L|`.
pub fn keep(current: &VariantSet, candidate: &VariantSet, log: &EventLog, tau: Threshold) -> bool {
    tau.met_by_count(current.intersection_weight(candidate, log.counts()), log.trace_count())
}

/// `|fitting(P)| − |fitting(P) ∩ fitting(p)| ≤ adapted·|L|`.
pub fn add(current: &VariantSet, candidate: &VariantSet, log: &EventLog, adapted: AdaptedDelta) -> bool {
    let before = log.weight(current);
    let after = current.intersection_weight(candidate, log.counts());
    adapted.allows(before - after, log.trace_count())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Queue,
    Discard,
    Evict,
}

/// One line of the selection trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionRecord {
    pub place: String,
    pub decision: Decision,
    pub depth: usize,
    pub adapted_delta: f64,
    pub replayable_after: u64,
}

#[derive(Debug, Clone)]
struct QueueEntry {
    place: Place,
    fitting: VariantSet,
    key: (usize, Reverse<u64>, Vec<usize>, Vec<usize>),
}

/// Potential places ordered by complexity, then replayable traces
/// descending, then place key under the orderings.
#[derive(Debug, Clone)]
pub struct PotentialQueue {
    entries: Vec<QueueEntry>,
    limit: Option<usize>,
}

impl PotentialQueue {
    pub fn new(limit: Option<usize>) -> Self {
        PotentialQueue { entries: Vec::new(), limit }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn places(&self) -> impl Iterator<Item = &Place> {
        self.entries.iter().map(|e| &e.place)
    }

    /// Inserts and returns the evicted entry, if any.
    pub fn push(&mut self, place: Place, fitting: VariantSet, count: u64, orderings: &ActivityOrderings) -> Option<Place> {
        let mut ins: Vec<usize> = place.ingoing.iter().map(|a| orderings.ingoing_rank(a)).collect();
        let mut outs: Vec<usize> = place.outgoing.iter().map(|a| orderings.outgoing_rank(a)).collect();
        ins.sort_unstable();
        outs.sort_unstable();
        let key = (place.complexity(), Reverse(count), ins, outs);
        let at = self.entries.partition_point(|e| e.key <= key);
        self.entries.insert(at, QueueEntry { place, fitting, key });
        match self.limit {
            Some(limit) if self.entries.len() > limit => self.entries.pop().map(|e| e.place),
            _ => None,
        }
    }
}

/// Accepted places and the decision log of one run.
#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    pub places: Vec<Place>,
    pub fitting: VariantSet,
    pub trace: Vec<SelectionRecord>,
    pub stats: TraversalStats,
    /// Places still queued at the end.
    pub queued: Vec<Place>,
    pub traversal_time: Duration,
    pub selection_time: Duration,
}

impl SelectionOutcome {
    pub fn replayable(&self, log: &EventLog) -> u64 {
        log.weight(&self.fitting)
    }
}

struct Selector<'a> {
    log: &'a EventLog,
    config: &'a DiscoveryConfig,
    orderings: &'a ActivityOrderings,
    d_max: usize,
    depth: usize,
    places: Vec<Place>,
    fitting: VariantSet,
    queue: PotentialQueue,
    trace: Vec<SelectionRecord>,
    busy: Duration,
}

impl Selector<'_> {
    fn adapted(&self, place: &Place) -> AdaptedDelta {
        let c = self.config;
        adapt_delta(c.adapt, c.delta, place.complexity(), self.depth, self.d_max, c.steepness)
    }

    fn record(&mut self, place: &Place, decision: Decision, adapted: f64) {
        self.trace.push(SelectionRecord {
            place: place.label(self.log.alphabet()),
            decision,
            depth: self.depth,
            adapted_delta: adapted,
            replayable_after: self.log.weight(&self.fitting),
        });
    }

    fn accept(&mut self, place: Place, fitting: &VariantSet, adapted: f64) {
        self.fitting.intersect_with(fitting);
        self.places.push(place);
        self.record(&place, Decision::Accept, adapted);
    }

    fn offer(&mut self, place: Place, fitting: &VariantSet) {
        let adapted = self.adapted(&place);
        if !keep(&self.fitting, fitting, self.log, self.config.tau) {
            self.record(&place, Decision::Discard, adapted.as_f64());
        } else if add(&self.fitting, fitting, self.log, adapted) {
            self.accept(place, fitting, adapted.as_f64());
        } else {
            self.record(&place, Decision::Queue, adapted.as_f64());
            let count = self.log.weight(fitting);
            if let Some(evicted) = self.queue.push(place, fitting.clone(), count, self.orderings) {
                let evicted_delta = self.adapted(&evicted).as_f64();
                self.record(&evicted, Decision::Evict, evicted_delta);
            }
        }
    }

    /// Revisits the queue in order until a full pass accepts nothing.
    fn drain(&mut self, depth: usize) {
        self.depth = depth;
        loop {
            let mut accepted_any = false;
            let entries = std::mem::take(&mut self.queue.entries);
            let mut kept = Vec::with_capacity(entries.len());
            for e in entries {
                let adapted = self.adapted(&e.place);
                if !keep(&self.fitting, &e.fitting, self.log, self.config.tau) {
                    self.record(&e.place, Decision::Discard, adapted.as_f64());
                } else if add(&self.fitting, &e.fitting, self.log, adapted) {
                    self.accept(e.place, &e.fitting, adapted.as_f64());
                    accepted_any = true;
                } else {
                    kept.push(e);
                }
            }
            self.queue.entries = kept;
            if !accepted_any || self.queue.is_empty() {
                break;
            }
        }
    }
}

impl TraversalVisitor for Selector<'_> {
    fn on_level(&mut self, depth: usize) {
        let t = Instant::now();
        self.drain(depth);
        self.busy += t.elapsed();
    }

    fn on_candidate(&mut self, place: &Place, verdict: &PlaceVerdict) {
        if verdict.status.is_fitting() {
            let t = Instant::now();
            self.offer(*place, &verdict.replay.fitting);
            self.busy += t.elapsed();
        }
    }
}

/// Traverses the candidate tree of `log` and greedily selects places.
pub fn run_selection(log: &EventLog, config: &DiscoveryConfig) -> Result<SelectionOutcome, SelectionError> {
    config.validate()?;
    let space = CandidateSpace::for_log(log, config.ordering);
    let traversal = TraversalConfig::new(config.d_cut)?;
    let evaluator = FitnessEvaluator::new(log);
    let d_max = 2 * log.activity_count();
    let mut sel = Selector {
        log,
        config,
        orderings: space.orderings(),
        d_max,
        depth: 2,
        places: Vec::new(),
        fitting: log.all_variants(),
        queue: PotentialQueue::new(config.queue_limit),
        trace: Vec::new(),
        busy: Duration::ZERO,
    };
    let started = Instant::now();
    let stats = bfs_traverse(&space, traversal, |p| evaluator.classify(p, config.tau, config.metric), &mut sel)
        .map_err(TreeError::from)?;
    let last = config.d_cut.min(space.max_depth());
    let t = Instant::now();
    sel.drain(last);
    for k in 1..=config.d_plus {
        sel.drain((config.d_cut + k).min(d_max));
    }
    sel.busy += t.elapsed();
    let total = started.elapsed();
    Ok(SelectionOutcome {
        queued: sel.queue.places().copied().collect(),
        places: sel.places,
        fitting: sel.fitting,
        trace: sel.trace,
        stats,
        traversal_time: total.saturating_sub(sel.busy),
        selection_time: sel.busy,
    })
}
