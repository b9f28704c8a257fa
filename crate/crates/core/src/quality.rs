//! Model quality against a log: alignment-based fitness, escaping-edges
//! precision, activity coverage, simplicity and their harmonic means.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_rational::Ratio;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::log::EventLog;
use crate::petri::{Marking, PetriNet};
use crate::sets::{ActivityId, ActivitySet};

pub type Exact = Ratio<u64>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QualityError {
    #[error("the net has no firing sequence from the initial to the final marking within {token_cap} tokens per place")]
    NoModelPath { token_cap: u32 },
    #[error("alignment search exceeded {limit} visited states")]
    StateLimit { limit: usize },
}

/// Bounds of the alignment state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignmentBounds {
    pub token_cap: u32,
    pub max_states: usize,
}

impl Default for AlignmentBounds {
    fn default() -> Self {
        AlignmentBounds { token_cap: 8, max_states: 1_000_000 }
    }
}

fn within(m: &Marking, cap: u32) -> bool {
    m.sink <= 1 && m.tokens.iter().all(|&t| t <= cap)
}

fn successors<'a>(net: &'a PetriNet, m: &'a Marking, cap: u32) -> impl Iterator<Item = (ActivityId, Marking)> + 'a {
    net.activities().iter().filter_map(move |a| net.fire(m, a).filter(|n| within(n, cap)).map(|n| (a, n)))
}

/// Length of the shortest firing sequence from the initial to the final
/// marking.
pub fn shortest_model_path(net: &PetriNet, bounds: AlignmentBounds) -> Result<usize, QualityError> {
    let target = net.final_marking();
    let start = net.initial_marking();
    let mut seen: HashMap<Marking, usize> = HashMap::from([(start.clone(), 0)]);
    let mut queue = VecDeque::from([start]);
    while let Some(m) = queue.pop_front() {
        let d = seen[&m];
        if m == target {
            return Ok(d);
        }
        for (_, n) in successors(net, &m, bounds.token_cap) {
            if !seen.contains_key(&n) {
                if seen.len() >= bounds.max_states {
                    return Err(QualityError::StateLimit { limit: bounds.max_states });
                }
                seen.insert(n.clone(), d + 1);
                queue.push_back(n);
            }
        }
    }
    Err(QualityError::NoModelPath { token_cap: bounds.token_cap })
}

/// Minimal number of log-only plus model-only moves aligning `trace`.
pub fn alignment_cost(net: &PetriNet, trace: &[ActivityId], bounds: AlignmentBounds) -> Result<usize, QualityError> {
    let target = net.final_marking();
    let start = (0usize, net.initial_marking());
    let mut dist: HashMap<(usize, Marking), usize> = HashMap::from([(start.clone(), 0)]);
    let mut deque = VecDeque::from([start]);
    while let Some(state) = deque.pop_front() {
        let d = dist[&state];
        let (i, m) = &state;
        if *i == trace.len() && *m == target {
            return Ok(d);
        }
        let mut relax = |next: (usize, Marking), cost: usize, deque: &mut VecDeque<(usize, Marking)>| {
            let nd = d + cost;
            if dist.get(&next).is_none_or(|&old| nd < old) {
                if dist.len() >= bounds.max_states {
                    return Err(QualityError::StateLimit { limit: bounds.max_states });
                }
                dist.insert(next.clone(), nd);
                if cost == 0 {
                    deque.push_front(next);
                } else {
                    deque.push_back(next);
                }
            }
            Ok(())
        };
        if let Some(&a) = trace.get(*i) {
            if let Some(n) = net.fire(m, a).filter(|n| within(n, bounds.token_cap)) {
                relax((i + 1, n), 0, &mut deque)?;
            }
            relax((i + 1, m.clone()), 1, &mut deque)?;
        }
        for (_, n) in successors(net, m, bounds.token_cap) {
            relax((*i, n), 1, &mut deque)?;
        }
    }
    Err(QualityError::NoModelPath { token_cap: bounds.token_cap })
}

/// `1 − cost / (|trace| + shortest model path)` for one trace.
pub fn trace_alignment_fitness(net: &PetriNet, trace: &[ActivityId], bounds: AlignmentBounds) -> Result<Exact, QualityError> {
    let worst = trace.len() + shortest_model_path(net, bounds)?;
    let cost = alignment_cost(net, trace, bounds)?;
    Ok(Exact::from_integer(1) - Exact::new(cost as u64, worst as u64))
}

/// Trace-count weighted mean of per-trace alignment fitness.
pub fn alignment_fitness(net: &PetriNet, log: &EventLog, bounds: AlignmentBounds) -> Result<f64, QualityError> {
    let worst_model = shortest_model_path(net, bounds)?;
    let per_variant: Vec<f64> = log
        .variants()
        .par_iter()
        .map(|v| {
            let cost = alignment_cost(net, &v.events, bounds)?;
            Ok(1.0 - cost as f64 / (v.events.len() + worst_model) as f64)
        })
        .collect::<Result<_, QualityError>>()?;
    let weighted: f64 = per_variant.iter().zip(log.counts()).map(|(s, &c)| s * c as f64).sum();
    Ok(weighted / log.trace_count() as f64)
}

/// Fired over enabled transitions, summed over the distinct log prefixes
/// weighted by how many traces share them. A trace stops contributing at the
/// first event the net cannot fire.
pub fn escaping_edges_precision(net: &PetriNet, log: &EventLog) -> Exact {
    // prefix -> (traces reaching it, enabled set, continuations observed)
    let mut prefixes: BTreeMap<&[ActivityId], (u64, ActivitySet, ActivitySet)> = BTreeMap::new();
    for (v, &count) in log.variants().iter().zip(log.counts()) {
        let mut marking = net.initial_marking();
        for (i, &a) in v.events.iter().enumerate() {
            let Some(next) = net.fire(&marking, a) else { break };
            let entry = prefixes
                .entry(&v.events[..i])
                .or_insert_with(|| (0, net.enabled_transitions(&marking), ActivitySet::EMPTY));
            entry.0 += count;
            entry.2.insert(a);
            marking = next;
        }
    }
    let (fired, enabled) = prefixes.values().fold((0u64, 0u64), |(f, e), (n, en, seen)| {
        (f + n * seen.len() as u64, e + n * en.len() as u64)
    });
    if enabled == 0 {
        Exact::from_integer(0)
    } else {
        Exact::new(fired, enabled)
    }
}

/// Share of the log's activities (without start and end) present in the net.
pub fn activity_coverage(net: &PetriNet, log: &EventLog) -> Exact {
    let mut all = log.all_activities();
    if let Some(e) = log.endpoints() {
        all = all.without(e.start).without(e.end);
    }
    if all.is_empty() {
        return Exact::from_integer(1);
    }
    Exact::new(net.activities().intersection(all).len() as u64, all.len() as u64)
}

/// `1 − |P| / (|P| + |A|)`, counting the start and final places.
pub fn simplicity(net: &PetriNet) -> Exact {
    let p = net.places().len() as u64 + 2;
    let a = net.activities().len() as u64;
    Exact::from_integer(1) - Exact::new(p, p + a)
}

/// Harmonic mean, zero if any value is zero.
pub fn harmonic_mean(values: &[f64]) -> f64 {
    if values.is_empty() || values.iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    values.len() as f64 / values.iter().map(|v| 1.0 / v).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityReport {
    pub fitness: f64,
    pub precision: f64,
    pub activity_coverage: f64,
    pub simplicity: f64,
    pub f1: f64,
    pub hm: f64,
    pub replayable_fraction: f64,
}

impl QualityReport {
    pub const CSV_HEADER: &'static str = "fitness,precision,activity_coverage,simplicity,f1,hm,replayable_fraction";

    pub fn csv_row(&self) -> String {
        [self.fitness, self.precision, self.activity_coverage, self.simplicity, self.f1, self.hm, self.replayable_fraction]
            .iter()
            .map(|v| format!("{v:.6}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn f(x: Exact) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn summarize(net: &PetriNet, log: &EventLog, bounds: AlignmentBounds) -> Result<QualityReport, QualityError> {
    let fitness = alignment_fitness(net, log, bounds)?;
    let precision = f(escaping_edges_precision(net, log));
    let activity_coverage = f(activity_coverage(net, log));
    Ok(QualityReport {
        fitness,
        precision,
        activity_coverage,
        simplicity: f(simplicity(net)),
        f1: harmonic_mean(&[fitness, precision]),
        hm: harmonic_mean(&[fitness, precision, activity_coverage]),
        replayable_fraction: log.weight(&net.fitting(log)) as f64 / log.trace_count() as f64,
    })
}
