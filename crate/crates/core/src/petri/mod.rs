//! Petri nets with uniquely labelled transitions and token-based replay.
//!
//! A place is identified by its ingoing and outgoing activity sets `(I|O)`.
//! The marked start place `(∅|▶)` and final place `(■|∅)` are structural and
//! live in dedicated fields of [`PetriNet`] instead of its place list.

mod dot;
mod pnml;

use std::fmt;

use serde::Serialize;

pub use dot::export_dot;
pub use pnml::{export_pnml, parse_pnml, NamedNet, PnmlError};

use crate::log::{Endpoints, EventLog};
use crate::sets::{ActivityId, ActivitySet, VariantSet};

/// A place `(I|O)`: tokens are produced by activities in `I` and consumed by
/// activities in `O`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Place {
    pub ingoing: ActivitySet,
    pub outgoing: ActivitySet,
}

impl Place {
    pub fn new(ingoing: ActivitySet, outgoing: ActivitySet) -> Self {
        Place { ingoing, outgoing }
    }

    /// Builds a place from activity labels of `log`.
    pub fn from_names<S: AsRef<str>>(log: &EventLog, ingoing: &[S], outgoing: &[S]) -> Result<Self, crate::log::LogError> {
        Ok(Place { ingoing: log.ids(ingoing)?, outgoing: log.ids(outgoing)? })
    }

    /// Number of connected arcs, `|I| + |O|`; equals the candidate-tree depth.
    pub fn complexity(&self) -> usize {
        self.ingoing.len() + self.outgoing.len()
    }

    pub fn activities(&self) -> ActivitySet {
        self.ingoing.union(self.outgoing)
    }

    /// Renders the place as `(a,b|c)` using the log's labels.
    pub fn label(&self, names: &[String]) -> String {
        let join = |s: ActivitySet| s.iter().map(|a| names[a].as_str()).collect::<Vec<_>>().join(",");
        format!("({}|{})", join(self.ingoing), join(self.outgoing))
    }

    pub fn to_named(&self, names: &[String]) -> NamedPlace {
        NamedPlace {
            ingoing: self.ingoing.iter().map(|a| names[a].clone()).collect(),
            outgoing: self.outgoing.iter().map(|a| names[a].clone()).collect(),
        }
    }
}

impl fmt::Debug for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}|{:?})", self.ingoing, self.outgoing)
    }
}

/// Serializable place with activity labels.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct NamedPlace {
    pub ingoing: Vec<String>,
    pub outgoing: Vec<String>,
}

/// Replay result of one place on one trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TraceVerdict {
    pub fitting: bool,
    pub underfed: bool,
    pub overfed: bool,
}

/// Plays the token game of a single, initially empty place on `trace`.
///
/// Each event first consumes (if it is an outgoing activity) and then
/// produces (if ingoing), so a self-loop activity never feeds itself. A
/// consumption from an empty place is recorded as a missing token (underfed)
/// and the place stays empty; tokens left after the last event make the place
/// overfed. Activities outside `I ∪ O` do not touch the place.
pub fn replay_trace(place: &Place, trace: &[ActivityId]) -> TraceVerdict {
    let mut tokens: u64 = 0;
    let mut underfed = false;
    for &a in trace {
        if place.outgoing.contains(a) {
            if tokens == 0 {
                underfed = true;
            } else {
                tokens -= 1;
            }
        }
        if place.ingoing.contains(a) {
            tokens += 1;
        }
    }
    let overfed = tokens > 0;
    TraceVerdict { fitting: !underfed && !overfed, underfed, overfed }
}

/// fitting / underfed / overfed trace multisets of one place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceReplay {
    pub fitting: VariantSet,
    pub underfed: VariantSet,
    pub overfed: VariantSet,
}

/// Variant-wise [`replay_trace`] over a whole log.
pub fn classify_log(place: &Place, log: &EventLog) -> PlaceReplay {
    let n = log.variant_count();
    let mut out = PlaceReplay {
        fitting: VariantSet::empty(n),
        underfed: VariantSet::empty(n),
        overfed: VariantSet::empty(n),
    };
    let touched = place.activities();
    for (v, (variant, occ)) in log.variants().iter().zip(log.occurrences()).enumerate() {
        if occ.intersection(touched).is_empty() {
            out.fitting.insert(v);
            continue;
        }
        let verdict = replay_trace(place, &variant.events);
        if verdict.fitting {
            out.fitting.insert(v);
        }
        if verdict.underfed {
            out.underfed.insert(v);
        }
        if verdict.overfed {
            out.overfed.insert(v);
        }
    }
    out
}

/// Replay results for a set of places over one log.
#[derive(Debug, Clone)]
pub struct ReplayProfile {
    pub entries: Vec<(Place, PlaceReplay)>,
}

impl ReplayProfile {
    pub fn new(places: &[Place], log: &EventLog) -> Self {
        ReplayProfile { entries: places.iter().map(|p| (*p, classify_log(p, log))).collect() }
    }

    pub fn get(&self, place: &Place) -> Option<&PlaceReplay> {
        self.entries.iter().find(|(p, _)| p == place).map(|(_, r)| r)
    }
}

/// fitting_L(P): traces replayable by every place (multiset intersection).
pub fn net_fitting(places: &[Place], log: &EventLog) -> VariantSet {
    let mut fit = log.all_variants();
    for p in places {
        fit.intersect_with(&classify_log(p, log).fitting);
    }
    fit
}

/// A Petri net over (a subset of) a log's alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetriNet {
    activities: ActivitySet,
    places: Vec<Place>,
    start: ActivityId,
    end: ActivityId,
}

impl PetriNet {
    /// Net containing every activity of `endpoints`' log and the given places.
    pub fn new(activities: ActivitySet, places: impl IntoIterator<Item = Place>, endpoints: Endpoints) -> Self {
        let mut places: Vec<Place> = places.into_iter().collect();
        places.sort();
        places.dedup();
        let activities = activities.with(endpoints.start).with(endpoints.end);
        debug_assert!(places.iter().all(|p| p.activities().is_subset(activities)));
        PetriNet { activities, places, start: endpoints.start, end: endpoints.end }
    }

    pub fn activities(&self) -> ActivitySet {
        self.activities
    }

    pub fn places(&self) -> &[Place] {
        &self.places
    }

    pub fn start(&self) -> ActivityId {
        self.start
    }

    pub fn end(&self) -> ActivityId {
        self.end
    }

    pub fn endpoints(&self) -> Endpoints {
        Endpoints { start: self.start, end: self.end }
    }

    pub fn with_places(&self, places: impl IntoIterator<Item = Place>) -> Self {
        PetriNet::new(self.activities, places, self.endpoints())
    }

    /// Replayable traces: traces using only the net's activities and fitting
    /// every place.
    pub fn fitting(&self, log: &EventLog) -> VariantSet {
        let mut fit = net_fitting(&self.places, log);
        for (v, occ) in log.occurrences().iter().enumerate() {
            if !occ.is_subset(self.activities) {
                fit.remove(v);
            }
        }
        fit
    }

    pub fn initial_marking(&self) -> Marking {
        Marking { source: 1, sink: 0, tokens: vec![0; self.places.len()] }
    }

    /// The final marking: one token in the sink, nothing elsewhere.
    pub fn final_marking(&self) -> Marking {
        Marking { source: 0, sink: 1, tokens: vec![0; self.places.len()] }
    }

    pub fn is_enabled(&self, marking: &Marking, a: ActivityId) -> bool {
        if !self.activities.contains(a) || (a == self.start && marking.source == 0) {
            return false;
        }
        self.places.iter().zip(&marking.tokens).all(|(p, &t)| !p.outgoing.contains(a) || t > 0)
    }

    /// Activities whose every input place (including the start place for ▶)
    /// holds a token.
    pub fn enabled_transitions(&self, marking: &Marking) -> ActivitySet {
        self.activities.iter().filter(|&a| self.is_enabled(marking, a)).collect()
    }

    /// Fires `a` if enabled.
    pub fn fire(&self, marking: &Marking, a: ActivityId) -> Option<Marking> {
        if !self.is_enabled(marking, a) {
            return None;
        }
        let mut next = marking.clone();
        if a == self.start {
            next.source -= 1;
        }
        if a == self.end {
            next.sink += 1;
        }
        for (p, t) in self.places.iter().zip(next.tokens.iter_mut()) {
            if p.outgoing.contains(a) {
                *t -= 1;
            }
            if p.ingoing.contains(a) {
                *t += 1;
            }
        }
        Some(next)
    }

    /// Enabled sets before each event and after the last one, or `None` if
    /// the trace cannot be fired.
    pub fn enabled_along(&self, trace: &[ActivityId]) -> Option<Vec<ActivitySet>> {
        let mut marking = self.initial_marking();
        let mut out = Vec::with_capacity(trace.len() + 1);
        out.push(self.enabled_transitions(&marking));
        for &a in trace {
            marking = self.fire(&marking, a)?;
            out.push(self.enabled_transitions(&marking));
        }
        Some(out)
    }

    pub fn to_named(&self, names: &[String]) -> NamedNet {
        NamedNet {
            activities: self.activities.iter().map(|a| names[a].clone()).collect(),
            places: self.places.iter().map(|p| p.to_named(names)).collect(),
            start: names[self.start].clone(),
            end: names[self.end].clone(),
        }
    }
}

/// Token distribution over the start place, final place and ordinary places
/// (indexed like [`PetriNet::places`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Marking {
    pub source: u32,
    pub sink: u32,
    pub tokens: Vec<u32>,
}
