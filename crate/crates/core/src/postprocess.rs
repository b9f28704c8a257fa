//! Net clean-up after selection: dead transitions, log-implicit places and
//! self-loop merging.
//!
//! Implicitness is judged against the log, not the net structure: a place is
//! removable when the net without it replays exactly the same traces and
//! enables exactly the same transitions along every replayable trace.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::log::EventLog;
use crate::petri::{PetriNet, Place};
use crate::sets::{ActivitySet, VariantSet};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MergedGroup {
    pub inputs: Vec<String>,
    pub result: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PostprocessReport {
    pub removed_activities: Vec<String>,
    /// Places removed because the log cannot observe them.
    pub removed_log_implicit_places: Vec<String>,
    pub merged_place_groups: Vec<MergedGroup>,
}

impl PostprocessReport {
    fn absorb(&mut self, other: PostprocessReport) {
        self.removed_activities.extend(other.removed_activities);
        self.removed_log_implicit_places.extend(other.removed_log_implicit_places);
        self.merged_place_groups.extend(other.merged_place_groups);
    }
}

/// Replay-observable behaviour of a net on a log.
struct Behaviour {
    fitting: VariantSet,
    enabled: Vec<Vec<ActivitySet>>,
}

impl Behaviour {
    fn of(net: &PetriNet, log: &EventLog) -> Self {
        let fitting = net.fitting(log);
        let enabled = fitting
            .iter()
            .map(|v| net.enabled_along(&log.variants()[v].events).expect("fitting traces fire"))
            .collect();
        Behaviour { fitting, enabled }
    }

    fn matches(&self, net: &PetriNet, log: &EventLog) -> bool {
        net.fitting(log) == self.fitting
            && self
                .fitting
                .iter()
                .zip(&self.enabled)
                .all(|(v, want)| net.enabled_along(&log.variants()[v].events).as_ref() == Some(want))
    }
}

/// Removes activities that occur in no replayable trace, restricting places
/// to the remaining activities and dropping places left without inputs or
/// outputs, until nothing changes.
pub fn remove_dead_transitions(net: &PetriNet, log: &EventLog) -> (PetriNet, PostprocessReport) {
    let mut report = PostprocessReport::default();
    let mut net = net.clone();
    loop {
        let fitting = net.fitting(log);
        let mut live = ActivitySet::EMPTY.with(net.start()).with(net.end());
        for v in fitting.iter() {
            live = live.union(log.occurrences()[v]);
        }
        let live = live.intersection(net.activities());
        if live == net.activities() {
            return (net, report);
        }
        report
            .removed_activities
            .extend(net.activities().difference(live).iter().map(|a| log.name(a).to_owned()));
        let places: Vec<Place> = net
            .places()
            .iter()
            .map(|p| Place::new(p.ingoing.intersection(live), p.outgoing.intersection(live)))
            .filter(|p| !p.ingoing.is_empty() && !p.outgoing.is_empty())
            .collect();
        net = PetriNet::new(live, places, net.endpoints());
    }
}

/// Removes log-implicit places, most connected first, until none is left.
pub fn remove_implicit_places(net: &PetriNet, log: &EventLog) -> (PetriNet, PostprocessReport) {
    let mut report = PostprocessReport::default();
    let mut net = net.clone();
    let reference = Behaviour::of(&net, log);
    loop {
        let mut order: Vec<Place> = net.places().to_vec();
        order.sort_by(|a, b| b.complexity().cmp(&a.complexity()).then(a.cmp(b)));
        let removable = order.into_iter().find(|p| {
            let without = net.with_places(net.places().iter().copied().filter(|q| q != p));
            reference.matches(&without, log)
        });
        match removable {
            Some(p) => {
                report.removed_log_implicit_places.push(p.label(log.alphabet()));
                net = net.with_places(net.places().iter().copied().filter(|q| *q != p));
            }
            None => return (net, report),
        }
    }
}

/// Replaces groups `(I∪{x_j} | O∪{x_j})` sharing a base `(I|O)` by
/// `(I∪X | O∪X)` when the log cannot tell the difference.
pub fn merge_selfloop_places(net: &PetriNet, log: &EventLog) -> (PetriNet, PostprocessReport) {
    let mut report = PostprocessReport::default();
    let mut net = net.clone();
    let reference = Behaviour::of(&net, log);
    'outer: loop {
        let mut groups: BTreeMap<Place, Vec<Place>> = BTreeMap::new();
        for p in net.places() {
            for x in p.ingoing.intersection(p.outgoing).iter() {
                let base = Place::new(p.ingoing.without(x), p.outgoing.without(x));
                if !base.ingoing.is_empty() && !base.outgoing.is_empty() {
                    groups.entry(base).or_default().push(*p);
                }
            }
        }
        for members in groups.into_values().filter(|m| m.len() >= 2) {
            let merged = members
                .iter()
                .fold(Place::new(ActivitySet::EMPTY, ActivitySet::EMPTY), |acc, p| {
                    Place::new(acc.ingoing.union(p.ingoing), acc.outgoing.union(p.outgoing))
                });
            let candidate = net.with_places(
                net.places().iter().copied().filter(|q| !members.contains(q)).chain(std::iter::once(merged)),
            );
            if reference.matches(&candidate, log) {
                report.merged_place_groups.push(MergedGroup {
                    inputs: members.iter().map(|p| p.label(log.alphabet())).collect(),
                    result: merged.label(log.alphabet()),
                });
                net = candidate;
                continue 'outer;
            }
        }
        return (net, report);
    }
}

/// Dead transitions, then implicit places, then self-loop merging.
pub fn postprocess(net: &PetriNet, log: &EventLog) -> (PetriNet, PostprocessReport) {
    let (net, mut report) = remove_dead_transitions(net, log);
    let (net, implicit) = remove_implicit_places(&net, log);
    report.absorb(implicit);
    let (net, merged) = merge_selfloop_places(&net, log);
    report.absorb(merged);
    (net, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(log: &EventLog, places: &[(&[&str], &[&str])]) -> PetriNet {
        let ps = places.iter().map(|(i, o)| Place::from_names(log, i, o).unwrap());
        PetriNet::new(log.all_activities(), ps, log.endpoints().unwrap())
    }

    fn labels(net: &PetriNet, log: &EventLog) -> Vec<String> {
        net.places().iter().map(|p| p.label(log.alphabet())).collect()
    }

    #[test]
    fn dead_activity_is_removed() {
        let log = EventLog::from_compact(&[("ab", 9), ("aeb", 1)]).unwrap().augment_endpoints();
        let base: [(&[&str], &[&str]); 3] = [(&["▶"], &["a"]), (&["a"], &["b"]), (&["b"], &["■"])];
        let fully_fitting = net(&log, &base);
        let (out, report) = remove_dead_transitions(&fully_fitting, &log);
        assert_eq!(report, PostprocessReport::default());
        assert_eq!(out, fully_fitting);
        // (b|e,■) makes e wait for b, which never happens before e
        let blocking = net(&log, &[base[0], base[1], (&["b"], &["e", "■"])]);
        let (out, report) = remove_dead_transitions(&blocking, &log);
        assert_eq!(report.removed_activities, vec!["e".to_owned()]);
        let e = log.id("e").unwrap();
        assert_eq!(out, PetriNet::new(log.all_activities().without(e), fully_fitting.places().to_vec(), out.endpoints()));
    }

    #[test]
    fn coupled_activities_leave_together() {
        let log = EventLog::from_compact(&[("ab", 9), ("axyb", 1)]).unwrap().augment_endpoints();
        let n = net(&log, &[(&["▶"], &["a"]), (&["a"], &["b"]), (&["b"], &["x", "■"])]);
        let (out, report) = remove_dead_transitions(&n, &log);
        assert_eq!(report.removed_activities, vec!["x".to_owned(), "y".to_owned()]);
        assert_eq!(out.places().len(), 3);
        for a in out.activities().iter() {
            assert!(out.fitting(&log).iter().any(|v| log.occurrences()[v].contains(a)));
        }
    }

    #[test]
    fn chain_makes_shortcut_places_implicit() {
        let log = EventLog::from_compact(&[("abcd", 35), ("abce", 5), ("bacd", 55), ("bace", 5)]).unwrap().augment_endpoints();
        let n = net(
            &log,
            &[
                (&["▶"], &["b"]),
                (&["b"], &["a"]),
                (&["▶"], &["a"]),
                (&["a"], &["c"]),
                (&["b"], &["c"]),
                (&["c"], &["d", "e"]),
                (&["d", "e"], &["■"]),
            ],
        );
        let (out, report) = remove_implicit_places(&n, &log);
        let mut removed = report.removed_log_implicit_places.clone();
        removed.sort();
        assert_eq!(removed, vec!["(b|c)".to_owned(), "(▶|a)".to_owned()]);
        assert_eq!(out.fitting(&log), n.fitting(&log));
        assert_eq!(labels(&out, &log).len(), 5);
    }

    #[test]
    fn redundant_weaker_place_is_removed() {
        let log = EventLog::from_compact(&[("abc", 5)]).unwrap().augment_endpoints();
        let n = net(&log, &[(&["▶"], &["a"]), (&["a"], &["b"]), (&["▶", "a"], &["b", "■"]), (&["b"], &["c"]), (&["c"], &["■"])]);
        let (out, report) = remove_implicit_places(&n, &log);
        assert_eq!(report.removed_log_implicit_places, vec![Place::from_names(&log, &["▶", "a"], &["b", "■"]).unwrap().label(log.alphabet())]);
        assert!(out.places().contains(&Place::from_names(&log, &["a"], &["b"]).unwrap()));
        assert_eq!(out.fitting(&log), n.fitting(&log));
    }

    #[test]
    fn single_constraining_place_stays() {
        let log = EventLog::from_compact(&[("ab", 5)]).unwrap().augment_endpoints();
        let n = net(&log, &[(&["a"], &["b"])]);
        let (out, report) = remove_implicit_places(&n, &log);
        assert!(report.removed_log_implicit_places.is_empty());
        assert_eq!(out, n);
    }

    #[test]
    fn selfloops_merge_when_unobservable() {
        // x and y each loop on the a→b place
        let log = EventLog::from_compact(&[("axb", 3), ("ayb", 3), ("ab", 3)]).unwrap().augment_endpoints();
        let n = net(&log, &[(&["▶"], &["a"]), (&["a", "x"], &["b", "x"]), (&["a", "y"], &["b", "y"]), (&["b"], &["■"])]);
        let (out, report) = merge_selfloop_places(&n, &log);
        assert_eq!(report.merged_place_groups.len(), 1);
        assert_eq!(report.merged_place_groups[0].result, "(a,x,y|b,x,y)");
        assert_eq!(out.places().len(), 3);
        let untouched = net(&log, &[(&["▶"], &["a"]), (&["b"], &["■"])]);
        assert_eq!(merge_selfloop_places(&untouched, &log).1, PostprocessReport::default());
    }

    #[test]
    fn equivalence_guard_rejects_observable_change() {
        let log = EventLog::from_compact(&[("axb", 3), ("ab", 3)]).unwrap().augment_endpoints();
        let n = net(&log, &[(&["▶"], &["a"]), (&["a", "x"], &["b", "x"]), (&["b"], &["■"])]);
        let reference = Behaviour::of(&n, &log);
        assert!(reference.matches(&n, &log));
        // dropping the loop place enables b before a
        let looser = net(&log, &[(&["▶"], &["a"]), (&["b"], &["■"])]);
        assert_eq!(looser.fitting(&log), n.fitting(&log));
        assert!(!reference.matches(&looser, &log));
    }

    #[test]
    fn full_pipeline_keeps_fitting_traces() {
        let log = EventLog::from_compact(&[("abcd", 35), ("abce", 5), ("bacd", 55), ("bace", 5)]).unwrap().augment_endpoints();
        let n = net(&log, &[(&["▶"], &["a", "b"]), (&["a"], &["c"]), (&["b"], &["c"]), (&["c"], &["d", "e"]), (&["d", "e"], &["■"])]);
        let (out, _) = postprocess(&n, &log);
        assert_eq!(out.fitting(&log), n.fitting(&log));
    }
}
