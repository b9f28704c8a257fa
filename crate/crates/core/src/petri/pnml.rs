//! PNML subset: one net, one page, places/transitions/arcs, an initial marking
//! on the start place.

use std::collections::{BTreeMap, BTreeSet};

use quick_xml::escape::escape;
use quick_xml::events::Event;
use quick_xml::Reader;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{NamedPlace, PetriNet, Place};
use crate::log::EventLog;
use crate::sets::ActivitySet;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PnmlError {
    #[error("malformed PNML: {0}")]
    Xml(String),
    #[error("transition `{0}` has no label (silent transitions are not supported)")]
    SilentTransition(String),
    #[error("label `{label}` is used by more than one transition (`{id}`)")]
    DuplicateLabel { label: String, id: String },
    #[error("arc `{0}` has a weight other than 1")]
    WeightedArc(String),
    #[error("arc `{0}` does not connect a place and a transition")]
    DanglingArc(String),
    #[error("place `{0}` has no ingoing or no outgoing transitions")]
    OpenPlace(String),
    #[error("net needs exactly one marked start place feeding one transition: {0}")]
    NoSource(String),
    #[error("net needs exactly one final place fed by one transition: {0}")]
    NoSink(String),
    #[error("activity `{0}` does not occur in the log")]
    UnknownActivity(String),
    #[error("log has no start/end activities (augment it first)")]
    LogNotAugmented,
    #[error("start/end transitions `{0}`/`{1}` do not match the log's start/end activities")]
    EndpointMismatch(String, String),
}

/// A net in terms of activity labels, independent of any log's interning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedNet {
    pub activities: Vec<String>,
    pub places: Vec<NamedPlace>,
    pub start: String,
    pub end: String,
}

impl NamedNet {
    /// Interns the net's labels against `log`'s alphabet.
    pub fn resolve(&self, log: &EventLog) -> Result<PetriNet, PnmlError> {
        let endpoints = log.endpoints().ok_or(PnmlError::LogNotAugmented)?;
        if log.name(endpoints.start) != self.start || log.name(endpoints.end) != self.end {
            return Err(PnmlError::EndpointMismatch(self.start.clone(), self.end.clone()));
        }
        let ids = |names: &[String]| -> Result<ActivitySet, PnmlError> {
            names.iter().map(|n| log.id(n).ok_or_else(|| PnmlError::UnknownActivity(n.clone()))).collect()
        };
        let activities = ids(&self.activities)?;
        let places = self
            .places
            .iter()
            .map(|p| Ok(Place::new(ids(&p.ingoing)?, ids(&p.outgoing)?)))
            .collect::<Result<Vec<_>, PnmlError>>()?;
        Ok(PetriNet::new(activities, places, endpoints))
    }
}

fn short_hash(s: &str) -> String {
    Sha256::digest(s.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn place_id(p: &NamedPlace) -> String {
    format!("p_{}", short_hash(&format!("{}\u{1f}|\u{1f}{}", p.ingoing.join("\u{1f}"), p.outgoing.join("\u{1f}"))))
}

fn transition_id(name: &str) -> String {
    format!("t_{}", short_hash(name))
}

/// Serializes `net` deterministically; ids derive from place and activity
/// contents, not from their position.
pub fn export_pnml(net: &PetriNet, names: &[String]) -> Vec<u8> {
    let named = net.to_named(names);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<pnml>\n");
    out.push_str("  <net id=\"net\" type=\"http://www.pnml.org/version-2009/grammar/ptnet\">\n");
    out.push_str("    <page id=\"page\">\n");
    let place_xml = |out: &mut String, id: &str, label: &str, marking: Option<u32>| {
        out.push_str(&format!("      <place id=\"{id}\">\n        <name><text>{}</text></name>\n", escape(label)));
        if let Some(m) = marking {
            out.push_str(&format!("        <initialMarking><text>{m}</text></initialMarking>\n"));
        }
        out.push_str("      </place>\n");
    };
    place_xml(&mut out, "source", "source", Some(1));
    place_xml(&mut out, "sink", "sink", None);
    for (p, np) in net.places().iter().zip(&named.places) {
        place_xml(&mut out, &place_id(np), &p.label(names), None);
    }
    for a in &named.activities {
        out.push_str(&format!(
            "      <transition id=\"{}\">\n        <name><text>{}</text></name>\n      </transition>\n",
            transition_id(a),
            escape(a.as_str())
        ));
    }
    let mut arc = |source: String, target: String| {
        out.push_str(&format!("      <arc id=\"a_{source}_{target}\" source=\"{source}\" target=\"{target}\"/>\n"));
    };
    arc("source".into(), transition_id(&named.start));
    arc(transition_id(&named.end), "sink".into());
    for np in &named.places {
        let pid = place_id(np);
        for a in &np.ingoing {
            arc(transition_id(a), pid.clone());
        }
        for a in &np.outgoing {
            arc(pid.clone(), transition_id(a));
        }
    }
    out.push_str("    </page>\n  </net>\n</pnml>\n");
    out.into_bytes()
}

#[derive(Default)]
struct RawNode {
    label: Option<String>,
    marking: Option<String>,
}

struct RawArc {
    id: String,
    source: String,
    target: String,
    weight: Option<String>,
}

/// Parses PNML into the restricted net class: uniquely labelled transitions,
/// unit arcs, one marked start place and one final place.
pub fn parse_pnml(source: &[u8]) -> Result<NamedNet, PnmlError> {
    let mut reader = Reader::from_reader(source);
    reader.trim_text(true);
    reader.check_end_names(true);
    let mut places: BTreeMap<String, RawNode> = BTreeMap::new();
    let mut transitions: BTreeMap<String, RawNode> = BTreeMap::new();
    let mut transition_order: Vec<String> = Vec::new();
    let mut arcs: Vec<RawArc> = Vec::new();
    let mut path: Vec<String> = Vec::new();
    let mut current: Option<(bool, String)> = None; // (is_place, id)
    let mut buf = Vec::new();

    let attr = |e: &quick_xml::events::BytesStart, k: &[u8]| -> Option<String> {
        e.attributes()
            .flatten()
            .find(|a| a.key.as_ref() == k)
            .and_then(|a| a.unescape_value().ok().map(|v| v.into_owned()))
    };

    loop {
        let ev = reader.read_event_into(&mut buf).map_err(|e| PnmlError::Xml(e.to_string()))?;
        match ev {
            Event::Eof => break,
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(ev, Event::Empty(_));
                let tag = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                match tag.as_str() {
                    "place" | "transition" => {
                        let id = attr(e, b"id").ok_or_else(|| PnmlError::Xml(format!("{tag} without id")))?;
                        let is_place = tag == "place";
                        if is_place {
                            places.insert(id.clone(), RawNode::default());
                        } else {
                            transitions.insert(id.clone(), RawNode::default());
                            transition_order.push(id.clone());
                        }
                        if !empty {
                            current = Some((is_place, id));
                        }
                    }
                    "arc" => {
                        let id = attr(e, b"id").unwrap_or_default();
                        let (Some(source), Some(target)) = (attr(e, b"source"), attr(e, b"target")) else {
                            return Err(PnmlError::DanglingArc(id));
                        };
                        arcs.push(RawArc { id, source, target, weight: None });
                    }
                    _ => {}
                }
                if !empty {
                    path.push(tag);
                }
            }
            Event::Text(t) => {
                let text = t.unescape().map_err(|e| PnmlError::Xml(e.to_string()))?.into_owned();
                let n = path.len();
                if n >= 2 && path[n - 1] == "text" {
                    match path[n - 2].as_str() {
                        "name" if path.get(n.wrapping_sub(3)).is_some_and(|p| p == "place" || p == "transition") => {
                            if let Some((is_place, id)) = &current {
                                let map = if *is_place { &mut places } else { &mut transitions };
                                map.get_mut(id).expect("node registered").label = Some(text);
                            }
                        }
                        "initialMarking" => {
                            if let Some((true, id)) = &current {
                                places.get_mut(id).expect("node registered").marking = Some(text);
                            }
                        }
                        "inscription" => {
                            if let Some(a) = arcs.last_mut() {
                                a.weight = Some(text);
                            }
                        }
                        _ => {}
                    }
                }
            }
            Event::End(_) => {
                if let Some(tag) = path.pop() {
                    if tag == "place" || tag == "transition" {
                        current = None;
                    }
                }
            }
            _ => {}
        }
        buf.clear();
    }

    // transitions: unique, non-empty labels
    let mut label_of: BTreeMap<String, String> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for id in &transition_order {
        let label = transitions[id].label.clone().filter(|l| !l.trim().is_empty());
        let label = label.ok_or_else(|| PnmlError::SilentTransition(id.clone()))?;
        if !seen.insert(label.clone()) {
            return Err(PnmlError::DuplicateLabel { label, id: id.clone() });
        }
        label_of.insert(id.clone(), label);
    }

    let mut pre: BTreeMap<&str, BTreeSet<String>> = places.keys().map(|k| (k.as_str(), BTreeSet::new())).collect();
    let mut post = pre.clone();
    for arc in &arcs {
        if let Some(w) = &arc.weight {
            if w.trim() != "1" {
                return Err(PnmlError::WeightedArc(arc.id.clone()));
            }
        }
        match (places.contains_key(&arc.source), places.contains_key(&arc.target)) {
            (true, false) if label_of.contains_key(&arc.target) => {
                post.get_mut(arc.source.as_str()).unwrap().insert(label_of[&arc.target].clone());
            }
            (false, true) if label_of.contains_key(&arc.source) => {
                pre.get_mut(arc.target.as_str()).unwrap().insert(label_of[&arc.source].clone());
            }
            _ => return Err(PnmlError::DanglingArc(arc.id.clone())),
        }
    }

    let marked: Vec<&String> = places
        .iter()
        .filter(|(_, n)| n.marking.as_deref().map(str::trim).is_some_and(|m| m != "0"))
        .map(|(id, _)| id)
        .collect();
    let [source] = marked.as_slice() else {
        return Err(PnmlError::NoSource(format!("{} marked places", marked.len())));
    };
    if places[*source].marking.as_deref().map(str::trim) != Some("1") {
        return Err(PnmlError::NoSource(format!("place `{source}` must hold exactly one token")));
    }
    if !pre[source.as_str()].is_empty() || post[source.as_str()].len() != 1 {
        return Err(PnmlError::NoSource(format!("place `{source}` must feed exactly one transition")));
    }
    let start = post[source.as_str()].iter().next().unwrap().clone();
    let sinks: Vec<&str> = places.keys().map(String::as_str).filter(|id| post[id].is_empty() && id != source).collect();
    let [sink] = sinks.as_slice() else {
        return Err(PnmlError::NoSink(format!("{} places without outgoing arcs", sinks.len())));
    };
    if pre[sink].len() != 1 {
        return Err(PnmlError::NoSink(format!("place `{sink}` must be fed by exactly one transition")));
    }
    let end = pre[sink].iter().next().unwrap().clone();

    let mut named_places = BTreeSet::new();
    for id in places.keys() {
        if id == *source || id == sink {
            continue;
        }
        if pre[id.as_str()].is_empty() || post[id.as_str()].is_empty() {
            return Err(PnmlError::OpenPlace(id.clone()));
        }
        named_places.insert(NamedPlace {
            ingoing: pre[id.as_str()].iter().cloned().collect(),
            outgoing: post[id.as_str()].iter().cloned().collect(),
        });
    }
    let mut activities: Vec<String> = seen.into_iter().collect();
    activities.sort();
    Ok(NamedNet { activities, places: named_places.into_iter().collect(), start, end })
}
