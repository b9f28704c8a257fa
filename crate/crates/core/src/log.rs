//! Event logs: ingestion, normalization and the trace-multiset queries the
//! rest of the miner is built on.
//!
//! A log is stored as its distinct *variants* (activity sequences) with their
//! multiplicities. Activities are interned into a sorted alphabet and referred
//! to by index everywhere else.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::sets::{ActivityId, ActivitySet, VariantSet, MAX_ACTIVITIES};

/// Label of the artificial start activity.
pub const START: &str = "▶";
/// Label of the artificial end activity.
pub const END: &str = "■";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml { line: usize, column: usize, message: String },
    #[error("trace {trace_index} contains no events")]
    EmptyTrace { trace_index: usize },
    #[error("event {event_index} of trace {trace_index} has no concept:name attribute")]
    MissingActivityName { trace_index: usize, event_index: usize },
    #[error("column `{0}` not found in CSV header")]
    MissingColumn(String),
    #[error("case `{case}` has more than one event with order value `{order}`")]
    DuplicateOrder { case: String, order: String },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("log has {0} activities, at most {MAX_ACTIVITIES} are supported")]
    AlphabetTooLarge(usize),
    #[error("log contains no traces")]
    EmptyLog,
    #[error("activity set refers to indices outside the alphabet")]
    UnknownActivity,
    #[error("unknown activity label `{0}`")]
    UnknownLabel(String),
    #[error("log marked as augmented violates the start/end invariant: {0}")]
    NotAugmented(String),
    #[error("unsupported log format for `{0}` (expected .xes, .csv or .json)")]
    UnsupportedFormat(String),
}

/// One distinct activity sequence and its multiplicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variant {
    pub events: Vec<ActivityId>,
    pub count: u64,
}

/// Indices of the artificial start and end activities of an augmented log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Endpoints {
    pub start: ActivityId,
    pub end: ActivityId,
}

/// Multiset of traces over an interned activity alphabet.
///
/// Immutable after construction; cheap to share between threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    alphabet: Vec<String>,
    variants: Vec<Variant>,
    counts: Vec<u64>,
    occurs: Vec<ActivitySet>,
    total: u64,
    endpoints: Option<Endpoints>,
}

#[derive(Serialize, Deserialize)]
struct CanonicalLog {
    alphabet: Vec<String>,
    variants: Vec<CanonicalVariant>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    augmented: bool,
}

#[derive(Serialize, Deserialize)]
struct CanonicalVariant {
    sequence: Vec<String>,
    count: u64,
}

impl EventLog {
    /// Builds a raw (un-augmented) log from labelled traces with multiplicities.
    /// Identical sequences are aggregated into one variant.
    pub fn from_traces<I, T, S>(traces: I) -> Result<Self, LogError>
    where
        I: IntoIterator<Item = (T, u64)>,
        T: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut agg: BTreeMap<Vec<String>, u64> = BTreeMap::new();
        for (trace, count) in traces {
            if count == 0 {
                continue;
            }
            let seq: Vec<String> = trace.into_iter().map(|s| s.as_ref().to_owned()).collect();
            *agg.entry(seq).or_insert(0) += count;
        }
        Self::build(agg, false)
    }

    /// Convenience for single-character activity names, e.g. `[("abc", 3)]`.
    pub fn from_compact(traces: &[(&str, u64)]) -> Result<Self, LogError> {
        Self::from_traces(
            traces.iter().map(|(s, c)| (s.chars().map(|ch| ch.to_string()).collect::<Vec<_>>(), *c)),
        )
    }

    fn build(agg: BTreeMap<Vec<String>, u64>, augmented: bool) -> Result<Self, LogError> {
        if agg.is_empty() {
            return Err(LogError::EmptyLog);
        }
        let names: BTreeSet<&String> = agg.keys().flatten().collect();
        if names.len() > MAX_ACTIVITIES {
            return Err(LogError::AlphabetTooLarge(names.len()));
        }
        let alphabet: Vec<String> = names.into_iter().cloned().collect();
        let index: HashMap<&str, ActivityId> =
            alphabet.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let variants: Vec<Variant> = agg
            .iter()
            .map(|(seq, &count)| Variant {
                events: seq.iter().map(|n| index[n.as_str()]).collect(),
                count,
            })
            .collect();
        let endpoints = if augmented {
            let start = *index.get(START).ok_or_else(|| LogError::NotAugmented("no start label".into()))?;
            let end = *index.get(END).ok_or_else(|| LogError::NotAugmented("no end label".into()))?;
            for v in &variants {
                let n = v.events.len();
                let ok = n >= 2
                    && v.events[0] == start
                    && v.events[n - 1] == end
                    && v.events[1..n - 1].iter().all(|&a| a != start && a != end);
                if !ok {
                    return Err(LogError::NotAugmented("trace not delimited by start/end".into()));
                }
            }
            Some(Endpoints { start, end })
        } else {
            None
        };
        let counts = variants.iter().map(|v| v.count).collect();
        let occurs = variants.iter().map(|v| v.events.iter().copied().collect()).collect();
        let total = variants.iter().map(|v| v.count).sum();
        Ok(EventLog { alphabet, variants, counts, occurs, total, endpoints })
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn activity_count(&self) -> usize {
        self.alphabet.len()
    }

    pub fn all_activities(&self) -> ActivitySet {
        ActivitySet::full(self.alphabet.len())
    }

    pub fn name(&self, a: ActivityId) -> &str {
        &self.alphabet[a]
    }

    pub fn id(&self, name: &str) -> Option<ActivityId> {
        self.alphabet.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn ids<S: AsRef<str>>(&self, names: &[S]) -> Result<ActivitySet, LogError> {
        names
            .iter()
            .map(|n| self.id(n.as_ref()).ok_or_else(|| LogError::UnknownLabel(n.as_ref().to_owned())))
            .collect()
    }

    pub fn variants(&self) -> &[Variant] {
        &self.variants
    }

    /// Per-variant multiplicities, indexed like [`Self::variants`].
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Activities occurring in each variant.
    pub fn occurrences(&self) -> &[ActivitySet] {
        &self.occurs
    }

    /// |L|: number of traces.
    pub fn trace_count(&self) -> u64 {
        self.total
    }

    pub fn variant_count(&self) -> usize {
        self.variants.len()
    }

    pub fn endpoints(&self) -> Option<Endpoints> {
        self.endpoints
    }

    pub fn is_augmented(&self) -> bool {
        self.endpoints.is_some()
    }

    /// Multiplicity of a variant set in this log.
    pub fn weight(&self, set: &VariantSet) -> u64 {
        set.weight(&self.counts)
    }

    pub fn all_variants(&self) -> VariantSet {
        VariantSet::full(self.variants.len())
    }

    /// Adds the artificial start and end activity to every trace.
    ///
    /// User labels equal to a reserved label are escaped by prefixing `'`
    /// until unique. Idempotent on augmented logs.
    pub fn augment_endpoints(&self) -> EventLog {
        if self.is_augmented() {
            return self.clone();
        }
        let taken: BTreeSet<&str> = self.alphabet.iter().map(String::as_str).collect();
        let mut rename: HashMap<&str, String> = HashMap::new();
        let mut used: BTreeSet<String> = taken.iter().map(|s| s.to_string()).collect();
        used.insert(START.into());
        used.insert(END.into());
        for reserved in [START, END] {
            if taken.contains(reserved) {
                let mut escaped = format!("'{reserved}");
                while used.contains(&escaped) {
                    escaped.insert(0, '\'');
                }
                used.insert(escaped.clone());
                rename.insert(reserved, escaped);
            }
        }
        let mut agg = BTreeMap::new();
        for v in &self.variants {
            let mut seq = Vec::with_capacity(v.events.len() + 2);
            seq.push(START.to_owned());
            for &a in &v.events {
                let n = self.alphabet[a].as_str();
                seq.push(rename.get(n).cloned().unwrap_or_else(|| n.to_owned()));
            }
            seq.push(END.to_owned());
            *agg.entry(seq).or_insert(0) += v.count;
        }
        Self::build(agg, true).expect("augmented log is well-formed")
    }

    /// act_L(A): variants containing at least one activity of `activities`.
    pub fn activated(&self, activities: ActivitySet) -> Result<VariantSet, LogError> {
        if !activities.is_subset(self.all_activities()) {
            return Err(LogError::UnknownActivity);
        }
        let mut set = VariantSet::empty(self.variants.len());
        for (v, occ) in self.occurs.iter().enumerate() {
            if !occ.intersection(activities).is_empty() {
                set.insert(v);
            }
        }
        Ok(set)
    }

    /// Weighted number of occurrences of each activity.
    pub fn activity_frequencies(&self) -> Vec<u64> {
        let mut freq = vec![0; self.alphabet.len()];
        for v in &self.variants {
            for &a in &v.events {
                freq[a] += v.count;
            }
        }
        freq
    }

    fn canonical(&self) -> CanonicalLog {
        CanonicalLog {
            alphabet: self.alphabet.clone(),
            variants: self
                .variants
                .iter()
                .map(|v| CanonicalVariant {
                    sequence: v.events.iter().map(|&a| self.alphabet[a].clone()).collect(),
                    count: v.count,
                })
                .collect(),
            augmented: self.is_augmented(),
        }
    }

    /// Canonical JSON: sorted alphabet, variants sorted by sequence.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(&self.canonical()).expect("log serializes")
    }

    pub fn from_json(source: &str) -> Result<Self, LogError> {
        let c: CanonicalLog = serde_json::from_str(source)?;
        let mut agg = BTreeMap::new();
        for v in c.variants {
            if v.count > 0 {
                *agg.entry(v.sequence).or_insert(0) += v.count;
            }
        }
        let log = Self::build(agg, c.augmented)?;
        // alphabet entries without occurrences are not allowed to survive
        if let Some(orphan) = c.alphabet.iter().find(|a| log.id(a).is_none()) {
            return Err(LogError::UnknownLabel(orphan.clone()));
        }
        Ok(log)
    }

    /// Hex SHA-256 of the canonical JSON.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_canonical_json().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Loads a log by file extension (`.xes`, `.csv`, `.json`).
    pub fn read_path(path: &Path, csv_columns: &CsvColumns) -> Result<Self, LogError> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        let file = std::fs::File::open(path)?;
        match ext.as_str() {
            "xes" => parse_xes(file),
            "csv" => parse_csv(file, csv_columns),
            "json" => {
                let mut s = String::new();
                std::io::BufReader::new(file).read_to_string(&mut s)?;
                Self::from_json(&s)
            }
            _ => Err(LogError::UnsupportedFormat(path.display().to_string())),
        }
    }
}

fn line_col(source: &[u8], pos: usize) -> (usize, usize) {
    let pos = pos.min(source.len());
    let before = &source[..pos];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let column = pos - before.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn attr(e: &BytesStart, key: &[u8]) -> Option<String> {
    e.attributes()
        .flatten()
        .find(|a| a.key.as_ref() == key)
        .and_then(|a| a.unescape_value().ok().map(|v| v.into_owned()))
}

/// Reads the trace/event/`concept:name` profile of XES. Other attributes,
/// lifecycle transitions and timestamps are ignored; events keep document
/// order.
pub fn parse_xes<R: Read>(mut source: R) -> Result<EventLog, LogError> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    let mut reader = Reader::from_reader(buf.as_slice());
    reader.trim_text(true);
    reader.check_end_names(true);

    let mut traces: Vec<Vec<String>> = Vec::new();
    let mut current: Option<Vec<String>> = None;
    let mut event_name: Option<Option<String>> = None;
    // nesting depth below the current <event>, to only read its direct attributes
    let mut event_depth = 0usize;
    let mut scratch = Vec::new();
    loop {
        let ev = reader.read_event_into(&mut scratch);
        let (line, column) = line_col(&buf, reader.buffer_position());
        let xml_err = |message: String| LogError::Xml { line, column, message };
        match ev {
            Err(e) => return Err(xml_err(e.to_string())),
            Ok(Event::Eof) => break,
            Ok(Event::Start(e)) => match e.local_name().as_ref() {
                b"trace" if event_name.is_none() => current = Some(Vec::new()),
                b"event" if event_name.is_none() => {
                    if current.is_none() {
                        return Err(xml_err("event outside of a trace".into()));
                    }
                    event_name = Some(None);
                    event_depth = 0;
                }
                _ => {
                    if let Some(name) = event_name.as_mut() {
                        if event_depth == 0 && name.is_none() && attr(&e, b"key").as_deref() == Some("concept:name") {
                            *name = attr(&e, b"value");
                        }
                        event_depth += 1;
                    }
                }
            },
            Ok(Event::Empty(e)) => match e.local_name().as_ref() {
                b"trace" if event_name.is_none() => traces.push(Vec::new()),
                b"event" if event_name.is_none() => {
                    let trace = current.as_ref().ok_or_else(|| xml_err("event outside of a trace".into()))?;
                    return Err(LogError::MissingActivityName {
                        trace_index: traces.len(),
                        event_index: trace.len(),
                    });
                }
                _ => {
                    if let Some(name) = event_name.as_mut() {
                        if event_depth == 0 && name.is_none() && attr(&e, b"key").as_deref() == Some("concept:name") {
                            *name = attr(&e, b"value");
                        }
                    }
                }
            },
            Ok(Event::End(e)) => match e.local_name().as_ref() {
                b"event" if event_depth == 0 && event_name.is_some() => {
                    let trace = current.as_mut().expect("event inside trace");
                    match event_name.take().flatten() {
                        Some(n) => trace.push(n),
                        None => {
                            return Err(LogError::MissingActivityName {
                                trace_index: traces.len(),
                                event_index: trace.len(),
                            })
                        }
                    }
                }
                b"trace" if event_name.is_none() => {
                    traces.push(current.take().unwrap_or_default());
                }
                _ => {
                    if event_name.is_some() {
                        event_depth = event_depth.saturating_sub(1);
                    }
                }
            },
            Ok(_) => {}
        }
        scratch.clear();
    }
    if let Some(i) = traces.iter().position(Vec::is_empty) {
        return Err(LogError::EmptyTrace { trace_index: i });
    }
    EventLog::from_traces(traces.into_iter().map(|t| (t, 1)))
}

/// Column names used by [`parse_csv`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvColumns {
    pub case: String,
    pub activity: String,
    pub order: String,
}

impl Default for CsvColumns {
    fn default() -> Self {
        CsvColumns { case: "case".into(), activity: "activity".into(), order: "order".into() }
    }
}

#[derive(Debug, Clone, PartialEq, PartialOrd)]
enum OrderKey {
    Number(f64),
    Text(String),
}

/// Reads one event per row, groups rows by case and sorts each case by the
/// order column. Order values are compared numerically when every value
/// parses as a number, as text otherwise.
pub fn parse_csv<R: Read>(source: R, columns: &CsvColumns) -> Result<EventLog, LogError> {
    let mut reader = csv::Reader::from_reader(source);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| LogError::MissingColumn(name.to_owned()))
    };
    let (ci, ai, oi) = (find(&columns.case)?, find(&columns.activity)?, find(&columns.order)?);

    let mut rows: Vec<(String, String, String)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |i: usize| record.get(i).unwrap_or("").trim().to_owned();
        rows.push((get(ci), get(ai), get(oi)));
    }
    let numeric = rows.iter().all(|(_, _, o)| o.parse::<f64>().map(|x| x.is_finite()).unwrap_or(false));
    let mut cases: BTreeMap<String, Vec<(OrderKey, String, String)>> = BTreeMap::new();
    for (case, activity, order) in rows {
        let key = if numeric { OrderKey::Number(order.parse().unwrap()) } else { OrderKey::Text(order.clone()) };
        cases.entry(case).or_default().push((key, order, activity));
    }
    let mut traces = Vec::with_capacity(cases.len());
    for (case, mut events) in cases {
        events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite order keys"));
        if let Some(w) = events.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(LogError::DuplicateOrder { case, order: w[0].1.clone() });
        }
        traces.push((events.into_iter().map(|e| e.2).collect::<Vec<_>>(), 1));
    }
    EventLog::from_traces(traces)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seqs(log: &EventLog) -> Vec<(String, u64)> {
        log.variants()
            .iter()
            .map(|v| (v.events.iter().map(|&a| log.name(a)).collect::<Vec<_>>().join(","), v.count))
            .collect()
    }

    #[test]
    fn xes_aggregates_identical_variants() {
        let xes = r#"<?xml version="1.0"?>
<log>
  <trace><string key="concept:name" value="case1"/>
    <event><string key="concept:name" value="a"/></event>
    <event><string key="concept:name" value="b"/><date key="time:timestamp" value="2020"/></event>
  </trace>
  <trace>
    <event><string key="concept:name" value="a"/></event>
    <event><string key="lifecycle:transition" value="complete"/><string key="concept:name" value="b"/></event>
  </trace>
</log>"#;
        let log = parse_xes(xes.as_bytes()).unwrap();
        assert_eq!(seqs(&log), vec![("a,b".into(), 2)]);
        assert_eq!(log.trace_count(), 2);
    }

    #[test]
    fn xes_single_event_traces() {
        let xes = r#"<log><trace><event><string key="concept:name" value="a"/></event></trace>
<trace><event><string key="concept:name" value="b"/></event></trace></log>"#;
        let log = parse_xes(xes.as_bytes()).unwrap();
        assert_eq!(log.alphabet(), &["a", "b"]);
        assert_eq!(seqs(&log), vec![("a".into(), 1), ("b".into(), 1)]);
    }

    #[test]
    fn xes_errors() {
        let missing = r#"<log><trace><event><string key="concept:name" value="a"/></event>
<event><string key="org:resource" value="x"/></event></trace></log>"#;
        assert!(matches!(
            parse_xes(missing.as_bytes()),
            Err(LogError::MissingActivityName { trace_index: 0, event_index: 1 })
        ));
        let empty = r#"<log><trace><event><string key="concept:name" value="a"/></event></trace><trace></trace></log>"#;
        assert!(matches!(parse_xes(empty.as_bytes()), Err(LogError::EmptyTrace { trace_index: 1 })));
        let broken = "<log>\n<trace><event></trace></log>";
        match parse_xes(broken.as_bytes()) {
            Err(LogError::Xml { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected XML error, got {other:?}"),
        }
    }

    #[test]
    fn csv_groups_and_orders() {
        let csv = "case,activity,order\nc1,b,2\nc2,a,1\nc1,a,1\n";
        let log = parse_csv(csv.as_bytes(), &CsvColumns::default()).unwrap();
        let sorted = parse_csv("case,activity,order\nc1,a,1\nc1,b,2\nc2,a,1\n".as_bytes(), &CsvColumns::default()).unwrap();
        assert_eq!(seqs(&log), vec![("a".into(), 1), ("a,b".into(), 1)]);
        assert_eq!(log, sorted);
        // numeric, not textual, ordering
        let log = parse_csv("case,activity,order\nc,x,10\nc,y,9\n".as_bytes(), &CsvColumns::default()).unwrap();
        assert_eq!(seqs(&log), vec![("y,x".into(), 1)]);
    }

    #[test]
    fn csv_errors() {
        let dup = "case,activity,order\nc1,a,1\nc1,b,1\n";
        match parse_csv(dup.as_bytes(), &CsvColumns::default()) {
            Err(LogError::DuplicateOrder { case, .. }) => assert_eq!(case, "c1"),
            other => panic!("{other:?}"),
        }
        let cols = CsvColumns { case: "id".into(), ..CsvColumns::default() };
        assert!(matches!(parse_csv(dup.as_bytes(), &cols), Err(LogError::MissingColumn(c)) if c == "id"));
    }

    #[test]
    fn augmentation() {
        let log = EventLog::from_compact(&[("ab", 1)]).unwrap().augment_endpoints();
        assert_eq!(seqs(&log), vec![("▶,a,b,■".into(), 1)]);
        assert_eq!(log.augment_endpoints(), log);
        let empty = EventLog::from_traces([(Vec::<&str>::new(), 2)]).unwrap().augment_endpoints();
        assert_eq!(seqs(&empty), vec![("▶,■".into(), 2)]);
    }

    #[test]
    fn reserved_labels_are_escaped() {
        let raw = EventLog::from_traces([(vec!["▶", "a", "'▶"], 1)]).unwrap();
        let log = raw.augment_endpoints();
        assert_eq!(seqs(&log), vec![("▶,''▶,a,'▶,■".into(), 1)]);
        assert_eq!(log.alphabet().iter().filter(|a| a.as_str() == START).count(), 1);
        assert_eq!(log.activity_count(), raw.activity_count() + 2);
    }

    #[test]
    fn activated_traces() {
        let l1 = EventLog::from_compact(&[("ab", 90), ("xy", 20), ("c", 10)]).unwrap();
        let c = l1.ids(&["c"]).unwrap();
        assert_eq!(l1.weight(&l1.activated(c).unwrap()), 10);
        assert!(l1.activated(ActivitySet::EMPTY).unwrap().is_empty());
        assert_eq!(l1.weight(&l1.activated(l1.all_activities()).unwrap()), 120);
        assert!(matches!(l1.activated(ActivitySet::singleton(40)), Err(LogError::UnknownActivity)));
    }

    #[test]
    fn canonical_json_round_trip() {
        let log = EventLog::from_compact(&[("ab", 3), ("ba", 1)]).unwrap().augment_endpoints();
        let json = log.to_canonical_json();
        let back = EventLog::from_json(&json).unwrap();
        assert_eq!(back, log);
        assert_eq!(back.digest(), log.digest());
        assert!(EventLog::from_json(r#"{"alphabet":["a","z"],"variants":[{"sequence":["a"],"count":1}]}"#).is_err());
        assert!(matches!(EventLog::from_json(r#"{"alphabet":[],"variants":[]}"#), Err(LogError::EmptyLog)));
    }
}
