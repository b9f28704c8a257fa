//! Fixture logs and a seeded random-log generator shared by the integration tests.

#![allow(dead_code)]

use placeminer::log::EventLog;
use placeminer::petri::{PetriNet, Place};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two activities in either order; every single-arc place fits 40% of it.
pub fn swapped_pair() -> EventLog {
    EventLog::from_compact(&[("ab", 40), ("ba", 60)]).unwrap().augment_endpoints()
}

/// Infrequent but well-placed `e` replacing `d`.
pub fn rare_alternative() -> EventLog {
    EventLog::from_compact(&[("abcd", 35), ("abce", 5), ("bacd", 55), ("bace", 5)]).unwrap().augment_endpoints()
}

pub fn four_variants() -> EventLog {
    EventLog::from_compact(&[("abce", 60), ("abd", 20), ("acbe", 15), ("abde", 5)]).unwrap().augment_endpoints()
}

/// The example net for quality metrics: ▶, then `a` alone or `b` and `c` in
/// any order, then ■.
pub fn quality_net(log: &EventLog) -> PetriNet {
    let p = |i: &[&str], o: &[&str]| Place::from_names(log, i, o).unwrap();
    let places = [p(&["▶"], &["a", "b"]), p(&["▶"], &["a", "c"]), p(&["a", "b"], &["■"]), p(&["a", "c"], &["■"])];
    PetriNet::new(log.ids(&["▶", "a", "b", "c", "■"]).unwrap(), places, log.endpoints().unwrap())
}

pub fn place(log: &EventLog, ingoing: &[&str], outgoing: &[&str]) -> Place {
    Place::from_names(log, ingoing, outgoing).unwrap()
}

/// Random augmented log with `activities` distinct labels (not counting the
/// artificial start and end), up to `max_variants` variants of length 1..=8
/// and multiplicities 1..=20.
pub fn random_log(rng: &mut ChaCha8Rng, activities: usize, max_variants: usize) -> EventLog {
    let labels: Vec<String> = (0..activities).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    let variants = rng.gen_range(1..=max_variants);
    let mut traces: Vec<(Vec<String>, u64)> = Vec::with_capacity(variants + 1);
    // one trace using every label keeps the alphabet at the requested size
    let mut all = labels.clone();
    all.shuffle(rng);
    traces.push((all, rng.gen_range(1..=20)));
    for _ in 1..variants {
        let len = rng.gen_range(1..=8);
        let trace = (0..len).map(|_| labels.choose(rng).unwrap().clone()).collect();
        traces.push((trace, rng.gen_range(1..=20)));
    }
    EventLog::from_traces(traces).unwrap().augment_endpoints()
}

/// Deterministic corpus of `n` random logs with 1..=`max_activities` labels.
pub fn corpus(seed: u64, n: usize, max_activities: usize, max_variants: usize) -> Vec<EventLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=max_activities);
            random_log(&mut rng, k, max_variants)
        })
        .collect()
}

/// All places with non-empty input and output sets over the augmented
/// alphabet of `log` (start never an output, end never an input).
pub fn all_places(log: &EventLog) -> Vec<Place> {
    let n = log.activity_count();
    let ends = log.endpoints().unwrap();
    let subsets = |excluded: usize| -> Vec<u64> {
        (1u64..1 << n).filter(|m| m >> excluded & 1 == 0).collect()
    };
    let ins = subsets(ends.end);
    let outs = subsets(ends.start);
    let mut out = Vec::with_capacity(ins.len() * outs.len());
    for &i in &ins {
        for &o in &outs {
            out.push(Place::new(
                placeminer::sets::ActivitySet::from_bits(i),
                placeminer::sets::ActivitySet::from_bits(o),
            ));
        }
    }
    out
}
