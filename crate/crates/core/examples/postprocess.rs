//! Post-processing: dead transitions, log-implicit places and merging of
//! self-loop variants.
//!
//! Run: `cargo run -p placeminer --example postprocess`

use placeminer::log::EventLog;
use placeminer::petri::{PetriNet, Place};
use placeminer::postprocess::postprocess;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let log = EventLog::from_compact(&[("abc", 10), ("ac", 5), ("axc", 1)])?.augment_endpoints();
    let p = |i: &[&str], o: &[&str]| Place::from_names(&log, i, o);
    let places = vec![
        p(&["▶"], &["a"])?,
        // x steals the token meant for c, so no fitting trace contains x
        p(&["a"], &["c", "x"])?,
        // same token count as (a|c) once b fires in between
        p(&["a", "b"], &["b", "c"])?,
        p(&["c"], &["■"])?,
        // never constrains anything the chain above does not
        p(&["▶"], &["■"])?,
    ];
    let net = PetriNet::new(log.all_activities(), places, log.endpoints().unwrap());
    let labels = |n: &PetriNet| n.places().iter().map(|q| q.label(log.alphabet())).collect::<Vec<_>>();
    println!("before: {:?}, replays {} traces", labels(&net), log.weight(&net.fitting(&log)));

    let (reduced, report) = postprocess(&net, &log);
    println!("removed transitions: {:?}", report.removed_activities);
    println!("removed log-implicit places: {:?}", report.removed_log_implicit_places);
    for g in &report.merged_place_groups {
        println!("merged {:?} into {}", g.inputs, g.result);
    }
    println!("after: {:?}, replays {} traces", labels(&reduced), log.weight(&reduced.fitting(&log)));
    Ok(())
}
