//! Model quality: alignment fitness, escaping-edges precision, activity
//! coverage, simplicity and their harmonic means.
//!
//! Run: `cargo run -p placeminer --example quality`

use placeminer::log::{EventLog, LogError};
use placeminer::petri::{PetriNet, Place};
use placeminer::quality::{
    activity_coverage, alignment_cost, escaping_edges_precision, shortest_model_path, simplicity, summarize, trace_alignment_fitness,
    AlignmentBounds,
};

/// ▶, then `a` alone or `b` and `c` in any order, then ■. Activity ids are
/// per log, so the net is built against the log it is scored on.
fn example_net(log: &EventLog) -> Result<PetriNet, LogError> {
    let p = |i: &[&str], o: &[&str]| Place::from_names(log, i, o);
    Ok(PetriNet::new(
        log.ids(&["▶", "a", "b", "c", "■"])?,
        [p(&["▶"], &["a", "b"])?, p(&["▶"], &["a", "c"])?, p(&["a", "b"], &["■"])?, p(&["a", "c"], &["■"])?],
        log.endpoints().expect("augmented"),
    ))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let log = EventLog::from_compact(&[("a", 1), ("cb", 1), ("dedea", 1), ("abc", 1)])?.augment_endpoints();
    let net = example_net(&log)?;
    let bounds = AlignmentBounds::default();
    println!("shortest path through the model: {} transitions", shortest_model_path(&net, bounds)?);
    for v in log.variants() {
        let names: Vec<&str> = v.events.iter().map(|&a| log.name(a)).collect();
        println!(
            "  ⟨{}⟩ cost {} fitness {}",
            names.join(","),
            alignment_cost(&net, &v.events, bounds)?,
            trace_alignment_fitness(&net, &v.events, bounds)?
        );
    }
    let two = EventLog::from_compact(&[("a", 1), ("cb", 1)])?.augment_endpoints();
    println!("precision on [⟨a⟩, ⟨c,b⟩]: {}", escaping_edges_precision(&example_net(&two)?, &two));
    println!("activity coverage: {}", activity_coverage(&net, &log));
    println!("simplicity: {}", simplicity(&net));
    let q = summarize(&net, &log, bounds)?;
    println!("summary: {q:?}");
    Ok(())
}
