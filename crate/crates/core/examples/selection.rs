//! Place selection with a fitness guarantee: keep/add decisions, delta
//! adaption functions and the potential places queue.
//!
//! Run: `cargo run -p placeminer --example selection`

use placeminer::fitness::{FitnessMetric, Threshold};
use placeminer::log::EventLog;
use placeminer::petri::net_fitting;
use placeminer::selection::{adapt_delta, run_selection, AdaptKind, Decision, DiscoveryConfig};
use placeminer::tree::{traverse_fitting, CandidateSpace, OrderingKind, TraversalConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // both orders of a and b: every single-arc place fits 40% of the traces
    let log = EventLog::from_compact(&[("ab", 40), ("ba", 60)])?.augment_endpoints();
    let tau = Threshold::parse("0.35")?;

    let space = CandidateSpace::for_log(&log, OrderingKind::Lexicographic);
    let (all, _) = traverse_fitting(&log, &space, TraversalConfig::new(5)?, tau, FitnessMetric::Absolute)?;
    let all: Vec<_> = all.into_iter().map(|(p, _)| p).collect();
    println!("{} fitting places; inserted together they replay {} traces", all.len(), log.weight(&net_fitting(&all, &log)));

    let config = DiscoveryConfig { tau, metric: FitnessMetric::Absolute, ..Default::default() };
    let out = run_selection(&log, &config)?;
    println!("selection keeps {} places replaying {} traces", out.places.len(), out.replayable(&log));
    for r in &out.trace {
        let mark = match r.decision {
            Decision::Accept => "+",
            Decision::Queue => "?",
            Decision::Discard => "-",
            Decision::Evict => "x",
        };
        println!("  {mark} {:<12} depth {} δ' {:.3} replayable {}", r.place, r.depth, r.adapted_delta, r.replayable_after);
    }

    let delta = Threshold::parse("0.2")?;
    println!("adapted δ for a place of complexity 2 at tree depth 2..6 (12 activities, s = 3):");
    for adapt in AdaptKind::ALL {
        let values: Vec<String> = (2..=6).map(|d| format!("{:.3}", adapt_delta(adapt, delta, 2, d, 24, 3).as_f64())).collect();
        println!("  {adapt:<8} {}", values.join(" "));
    }
    Ok(())
}
