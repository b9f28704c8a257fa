//! The candidate tree: orderings, red and blue children, level sizes and a
//! pruned breadth-first traversal with its statistics.
//!
//! Run: `cargo run -p placeminer --example candidate_tree`

use placeminer::fitness::{FitnessMetric, Threshold};
use placeminer::log::EventLog;
use placeminer::tree::{complete_tree_size, traverse_fitting, CandidateSpace, OrderingKind, TraversalConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let log = EventLog::from_compact(&[("abce", 60), ("abd", 20), ("acbe", 15), ("abde", 5)])?.augment_endpoints();
    let names = log.alphabet();

    for kind in [OrderingKind::Lexicographic, OrderingKind::FrequencyDescending] {
        let space = CandidateSpace::for_log(&log, kind);
        let ins: Vec<&str> = space.orderings().ingoing_sequence().iter().map(|&a| log.name(a)).collect();
        println!("{kind} ordering of inputs: {ins:?}");
    }

    let space = CandidateSpace::for_log(&log, OrderingKind::Lexicographic);
    let root = space.roots()[0];
    println!("root {}", root.label(names));
    for c in space.red_children(&root) {
        println!("  red  → {}", c.label(names));
    }
    for c in space.blue_children(&root).iter().take(3) {
        println!("  blue → {}", c.label(names));
    }

    println!("level sizes for {} activities:", space.activity_count());
    for depth in 2..=space.max_depth() {
        println!("  depth {depth:>2}: {}", space.level_size(depth));
    }
    println!("whole tree: {} (13 activities: {})", space.total_candidates(space.max_depth()), complete_tree_size(13));

    let tau = Threshold::parse("0.8")?;
    for prune in [true, false] {
        let mut config = TraversalConfig::new(5)?;
        if !prune {
            config = config.without_pruning();
        }
        let (fitting, stats) = traverse_fitting(&log, &space, config, tau, FitnessMetric::Combined)?;
        println!(
            "pruning {prune}: visited {}, skipped {} (underfed {}, overfed {}), fitting {}",
            stats.visited,
            stats.skipped(),
            stats.skipped_underfed,
            stats.skipped_overfed,
            fitting.len()
        );
        if prune {
            for l in &stats.levels {
                println!("    depth {}: {} of {} visited", l.depth, l.visited, l.candidates);
            }
        }
    }
    Ok(())
}
