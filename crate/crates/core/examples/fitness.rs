//! Place fitness metrics: absolute, relative, aggregated and combined, and how
//! they classify places at a noise threshold.
//!
//! Run: `cargo run -p placeminer --example fitness`

use placeminer::fitness::{FitnessEvaluator, FitnessMetric, Threshold};
use placeminer::log::EventLog;
use placeminer::petri::Place;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // e is rare but always replaces d after c
    let log = EventLog::from_compact(&[("abcd", 35), ("abce", 5), ("bacd", 55), ("bace", 5)])?.augment_endpoints();
    let ev = FitnessEvaluator::new(&log);
    let places = [Place::from_names(&log, &["b"], &["c", "e"])?, Place::from_names(&log, &["b"], &["c"])?];

    for p in &places {
        let r = ev.replay(p);
        println!(
            "{}: absolute {}, relative {}, aggregated {}",
            p.label(log.alphabet()),
            ev.absolute(&r),
            ev.relative(p, &r)?,
            ev.aggregated(p, &r)?
        );
    }

    for tau in ["0.5", "0.9"] {
        let tau = Threshold::parse(tau)?;
        for metric in FitnessMetric::ALL {
            let verdicts: Vec<String> = places
                .iter()
                .map(|p| ev.classify(p, tau, metric).map(|v| format!("{}={:?}", p.label(log.alphabet()), v.status)))
                .collect::<Result<_, _>>()?;
            println!("τ={tau} {metric:<10} {}", verdicts.join("  "));
        }
    }

    // relative and aggregated fitness are incomparable in general
    let l1 = EventLog::from_compact(&[("ab", 90), ("xy", 20), ("c", 10)])?;
    let l2 = EventLog::from_compact(&[("abac", 33), ("x", 1), ("b", 33), ("c", 33)])?;
    for (name, log) in [("L1", &l1), ("L2", &l2)] {
        let p = Place::from_names(log, &["a"], &["b", "c"])?;
        let ev = FitnessEvaluator::new(log);
        let r = ev.replay(&p);
        println!("{name}: relative {} aggregated {}", ev.relative(&p, &r)?, ev.aggregated(&p, &r)?);
    }
    Ok(())
}
