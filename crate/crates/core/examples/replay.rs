//! Token replay of single places: per-trace verdicts and the log-level
//! fitting/underfed/overfed multisets.
//!
//! Run: `cargo run -p placeminer --example replay`

use placeminer::log::EventLog;
use placeminer::petri::{classify_log, net_fitting, replay_trace, Place};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let log = EventLog::from_compact(&[("abd", 60), ("acd", 40)])?.augment_endpoints();
    let places = [(["a"], ["b"]), (["c"], ["d"]), (["a"], ["c"]), (["d"], ["a"])];

    for (i, o) in places {
        let p = Place::from_names(&log, &i, &o)?;
        println!("place {}", p.label(log.alphabet()));
        for v in log.variants() {
            let names: Vec<&str> = v.events.iter().map(|&a| log.name(a)).collect();
            let verdict = replay_trace(&p, &v.events);
            println!(
                "  ⟨{}⟩ ×{}: fitting={} underfed={} overfed={}",
                names.join(","),
                v.count,
                verdict.fitting,
                verdict.underfed,
                verdict.overfed
            );
        }
        let r = classify_log(&p, &log);
        println!(
            "  traces fitting {} / underfed {} / overfed {}",
            log.weight(&r.fitting),
            log.weight(&r.underfed),
            log.weight(&r.overfed)
        );
    }

    // a net replays exactly the traces every one of its places replays
    let net: Vec<Place> = [(["a"], ["b"]), (["a"], ["c"])]
        .iter()
        .map(|(i, o)| Place::from_names(&log, i, o))
        .collect::<Result<_, _>>()?;
    println!("(a|b) and (a|c) together replay {} traces", log.weight(&net_fitting(&net, &log)));
    Ok(())
}
