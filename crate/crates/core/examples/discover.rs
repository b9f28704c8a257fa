//! End-to-end discovery: selection, post-processing, quality and the four
//! artifacts (PNML, DOT, JSON report, selection trace).
//!
//! Run: `cargo run -p placeminer --example discover [out-dir]`

use std::path::PathBuf;

use placeminer::fitness::Threshold;
use placeminer::log::EventLog;
use placeminer::run::discover;
use placeminer::selection::DiscoveryConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let log = EventLog::from_compact(&[("abce", 60), ("abd", 20), ("acbe", 15), ("abde", 5)])?;
    let config = DiscoveryConfig { tau: Threshold::parse("0.75")?, ..Default::default() };
    let d = discover(&log, &config)?;

    println!("visited {} candidates, {} fitting", d.stats.visited, d.stats.fitting);
    println!("accepted {} places, {} after post-processing:", d.selected.places().len(), d.net.places().len());
    for p in d.net.places() {
        println!("  {}", p.label(d.log.alphabet()));
    }
    println!("replayable traces: {} of {}", d.replayable_traces(), d.log.trace_count());
    let q = d.quality;
    println!("fitness {:.3} precision {:.3} coverage {:.3} simplicity {:.3} hm {:.3}", q.fitness, q.precision, q.activity_coverage, q.simplicity, q.hm);
    println!("timings: {:?}", d.timings);

    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("placeminer-example"));
    d.write_artifacts(&out)?;
    println!("artifacts in {}", out.display());
    print!("{}", String::from_utf8(d.dot())?);
    Ok(())
}
