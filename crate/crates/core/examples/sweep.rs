//! Parameter sweeps: run a grid of configurations and compare how often each
//! fitness metric keeps every activity in the model.
//!
//! Run: `cargo run --release -p placeminer --example sweep [--reference]`

use placeminer::fitness::{FitnessMetric, Threshold};
use placeminer::log::EventLog;
use placeminer::run::{sweep, write_sweep_csv, SweepGrid, DEFAULT_SWEEP_BUDGET};
use placeminer::selection::{AdaptKind, DiscoveryConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // x is infrequent but always sits between c and e
    let log = EventLog::from_compact(&[("abce", 60), ("abd", 20), ("acbe", 15), ("abde", 5), ("abcxe", 4)])?;
    let grid = if std::env::args().any(|a| a == "--reference") {
        SweepGrid::reference()
    } else {
        let mut g = SweepGrid::single(&DiscoveryConfig::default());
        g.taus = ["0.5", "0.7", "0.9"].iter().map(|t| Threshold::parse(t)).collect::<Result<_, _>>()?;
        g.metrics = vec![FitnessMetric::Relative, FitnessMetric::Combined];
        g.adapts = AdaptKind::ALL.to_vec();
        g
    };
    let rows = sweep(&log, &grid, DEFAULT_SWEEP_BUDGET)?;
    if grid.size() <= 50 {
        write_sweep_csv(&rows, std::io::stdout())?;
    }
    for metric in [FitnessMetric::Relative, FitnessMetric::Combined] {
        let mine: Vec<_> = rows.iter().filter(|r| r.config.metric == metric).collect();
        let full = mine.iter().filter(|r| r.quality.activity_coverage == 1.0).count();
        println!("{metric}: {full} of {} runs keep every activity", mine.len());
    }
    Ok(())
}
