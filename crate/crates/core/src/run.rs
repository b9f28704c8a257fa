//! End-to-end runs: discovery with artifacts and report, parameter sweeps,
//! and evaluation of existing nets.

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fitness::{FitnessMetric, Threshold};
use crate::log::EventLog;
use crate::petri::{export_dot, export_pnml, parse_pnml, PetriNet, PnmlError};
use crate::postprocess::{postprocess, PostprocessReport};
use crate::quality::{summarize, AlignmentBounds, QualityError, QualityReport};
use crate::selection::{run_selection, AdaptKind, DiscoveryConfig, SelectionError, SelectionRecord};
use crate::tree::{OrderingKind, TraversalStats};

pub const SCHEMA_VERSION: u32 = 1;

/// Default cap on the number of sweep combinations.
pub const DEFAULT_SWEEP_BUDGET: usize = 10_000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Pnml(#[from] PnmlError),
    #[error("sweep has {size} combinations, above the budget of {budget}")]
    SweepBudget { size: usize, budget: usize },
    #[error("sweep parameter `{0}` has no values")]
    EmptySweepAxis(&'static str),
    #[error("writing {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Wall-clock per phase in milliseconds; the phases partition `total`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub traversal_ms: f64,
    pub selection_ms: f64,
    pub postprocess_ms: f64,
    pub quality_ms: f64,
    pub total_ms: f64,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

/// Everything produced by one discovery run.
#[derive(Debug, Clone)]
pub struct Discovery {
    pub log: EventLog,
    pub config: DiscoveryConfig,
    /// Net of all accepted places before post-processing.
    pub selected: PetriNet,
    pub net: PetriNet,
    pub stats: TraversalStats,
    pub selection_trace: Vec<SelectionRecord>,
    pub postprocess: PostprocessReport,
    pub quality: QualityReport,
    pub timings: PhaseTimings,
}

#[derive(Debug, Clone, Serialize)]
pub struct LogSummary {
    pub digest: String,
    pub traces: u64,
    pub variants: usize,
    pub activities: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionSummary {
    pub accepted: usize,
    pub replayable_traces: u64,
    pub trace_file: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct NetSummary {
    pub activities: Vec<String>,
    pub places: Vec<String>,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config: DiscoveryConfig,
    pub log: LogSummary,
    pub traversal: TraversalStats,
    pub selection: SelectionSummary,
    pub postprocess: PostprocessReport,
    pub net: NetSummary,
    pub quality: QualityReport,
    pub timings: PhaseTimings,
}

/// Augments `log` if needed, selects places, post-processes and evaluates.
pub fn discover(log: &EventLog, config: &DiscoveryConfig) -> Result<Discovery, RunError> {
    let log = log.augment_endpoints();
    let t0 = Instant::now();
    let outcome = run_selection(&log, config)?;
    let t1 = Instant::now();
    let endpoints = log.endpoints().expect("augmented");
    let selected = PetriNet::new(log.all_activities(), outcome.places.iter().copied(), endpoints);
    let (net, report) = postprocess(&selected, &log);
    let t2 = Instant::now();
    let quality = summarize(&net, &log, AlignmentBounds::default())?;
    let t3 = Instant::now();
    let search = t1 - t0;
    let selection = outcome.selection_time.min(search);
    let timings = PhaseTimings {
        traversal_ms: ms(search - selection),
        selection_ms: ms(selection),
        postprocess_ms: ms(t2 - t1),
        quality_ms: ms(t3 - t2),
        total_ms: ms(t3 - t0),
    };
    Ok(Discovery {
        log,
        config: config.clone(),
        selected,
        net,
        stats: outcome.stats,
        selection_trace: outcome.trace,
        postprocess: report,
        quality,
        timings,
    })
}

impl Discovery {
    pub fn replayable_traces(&self) -> u64 {
        self.log.weight(&self.net.fitting(&self.log))
    }

    pub fn manifest(&self) -> RunManifest {
        let names = self.log.alphabet();
        RunManifest {
            schema_version: SCHEMA_VERSION,
            config: self.config.clone(),
            log: LogSummary {
                digest: self.log.digest(),
                traces: self.log.trace_count(),
                variants: self.log.variant_count(),
                activities: names.to_vec(),
            },
            traversal: self.stats.clone(),
            selection: SelectionSummary {
                accepted: self.selected.places().len(),
                replayable_traces: self.log.weight(&self.selected.fitting(&self.log)),
                trace_file: "selection.jsonl",
            },
            postprocess: self.postprocess.clone(),
            net: NetSummary {
                activities: self.net.activities().iter().map(|a| names[a].clone()).collect(),
                places: self.net.places().iter().map(|p| p.label(names)).collect(),
            },
            quality: self.quality,
            timings: self.timings,
        }
    }

    pub fn pnml(&self) -> Vec<u8> {
        export_pnml(&self.net, self.log.alphabet())
    }

    pub fn dot(&self) -> Vec<u8> {
        export_dot(&self.net, self.log.alphabet())
    }

    pub fn selection_jsonl(&self) -> Result<Vec<u8>, RunError> {
        let mut out = Vec::new();
        for r in &self.selection_trace {
            serde_json::to_writer(&mut out, r)?;
            out.push(b'\n');
        }
        Ok(out)
    }

    /// Writes `model.pnml`, `model.dot`, `report.json` and `selection.jsonl`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<(), RunError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| RunError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut report = serde_json::to_vec_pretty(&self.manifest())?;
        report.push(b'\n');
        for (name, bytes) in [
            ("model.pnml", self.pnml()),
            ("model.dot", self.dot()),
            ("report.json", report),
            ("selection.jsonl", self.selection_jsonl()?),
        ] {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(io(&path))?;
        }
        Ok(())
    }
}

/// Value lists whose cross product defines a sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepGrid {
    pub taus: Vec<Threshold>,
    pub deltas: Vec<Threshold>,
    pub metrics: Vec<FitnessMetric>,
    pub adapts: Vec<AdaptKind>,
    pub steepness: Vec<u32>,
    pub queue_limits: Vec<Option<usize>>,
    pub d_plus: Vec<usize>,
    pub d_cut: Vec<usize>,
    pub orderings: Vec<OrderingKind>,
}

fn tenths(from: u64, to: u64, step: u64, denom: u64) -> Vec<Threshold> {
    (from..=to).step_by(step as usize).map(|n| Threshold::new(n, denom).expect("in range")).collect()
}

impl SweepGrid {
    /// The 8400-combination grid: τ 0.3..0.9, δ 0.05..0.25, relative and
    /// combined fitness, four adaptions, s 1..5, |Q| ∈ {100, 1000, 10000},
    /// d⁺ ∈ {0, 10}, d_cut 5.
    pub fn reference() -> Self {
        SweepGrid {
            taus: tenths(3, 9, 1, 10),
            deltas: tenths(5, 25, 5, 100),
            metrics: vec![FitnessMetric::Relative, FitnessMetric::Combined],
            adapts: AdaptKind::ALL.to_vec(),
            steepness: (1..=5).collect(),
            queue_limits: vec![Some(100), Some(1000), Some(10000)],
            d_plus: vec![0, 10],
            d_cut: vec![5],
            orderings: vec![OrderingKind::Lexicographic],
        }
    }

    /// A grid holding exactly one configuration.
    pub fn single(c: &DiscoveryConfig) -> Self {
        SweepGrid {
            taus: vec![c.tau],
            deltas: vec![c.delta],
            metrics: vec![c.metric],
            adapts: vec![c.adapt],
            steepness: vec![c.steepness],
            queue_limits: vec![c.queue_limit],
            d_plus: vec![c.d_plus],
            d_cut: vec![c.d_cut],
            orderings: vec![c.ordering],
        }
    }

    pub fn size(&self) -> usize {
        [
            self.taus.len(),
            self.deltas.len(),
            self.metrics.len(),
            self.adapts.len(),
            self.steepness.len(),
            self.queue_limits.len(),
            self.d_plus.len(),
            self.d_cut.len(),
            self.orderings.len(),
        ]
        .iter()
        .product()
    }

    fn check_axes(&self) -> Result<(), RunError> {
        let axes = [
            ("tau", self.taus.len()),
            ("delta", self.deltas.len()),
            ("metric", self.metrics.len()),
            ("adapt", self.adapts.len()),
            ("steepness", self.steepness.len()),
            ("queue-limit", self.queue_limits.len()),
            ("extra-depth", self.d_plus.len()),
            ("max-depth", self.d_cut.len()),
            ("order", self.orderings.len()),
        ];
        match axes.iter().find(|(_, n)| *n == 0) {
            Some((name, _)) => Err(RunError::EmptySweepAxis(name)),
            None => Ok(()),
        }
    }

    /// All configurations, sorted and without duplicates.
    pub fn configs(&self) -> Vec<DiscoveryConfig> {
        let mut out = Vec::with_capacity(self.size());
        for &tau in &self.taus {
            for &delta in &self.deltas {
                for &metric in &self.metrics {
                    for &adapt in &self.adapts {
                        for &steepness in &self.steepness {
                            for &queue_limit in &self.queue_limits {
                                for &d_plus in &self.d_plus {
                                    for &d_cut in &self.d_cut {
                                        for &ordering in &self.orderings {
                                            out.push(DiscoveryConfig {
                                                tau,
                                                delta,
                                                metric,
                                                adapt,
                                                steepness,
                                                queue_limit,
                                                d_plus,
                                                d_cut,
                                                ordering,
                                            });
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

/// One sweep result.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub config: DiscoveryConfig,
    pub quality: QualityReport,
    pub dead_transitions: usize,
    pub places: usize,
    pub timings: PhaseTimings,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "tau,delta,metric,adapt,steepness,queue_limit,extra_depth,max_depth,order,\
fitness,precision,activity_coverage,simplicity,f1,hm,replayable_fraction,dead_transitions,places";

    pub fn csv_row(&self) -> String {
        let c = &self.config;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            c.tau,
            c.delta,
            c.metric,
            c.adapt,
            c.steepness,
            c.queue_limit.map_or("unlimited".to_owned(), |q| q.to_string()),
            c.d_plus,
            c.d_cut,
            c.ordering,
            self.quality.csv_row(),
            self.dead_transitions,
            self.places
        )
    }
}

/// Runs every configuration of `grid` in parallel; rows come back sorted by
/// configuration.
pub fn sweep(log: &EventLog, grid: &SweepGrid, budget: usize) -> Result<Vec<SweepRow>, RunError> {
    grid.check_axes()?;
    let size = grid.size();
    if size > budget {
        return Err(RunError::SweepBudget { size, budget });
    }
    let log = log.augment_endpoints();
    grid.configs()
        .par_iter()
        .map(|config| {
            let d = discover(&log, config)?;
            Ok(SweepRow {
                config: config.clone(),
                quality: d.quality,
                dead_transitions: d.postprocess.removed_activities.len(),
                places: d.net.places().len(),
                timings: d.timings,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{}", SweepRow::CSV_HEADER)?;
    for r in rows {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Contents of the evaluation `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub log_digest: String,
    pub places: usize,
    pub quality: QualityReport,
}

impl EvaluationReport {
    pub fn to_json_pretty(&self) -> Result<String, RunError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Quality of a PNML net against a log.
pub fn evaluate(pnml: &[u8], log: &EventLog) -> Result<EvaluationReport, RunError> {
    let log = log.augment_endpoints();
    let net = parse_pnml(pnml)?.resolve(&log)?;
    Ok(EvaluationReport {
        schema_version: SCHEMA_VERSION,
        log_digest: log.digest(),
        places: net.places().len(),
        quality: summarize(&net, &log, AlignmentBounds::default())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_variants() -> EventLog {
        EventLog::from_compact(&[("abce", 60), ("abd", 20), ("acbe", 15), ("abde", 5)]).unwrap()
    }

    #[test]
    fn reference_grid_has_8400_rows() {
        let g = SweepGrid::reference();
        assert_eq!(g.size(), 8400);
        assert_eq!(g.configs().len(), 8400);
    }

    #[test]
    fn discovery_respects_tau_and_partitions_time() {
        let config = DiscoveryConfig { tau: Threshold::parse("0.75").unwrap(), ..Default::default() };
        let d = discover(&four_variants(), &config).unwrap();
        assert!(d.replayable_traces() >= 75);
        let t = d.timings;
        let sum = t.traversal_ms + t.selection_ms + t.postprocess_ms + t.quality_ms;
        assert!((sum - t.total_ms).abs() <= 0.01 * t.total_ms + 1e-6);
    }

    #[test]
    fn discovery_is_deterministic() {
        let config = DiscoveryConfig::default();
        let a = discover(&four_variants(), &config).unwrap();
        let b = discover(&four_variants(), &config).unwrap();
        assert_eq!(a.pnml(), b.pnml());
        assert_eq!(a.selection_jsonl().unwrap(), b.selection_jsonl().unwrap());
        let mut ma = serde_json::to_value(a.manifest()).unwrap();
        let mut mb = serde_json::to_value(b.manifest()).unwrap();
        ma.as_object_mut().unwrap().remove("timings");
        mb.as_object_mut().unwrap().remove("timings");
        assert_eq!(ma, mb);
    }

    #[test]
    fn single_sweep_matches_discover() {
        let config = DiscoveryConfig::default();
        let rows = sweep(&four_variants(), &SweepGrid::single(&config), 1).unwrap();
        let d = discover(&four_variants(), &config).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].quality, d.quality);
    }

    #[test]
    fn sweep_budget_is_enforced() {
        let err = sweep(&four_variants(), &SweepGrid::reference(), 100).unwrap_err();
        assert!(matches!(err, RunError::SweepBudget { size: 8400, budget: 100 }));
    }

    #[test]
    fn evaluate_round_trips_discovered_net() {
        let d = discover(&four_variants(), &DiscoveryConfig::default()).unwrap();
        let report = evaluate(&d.pnml(), &four_variants()).unwrap();
        assert_eq!(report.quality, d.quality);
        assert_eq!(report.places, d.net.places().len());
    }
}
