//! Acceptance suite: one PASS/FAIL line per criterion, then a single assertion
//! that every criterion passed.

mod common;

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use placeminer::fitness::{
    fitness_absolute, fitness_aggregated, fitness_relative, FitnessEvaluator, FitnessMetric, PlaceStatus, Threshold,
};
use placeminer::log::EventLog;
use placeminer::petri::{net_fitting, replay_trace, PetriNet, Place};
use placeminer::postprocess::postprocess;
use placeminer::quality::{activity_coverage, escaping_edges_precision, simplicity, trace_alignment_fitness, AlignmentBounds};
use placeminer::run::{sweep, SweepGrid, SweepRow};
use placeminer::selection::{run_selection, AdaptKind, DiscoveryConfig};
use placeminer::tree::{brute_force_fitting, complete_tree_size, traverse_fitting, CandidateSpace, OrderingKind, TraversalConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::*;

struct Outcome {
    id: u8,
    title: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn check(id: u8, title: &'static str, run: impl FnOnce() -> (bool, String)) -> Outcome {
    let t = Instant::now();
    let (pass, detail) = run();
    Outcome { id, title, pass, detail, elapsed: t.elapsed() }
}

fn t(s: &str) -> Threshold {
    Threshold::parse(s).unwrap()
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn taus_3_to_9() -> Vec<Threshold> {
    (3..=9).map(|n| Threshold::new(n, 10).unwrap()).collect()
}

fn cardinality() -> (bool, String) {
    // every non-empty input set without ■ times every non-empty output set without ▶
    let oracle_13 = ((1u128 << 12) - 1).pow(2);
    let analytic = complete_tree_size(13);
    let labels: String = ('a'..='k').collect();
    let log13 = EventLog::from_compact(&[(&labels, 1)]).unwrap().augment_endpoints();
    let space13 = CandidateSpace::for_log(&log13, OrderingKind::Lexicographic);
    let by_levels = space13.total_candidates(space13.max_depth());

    // streaming depth-first enumeration of the whole tree for 8 activities
    let start = Instant::now();
    let log8 = EventLog::from_compact(&[("abcdef", 1)]).unwrap().augment_endpoints();
    let space8 = CandidateSpace::for_log(&log8, OrderingKind::Lexicographic);
    let mut seen: HashSet<Place> = HashSet::new();
    let mut per_depth = vec![0u128; space8.max_depth() + 1];
    let mut parent_ok = true;
    let mut stack = space8.roots();
    while let Some(p) = stack.pop() {
        if !seen.insert(p) {
            parent_ok = false;
        }
        per_depth[p.complexity()] += 1;
        for c in space8.children(&p) {
            parent_ok &= space8.parent(&c) == Some(p);
            stack.push(c);
        }
    }
    let elapsed = start.elapsed();
    let streamed: u128 = per_depth.iter().sum();
    let oracle_8 = ((1u128 << 7) - 1).pow(2);
    let direct: HashSet<Place> = all_places(&log8).into_iter().collect();
    let levels_ok = (2..=space8.max_depth()).all(|k| per_depth[k] == space8.level_size(k));
    let pass = analytic == 16_769_025
        && oracle_13 == 16_769_025
        && by_levels == 16_769_025
        && streamed == oracle_8
        && seen == direct
        && levels_ok
        && parent_ok
        && elapsed < Duration::from_secs(10);
    (pass, format!("n=13: {analytic} (levels {by_levels}); n=8 streamed {streamed} of {oracle_8} in {elapsed:.2?}"))
}

fn metric_pins() -> (bool, String) {
    let l1 = EventLog::from_compact(&[("ab", 90), ("xy", 20), ("c", 10)]).unwrap();
    let p1 = place(&l1, &["a"], &["b", "c"]);
    let l2 = EventLog::from_compact(&[("abac", 33), ("x", 1), ("b", 33), ("c", 33)]).unwrap();
    let p2 = place(&l2, &["a"], &["b", "c"]);
    let got = [
        fitness_relative(&p1, &l1).unwrap(),
        fitness_aggregated(&p1, &l1).unwrap(),
        fitness_relative(&p2, &l2).unwrap(),
        fitness_aggregated(&p2, &l2).unwrap(),
    ];
    let want = [Ratio::new(90, 100), Ratio::new(0, 1), Ratio::new(33, 99), Ratio::new(1, 2)];
    (got == want, format!("L1 rel {} agg {}, L2 rel {} agg {}", got[0], got[1], got[2], got[3]))
}

fn four_statuses() -> (bool, String) {
    let log = EventLog::from_compact(&[("abd", 60), ("acd", 40)]).unwrap().augment_endpoints();
    let cases = [
        (["a"], ["b"], PlaceStatus::Fitting),
        (["c"], ["d"], PlaceStatus::Underfed),
        (["a"], ["c"], PlaceStatus::Overfed),
        (["d"], ["a"], PlaceStatus::UnderfedAndOverfed),
    ];
    let ev = FitnessEvaluator::new(&log);
    let mut wrong = Vec::new();
    for m in FitnessMetric::ALL {
        for (i, o, want) in &cases {
            let got = ev.classify(&place(&log, i, o), t("0.5"), m).unwrap().status;
            if got != *want {
                wrong.push(format!("{m} ({}|{}) {got:?}", i[0], o[0]));
            }
        }
    }
    (wrong.is_empty(), if wrong.is_empty() { "16 of 16 statuses match".into() } else { wrong.join("; ") })
}

fn pruning_soundness() -> (bool, String) {
    let start = Instant::now();
    let logs = corpus(0x5eed_0004, 200, 6, 50);
    let taus = [t("0.3"), t("0.7"), t("1")];
    let mut runs = 0;
    let mut mismatches = 0;
    let mut skipped = 0;
    for log in &logs {
        let space = CandidateSpace::for_log(log, OrderingKind::Lexicographic);
        let d_cut = space.max_depth().clamp(2, 5);
        let config = TraversalConfig::new(d_cut).unwrap();
        for m in FitnessMetric::ALL {
            for &tau in &taus {
                let (pruned, stats) = traverse_fitting(log, &space, config, tau, m).unwrap();
                let brute = brute_force_fitting(log, tau, m, d_cut, false).unwrap();
                let a: Vec<Place> = pruned.iter().map(|(p, _)| *p).collect();
                let b: Vec<Place> = brute.iter().map(|(p, _)| *p).collect();
                mismatches += usize::from(a != b);
                skipped += stats.skipped();
                runs += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches == 0 && elapsed < Duration::from_secs(120);
    (pass, format!("{runs} runs on {} logs, {mismatches} mismatches, {skipped} candidates skipped, {elapsed:.1?}", logs.len()))
}

/// Selection and post-processing only; the guarantee does not involve quality.
fn discover_net(log: &EventLog, config: &DiscoveryConfig) -> PetriNet {
    let out = run_selection(log, config).unwrap();
    let selected = PetriNet::new(log.all_activities(), out.places.iter().copied(), log.endpoints().unwrap());
    postprocess(&selected, log).0
}

/// Plain token game on the whole net: fires every event and must end in the
/// final marking.
fn token_game_replays(net: &PetriNet, trace: &[usize]) -> bool {
    let mut m = net.initial_marking();
    for &a in trace {
        if !net.activities().contains(a) {
            return false;
        }
        match net.fire(&m, a) {
            Some(next) => m = next,
            None => return false,
        }
    }
    m == net.final_marking()
}

fn guarantee() -> (bool, String) {
    let mut logs = vec![("swapped pair", swapped_pair()), ("rare alternative", rare_alternative()), ("four variants", four_variants())];
    logs.extend(corpus(0x5eed_0005, 50, 6, 50).into_iter().map(|l| ("random", l)));
    let mut jobs = Vec::new();
    for (li, _) in logs.iter().enumerate() {
        for tau in taus_3_to_9() {
            for metric in FitnessMetric::ALL {
                for adapt in AdaptKind::ALL {
                    jobs.push((li, DiscoveryConfig { tau, metric, adapt, ..Default::default() }));
                }
            }
        }
    }
    let violations: Vec<String> = jobs
        .par_iter()
        .filter_map(|(li, config)| {
            let (name, log) = &logs[*li];
            let net = discover_net(log, config);
            let fitting: Vec<usize> = (0..log.variant_count())
                .filter(|&v| token_game_replays(&net, &log.variants()[v].events))
                .collect();
            let replayed: u64 = fitting.iter().map(|&v| log.counts()[v]).sum();
            let fraction_ok = config.tau.met_by(replayed, log.trace_count());
            let dead: Vec<usize> = net
                .activities()
                .iter()
                .filter(|&a| !fitting.iter().any(|&v| log.occurrences()[v].contains(a)))
                .collect();
            (!fraction_ok || !dead.is_empty()).then(|| {
                format!("{name} #{li} τ={} {} {}: {replayed}/{} dead {dead:?}", config.tau, config.metric, config.adapt, log.trace_count())
            })
        })
        .collect();
    let detail = format!("{} runs, {} violations{}", jobs.len(), violations.len(), violations.first().map(|v| format!(" e.g. {v}")).unwrap_or_default());
    (violations.is_empty(), detail)
}

fn deadlock_example() -> (bool, String) {
    let log = swapped_pair();
    let tau = t("0.35");
    let mut pass = true;
    let mut parts = Vec::new();
    for metric in FitnessMetric::ALL {
        let space = CandidateSpace::for_log(&log, OrderingKind::Lexicographic);
        let (found, _) = traverse_fitting(&log, &space, TraversalConfig::new(5).unwrap(), tau, metric).unwrap();
        let all: Vec<Place> = found.iter().map(|(p, _)| *p).collect();
        let all_places_replay = log.weight(&net_fitting(&all, &log));
        let config = DiscoveryConfig { tau, metric, ..Default::default() };
        let out = run_selection(&log, &config).unwrap();
        let selected = log.weight(&net_fitting(&out.places, &log));
        pass &= all_places_replay == 0 && selected >= 35;
        parts.push(format!("{metric}: {} places replay {all_places_replay}, selected replay {selected}", all.len()));
    }
    (pass, parts.join("; "))
}

/// Aggregated fitness recomputed with the single-place token game only.
fn aggregated_by_replay(p: &Place, log: &EventLog) -> Ratio<u64> {
    p.activities()
        .iter()
        .map(|a| {
            let (mut fit, mut total) = (0, 0);
            for v in log.variants().iter().filter(|v| v.events.contains(&a)) {
                total += v.count;
                fit += if replay_trace(p, &v.events).fitting { v.count } else { 0 };
            }
            Ratio::new(fit, total)
        })
        .min()
        .unwrap()
}

fn aggregated_rationale() -> (bool, String) {
    let log = rare_alternative();
    let p7 = place(&log, &["b"], &["c", "e"]);
    let p6 = place(&log, &["b"], &["c"]);
    let abs7 = fitness_absolute(&p7, &log);
    let abs6 = fitness_absolute(&p6, &log);
    let agg7 = fitness_aggregated(&p7, &log).unwrap();
    let oracle7 = aggregated_by_replay(&p7, &log);
    let ev = FitnessEvaluator::new(&log);
    let decisions_ok = ["0.01", "0.1", "0.5", "0.9", "1"].iter().all(|s| {
        let c7 = ev.classify(&p7, t(s), FitnessMetric::Combined).unwrap().status;
        let c6 = ev.classify(&p6, t(s), FitnessMetric::Combined).unwrap().status;
        !c7.is_fitting() && c6.is_fitting()
    });
    let pass = abs7 == Ratio::new(9, 10) && abs6 == Ratio::from_integer(1) && agg7 == Ratio::from_integer(0) && oracle7 == agg7 && decisions_ok;
    (pass, format!("abs(p7) {abs7}, abs(p6) {abs6}, agg(p7) {agg7} (replay oracle {oracle7}), combined rejects p7 and accepts p6: {decisions_ok}"))
}

fn quality_pins() -> (bool, String) {
    let log = EventLog::from_compact(&[("abc", 1)]).unwrap().augment_endpoints();
    let trace = &log.variants()[0].events;
    let alignment = trace_alignment_fitness(&quality_net(&log), trace, AlignmentBounds::default()).unwrap();
    let log = EventLog::from_compact(&[("a", 1), ("cb", 1)]).unwrap().augment_endpoints();
    let precision = escaping_edges_precision(&quality_net(&log), &log);
    let log = EventLog::from_compact(&[("a", 1), ("cb", 1), ("dedea", 1)]).unwrap().augment_endpoints();
    let net = quality_net(&log);
    let coverage = activity_coverage(&net, &log);
    let simple = simplicity(&net);
    let pass = alignment == Ratio::from_integer(1) - Ratio::new(1, 8)
        && precision == Ratio::new(9, 11)
        && coverage == Ratio::new(3, 5)
        && simple == Ratio::new(5, 11);
    (pass, format!("alignment {alignment}, precision {precision}, coverage {coverage}, simplicity {simple}"))
}

struct CorpusFindings {
    places: usize,
    relative_above_absolute: Vec<String>,
    trace_level: Vec<String>,
    log_level: Vec<String>,
}

/// Replays every place of every corpus log once and checks the relative vs
/// absolute ordering and the monotonicity of underfed/overfed verdicts.
fn corpus_properties() -> CorpusFindings {
    let logs = corpus(0x5eed_0004, 200, 6, 50);
    let taus = [t("0.3"), t("0.7"), t("1")];
    let per_log: Vec<CorpusFindings> = logs
        .par_iter()
        .enumerate()
        .map(|(li, log)| {
            let mut f = CorpusFindings { places: 0, relative_above_absolute: vec![], trace_level: vec![], log_level: vec![] };
            let ev = FitnessEvaluator::new(log);
            let places = all_places(log);
            let index: HashMap<Place, usize> = places.iter().enumerate().map(|(i, p)| (*p, i)).collect();
            let replays: Vec<_> = places.iter().map(|p| ev.replay(p)).collect();
            f.places = places.len();
            for (p, r) in places.iter().zip(&replays) {
                let abs = ev.absolute(r);
                let rel = ev.relative(p, r).unwrap();
                if rel > abs {
                    f.relative_above_absolute.push(format!("log {li} {p:?}: {rel} > {abs}"));
                }
            }
            let ends = log.endpoints().unwrap();
            let n = log.activity_count();
            for m in FitnessMetric::ALL {
                for &tau in &taus {
                    let status: Vec<PlaceStatus> =
                        places.iter().zip(&replays).map(|(p, r)| ev.classify_replay(p, r.clone(), tau, m).unwrap().status).collect();
                    for (i, p) in places.iter().enumerate() {
                        for a in 0..n {
                            if a != ends.start && !p.outgoing.contains(a) {
                                let j = index[&Place::new(p.ingoing, p.outgoing.with(a))];
                                if status[i].is_underfed() && !status[j].is_underfed() {
                                    f.log_level.push(format!("log {li} {m} τ={tau}: {p:?} underfed, +out {a} not"));
                                }
                                if m == FitnessMetric::Absolute && tau == taus[0] && !replays[i].underfed.is_subset(&replays[j].underfed) {
                                    f.trace_level.push(format!("log {li}: underfed traces of {p:?} lost with +out {a}"));
                                }
                            }
                            if a != ends.end && !p.ingoing.contains(a) {
                                let j = index[&Place::new(p.ingoing.with(a), p.outgoing)];
                                if status[i].is_overfed() && !status[j].is_overfed() {
                                    f.log_level.push(format!("log {li} {m} τ={tau}: {p:?} overfed, +in {a} not"));
                                }
                                if m == FitnessMetric::Absolute && tau == taus[0] && !replays[i].overfed.is_subset(&replays[j].overfed) {
                                    f.trace_level.push(format!("log {li}: overfed traces of {p:?} lost with +in {a}"));
                                }
                            }
                        }
                    }
                }
            }
            f
        })
        .collect();
    per_log.into_iter().fold(
        CorpusFindings { places: 0, relative_above_absolute: vec![], trace_level: vec![], log_level: vec![] },
        |mut acc, f| {
            acc.places += f.places;
            acc.relative_above_absolute.extend(f.relative_above_absolute);
            acc.trace_level.extend(f.trace_level);
            acc.log_level.extend(f.log_level);
            acc
        },
    )
}

fn first(v: &[String]) -> String {
    v.first().map(|s| format!(", e.g. {s}")).unwrap_or_default()
}

fn coverage_rate(rows: &[SweepRow], metric: FitnessMetric) -> (usize, usize) {
    let rs: Vec<&SweepRow> = rows.iter().filter(|r| r.config.metric == metric).collect();
    (rs.iter().filter(|r| r.quality.activity_coverage == 1.0).count(), rs.len())
}

fn sweep_pattern(base_rows: &[SweepRow], base_time: Duration) -> (bool, String) {
    // the four-variant log plus an infrequent activity x that always sits between c and e
    let log = EventLog::from_compact(&[("abce", 60), ("abd", 20), ("acbe", 15), ("abde", 5), ("abcxe", 4)]).unwrap();
    let start = Instant::now();
    let rows = sweep(&log, &SweepGrid::reference(), 10_000).unwrap();
    let elapsed = start.elapsed();
    let (comb, comb_n) = coverage_rate(&rows, FitnessMetric::Combined);
    let (rel, rel_n) = coverage_rate(&rows, FitnessMetric::Relative);
    let (base_comb, _) = coverage_rate(base_rows, FitnessMetric::Combined);
    let (base_rel, _) = coverage_rate(base_rows, FitnessMetric::Relative);
    // compare rates by cross-multiplication
    let higher = comb as u128 * rel_n as u128 > rel as u128 * comb_n as u128;
    let pass = base_rows.len() == 8400 && rows.len() == 8400 && base_time < Duration::from_secs(600) && elapsed < Duration::from_secs(600) && higher;
    (
        pass,
        format!(
            "four-variant sweep {} runs in {base_time:.1?} (coverage 1: combined {base_comb}, relative {base_rel}); with infrequent x: combined {comb}/{comb_n} vs relative {rel}/{rel_n} in {elapsed:.1?}",
            base_rows.len()
        ),
    )
}

fn running_time(base_rows: &[SweepRow]) -> (bool, String) {
    let bound = |a: u64| -> u64 { (2..=5).map(|i| binomial(a, i) << i).sum() };
    let mut pass = true;
    let mut parts = Vec::new();
    for size in 6..=14usize {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0012 + size as u64);
        let log = random_log(&mut rng, size - 2, 50);
        assert_eq!(log.activity_count(), size);
        let out = run_selection(&log, &DiscoveryConfig::default()).unwrap();
        let unpruned: u128 = (2..=5).map(|k| placeminer::tree::level_size(size - 1, size - 1, k)).sum();
        let ok = out.stats.visited <= bound(size as u64) && unpruned <= bound(size as u64) as u128;
        pass &= ok;
        parts.push(format!("{size}:{}≤{}", out.stats.visited, bound(size as u64)));
    }
    let traversal: f64 = base_rows.iter().map(|r| r.timings.traversal_ms).sum();
    let selection: f64 = base_rows.iter().map(|r| r.timings.selection_ms).sum();
    pass &= selection < traversal;
    (pass, format!("visited {}; four-variant sweep selection {selection:.0} ms < traversal {traversal:.0} ms", parts.join(" ")))
}

#[test]
fn acceptance_criteria() {
    let mut outcomes = vec![
        check(1, "candidate-space cardinality", cardinality),
        check(2, "relative/aggregated pins", metric_pins),
        check(3, "four-status classification", four_statuses),
        check(4, "pruning soundness", pruning_soundness),
        check(5, "fitness guarantee", guarantee),
        check(6, "deadlock example", deadlock_example),
        check(7, "aggregated fitness rationale", aggregated_rationale),
        check(8, "quality metric pins", quality_pins),
    ];
    let t0 = Instant::now();
    let findings = corpus_properties();
    let corpus_time = t0.elapsed();
    outcomes.push(Outcome {
        id: 9,
        title: "relative never exceeds absolute",
        pass: findings.relative_above_absolute.is_empty(),
        detail: format!("{} places, {} violations{}", findings.places, findings.relative_above_absolute.len(), first(&findings.relative_above_absolute)),
        elapsed: corpus_time,
    });
    outcomes.push(Outcome {
        id: 10,
        title: "underfed/overfed monotonicity",
        pass: findings.trace_level.is_empty() && findings.log_level.is_empty(),
        detail: format!(
            "{} places × 12 metric/τ pairs, trace-level {} and log-level {} violations{}{}",
            findings.places,
            findings.trace_level.len(),
            findings.log_level.len(),
            first(&findings.trace_level),
            first(&findings.log_level)
        ),
        elapsed: corpus_time,
    });
    let t0 = Instant::now();
    let base_rows = sweep(&four_variants(), &SweepGrid::reference(), 10_000).unwrap();
    let base_time = t0.elapsed();
    outcomes.push(check(11, "reference sweep pattern", || sweep_pattern(&base_rows, base_time)));
    outcomes.push(check(12, "running-time sanity", || running_time(&base_rows)));

    for o in &outcomes {
        println!("{} {:>2} {} ({:.1?}): {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.title, o.elapsed, o.detail);
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
