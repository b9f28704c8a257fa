//! Place fitness metrics and log-level classification against a noise
//! threshold.
//!
//! All scores are exact fractions of trace counts; thresholds are fractions
//! parsed from their decimal literal, so `0.75` really is `3/4`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::log::EventLog;
use crate::petri::{classify_log, Place, PlaceReplay};
use crate::sets::{ActivityId, VariantSet};

/// Exact fitness score in `[0, 1]`.
pub type Score = Ratio<u64>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FitnessError {
    #[error("the place's activities occur in no trace of the log")]
    NotActivated,
    #[error("activity {0} occurs in no trace of the log")]
    ActivityNeverOccurs(ActivityId),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid fraction `{0}`: expected a decimal number in [0, 1]")]
pub struct ThresholdError(pub String);

/// A fraction in `[0, 1]`, used for τ and δ.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Threshold(Ratio<u64>);

impl Threshold {
    pub const ZERO: Threshold = Threshold(Ratio::new_raw(0, 1));
    pub const ONE: Threshold = Threshold(Ratio::new_raw(1, 1));

    pub fn new(numer: u64, denom: u64) -> Result<Self, ThresholdError> {
        if denom == 0 || numer > denom {
            return Err(ThresholdError(format!("{numer}/{denom}")));
        }
        Ok(Threshold(Ratio::new(numer, denom)))
    }

    /// Parses a plain decimal literal such as `0.75`, `1` or `.3`.
    pub fn parse(s: &str) -> Result<Self, ThresholdError> {
        let err = || ThresholdError(s.to_owned());
        let t = s.trim();
        let (int, frac) = t.split_once('.').unwrap_or((t, ""));
        if (int.is_empty() && frac.is_empty())
            || !int.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
            || frac.len() > 18
        {
            return Err(err());
        }
        let denom = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| err())? };
        let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| err())? };
        let numer = int.checked_mul(denom).and_then(|x| x.checked_add(frac)).ok_or_else(err)?;
        Threshold::new(numer, denom).map_err(|_| err())
    }

    /// Converts through the shortest decimal representation of `x`.
    pub fn from_f64(x: f64) -> Result<Self, ThresholdError> {
        if !x.is_finite() {
            return Err(ThresholdError(x.to_string()));
        }
        Self::parse(&format!("{x}"))
    }

    pub fn ratio(self) -> Ratio<u64> {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// `count / total ≥ self`.
    pub fn met_by(self, count: u64, total: u64) -> bool {
        count as u128 * *self.0.denom() as u128 >= *self.0.numer() as u128 * total as u128
    }

    /// `count ≥ self · total`.
    pub fn met_by_count(self, count: u64, total: u64) -> bool {
        self.met_by(count, total)
    }

    /// `count / total > 1 - self`.
    pub fn complement_exceeded(self, count: u64, total: u64) -> bool {
        let (n, d) = (*self.0.numer() as u128, *self.0.denom() as u128);
        count as u128 * d > (d - n) * total as u128
    }
}

impl fmt::Debug for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

impl FromStr for Threshold {
    type Err = ThresholdError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Threshold::parse(s)
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

/// Which fitness score decides whether a place is fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FitnessMetric {
    Absolute,
    Relative,
    Aggregated,
    Combined,
}

impl FitnessMetric {
    pub const ALL: [FitnessMetric; 4] =
        [FitnessMetric::Absolute, FitnessMetric::Relative, FitnessMetric::Aggregated, FitnessMetric::Combined];

    pub fn name(self) -> &'static str {
        match self {
            FitnessMetric::Absolute => "absolute",
            FitnessMetric::Relative => "relative",
            FitnessMetric::Aggregated => "aggregated",
            FitnessMetric::Combined => "combined",
        }
    }
}

impl fmt::Display for FitnessMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FitnessMetric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FitnessMetric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown fitness metric `{s}` (absolute|relative|aggregated|combined)"))
    }
}

impl Serialize for FitnessMetric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Log-level status of a place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaceStatus {
    Fitting,
    Underfed,
    Overfed,
    UnderfedAndOverfed,
    /// Unfitting without being underfed or overfed; prunes nothing.
    PlainUnfitting,
}

impl PlaceStatus {
    fn unfitting(underfed: bool, overfed: bool) -> Self {
        match (underfed, overfed) {
            (true, true) => PlaceStatus::UnderfedAndOverfed,
            (true, false) => PlaceStatus::Underfed,
            (false, true) => PlaceStatus::Overfed,
            (false, false) => PlaceStatus::PlainUnfitting,
        }
    }

    pub fn is_fitting(self) -> bool {
        self == PlaceStatus::Fitting
    }

    pub fn is_underfed(self) -> bool {
        matches!(self, PlaceStatus::Underfed | PlaceStatus::UnderfedAndOverfed)
    }

    pub fn is_overfed(self) -> bool {
        matches!(self, PlaceStatus::Overfed | PlaceStatus::UnderfedAndOverfed)
    }
}

/// Constituent scores of the combined metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubScores {
    pub relative: Score,
    pub aggregated: Score,
}

/// Classification of one place against a log and threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceVerdict {
    pub score: Score,
    pub status: PlaceStatus,
    pub sub_scores: Option<SubScores>,
    pub replay: PlaceReplay,
}

impl PlaceVerdict {
    pub fn fitting_traces(&self) -> &VariantSet {
        &self.replay.fitting
    }
}

/// Log-derived lookup tables for scoring many places against one log.
#[derive(Debug, Clone)]
pub struct FitnessEvaluator<'a> {
    log: &'a EventLog,
    /// act_L({a}) per activity
    activated_by: Vec<VariantSet>,
    activated_weight: Vec<u64>,
}

fn score(count: u64, total: u64) -> Score {
    Ratio::new(count, total)
}

impl<'a> FitnessEvaluator<'a> {
    pub fn new(log: &'a EventLog) -> Self {
        let n = log.variant_count();
        let mut activated_by = vec![VariantSet::empty(n); log.activity_count()];
        for (v, occ) in log.occurrences().iter().enumerate() {
            for a in occ.iter() {
                activated_by[a].insert(v);
            }
        }
        let activated_weight = activated_by.iter().map(|s| log.weight(s)).collect();
        FitnessEvaluator { log, activated_by, activated_weight }
    }

    pub fn log(&self) -> &'a EventLog {
        self.log
    }

    pub fn replay(&self, place: &Place) -> PlaceReplay {
        classify_log(place, self.log)
    }

    fn activated(&self, place: &Place) -> VariantSet {
        let mut set = VariantSet::empty(self.log.variant_count());
        for a in place.activities().iter() {
            if let Some(vs) = self.activated_by.get(a) {
                set.union_with(vs);
            }
        }
        set
    }

    fn check_occurs(&self, place: &Place) -> Result<(), FitnessError> {
        match place.activities().iter().find(|&a| a >= self.activated_weight.len() || self.activated_weight[a] == 0) {
            Some(a) => Err(FitnessError::ActivityNeverOccurs(a)),
            None => Ok(()),
        }
    }

    pub fn absolute(&self, replay: &PlaceReplay) -> Score {
        score(self.log.weight(&replay.fitting), self.log.trace_count())
    }

    pub fn relative(&self, place: &Place, replay: &PlaceReplay) -> Result<Score, FitnessError> {
        let act = self.activated(place);
        let total = self.log.weight(&act);
        if total == 0 {
            return Err(FitnessError::NotActivated);
        }
        Ok(score(act.intersection_weight(&replay.fitting, self.log.counts()), total))
    }

    pub fn aggregated(&self, place: &Place, replay: &PlaceReplay) -> Result<Score, FitnessError> {
        self.check_occurs(place)?;
        let counts = self.log.counts();
        Ok(place
            .activities()
            .iter()
            .map(|a| score(self.activated_by[a].intersection_weight(&replay.fitting, counts), self.activated_weight[a]))
            .min()
            .expect("places have at least one activity"))
    }

    /// min(relative, aggregated); absolute is never smaller than relative.
    pub fn combined(&self, place: &Place, replay: &PlaceReplay) -> Result<(Score, SubScores), FitnessError> {
        let relative = self.relative(place, replay)?;
        let aggregated = self.aggregated(place, replay)?;
        Ok((relative.min(aggregated), SubScores { relative, aggregated }))
    }

    pub fn score(&self, place: &Place, replay: &PlaceReplay, metric: FitnessMetric) -> Result<(Score, Option<SubScores>), FitnessError> {
        Ok(match metric {
            FitnessMetric::Absolute => (self.absolute(replay), None),
            FitnessMetric::Relative => (self.relative(place, replay)?, None),
            FitnessMetric::Aggregated => (self.aggregated(place, replay)?, None),
            FitnessMetric::Combined => {
                let (s, sub) = self.combined(place, replay)?;
                (s, Some(sub))
            }
        })
    }

    fn absolute_flag(&self, defects: &VariantSet, tau: Threshold) -> bool {
        tau.complement_exceeded(self.log.weight(defects), self.log.trace_count())
    }

    fn relative_flag(&self, place: &Place, defects: &VariantSet, tau: Threshold) -> bool {
        let act = self.activated(place);
        tau.complement_exceeded(act.intersection_weight(defects, self.log.counts()), self.log.weight(&act))
    }

    fn aggregated_flag(&self, place: &Place, defects: &VariantSet, tau: Threshold) -> bool {
        let counts = self.log.counts();
        place.activities().iter().any(|a| {
            tau.complement_exceeded(self.activated_by[a].intersection_weight(defects, counts), self.activated_weight[a])
        })
    }

    fn defect_flag(&self, place: &Place, defects: &VariantSet, tau: Threshold, metric: FitnessMetric) -> bool {
        match metric {
            FitnessMetric::Absolute => self.absolute_flag(defects, tau),
            FitnessMetric::Relative => self.relative_flag(place, defects, tau),
            FitnessMetric::Aggregated => self.aggregated_flag(place, defects, tau),
            FitnessMetric::Combined => {
                self.relative_flag(place, defects, tau) || self.aggregated_flag(place, defects, tau)
            }
        }
    }

    /// Scores `place` and classifies it as fitting, or as underfed and/or
    /// overfed (each flag being monotone along the candidate tree), or as
    /// plainly unfitting.
    pub fn classify(&self, place: &Place, tau: Threshold, metric: FitnessMetric) -> Result<PlaceVerdict, FitnessError> {
        let replay = self.replay(place);
        self.classify_replay(place, replay, tau, metric)
    }

    pub fn classify_replay(
        &self,
        place: &Place,
        replay: PlaceReplay,
        tau: Threshold,
        metric: FitnessMetric,
    ) -> Result<PlaceVerdict, FitnessError> {
        let (score, sub_scores) = self.score(place, &replay, metric)?;
        let status = if tau.met_by(*score.numer(), *score.denom()) {
            PlaceStatus::Fitting
        } else {
            PlaceStatus::unfitting(
                self.defect_flag(place, &replay.underfed, tau, metric),
                self.defect_flag(place, &replay.overfed, tau, metric),
            )
        };
        Ok(PlaceVerdict { score, status, sub_scores, replay })
    }
}

pub fn fitness_absolute(place: &Place, log: &EventLog) -> Score {
    let ev = FitnessEvaluator::new(log);
    ev.absolute(&ev.replay(place))
}

pub fn fitness_relative(place: &Place, log: &EventLog) -> Result<Score, FitnessError> {
    let ev = FitnessEvaluator::new(log);
    ev.relative(place, &ev.replay(place))
}

pub fn fitness_aggregated(place: &Place, log: &EventLog) -> Result<Score, FitnessError> {
    let ev = FitnessEvaluator::new(log);
    ev.aggregated(place, &ev.replay(place))
}

pub fn fitness_combined(place: &Place, log: &EventLog) -> Result<(Score, SubScores), FitnessError> {
    let ev = FitnessEvaluator::new(log);
    ev.combined(place, &ev.replay(place))
}

pub fn classify(place: &Place, log: &EventLog, tau: Threshold, metric: FitnessMetric) -> Result<PlaceVerdict, FitnessError> {
    FitnessEvaluator::new(log).classify(place, tau, metric)
}
