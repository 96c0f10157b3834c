//! Episode performance measures.
//!
//! | field   | meaning                                                        |
//! |---------|----------------------------------------------------------------|
//! | `pm1_1` | distinct cells visited per agent per minute                    |
//! | `pm1_2` | distinct cells visited per agent over the episode              |
//! | `pm2_1` | share of broadcasts carrying the correct opinion               |
//! | `pm2_2` | share of broadcasts carrying the incorrect opinion             |
//! | `pm2_3` | sense/broadcast accuracy `(TP + TN) / (TP + FP + TN + FN)`     |
//! | `pm3_1` | fraction of regular agents whose final decision is correct     |
//! | `pm3_2` | mean regular-agent decision time in minutes                    |
//! | `pm4_1` | mean distance of regular agents' `γ` from the correct opinion  |
//! | `pm4_2` | mean `|w_max − w_co + w_ic|` over fusion events                |
//!
//! Malicious agents are excluded from everything except the coverage pair.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::Activity;
use crate::engine::{EpisodeResult, STEPS_PER_MINUTE};
use crate::environment::Opinion;
use crate::fusion::{weighting_distance, FusionError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("broadcast tally is empty")]
    EmptyTally,
    #[error("no regular agents to aggregate")]
    NoRegularAgents,
    #[error("episode length must be positive, got {0} minutes")]
    NonPositiveDuration(f64),
    #[error("no weighting events recorded")]
    NoWeightingEvents,
    #[error("w_max must be positive, got {0}")]
    InvalidWMax(f64),
    #[error(transparent)]
    Fusion(#[from] FusionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    TruePositive,
    FalsePositive,
    TrueNegative,
    FalseNegative,
}

/// Classifies a gate-open decision. `opinion` is the value broadcast, or the
/// opinion held back when sensing.
pub fn classify_step(activity: Activity, opinion: Opinion, correct: Opinion) -> Classification {
    match (activity, opinion == correct) {
        (Activity::Broadcast, true) => Classification::TruePositive,
        (Activity::Broadcast, false) => Classification::FalsePositive,
        (Activity::Sense, false) => Classification::TrueNegative,
        (Activity::Sense, true) => Classification::FalseNegative,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BroadcastTally {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl BroadcastTally {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        BroadcastTally { tp, fp, tn, fn_ }
    }

    pub fn record(&mut self, c: Classification) {
        match c {
            Classification::TruePositive => self.tp += 1,
            Classification::FalsePositive => self.fp += 1,
            Classification::TrueNegative => self.tn += 1,
            Classification::FalseNegative => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn broadcasts(&self) -> u64 {
        self.tp + self.fp
    }
}

impl std::ops::AddAssign for BroadcastTally {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.tn += o.tn;
        self.fn_ += o.fn_;
    }
}

impl std::iter::Sum for BroadcastTally {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(BroadcastTally::default(), |mut acc, t| {
            acc += t;
            acc
        })
    }
}

pub fn accuracy(tally: &BroadcastTally) -> Result<f64, MetricsError> {
    match tally.total() {
        0 => Err(MetricsError::EmptyTally),
        n => Ok((tally.tp + tally.tn) as f64 / n as f64),
    }
}

/// `(tp / (tp + fp), fp / (tp + fp))`, or `None` without broadcasts.
pub fn broadcast_shares(tally: &BroadcastTally) -> Option<(f64, f64)> {
    let n = tally.broadcasts();
    (n > 0).then(|| (tally.tp as f64 / n as f64, tally.fp as f64 / n as f64))
}

/// Running sum of per-event weighting distances.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightingDistanceAccumulator {
    pub sum: f64,
    pub events: u64,
}

impl WeightingDistanceAccumulator {
    pub fn record(
        &mut self,
        w_max: f64,
        w_correct: f64,
        w_incorrect: f64,
    ) -> Result<(), FusionError> {
        self.sum += weighting_distance(w_max, w_correct, w_incorrect)?;
        self.events += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) {
        self.sum += other.sum;
        self.events += other.events;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.events > 0).then(|| self.sum / self.events as f64)
    }
}

/// Mean weighting distance over `(w_correct, w_incorrect)` events.
pub fn mean_weighting_distance<I>(events: I, w_max: f64) -> Result<f64, MetricsError>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    if w_max.is_nan() || w_max <= 0.0 {
        return Err(MetricsError::InvalidWMax(w_max));
    }
    let mut acc = WeightingDistanceAccumulator::default();
    for (w_co, w_ic) in events {
        acc.record(w_max, w_co, w_ic)?;
    }
    acc.mean().ok_or(MetricsError::NoWeightingEvents)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommitStats {
    /// Fraction correct.
    pub accuracy: f64,
    pub minutes: f64,
}

pub fn commit_stats(result: &EpisodeResult) -> Result<CommitStats, MetricsError> {
    let (mut n, mut correct, mut seconds) = (0usize, 0usize, 0u64);
    for a in result.regular() {
        n += 1;
        correct += usize::from(a.final_opinion == result.correct_opinion);
        seconds += u64::from(a.commit_time);
    }
    if n == 0 {
        return Err(MetricsError::NoRegularAgents);
    }
    Ok(CommitStats {
        accuracy: correct as f64 / n as f64,
        minutes: seconds as f64 / n as f64 / f64::from(STEPS_PER_MINUTE),
    })
}

/// Mean `|γ − correct|`.
pub fn quorum_distance<I>(gammas: I, correct: Opinion) -> Result<f64, MetricsError>
where
    I: IntoIterator<Item = f64>,
{
    let (n, sum) = gammas.into_iter().fold((0usize, 0.0), |(n, s), g| {
        (n + 1, s + (g - correct.value()).abs())
    });
    if n == 0 {
        return Err(MetricsError::NoRegularAgents);
    }
    Ok(sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageStats {
    pub per_minute: f64,
    pub total: f64,
}

/// Mean distinct cells per agent, overall and per minute of episode. The
/// per-minute figure equals the mean of the agents' minute-by-minute
/// increments over a whole number of minutes.
pub fn coverage_stats(
    result: &EpisodeResult,
    episode_minutes: f64,
) -> Result<CoverageStats, MetricsError> {
    if episode_minutes.is_nan() || episode_minutes <= 0.0 {
        return Err(MetricsError::NonPositiveDuration(episode_minutes));
    }
    let n = result.agents.len().max(1) as f64;
    let total = result
        .agents
        .iter()
        .map(|a| a.distinct_cells as f64)
        .sum::<f64>()
        / n;
    Ok(CoverageStats {
        per_minute: total / episode_minutes,
        total,
    })
}

/// Mean new distinct cells per agent in each completed minute.
pub fn per_minute_coverage(result: &EpisodeResult) -> Vec<f64> {
    let minutes = result
        .agents
        .iter()
        .map(|a| a.minute_marks.len())
        .min()
        .unwrap_or(0);
    let n = result.agents.len() as f64;
    (0..minutes)
        .map(|m| {
            result
                .agents
                .iter()
                .map(|a| {
                    let prev = if m == 0 { 0 } else { a.minute_marks[m - 1] };
                    (a.minute_marks[m] - prev) as f64
                })
                .sum::<f64>()
                / n
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub pm1_1: f64,
    pub pm1_2: f64,
    pub pm2_1: Option<f64>,
    pub pm2_2: Option<f64>,
    pub pm2_3: Option<f64>,
    pub pm3_1: f64,
    pub pm3_2: f64,
    pub pm4_1: f64,
    pub pm4_2: Option<f64>,
    pub tally: BroadcastTally,
}

pub fn episode_metrics(result: &EpisodeResult) -> Result<EpisodeMetrics, MetricsError> {
    let minutes = f64::from(result.wall_steps) / f64::from(STEPS_PER_MINUTE);
    let coverage = if result.wall_steps > 0 {
        coverage_stats(result, minutes)?
    } else {
        CoverageStats {
            per_minute: 0.0,
            total: 0.0,
        }
    };
    let tally: BroadcastTally = result.regular().map(|a| a.tally).sum();
    let shares = broadcast_shares(&tally);
    let commits = commit_stats(result)?;
    let mut weighting = WeightingDistanceAccumulator::default();
    for a in result.regular() {
        weighting.merge(&a.weighting);
    }
    Ok(EpisodeMetrics {
        pm1_1: coverage.per_minute,
        pm1_2: coverage.total,
        pm2_1: shares.map(|s| s.0),
        pm2_2: shares.map(|s| s.1),
        pm2_3: accuracy(&tally).ok(),
        pm3_1: commits.accuracy,
        pm3_2: commits.minutes,
        pm4_1: quorum_distance(
            result.regular().map(|a| a.final_gamma),
            result.correct_opinion,
        )?,
        pm4_2: weighting.mean(),
        tally,
    })
}
