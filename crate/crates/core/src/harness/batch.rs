//! Running a configuration's episode matrix.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::BatchConfig;
use crate::engine::{
    run_episode_traced, EngineError, EpisodeResult, ScenarioConfig, SimulationState,
};
use crate::environment::DistributionKind;
use crate::metrics::{episode_metrics, EpisodeMetrics, MetricsError};
use crate::seed::episode_seed;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("episode {index} (ratio {ratio}, {kind}, malicious {malicious_fraction}, {weighting}, repetition {repetition}): {error}")]
    Episode {
        index: usize,
        ratio: f64,
        kind: DistributionKind,
        malicious_fraction: f64,
        weighting: String,
        repetition: usize,
        error: EpisodeError,
    },
    #[error("could not start {0} worker threads: {1}")]
    Pool(usize, String),
    #[error("trace output failed: {0}")]
    Trace(String),
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// One cell of the run matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSpec {
    pub index: usize,
    pub weighting_index: usize,
    pub malicious_index: usize,
    pub ratio_index: usize,
    pub kind_index: usize,
    pub repetition: usize,
    pub scenario: ScenarioConfig,
}

/// The matrix in output order: weighting, malicious fraction, ratio, kind,
/// repetition. Weighting does not enter the seed, so every weighting sees the
/// same environments and placements.
pub fn plan(config: &BatchConfig) -> Vec<EpisodeSpec> {
    let mut out = Vec::with_capacity(config.episode_count());
    for (wi, &weighting) in config.weightings.iter().enumerate() {
        for (mi, &malicious_fraction) in config.malicious_fractions.iter().enumerate() {
            for (ri, &ratio) in config.ratios.iter().enumerate() {
                for (ki, &kind) in config.kinds.iter().enumerate() {
                    for rep in 0..config.repetitions {
                        out.push(EpisodeSpec {
                            index: out.len(),
                            weighting_index: wi,
                            malicious_index: mi,
                            ratio_index: ri,
                            kind_index: ki,
                            repetition: rep,
                            scenario: ScenarioConfig {
                                ratio,
                                kind,
                                malicious_fraction,
                                weighting,
                                seed: episode_seed(config.root_seed, ri, ki, rep, mi),
                                ..config.template.clone()
                            },
                        });
                    }
                }
            }
        }
    }
    out
}

/// One line of `episodes.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub index: usize,
    pub ratio: f64,
    pub kind: String,
    pub malicious_fraction: f64,
    pub weighting: String,
    pub w_max: f64,
    pub repetition: usize,
    pub seed: u64,
    pub correct_opinion: u8,
    pub wall_steps: u32,
    pub forced: usize,
    pub pm1_1: f64,
    pub pm1_2: f64,
    pub pm2_1: Option<f64>,
    pub pm2_2: Option<f64>,
    pub pm2_3: Option<f64>,
    pub pm3_1: f64,
    pub pm3_2: f64,
    pub pm4_1: f64,
    pub pm4_2: Option<f64>,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl EpisodeRow {
    pub fn new(spec: &EpisodeSpec, result: &EpisodeResult, m: &EpisodeMetrics) -> Self {
        let s = &spec.scenario;
        EpisodeRow {
            index: spec.index,
            ratio: s.ratio,
            kind: s.kind.name().to_string(),
            malicious_fraction: s.malicious_fraction,
            weighting: s.weighting.kind().name().to_string(),
            w_max: s.weighting.w_max(),
            repetition: spec.repetition,
            seed: s.seed,
            correct_opinion: result.correct_opinion.as_u8(),
            wall_steps: result.wall_steps,
            forced: result.regular().filter(|a| a.forced).count(),
            pm1_1: m.pm1_1,
            pm1_2: m.pm1_2,
            pm2_1: m.pm2_1,
            pm2_2: m.pm2_2,
            pm2_3: m.pm2_3,
            pm3_1: m.pm3_1,
            pm3_2: m.pm3_2,
            pm4_1: m.pm4_1,
            pm4_2: m.pm4_2,
            tp: m.tally.tp,
            fp: m.tally.fp,
            tn: m.tally.tn,
            fn_: m.tally.fn_,
        }
    }
}

/// One agent at the end of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub episode: usize,
    pub step: u32,
    pub agent: usize,
    pub role: String,
    pub x: usize,
    pub y: usize,
    pub heading: String,
    pub observations: u32,
    pub white: u32,
    pub gamma: f64,
    pub committed: bool,
}

fn trace_rows(episode: usize, state: &SimulationState, out: &mut Vec<TraceRow>) {
    for a in state.agents() {
        out.push(TraceRow {
            episode,
            step: state.clock(),
            agent: a.id,
            role: a.role.to_string(),
            x: a.x,
            y: a.y,
            heading: a.heading.name().to_string(),
            observations: a.observation_count,
            white: a.white_count,
            gamma: a.gamma,
            committed: a.is_committed(),
        });
    }
}

fn run_one(spec: &EpisodeSpec, trace: bool) -> Result<(EpisodeRow, Vec<TraceRow>), BatchError> {
    let mut rows = Vec::new();
    let outcome = run_episode_traced(&spec.scenario, |state| {
        if trace {
            trace_rows(spec.index, state, &mut rows);
        }
    })
    .map_err(EpisodeError::from)
    .and_then(|result| {
        let m = episode_metrics(&result)?;
        Ok(EpisodeRow::new(spec, &result, &m))
    });
    outcome.map(|row| (row, rows)).map_err(|error| {
        let s = &spec.scenario;
        BatchError::Episode {
            index: spec.index,
            ratio: s.ratio,
            kind: s.kind,
            malicious_fraction: s.malicious_fraction,
            weighting: s.weighting.to_string(),
            repetition: spec.repetition,
            error,
        }
    })
}

/// Runs the whole matrix on `workers` threads (0 = rayon default). Rows come
/// back in matrix order.
pub fn run_batch(config: &BatchConfig, workers: usize) -> Result<Vec<EpisodeRow>, BatchError> {
    run_batch_traced(
        config,
        workers,
        None::<fn(&[TraceRow]) -> Result<(), String>>,
    )
}

/// Like [`run_batch`], handing each episode's trace to `sink` in matrix order.
/// Episodes are processed in chunks so traces of large batches are never all
/// held at once.
pub fn run_batch_traced<F>(
    config: &BatchConfig,
    workers: usize,
    mut sink: Option<F>,
) -> Result<Vec<EpisodeRow>, BatchError>
where
    F: FnMut(&[TraceRow]) -> Result<(), String>,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BatchError::Pool(workers, e.to_string()))?;
    let specs = plan(config);
    let trace = sink.is_some();
    let chunk = if trace {
        pool.current_num_threads().max(1) * 2
    } else {
        specs.len().max(1)
    };
    let mut rows = Vec::with_capacity(specs.len());
    for part in specs.chunks(chunk) {
        let done = pool.install(|| {
            part.par_iter()
                .map(|s| run_one(s, trace))
                .collect::<Result<Vec<_>, _>>()
        })?;
        for (row, trace_rows) in done {
            if let Some(sink) = sink.as_mut() {
                sink(&trace_rows).map_err(BatchError::Trace)?;
            }
            rows.push(row);
        }
    }
    Ok(rows)
}
