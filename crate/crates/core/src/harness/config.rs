//! Batch configuration files.
//!
//! A configuration is a TOML document with top-level batch keys, one
//! `[scenario]` table and one or more `[[weighting]]` sections:
//!
//! ```toml
//! name = "formative"
//! root_seed = 1
//! repetitions = 10
//! ratios = [0.52, 0.62, 0.72]
//! kinds = ["uniform", "clustered-majority-first", "clustered-minority-first"]
//! malicious_fractions = [0.0]
//!
//! [scenario]
//! length = 38
//! width = 38
//! agents = 25
//! t_max = 125
//! navigation = "rules"        # rules | random | stationary
//! broadcast = "parameterised" # parameterised | random
//! commit = "quorum"           # quorum | random-commit
//! theta = 0.1                 # quorum threshold
//! commit_p = 0.05             # random-commit probability
//! delivery = true
//!
//! [[weighting]]
//! method = "static"           # static | equation | inverted-equation
//! w_max = 0.1
//! ```
//!
//! `kinds` defaults to all three distributions, `malicious_fractions` to
//! `[0.0]`, `root_seed` to 0 and `width` to `length`. Every value is range
//! checked; errors carry the file name and line of the offending value.

use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

use crate::behavior::{BroadcastPolicy, CommitPolicy, DEFAULT_THETA};
use crate::engine::ScenarioConfig;
use crate::environment::{checked_white_count, DistributionKind};
use crate::fusion::{WeightingKind, WeightingMethod};
use crate::navigation::NavigationPolicy;

const DEFAULT_COMMIT_P: f64 = 0.05;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{origin}: {error}")]
    Io {
        origin: String,
        error: std::io::Error,
    },
    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("{origin}:{line}: invalid `{field}`: {message}")]
    Invalid {
        origin: String,
        line: usize,
        field: String,
        message: String,
    },
}

impl ConfigError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Io { .. } => None,
            ConfigError::Parse { line, .. } | ConfigError::Invalid { line, .. } => Some(*line),
        }
    }
}

/// A run matrix: `weightings × malicious_fractions × ratios × kinds × repetitions`.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub name: String,
    pub root_seed: u64,
    pub repetitions: usize,
    pub ratios: Vec<f64>,
    pub kinds: Vec<DistributionKind>,
    pub malicious_fractions: Vec<f64>,
    pub weightings: Vec<WeightingMethod>,
    /// Ratio, kind, malicious fraction, weighting and seed are overwritten per
    /// episode.
    pub template: ScenarioConfig,
}

impl BatchConfig {
    pub fn episode_count(&self) -> usize {
        self.weightings.len()
            * self.malicious_fractions.len()
            * self.ratios.len()
            * self.kinds.len()
            * self.repetitions
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    fn as_f64(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Float(f) => f,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBatch {
    name: Spanned<String>,
    root_seed: Option<Spanned<i64>>,
    repetitions: Spanned<i64>,
    ratios: Spanned<Vec<Spanned<Number>>>,
    kinds: Option<Spanned<Vec<Spanned<String>>>>,
    malicious_fractions: Option<Spanned<Vec<Spanned<Number>>>>,
    scenario: Spanned<RawScenario>,
    weighting: Option<Spanned<Vec<RawWeighting>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    length: Spanned<i64>,
    width: Option<Spanned<i64>>,
    agents: Spanned<i64>,
    t_max: Spanned<i64>,
    navigation: Option<Spanned<String>>,
    broadcast: Option<Spanned<String>>,
    commit: Option<Spanned<String>>,
    theta: Option<Spanned<Number>>,
    commit_p: Option<Spanned<Number>>,
    delivery: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeighting {
    method: Spanned<String>,
    w_max: Spanned<Number>,
}

struct Ctx<'a> {
    origin: &'a str,
    text: &'a str,
}

impl Ctx<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn invalid(&self, span: Range<usize>, field: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            origin: self.origin.to_string(),
            line: self.line(span),
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn count(&self, v: &Spanned<i64>, field: &str, min: i64) -> Result<usize, ConfigError> {
        let n = *v.get_ref();
        if n < min {
            return Err(self.invalid(v.span(), field, format!("{n} must be at least {min}")));
        }
        usize::try_from(n).map_err(|_| self.invalid(v.span(), field, format!("{n} is too large")))
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<BatchConfig, ConfigError> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|error| ConfigError::Io {
        origin: origin.clone(),
        error,
    })?;
    parse_config(&text, &origin)
}

/// Parses configuration text; `origin` names the source in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<BatchConfig, ConfigError> {
    let ctx = Ctx { origin, text };
    let raw: RawBatch = toml::from_str(text).map_err(|e| ConfigError::Parse {
        origin: origin.to_string(),
        line: e.span().map_or(1, |s| ctx.line(s)),
        message: e.message().trim().to_string(),
    })?;

    let name = raw.name.get_ref().trim().to_string();
    if name.is_empty() {
        return Err(ctx.invalid(raw.name.span(), "name", "must not be empty"));
    }
    let root_seed = match &raw.root_seed {
        None => 0,
        Some(s) => u64::try_from(*s.get_ref())
            .map_err(|_| ctx.invalid(s.span(), "root_seed", "must be non-negative"))?,
    };
    let repetitions = ctx.count(&raw.repetitions, "repetitions", 1)?;

    let sc = raw.scenario.get_ref();
    let length = ctx.count(&sc.length, "length", 2)?;
    let width = match &sc.width {
        Some(w) => ctx.count(w, "width", 2)?,
        None => length,
    };
    let agents = ctx.count(&sc.agents, "agents", 1)?;
    if agents > length * width {
        return Err(ctx.invalid(
            sc.agents.span(),
            "agents",
            format!("{agents} agents do not fit on {} cells", length * width),
        ));
    }
    let t_max = ctx.count(&sc.t_max, "t_max", 0)?;
    let t_max = u32::try_from(t_max)
        .map_err(|_| ctx.invalid(sc.t_max.span(), "t_max", format!("{t_max} is too large")))?;

    let navigation = match &sc.navigation {
        None => NavigationPolicy::RulesBased,
        Some(s) => s
            .get_ref()
            .parse()
            .map_err(|e: String| ctx.invalid(s.span(), "navigation", e))?,
    };
    let broadcast_policy = match &sc.broadcast {
        None => BroadcastPolicy::Parameterised,
        Some(s) => BroadcastPolicy::parse(s.get_ref()).ok_or_else(|| {
            ctx.invalid(
                s.span(),
                "broadcast",
                format!(
                    "unknown policy `{}` (expected parameterised or random)",
                    s.get_ref()
                ),
            )
        })?,
    };
    let theta = sc.theta.as_ref().map(|t| (t.get_ref().as_f64(), t.span()));
    let commit_p = sc
        .commit_p
        .as_ref()
        .map(|p| (p.get_ref().as_f64(), p.span()));
    let commit_policy = match sc.commit.as_ref().map(|c| (c.get_ref().as_str(), c.span())) {
        None | Some(("quorum", _)) => {
            let theta = match theta {
                None => DEFAULT_THETA,
                Some((t, _)) if t > 0.0 && t < 0.5 => t,
                Some((t, span)) => {
                    return Err(ctx.invalid(span, "theta", format!("{t} must lie in (0, 0.5)")))
                }
            };
            CommitPolicy::QuorumConvergence { theta }
        }
        Some(("random-commit", _)) => {
            let p = match commit_p {
                None => DEFAULT_COMMIT_P,
                Some((p, _)) if (0.0..=1.0).contains(&p) => p,
                Some((p, span)) => {
                    return Err(ctx.invalid(span, "commit_p", format!("{p} must lie in [0, 1]")))
                }
            };
            CommitPolicy::RandomCommit { p }
        }
        Some((other, span)) => {
            return Err(ctx.invalid(
                span,
                "commit",
                format!("unknown policy `{other}` (expected quorum or random-commit)"),
            ))
        }
    };

    let mut ratios = Vec::with_capacity(raw.ratios.get_ref().len());
    for r in raw.ratios.get_ref() {
        let v = r.get_ref().as_f64();
        if let Err(e) = checked_white_count(length, width, v) {
            return Err(ctx.invalid(r.span(), "ratios", e.to_string()));
        }
        ratios.push(v);
    }
    if ratios.is_empty() {
        return Err(ctx.invalid(raw.ratios.span(), "ratios", "must list at least one ratio"));
    }

    let kinds = match &raw.kinds {
        None => DistributionKind::ALL.to_vec(),
        Some(list) => {
            if list.get_ref().is_empty() {
                return Err(ctx.invalid(list.span(), "kinds", "must list at least one kind"));
            }
            list.get_ref()
                .iter()
                .map(|k| {
                    k.get_ref()
                        .parse()
                        .map_err(|e: String| ctx.invalid(k.span(), "kinds", e))
                })
                .collect::<Result<Vec<_>, _>>()?
        }
    };

    let malicious_fractions = match &raw.malicious_fractions {
        None => vec![0.0],
        Some(list) => {
            if list.get_ref().is_empty() {
                return Err(ctx.invalid(
                    list.span(),
                    "malicious_fractions",
                    "must list at least one fraction",
                ));
            }
            let mut out = Vec::new();
            for f in list.get_ref() {
                let v = f.get_ref().as_f64();
                check_malicious(v, agents)
                    .map_err(|m| ctx.invalid(f.span(), "malicious_fractions", m))?;
                out.push(v);
            }
            out
        }
    };

    let weightings = match &raw.weighting {
        None => {
            return Err(ctx.invalid(
                raw.scenario.span(),
                "weighting",
                "at least one [[weighting]] section is required",
            ))
        }
        Some(list) => list
            .get_ref()
            .iter()
            .map(|w| {
                let kind: WeightingKind = w
                    .method
                    .get_ref()
                    .parse()
                    .map_err(|e: String| ctx.invalid(w.method.span(), "method", e))?;
                let value = w.w_max.get_ref().as_f64();
                WeightingMethod::new(kind, value)
                    .map_err(|e| ctx.invalid(w.w_max.span(), "w_max", e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?,
    };
    if weightings.is_empty() {
        return Err(ctx.invalid(
            raw.weighting.as_ref().map_or(0..0, |w| w.span()),
            "weighting",
            "at least one [[weighting]] section is required",
        ));
    }

    let template = ScenarioConfig {
        length,
        width,
        ratio: ratios[0],
        kind: kinds[0],
        agents,
        malicious_fraction: malicious_fractions[0],
        t_max,
        navigation,
        broadcast_policy,
        commit_policy,
        weighting: weightings[0],
        seed: root_seed,
        delivery: sc.delivery.unwrap_or(true),
    };
    template
        .validate()
        .map_err(|e| ctx.invalid(raw.scenario.span(), "scenario", e.to_string()))?;

    Ok(BatchConfig {
        name,
        root_seed,
        repetitions,
        ratios,
        kinds,
        malicious_fractions,
        weightings,
        template,
    })
}

fn check_malicious(fraction: f64, agents: usize) -> Result<(), String> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(format!("{fraction} must lie in [0, 1)"));
    }
    let malicious = (fraction * agents as f64).round() as usize;
    if malicious >= agents {
        return Err(format!(
            "{fraction} of {agents} agents leaves no regular agent"
        ));
    }
    Ok(())
}

/// Parses `start:stop:step` into the inclusive list of fractions.
pub fn parse_range(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("range `{spec}` must have the form start:stop:step"));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{s}` in range `{spec}` is not a number"))
    };
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() {
        return Err(format!(
            "range `{spec}` needs finite bounds and a positive step"
        ));
    }
    if stop < start {
        return Err(format!("range `{spec}` ends before it starts"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Replaces the malicious fractions, checking each against the agent count.
pub fn with_malicious_fractions(
    mut config: BatchConfig,
    fractions: Vec<f64>,
) -> Result<BatchConfig, String> {
    if fractions.is_empty() {
        return Err("no malicious fractions given".into());
    }
    for &f in &fractions {
        check_malicious(f, config.template.agents)
            .map_err(|e| format!("malicious fraction {e}"))?;
    }
    config.malicious_fractions = fractions;
    Ok(config)
}
