//! Momentum-based opinion fusion.
//!
//! Every method updates the quorum-sensing value `γ` with a received opinion
//! `Ω ∈ {0, 1}` as a convex combination
//!
//! ```text
//! γ' = (1 − w)·γ + w·Ω
//! ```
//!
//! and differs only in how the new-opinion weight `w` is chosen:
//!
//! * static: `w` is the configured constant,
//! * equation-based: `w = λ(1 − |Ω − γ|)`, so opinions far from `γ` are damped,
//! * inverted-equation-based: `w = λ(1 − |((Ω + 1) mod 2) − γ|)`, so opinions
//!   near `γ` are damped.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::Opinion;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum FusionError {
    #[error("quorum value {0} lies outside [0, 1]")]
    GammaOutOfRange(f64),
    #[error("weight parameter {0} must lie in (0, 1]")]
    InvalidWeight(f64),
    #[error("weights (correct {w_correct}, incorrect {w_incorrect}) must lie in [0, {w_max}]")]
    WeightsOutOfRange {
        w_max: f64,
        w_correct: f64,
        w_incorrect: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightingKind {
    Static,
    EquationBased,
    InvertedEquationBased,
}

impl WeightingKind {
    pub const ALL: [WeightingKind; 3] = [
        WeightingKind::Static,
        WeightingKind::EquationBased,
        WeightingKind::InvertedEquationBased,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WeightingKind::Static => "static",
            WeightingKind::EquationBased => "equation",
            WeightingKind::InvertedEquationBased => "inverted-equation",
        }
    }
}

impl fmt::Display for WeightingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightingKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WeightingKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                format!("unknown weighting method `{s}` (expected static, equation or inverted-equation)")
            })
    }
}

/// A fusion rule with its weight parameter: the constant new-opinion weight
/// for `Static`, the maximum weight `λ` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightingMethod {
    kind: WeightingKind,
    weight_param: f64,
}

impl WeightingMethod {
    pub fn new(kind: WeightingKind, weight_param: f64) -> Result<Self, FusionError> {
        if !(weight_param > 0.0 && weight_param <= 1.0) {
            return Err(FusionError::InvalidWeight(weight_param));
        }
        Ok(WeightingMethod { kind, weight_param })
    }

    pub fn kind(&self) -> WeightingKind {
        self.kind
    }

    /// The largest weight this method can give an opinion.
    pub fn w_max(&self) -> f64 {
        self.weight_param
    }
}

impl fmt::Display for WeightingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.weight_param)
    }
}

/// Weight applied to `omega` when fused into `gamma`.
pub fn effective_new_opinion_weight(method: &WeightingMethod, gamma: f64, omega: Opinion) -> f64 {
    let lambda = method.weight_param;
    match method.kind {
        WeightingKind::Static => lambda,
        WeightingKind::EquationBased => lambda * (1.0 - (omega.value() - gamma).abs()),
        WeightingKind::InvertedEquationBased => {
            lambda * (1.0 - (omega.opposite().value() - gamma).abs())
        }
    }
}

pub fn fuse(method: &WeightingMethod, gamma: f64, omega: Opinion) -> Result<f64, FusionError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(FusionError::GammaOutOfRange(gamma));
    }
    let w = effective_new_opinion_weight(method, gamma, omega);
    Ok((1.0 - w) * gamma + w * omega.value())
}

/// Distance of an applied weighting from the optimum, `|w_max − w_co + w_ic|`.
pub fn weighting_distance(
    w_max: f64,
    w_correct: f64,
    w_incorrect: f64,
) -> Result<f64, FusionError> {
    let in_range = |w: f64| (0.0..=w_max).contains(&w);
    if !(in_range(w_correct) && in_range(w_incorrect)) {
        return Err(FusionError::WeightsOutOfRange {
            w_max,
            w_correct,
            w_incorrect,
        });
    }
    Ok((w_max - w_correct + w_incorrect).abs())
}
