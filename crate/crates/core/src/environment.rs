//! Grid environments: an `L × W` lattice of white (feature-bearing) and black
//! cells.
//!
//! Coordinates: `x` is the column (`0..length`, east-positive) and `y` the row
//! (`0..width`, south-positive). Cells are stored row-major.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvironmentError {
    #[error("invalid feature ratio {0}: must lie in (0, 1) and differ from 0.5")]
    InvalidRatio(f64),
    #[error("feature ratio {ratio} on a {length}x{width} grid gives {white} white cells, which leaves no majority colour")]
    NoMajority {
        ratio: f64,
        length: usize,
        width: usize,
        white: usize,
    },
    #[error("feature ratio {ratio} on a {length}x{width} grid leaves one clustered region empty")]
    EmptyRegion {
        ratio: f64,
        length: usize,
        width: usize,
    },
    #[error("invalid grid dimensions {length}x{width}: both must be at least 2")]
    InvalidDimensions { length: usize, width: usize },
    #[error("cell ({x}, {y}) lies outside the {length}x{width} grid")]
    OutOfBounds {
        x: usize,
        y: usize,
        length: usize,
        width: usize,
    },
    #[error("expected {expected} cells, got {actual}")]
    CellCount { expected: usize, actual: usize },
    #[error("environment has equally many white and black cells")]
    Tie,
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellColor {
    /// Contains the feature.
    White,
    Black,
}

impl CellColor {
    pub fn opinion(self) -> Opinion {
        match self {
            CellColor::White => Opinion::White,
            CellColor::Black => Opinion::Black,
        }
    }

    pub fn is_white(self) -> bool {
        self == CellColor::White
    }
}

/// A binary opinion about the majority colour. `White` has value 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Opinion {
    Black = 0,
    White = 1,
}

impl Opinion {
    pub fn value(self) -> f64 {
        self as u8 as f64
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn opposite(self) -> Opinion {
        match self {
            Opinion::White => Opinion::Black,
            Opinion::Black => Opinion::White,
        }
    }

    /// Rounds a value in `[0, 1]` to an opinion, with 0.5 going to `White`.
    pub fn round(value: f64) -> Opinion {
        if value >= 0.5 {
            Opinion::White
        } else {
            Opinion::Black
        }
    }

    pub fn from_u8(v: u8) -> Option<Opinion> {
        match v {
            0 => Some(Opinion::Black),
            1 => Some(Opinion::White),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistributionKind {
    /// White cells scattered by a uniform random permutation.
    Uniform,
    /// Two colour regions; the swarm starts inside the majority region.
    ClusteredMajorityFirst,
    /// Two colour regions; the swarm starts inside the minority region.
    ClusteredMinorityFirst,
}

impl DistributionKind {
    pub const ALL: [DistributionKind; 3] = [
        DistributionKind::Uniform,
        DistributionKind::ClusteredMajorityFirst,
        DistributionKind::ClusteredMinorityFirst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistributionKind::Uniform => "uniform",
            DistributionKind::ClusteredMajorityFirst => "clustered-majority-first",
            DistributionKind::ClusteredMinorityFirst => "clustered-minority-first",
        }
    }

    pub fn is_clustered(self) -> bool {
        self != DistributionKind::Uniform
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistributionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DistributionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown distribution kind `{s}` (expected uniform, clustered-majority-first or clustered-minority-first)"
                )
            })
    }
}

/// Number of white cells for ratio `r` on `cells` cells: `round(r * cells)`.
pub fn white_cell_count(ratio: f64, cells: usize) -> usize {
    (ratio * cells as f64).round() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEnvironment {
    length: usize,
    width: usize,
    cells: Vec<CellColor>,
    feature_ratio: f64,
    kind: DistributionKind,
    white_count: usize,
}

pub fn generate_environment(
    length: usize,
    width: usize,
    ratio: f64,
    kind: DistributionKind,
    seed: u64,
) -> Result<GridEnvironment, EnvironmentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GridEnvironment::generate(length, width, ratio, kind, &mut rng)
}

impl GridEnvironment {
    pub fn generate<R: Rng + ?Sized>(
        length: usize,
        width: usize,
        ratio: f64,
        kind: DistributionKind,
        rng: &mut R,
    ) -> Result<Self, EnvironmentError> {
        check_dimensions(length, width)?;
        let total = length * width;
        let white = checked_white_count(length, width, ratio)?;

        let cells = match kind {
            DistributionKind::Uniform => {
                let mut cells: Vec<CellColor> = (0..total)
                    .map(|i| {
                        if i < white {
                            CellColor::White
                        } else {
                            CellColor::Black
                        }
                    })
                    .collect();
                cells.shuffle(rng);
                cells
            }
            DistributionKind::ClusteredMajorityFirst | DistributionKind::ClusteredMinorityFirst => {
                let majority = if 2 * white > total {
                    CellColor::White
                } else {
                    CellColor::Black
                };
                let majority_cells = white.max(total - white);
                if majority_cells == total {
                    return Err(EnvironmentError::EmptyRegion {
                        ratio,
                        length,
                        width,
                    });
                }
                let minority = match majority {
                    CellColor::White => CellColor::Black,
                    CellColor::Black => CellColor::White,
                };
                // Majority fills whole columns from the west, then the top of
                // the boundary column.
                let mut cells = vec![minority; total];
                for x in 0..length {
                    for y in 0..width {
                        if x * width + y < majority_cells {
                            cells[y * length + x] = majority;
                        }
                    }
                }
                cells
            }
        };

        Ok(GridEnvironment {
            length,
            width,
            cells,
            feature_ratio: ratio,
            kind,
            white_count: white,
        })
    }

    /// Builds an environment from explicit row-major cells.
    pub fn from_cells(
        length: usize,
        width: usize,
        cells: Vec<CellColor>,
        kind: DistributionKind,
    ) -> Result<Self, EnvironmentError> {
        check_dimensions(length, width)?;
        if cells.len() != length * width {
            return Err(EnvironmentError::CellCount {
                expected: length * width,
                actual: cells.len(),
            });
        }
        let white_count = cells.iter().filter(|c| c.is_white()).count();
        Ok(GridEnvironment {
            length,
            width,
            feature_ratio: white_count as f64 / cells.len() as f64,
            cells,
            kind,
            white_count,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn area(&self) -> usize {
        self.length * self.width
    }

    pub fn feature_ratio(&self) -> f64 {
        self.feature_ratio
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn white_count(&self) -> usize {
        self.white_count
    }

    pub fn cells(&self) -> &[CellColor] {
        &self.cells
    }

    pub fn cell_color(&self, x: usize, y: usize) -> Result<CellColor, EnvironmentError> {
        if x >= self.length || y >= self.width {
            return Err(EnvironmentError::OutOfBounds {
                x,
                y,
                length: self.length,
                width: self.width,
            });
        }
        Ok(self.cells[y * self.length + x])
    }

    /// Unchecked lookup for callers that already hold in-bounds coordinates.
    pub(crate) fn color_at(&self, x: usize, y: usize) -> CellColor {
        self.cells[y * self.length + x]
    }

    /// Ground-truth majority opinion.
    pub fn correct_opinion(&self) -> Result<Opinion, EnvironmentError> {
        let total = self.area();
        match (2 * self.white_count).cmp(&total) {
            std::cmp::Ordering::Greater => Ok(Opinion::White),
            std::cmp::Ordering::Less => Ok(Opinion::Black),
            std::cmp::Ordering::Equal => Err(EnvironmentError::Tie),
        }
    }

    /// Columns lying entirely inside the majority (`true`) or minority
    /// (`false`) region of a clustered environment. `None` for uniform grids.
    pub fn region_columns(&self, majority: bool) -> Option<Range<usize>> {
        if !self.kind.is_clustered() {
            return None;
        }
        let total = self.area();
        let majority_cells = self.white_count.max(total - self.white_count);
        let full = majority_cells / self.width;
        let partial = !majority_cells.is_multiple_of(self.width);
        Some(if majority {
            0..full
        } else {
            (full + usize::from(partial))..self.length
        })
    }
}

pub fn correct_opinion(env: &GridEnvironment) -> Result<Opinion, EnvironmentError> {
    env.correct_opinion()
}

fn check_dimensions(length: usize, width: usize) -> Result<(), EnvironmentError> {
    if length < 2 || width < 2 {
        return Err(EnvironmentError::InvalidDimensions { length, width });
    }
    Ok(())
}

/// Validates a ratio against grid dimensions and returns the white-cell count.
pub fn checked_white_count(
    length: usize,
    width: usize,
    ratio: f64,
) -> Result<usize, EnvironmentError> {
    if !(ratio > 0.0 && ratio < 1.0) || ratio == 0.5 {
        return Err(EnvironmentError::InvalidRatio(ratio));
    }
    let total = length * width;
    let white = white_cell_count(ratio, total);
    if 2 * white == total {
        return Err(EnvironmentError::NoMajority {
            ratio,
            length,
            width,
            white,
        });
    }
    Ok(white)
}

/// Draws a feature ratio from a normal distribution truncated to `(0, 1)`.
///
/// Draws outside the open interval, and draws of exactly 0.5, are rejected
/// and redrawn.
pub fn sample_feature_ratio<R: Rng + ?Sized>(
    mean: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<f64, EnvironmentError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(EnvironmentError::InvalidSigma(sigma));
    }
    let normal = Normal::new(mean, sigma).map_err(|_| EnvironmentError::InvalidSigma(sigma))?;
    loop {
        let x = normal.sample(rng);
        if x > 0.0 && x < 1.0 && x != 0.5 {
            return Ok(x);
        }
    }
}
