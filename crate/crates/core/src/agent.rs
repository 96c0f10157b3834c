//! Swarm members and the quantities derived from their beliefs.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{CellColor, Opinion};

/// Quorum-sensing value every agent starts from.
pub const INITIAL_GAMMA: f64 = 0.5;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum AgentError {
    #[error("agent {0} has no observations yet")]
    NoObservations(usize),
    #[error("agent {0} is already committed")]
    AlreadyCommitted(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    pub fn turn_left(self) -> Heading {
        match self {
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
            Heading::East => Heading::North,
        }
    }

    pub fn turn_right(self) -> Heading {
        match self {
            Heading::North => Heading::East,
            Heading::East => Heading::South,
            Heading::South => Heading::West,
            Heading::West => Heading::North,
        }
    }

    /// Unit step `(dx, dy)`; north is `-y`.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Heading::North => (0, -1),
            Heading::East => (1, 0),
            Heading::South => (0, 1),
            Heading::West => (-1, 0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Heading::North => "N",
            Heading::East => "E",
            Heading::South => "S",
            Heading::West => "W",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Regular,
    /// Always broadcasts the opposite of the ground truth.
    Malicious,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Regular => "regular",
            Role::Malicious => "malicious",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Commitment {
    pub final_opinion: Opinion,
    /// Seconds since episode start.
    pub commit_time: u32,
    /// Set when the decision was imposed at the time limit.
    pub forced: bool,
}

/// Set of distinct cells an agent has stood on, as a bitset over the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitedCells {
    length: usize,
    bits: Vec<u64>,
    count: usize,
}

impl VisitedCells {
    pub fn new(length: usize, width: usize) -> Self {
        VisitedCells {
            length,
            bits: vec![0; (length * width).div_ceil(64)],
            count: 0,
        }
    }

    /// Returns `true` if the cell had not been visited before.
    pub fn insert(&mut self, x: usize, y: usize) -> bool {
        let i = y * self.length + x;
        let (word, bit) = (i / 64, 1u64 << (i % 64));
        if self.bits[word] & bit == 0 {
            self.bits[word] |= bit;
            self.count += 1;
            true
        } else {
            false
        }
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        let i = y * self.length + x;
        self.bits[i / 64] & (1u64 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub role: Role,
    pub x: usize,
    pub y: usize,
    pub heading: Heading,
    pub observation_count: u32,
    pub white_count: u32,
    pub gamma: f64,
    committed: Option<Commitment>,
    pub visited: VisitedCells,
}

impl AgentState {
    pub fn new(
        id: usize,
        role: Role,
        x: usize,
        y: usize,
        heading: Heading,
        grid: (usize, usize),
    ) -> Self {
        AgentState {
            id,
            role,
            x,
            y,
            heading,
            observation_count: 0,
            white_count: 0,
            gamma: INITIAL_GAMMA,
            committed: None,
            visited: VisitedCells::new(grid.0, grid.1),
        }
    }

    pub fn committed(&self) -> Option<&Commitment> {
        self.committed.as_ref()
    }

    pub fn is_committed(&self) -> bool {
        self.committed.is_some()
    }

    /// Records a final decision. A commitment can never be replaced.
    pub fn commit(&mut self, commitment: Commitment) -> Result<(), AgentError> {
        if self.committed.is_some() {
            return Err(AgentError::AlreadyCommitted(self.id));
        }
        self.committed = Some(commitment);
        Ok(())
    }

    /// Records one colour reading. Every reading counts, including repeats.
    pub fn sense(&mut self, color: CellColor) {
        self.observation_count += 1;
        if color.is_white() {
            self.white_count += 1;
        }
    }

    /// Own opinion: the rounded fraction of white readings, ties to white.
    pub fn current_opinion(&self) -> Result<Opinion, AgentError> {
        if self.observation_count == 0 {
            return Err(AgentError::NoObservations(self.id));
        }
        Ok(if 2 * self.white_count >= self.observation_count {
            Opinion::White
        } else {
            Opinion::Black
        })
    }

    /// Readings taken relative to the grid area. Not clamped.
    pub fn observed_ratio(&self, length: usize, width: usize) -> f64 {
        self.observation_count as f64 / (length * width) as f64
    }

    /// `|opinion - gamma|`.
    pub fn opinion_distance(&self) -> Result<f64, AgentError> {
        Ok((self.current_opinion()?.value() - self.gamma).abs())
    }

    pub fn distinct_cells(&self) -> usize {
        self.visited.len()
    }
}
