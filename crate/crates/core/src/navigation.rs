//! Local perception and navigation policies.
//!
//! Agents see the five cells ahead and beside them relative to their heading.
//! Out-of-grid cells read as walls; the diagonal cell beyond two orthogonal
//! walls reads as a corner.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{AgentState, Heading};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PerceivedObject {
    None,
    Wall,
    Corner,
    Agent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelativePosition {
    Front,
    Left,
    Right,
    FrontLeft,
    FrontRight,
}

impl RelativePosition {
    pub const ALL: [RelativePosition; 5] = [
        RelativePosition::Front,
        RelativePosition::Left,
        RelativePosition::Right,
        RelativePosition::FrontLeft,
        RelativePosition::FrontRight,
    ];

    fn offset(self, heading: Heading) -> (isize, isize) {
        let (fx, fy) = heading.delta();
        let (lx, ly) = heading.turn_left().delta();
        let (rx, ry) = heading.turn_right().delta();
        match self {
            RelativePosition::Front => (fx, fy),
            RelativePosition::Left => (lx, ly),
            RelativePosition::Right => (rx, ry),
            RelativePosition::FrontLeft => (fx + lx, fy + ly),
            RelativePosition::FrontRight => (fx + rx, fy + ry),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Percept {
    pub object: PerceivedObject,
    pub position: RelativePosition,
}

/// One percept per relative position, in [`RelativePosition::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Percepts([Percept; 5]);

impl Percepts {
    pub fn from_objects(objects: [PerceivedObject; 5]) -> Self {
        let mut out = [Percept {
            object: PerceivedObject::None,
            position: RelativePosition::Front,
        }; 5];
        for (slot, (object, position)) in out
            .iter_mut()
            .zip(objects.into_iter().zip(RelativePosition::ALL))
        {
            *slot = Percept { object, position };
        }
        Percepts(out)
    }

    pub fn at(&self, position: RelativePosition) -> PerceivedObject {
        self.0[position as usize].object
    }

    pub fn as_slice(&self) -> &[Percept] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NavAction {
    StepForward,
    TurnLeft,
    TurnRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NavigationPolicy {
    RulesBased,
    Random,
    /// Never moves. Diagnostic only.
    Stationary,
}

impl NavigationPolicy {
    pub fn name(self) -> &'static str {
        match self {
            NavigationPolicy::RulesBased => "rules",
            NavigationPolicy::Random => "random",
            NavigationPolicy::Stationary => "stationary",
        }
    }
}

impl fmt::Display for NavigationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NavigationPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rules" => Ok(NavigationPolicy::RulesBased),
            "random" => Ok(NavigationPolicy::Random),
            "stationary" => Ok(NavigationPolicy::Stationary),
            _ => Err(format!(
                "unknown navigation policy `{s}` (expected rules, random or stationary)"
            )),
        }
    }
}

/// Which agent, if any, stands on each cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occupancy {
    length: usize,
    width: usize,
    cells: Vec<Option<usize>>,
}

impl Occupancy {
    pub fn new(length: usize, width: usize) -> Self {
        Occupancy {
            length,
            width,
            cells: vec![None; length * width],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.length, self.width)
    }

    pub fn get(&self, x: usize, y: usize) -> Option<usize> {
        self.cells[y * self.length + x]
    }

    /// Places `id` on a free cell. Returns `false` if the cell is taken.
    pub fn place(&mut self, id: usize, x: usize, y: usize) -> bool {
        let slot = &mut self.cells[y * self.length + x];
        if slot.is_some() {
            return false;
        }
        *slot = Some(id);
        true
    }

    fn relocate(&mut self, id: usize, from: (usize, usize), to: (usize, usize)) {
        debug_assert_eq!(self.get(from.0, from.1), Some(id));
        self.cells[from.1 * self.length + from.0] = None;
        self.cells[to.1 * self.length + to.0] = Some(id);
    }

    /// Offsets `(x, y)` by `(dx, dy)`, or `None` if that leaves the grid.
    pub fn offset(&self, x: usize, y: usize, dx: isize, dy: isize) -> Option<(usize, usize)> {
        let nx = x.checked_add_signed(dx)?;
        let ny = y.checked_add_signed(dy)?;
        (nx < self.length && ny < self.width).then_some((nx, ny))
    }

    /// Ids of agents in the eight surrounding cells.
    pub fn moore_neighbors(&self, x: usize, y: usize) -> impl Iterator<Item = usize> + '_ {
        (-1isize..=1)
            .flat_map(|dy| (-1isize..=1).map(move |dx| (dx, dy)))
            .filter(|&d| d != (0, 0))
            .filter_map(move |(dx, dy)| self.offset(x, y, dx, dy))
            .filter_map(|(nx, ny)| self.get(nx, ny))
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }
}

pub fn perceive(agent: &AgentState, occupancy: &Occupancy) -> Percepts {
    let mut objects = [PerceivedObject::None; 5];
    for (slot, position) in objects.iter_mut().zip(RelativePosition::ALL) {
        let (dx, dy) = position.offset(agent.heading);
        *slot = match occupancy.offset(agent.x, agent.y, dx, dy) {
            Some((nx, ny)) => match occupancy.get(nx, ny) {
                Some(_) => PerceivedObject::Agent,
                None => PerceivedObject::None,
            },
            None => {
                let (length, width) = occupancy.dims();
                let x_out = agent.x.checked_add_signed(dx).is_none_or(|v| v >= length);
                let y_out = agent.y.checked_add_signed(dy).is_none_or(|v| v >= width);
                if x_out && y_out {
                    PerceivedObject::Corner
                } else {
                    PerceivedObject::Wall
                }
            }
        };
    }
    Percepts::from_objects(objects)
}

fn random_turn<R: Rng + ?Sized>(rng: &mut R) -> NavAction {
    if rng.random::<bool>() {
        NavAction::TurnLeft
    } else {
        NavAction::TurnRight
    }
}

/// Move forward when clear, turn away from the side wall when facing a
/// corner, otherwise turn left or right at random.
pub fn rules_based_action<R: Rng + ?Sized>(percepts: &Percepts, rng: &mut R) -> NavAction {
    use PerceivedObject::*;
    let front = percepts.at(RelativePosition::Front);
    if front == None {
        return NavAction::StepForward;
    }
    if front == Wall {
        let left = percepts.at(RelativePosition::Left) == Wall;
        let right = percepts.at(RelativePosition::Right) == Wall;
        match (left, right) {
            (true, false) => return NavAction::TurnRight,
            (false, true) => return NavAction::TurnLeft,
            _ => {}
        }
    }
    random_turn(rng)
}

pub fn random_action<R: Rng + ?Sized>(rng: &mut R) -> NavAction {
    match rng.random_range(0..3) {
        0 => NavAction::StepForward,
        1 => NavAction::TurnLeft,
        _ => NavAction::TurnRight,
    }
}

/// Applies one action. A blocked forward step is a no-op. The agent's cell
/// after the action is recorded as visited.
pub fn apply_action(agent: &mut AgentState, action: Option<NavAction>, occupancy: &mut Occupancy) {
    match action {
        Some(NavAction::TurnLeft) => agent.heading = agent.heading.turn_left(),
        Some(NavAction::TurnRight) => agent.heading = agent.heading.turn_right(),
        Some(NavAction::StepForward) => {
            let (dx, dy) = agent.heading.delta();
            if let Some((nx, ny)) = occupancy.offset(agent.x, agent.y, dx, dy) {
                if occupancy.get(nx, ny).is_none() {
                    occupancy.relocate(agent.id, (agent.x, agent.y), (nx, ny));
                    agent.x = nx;
                    agent.y = ny;
                }
            }
        }
        None => {}
    }
    agent.visited.insert(agent.x, agent.y);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Role;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use PerceivedObject as P;

    fn agent_at(
        id: usize,
        x: usize,
        y: usize,
        heading: Heading,
        occ: &mut Occupancy,
    ) -> AgentState {
        assert!(occ.place(id, x, y));
        AgentState::new(id, Role::Regular, x, y, heading, occ.dims())
    }

    /// Independent geometry for a lone agent: classify the five neighbour
    /// cells directly from absolute offsets.
    fn brute_force_percepts(x: i64, y: i64, h: Heading, l: i64, w: i64) -> [P; 5] {
        let (fx, fy) = match h {
            Heading::North => (0, -1),
            Heading::East => (1, 0),
            Heading::South => (0, 1),
            Heading::West => (-1, 0),
        };
        // Left of (fx, fy) in a y-down frame is (fy, -fx).
        let (lx, ly) = (fy, -fx);
        let cells = [
            (fx, fy),
            (lx, ly),
            (-lx, -ly),
            (fx + lx, fy + ly),
            (fx - lx, fy - ly),
        ];
        cells.map(|(dx, dy)| {
            let (cx, cy) = (x + dx, y + dy);
            let xo = cx < 0 || cx >= l;
            let yo = cy < 0 || cy >= w;
            match (xo, yo) {
                (true, true) => P::Corner,
                (false, false) => P::None,
                _ => P::Wall,
            }
        })
    }

    #[test]
    fn perception_matches_brute_force_on_empty_grid() {
        let (l, w) = (38usize, 38usize);
        for x in 0..l {
            for y in 0..w {
                for h in Heading::ALL {
                    let mut occ = Occupancy::new(l, w);
                    let a = agent_at(0, x, y, h, &mut occ);
                    let got = perceive(&a, &occ);
                    let want = brute_force_percepts(x as i64, y as i64, h, l as i64, w as i64);
                    for (pos, exp) in RelativePosition::ALL.into_iter().zip(want) {
                        assert_eq!(got.at(pos), exp, "({x},{y}) {h:?} {pos:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn corner_percepts() {
        let mut occ = Occupancy::new(38, 38);
        let a = agent_at(0, 0, 0, Heading::North, &mut occ);
        let p = perceive(&a, &occ);
        assert_eq!(p.at(RelativePosition::Front), P::Wall);
        assert_eq!(p.at(RelativePosition::Left), P::Wall);
        assert_eq!(p.at(RelativePosition::FrontLeft), P::Corner);
        assert_eq!(p.at(RelativePosition::Right), P::None);
        assert_eq!(p.at(RelativePosition::FrontRight), P::Wall);
    }

    #[test]
    fn interior_and_agent_percepts() {
        let mut occ = Occupancy::new(38, 38);
        let a = agent_at(0, 10, 10, Heading::East, &mut occ);
        assert!(perceive(&a, &occ)
            .as_slice()
            .iter()
            .all(|p| p.object == P::None));
        let _b = agent_at(1, 11, 10, Heading::East, &mut occ);
        let p = perceive(&a, &occ);
        assert_eq!(p.at(RelativePosition::Front), P::Agent);
        let _c = agent_at(2, 11, 9, Heading::East, &mut occ);
        assert_eq!(perceive(&a, &occ).at(RelativePosition::FrontLeft), P::Agent);
    }

    #[test]
    fn rules_policy() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let clear = Percepts::from_objects([P::None; 5]);
        assert_eq!(rules_based_action(&clear, &mut rng), NavAction::StepForward);

        let corner_left = Percepts::from_objects([P::Wall, P::Wall, P::None, P::Corner, P::Wall]);
        assert_eq!(
            rules_based_action(&corner_left, &mut rng),
            NavAction::TurnRight
        );
        let corner_right = Percepts::from_objects([P::Wall, P::None, P::Wall, P::Wall, P::Corner]);
        assert_eq!(
            rules_based_action(&corner_right, &mut rng),
            NavAction::TurnLeft
        );

        let blocked = Percepts::from_objects([P::Agent, P::None, P::None, P::None, P::None]);
        let n = 10_000;
        let lefts = (0..n)
            .filter(|_| rules_based_action(&blocked, &mut rng) == NavAction::TurnLeft)
            .count();
        assert!((lefts as f64 / n as f64 - 0.5).abs() < 0.03);

        let wall = Percepts::from_objects([P::Wall, P::None, P::None, P::Wall, P::Wall]);
        for _ in 0..100 {
            assert_ne!(rules_based_action(&wall, &mut rng), NavAction::StepForward);
        }
    }

    #[test]
    fn random_policy_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 3];
        let n = 30_000;
        for _ in 0..n {
            counts[random_action(&mut rng) as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.02, "{counts:?}");
        }
        let mut a = ChaCha8Rng::seed_from_u64(8);
        let mut b = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            assert_eq!(random_action(&mut a), random_action(&mut b));
        }
    }

    #[test]
    fn stepping_and_blocking() {
        let mut occ = Occupancy::new(38, 38);
        let mut a = agent_at(0, 5, 5, Heading::North, &mut occ);
        apply_action(&mut a, Some(NavAction::StepForward), &mut occ);
        assert_eq!((a.x, a.y), (5, 4));
        assert_eq!(occ.get(5, 4), Some(0));
        assert_eq!(occ.get(5, 5), None);

        let mut corner = agent_at(1, 0, 0, Heading::North, &mut occ);
        apply_action(&mut corner, Some(NavAction::StepForward), &mut occ);
        assert_eq!((corner.x, corner.y), (0, 0));

        let mut b = agent_at(2, 5, 6, Heading::North, &mut occ);
        let _c = agent_at(3, 5, 7, Heading::North, &mut occ);
        apply_action(&mut b, Some(NavAction::StepForward), &mut occ);
        apply_action(&mut b, Some(NavAction::StepForward), &mut occ);
        // One step into the cell agent 0 vacated, then blocked by agent 0.
        assert_eq!((b.x, b.y, b.heading), (5, 5, Heading::North));

        apply_action(&mut b, Some(NavAction::TurnRight), &mut occ);
        assert_eq!(b.heading, Heading::East);
        apply_action(&mut b, Some(NavAction::TurnLeft), &mut occ);
        assert_eq!(b.heading, Heading::North);
    }

    #[test]
    fn blocked_by_agent_is_noop() {
        let mut occ = Occupancy::new(10, 10);
        let mut a = agent_at(0, 4, 4, Heading::South, &mut occ);
        let _b = agent_at(1, 4, 5, Heading::North, &mut occ);
        apply_action(&mut a, Some(NavAction::StepForward), &mut occ);
        assert_eq!((a.x, a.y, a.heading), (4, 4, Heading::South));
        assert_eq!(a.distinct_cells(), 1);
    }

    #[test]
    fn corridor_gives_one_new_cell_per_step() {
        let mut occ = Occupancy::new(100, 3);
        let mut a = agent_at(0, 0, 1, Heading::East, &mut occ);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for t in 1..=99 {
            let act = rules_based_action(&perceive(&a, &occ), &mut rng);
            assert_eq!(act, NavAction::StepForward);
            apply_action(&mut a, Some(act), &mut occ);
            assert_eq!(a.distinct_cells(), t);
        }
        let act = rules_based_action(&perceive(&a, &occ), &mut rng);
        assert_ne!(act, NavAction::StepForward);
    }

    #[test]
    fn moore_neighbourhood() {
        let mut occ = Occupancy::new(5, 5);
        for (id, (x, y)) in [(0, 0), (1, 1), (2, 2), (4, 4), (1, 0)]
            .into_iter()
            .enumerate()
        {
            occ.place(id, x, y);
        }
        let mut n: Vec<_> = occ.moore_neighbors(1, 1).collect();
        n.sort();
        assert_eq!(n, vec![0, 2, 4]);
        assert_eq!(occ.moore_neighbors(4, 4).count(), 0);
    }
}
