use rand_chacha::ChaCha8Rng;

use super::tile::{DoorState, Tile};
use crate::error::{Error, Result};

pub const NUM_ACTIONS: usize = 7;

/// Unit vectors for east, south, west, north.
pub const DIR_TO_VEC: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Action {
    TurnLeft = 0,
    TurnRight = 1,
    Forward = 2,
    Pickup = 3,
    Drop = 4,
    Toggle = 5,
    Noop = 6,
}

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] = [
        Action::TurnLeft,
        Action::TurnRight,
        Action::Forward,
        Action::Pickup,
        Action::Drop,
        Action::Toggle,
        Action::Noop,
    ];

    pub fn from_id(id: usize) -> Result<Action> {
        Action::ALL
            .get(id)
            .copied()
            .ok_or_else(|| Error::usage(format!("action id {id} outside 0..{NUM_ACTIONS}")))
    }

    pub fn id(self) -> usize {
        self as usize
    }
}

/// What ends an episode successfully.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mission {
    /// Step onto the goal tile.
    ReachGoal,
    /// Pick up the (single) ball.
    PickUpBall,
}

/// Full simulator state. Cloning it snapshots the episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridState {
    pub width: usize,
    pub height: usize,
    /// Row-major, `None` is an empty cell.
    pub cells: Vec<Option<Tile>>,
    pub agent_pos: (usize, usize),
    /// 0 east, 1 south, 2 west, 3 north.
    pub agent_dir: u8,
    pub carrying: Option<Tile>,
    pub step_count: u32,
    pub max_steps: u32,
    pub mission: Mission,
    pub terminated: bool,
    pub success: bool,
    pub rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub reward: f64,
    pub done: bool,
}

impl GridState {
    pub fn empty(width: usize, height: usize, max_steps: u32, mission: Mission, rng: ChaCha8Rng) -> Self {
        GridState {
            width,
            height,
            cells: vec![None; width * height],
            agent_pos: (0, 0),
            agent_dir: 0,
            carrying: None,
            step_count: 0,
            max_steps,
            mission,
            terminated: false,
            success: false,
            rng,
        }
    }

    #[inline]
    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<&Tile> {
        self.cells[y * self.width + x].as_ref()
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, tile: Option<Tile>) {
        self.cells[y * self.width + x] = tile;
    }

    pub fn dir_vec(&self) -> (i64, i64) {
        DIR_TO_VEC[self.agent_dir as usize]
    }

    /// Cell directly in front of the agent, if inside the grid.
    pub fn front_pos(&self) -> Option<(usize, usize)> {
        let (dx, dy) = self.dir_vec();
        let (x, y) = (self.agent_pos.0 as i64 + dx, self.agent_pos.1 as i64 + dy);
        self.in_bounds(x, y).then_some((x as usize, y as usize))
    }

    /// Reward granted on success at the current step count.
    pub fn success_reward(&self) -> f64 {
        1.0 - 0.9 * (self.step_count as f64 / self.max_steps as f64)
    }

    /// Advances the state in place.
    pub fn step_mut(&mut self, action: Action) -> Result<StepResult> {
        if self.terminated {
            return Err(Error::usage("step called on a terminated episode; reset first"));
        }
        self.step_count += 1;
        let mut reward = 0.0;
        let mut done = false;
        let front = self.front_pos();

        match action {
            Action::TurnLeft => self.agent_dir = (self.agent_dir + 3) % 4,
            Action::TurnRight => self.agent_dir = (self.agent_dir + 1) % 4,
            Action::Forward => {
                if let Some((fx, fy)) = front {
                    match self.get(fx, fy) {
                        None => self.agent_pos = (fx, fy),
                        Some(tile) if tile.can_overlap() => {
                            let tile = tile.clone();
                            self.agent_pos = (fx, fy);
                            if tile == Tile::Goal && self.mission == Mission::ReachGoal {
                                reward = self.success_reward();
                                done = true;
                                self.success = true;
                            } else if tile == Tile::Lava {
                                done = true;
                            }
                        }
                        Some(_) => {}
                    }
                }
            }
            Action::Pickup => {
                if let Some((fx, fy)) = front {
                    if self.carrying.is_none() && self.get(fx, fy).is_some_and(Tile::can_pickup) {
                        let tile = self.cells[fy * self.width + fx].take();
                        if matches!(tile, Some(Tile::Ball { .. })) && self.mission == Mission::PickUpBall {
                            reward = self.success_reward();
                            done = true;
                            self.success = true;
                        }
                        self.carrying = tile;
                    }
                }
            }
            Action::Drop => {
                if let Some((fx, fy)) = front {
                    if self.carrying.is_some() && self.get(fx, fy).is_none() {
                        let tile = self.carrying.take();
                        self.set(fx, fy, tile);
                    }
                }
            }
            Action::Toggle => {
                if let Some((fx, fy)) = front {
                    let idx = fy * self.width + fx;
                    let carried_key = match &self.carrying {
                        Some(Tile::Key { color }) => Some(*color),
                        _ => None,
                    };
                    match &mut self.cells[idx] {
                        Some(Tile::Door { color, state }) => {
                            *state = match *state {
                                DoorState::Locked if carried_key == Some(*color) => DoorState::Open,
                                DoorState::Locked => DoorState::Locked,
                                DoorState::Closed => DoorState::Open,
                                DoorState::Open => DoorState::Closed,
                            };
                        }
                        Some(Tile::Box { contents, .. }) => {
                            let inner = contents.take().map(|b| *b);
                            self.cells[idx] = inner;
                        }
                        _ => {}
                    }
                }
            }
            Action::Noop => {}
        }

        if self.step_count >= self.max_steps {
            done = true;
        }
        self.terminated = done;
        Ok(StepResult { reward, done })
    }

    /// Value-semantics step: returns the successor and leaves `self` untouched.
    pub fn step(&self, action: usize) -> Result<(GridState, f64, bool)> {
        let action = Action::from_id(action)?;
        let mut next = self.clone();
        let res = next.step_mut(action)?;
        Ok((next, res.reward, res.done))
    }

    /// Counts cells whose tile satisfies `pred`.
    pub fn count_tiles(&self, pred: impl Fn(&Tile) -> bool) -> usize {
        self.cells.iter().flatten().filter(|t| pred(t)).count()
    }
}
