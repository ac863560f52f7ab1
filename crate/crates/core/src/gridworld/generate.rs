//! Procedural layout generators for the three families.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{EnvConfig, Family};
use super::state::{GridState, Mission};
use super::tile::{Color, DoorState, Tile};
use crate::error::{Error, Result};

const PLACE_ATTEMPTS: usize = 10_000;

/// Generates a fresh episode for `config` from `episode_seed`.
pub fn reset(config: &EnvConfig, episode_seed: u64) -> Result<GridState> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(episode_seed);
    rng.set_stream(config.seed);
    match config.family {
        Family::MultiRoom => multi_room(config, rng),
        Family::KeyCorridor => key_corridor(config, rng),
        Family::ObstructedMaze2Dlh => obstructed_maze(config, rng),
    }
}

fn wall_rect(state: &mut GridState, x: usize, y: usize, w: usize, h: usize) {
    for i in 0..w {
        state.set(x + i, y, Some(Tile::Wall));
        state.set(x + i, y + h - 1, Some(Tile::Wall));
    }
    for j in 0..h {
        state.set(x, y + j, Some(Tile::Wall));
        state.set(x + w - 1, y + j, Some(Tile::Wall));
    }
}

/// Rejection-samples an empty cell inside the rectangle that is not the
/// agent's cell.
fn sample_free_cell(
    state: &mut GridState,
    top: (usize, usize),
    size: (usize, usize),
    avoid_agent: bool,
) -> Result<(usize, usize)> {
    for _ in 0..PLACE_ATTEMPTS {
        let x = state.rng.random_range(top.0..top.0 + size.0);
        let y = state.rng.random_range(top.1..top.1 + size.1);
        if state.get(x, y).is_some() || (avoid_agent && state.agent_pos == (x, y)) {
            continue;
        }
        return Ok((x, y));
    }
    Err(Error::usage("could not find a free cell while generating the layout"))
}

fn place_obj(state: &mut GridState, top: (usize, usize), size: (usize, usize), tile: Tile) -> Result<(usize, usize)> {
    let pos = sample_free_cell(state, top, size, true)?;
    state.set(pos.0, pos.1, Some(tile));
    Ok(pos)
}

fn place_agent(state: &mut GridState, top: (usize, usize), size: (usize, usize)) -> Result<()> {
    let pos = sample_free_cell(state, top, size, false)?;
    state.agent_pos = pos;
    state.agent_dir = state.rng.random_range(0..4);
    Ok(())
}

// ---------------------------------------------------------------------------
// MultiRoom

#[derive(Debug, Clone)]
struct ChainRoom {
    top: (usize, usize),
    size: (usize, usize),
    entry_door: (i64, i64),
}

struct ChainBuilder<'a> {
    rng: &'a mut ChaCha8Rng,
    width: i64,
    height: i64,
    min_size: usize,
    max_size: usize,
}

impl ChainBuilder<'_> {
    /// Recursively lays out rooms; the first room's top-left corner is
    /// `entry_door`. Returns false if this room could not be placed.
    fn place_room(&mut self, num_left: usize, rooms: &mut Vec<ChainRoom>, entry_wall: u8, entry_door: (i64, i64)) -> bool {
        let size_x = self.rng.random_range(self.min_size..=self.max_size) as i64;
        let size_y = self.rng.random_range(self.min_size..=self.max_size) as i64;
        let (top_x, top_y) = if rooms.is_empty() {
            entry_door
        } else {
            let (dx, dy) = entry_door;
            match entry_wall {
                0 => (dx - size_x + 1, self.rng.random_range(dy - size_y + 2..dy)),
                1 => (self.rng.random_range(dx - size_x + 2..dx), dy - size_y + 1),
                2 => (dx, self.rng.random_range(dy - size_y + 2..dy)),
                _ => (self.rng.random_range(dx - size_x + 2..dx), dy),
            }
        };
        if top_x < 0 || top_y < 0 || top_x + size_x > self.width || top_y + size_y > self.height {
            return false;
        }
        // Every room except the one we enter from must be strictly apart.
        let n = rooms.len();
        for room in rooms.iter().take(n.saturating_sub(1)) {
            let (rx, ry) = (room.top.0 as i64, room.top.1 as i64);
            let (rw, rh) = (room.size.0 as i64, room.size.1 as i64);
            let apart = top_x + size_x < rx || rx + rw <= top_x || top_y + size_y < ry || ry + rh <= top_y;
            if !apart {
                return false;
            }
        }
        rooms.push(ChainRoom {
            top: (top_x as usize, top_y as usize),
            size: (size_x as usize, size_y as usize),
            entry_door,
        });
        if num_left == 1 {
            return true;
        }
        for _ in 0..8 {
            let walls: Vec<u8> = (0..4).filter(|&w| w != entry_wall).collect();
            let exit_wall = *walls.choose(self.rng).expect("three walls remain");
            let exit_door = match exit_wall {
                0 => (top_x + size_x - 1, top_y + self.rng.random_range(1..size_y - 1)),
                1 => (top_x + self.rng.random_range(1..size_x - 1), top_y + size_y - 1),
                2 => (top_x, top_y + self.rng.random_range(1..size_y - 1)),
                _ => (top_x + self.rng.random_range(1..size_x - 1), top_y),
            };
            let before = rooms.len();
            if self.place_room(num_left - 1, rooms, (exit_wall + 2) % 4, exit_door) {
                break;
            }
            rooms.truncate(before);
        }
        true
    }
}

fn multi_room(config: &EnvConfig, mut rng: ChaCha8Rng) -> Result<GridState> {
    let (width, height) = config.grid_dims();
    let mut best: Vec<ChainRoom> = Vec::new();
    let mut attempts = 0;
    while best.len() < config.n_rooms {
        attempts += 1;
        if attempts > PLACE_ATTEMPTS {
            return Err(Error::config(
                "n_rooms",
                format!("could not fit {} rooms on a {width}x{height} grid", config.n_rooms),
            ));
        }
        let mut builder = ChainBuilder {
            rng: &mut rng,
            width: width as i64,
            height: height as i64,
            min_size: 4,
            max_size: config.room_size,
        };
        let start = (
            builder.rng.random_range(0..width as i64 - 1),
            builder.rng.random_range(0..height as i64 - 1),
        );
        let mut rooms = Vec::new();
        builder.place_room(config.n_rooms, &mut rooms, 2, start);
        if rooms.len() > best.len() {
            best = rooms;
        }
    }

    let mut state = GridState::empty(width, height, config.max_steps(), Mission::ReachGoal, rng);
    let mut prev_color: Option<Color> = None;
    for (idx, room) in best.iter().enumerate() {
        wall_rect(&mut state, room.top.0, room.top.1, room.size.0, room.size.1);
        if idx > 0 {
            let choices: Vec<Color> = Color::ALL.into_iter().filter(|c| Some(*c) != prev_color).collect();
            let color = *choices.choose(&mut state.rng).expect("five colors remain");
            let (dx, dy) = room.entry_door;
            state.set(dx as usize, dy as usize, Some(Tile::door(color, DoorState::Closed)));
            prev_color = Some(color);
        }
    }
    let first = &best[0];
    place_agent(&mut state, first.top, first.size)?;
    let last = best.last().expect("at least two rooms");
    place_obj(&mut state, last.top, last.size, Tile::Goal)?;
    Ok(state)
}

// ---------------------------------------------------------------------------
// Room grids (KeyCorridor, ObstructedMaze)

#[derive(Debug, Clone)]
struct GridRoom {
    top: (usize, usize),
    size: (usize, usize),
    /// Door slot per wall (right, bottom, left, top); `None` on the outer boundary.
    door_pos: [Option<(usize, usize)>; 4],
    neighbors: [Option<usize>; 4],
    connected: [bool; 4],
    locked: bool,
}

struct RoomGrid {
    cols: usize,
    rows: usize,
    rooms: Vec<GridRoom>,
}

impl RoomGrid {
    fn build(state: &mut GridState, cols: usize, rows: usize, room_size: usize) -> RoomGrid {
        let mut rooms = Vec::with_capacity(cols * rows);
        for j in 0..rows {
            for i in 0..cols {
                let top = (i * (room_size - 1), j * (room_size - 1));
                wall_rect(state, top.0, top.1, room_size, room_size);
                rooms.push(GridRoom {
                    top,
                    size: (room_size, room_size),
                    door_pos: [None; 4],
                    neighbors: [None; 4],
                    connected: [false; 4],
                    locked: false,
                });
            }
        }
        for j in 0..rows {
            for i in 0..cols {
                let idx = j * cols + i;
                let (tx, ty) = rooms[idx].top;
                let (lo_x, lo_y) = (tx + 1, ty + 1);
                let (hi_x, hi_y) = (tx + room_size - 1, ty + room_size - 1);
                if i + 1 < cols {
                    rooms[idx].neighbors[0] = Some(idx + 1);
                    rooms[idx].door_pos[0] = Some((hi_x, state.rng.random_range(lo_y..hi_y)));
                }
                if j + 1 < rows {
                    rooms[idx].neighbors[1] = Some(idx + cols);
                    rooms[idx].door_pos[1] = Some((state.rng.random_range(lo_x..hi_x), hi_y));
                }
                if i > 0 {
                    rooms[idx].neighbors[2] = Some(idx - 1);
                    rooms[idx].door_pos[2] = rooms[idx - 1].door_pos[0];
                }
                if j > 0 {
                    rooms[idx].neighbors[3] = Some(idx - cols);
                    rooms[idx].door_pos[3] = rooms[idx - cols].door_pos[1];
                }
            }
        }
        RoomGrid { cols, rows, rooms }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.cols + i
    }

    fn add_door(&mut self, state: &mut GridState, room: usize, wall: usize, color: Color, locked: bool) -> Result<()> {
        let pos = self.rooms[room].door_pos[wall]
            .ok_or_else(|| Error::usage("door requested on an outer wall"))?;
        let neighbor = self.rooms[room].neighbors[wall].expect("door slot implies neighbor");
        let door_state = if locked { DoorState::Locked } else { DoorState::Closed };
        state.set(pos.0, pos.1, Some(Tile::door(color, door_state)));
        if locked {
            self.rooms[room].locked = true;
        }
        self.rooms[room].connected[wall] = true;
        self.rooms[neighbor].connected[(wall + 2) % 4] = true;
        Ok(())
    }

    /// Opens the whole top wall of room (i, j) into the room above.
    fn remove_top_wall(&mut self, state: &mut GridState, i: usize, j: usize) {
        let idx = self.idx(i, j);
        let (tx, ty) = self.rooms[idx].top;
        for k in 1..self.rooms[idx].size.0 - 1 {
            state.set(tx + k, ty, None);
        }
        let above = self.rooms[idx].neighbors[3].expect("room below another");
        self.rooms[idx].connected[3] = true;
        self.rooms[above].connected[1] = true;
    }

    fn interior(&self, room: usize) -> ((usize, usize), (usize, usize)) {
        let r = &self.rooms[room];
        ((r.top.0 + 1, r.top.1 + 1), (r.size.0 - 2, r.size.1 - 2))
    }

    fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.rooms.len()];
        let mut stack = vec![start];
        while let Some(r) = stack.pop() {
            if std::mem::replace(&mut seen[r], true) {
                continue;
            }
            for k in 0..4 {
                if self.rooms[r].connected[k] {
                    stack.push(self.rooms[r].neighbors[k].expect("connected implies neighbor"));
                }
            }
        }
        seen
    }

    /// Adds closed unlocked doors at random until every room is reachable
    /// from `start` without passing a locked room.
    fn connect_all(&mut self, state: &mut GridState, start: usize) -> Result<()> {
        for _ in 0..PLACE_ATTEMPTS {
            if self.reachable_from(start).iter().all(|&r| r) {
                return Ok(());
            }
            let i = state.rng.random_range(0..self.cols);
            let j = state.rng.random_range(0..self.rows);
            let k = state.rng.random_range(0..4);
            let room = self.idx(i, j);
            let Some(neighbor) = self.rooms[room].neighbors[k] else { continue };
            if self.rooms[room].connected[k] || self.rooms[room].locked || self.rooms[neighbor].locked {
                continue;
            }
            let color = *Color::ALL.choose(&mut state.rng).expect("colors");
            self.add_door(state, room, k, color, false)?;
        }
        Err(Error::usage("connect_all failed to connect the room grid"))
    }
}

fn key_corridor(config: &EnvConfig, rng: ChaCha8Rng) -> Result<GridState> {
    let (width, height) = config.grid_dims();
    let mut state = GridState::empty(width, height, config.max_steps(), Mission::PickUpBall, rng);
    let mut grid = RoomGrid::build(&mut state, 3, config.n_rows, config.room_size);

    for j in 1..config.n_rows {
        grid.remove_top_wall(&mut state, 1, j);
    }

    let ball_row = state.rng.random_range(0..config.n_rows);
    let ball_room = grid.idx(2, ball_row);
    let door_color = *Color::ALL.choose(&mut state.rng).expect("colors");
    grid.add_door(&mut state, ball_room, 2, door_color, true)?;
    let ball_color = *Color::ALL.choose(&mut state.rng).expect("colors");
    let (top, size) = grid.interior(ball_room);
    place_obj(&mut state, top, size, Tile::Ball { color: ball_color })?;

    let key_row = state.rng.random_range(0..config.n_rows);
    let (top, size) = grid.interior(grid.idx(0, key_row));
    place_obj(&mut state, top, size, Tile::Key { color: door_color })?;

    let start = grid.idx(1, config.n_rows / 2);
    let (top, size) = grid.interior(start);
    place_agent(&mut state, top, size)?;
    grid.connect_all(&mut state, start)?;
    Ok(state)
}

fn obstructed_maze(config: &EnvConfig, rng: ChaCha8Rng) -> Result<GridState> {
    let (width, height) = config.grid_dims();
    let mut state = GridState::empty(width, height, config.max_steps(), Mission::PickUpBall, rng);
    let mut grid = RoomGrid::build(&mut state, 3, 3, config.room_size);
    let center = grid.idx(1, 1);

    // Wall 2 leads to the left room, wall 0 to the right room.
    let (first_wall, second_wall) = if state.rng.random_bool(0.5) { (2, 0) } else { (0, 2) };
    let mut colors = Color::ALL.to_vec();
    let first_color = *colors.choose(&mut state.rng).expect("colors");
    colors.retain(|c| *c != first_color);
    let second_color = *colors.choose(&mut state.rng).expect("colors");

    grid.add_door(&mut state, center, first_wall, first_color, true)?;
    grid.add_door(&mut state, center, second_wall, second_color, true)?;
    let first_room = grid.rooms[center].neighbors[first_wall].expect("side room");
    let second_room = grid.rooms[center].neighbors[second_wall].expect("side room");

    let (top, size) = grid.interior(center);
    place_agent(&mut state, top, size)?;
    let boxed = |color: Color| Tile::Box {
        color,
        contents: Some(Box::new(Tile::Key { color })),
    };
    place_obj(&mut state, top, size, boxed(first_color))?;
    let (top, size) = grid.interior(first_room);
    place_obj(&mut state, top, size, boxed(second_color))?;
    let (top, size) = grid.interior(second_room);
    place_obj(&mut state, top, size, Tile::Ball { color: Color::Blue })?;
    Ok(state)
}
