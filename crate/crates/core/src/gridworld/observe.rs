//! Encoded full-state and egocentric views.

use super::state::GridState;
use super::tile::{Cell, Color, OBJ_AGENT};

pub const VIEW_SIZE: usize = 7;
/// Agent cell in the egocentric frame: bottom row, middle column.
pub const VIEW_AGENT: (usize, usize) = (VIEW_SIZE / 2, VIEW_SIZE - 1);

/// Integer tensor of (object, color, state) triples, `width x height x 3`.
///
/// Storage is row-major over cells with the three channels contiguous:
/// index `((y * width) + x) * 3 + c`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodedTensor {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl EncodedTensor {
    pub const CHANNELS: usize = 3;

    pub fn new(width: usize, height: usize) -> Self {
        EncodedTensor {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn from_cells(width: usize, height: usize, cells: &[Cell]) -> Self {
        assert_eq!(cells.len(), width * height);
        let data = cells.iter().flat_map(|c| [c.object, c.color, c.state]).collect();
        EncodedTensor { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Cell {
        let i = (y * self.width + x) * 3;
        Cell::new(self.data[i], self.data[i + 1], self.data[i + 2])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, cell: Cell) {
        let i = (y * self.width + x) * 3;
        self.data[i] = cell.object;
        self.data[i + 1] = cell.color;
        self.data[i + 2] = cell.state;
    }

    /// Byte serialization used for hashing: dims as little-endian u32 then data.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.data.len());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&self.data);
        out
    }

    /// Plain-text dump: one line per row, cells as `o,c,s` separated by spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height {
            let row: Vec<String> = (0..self.width).map(|x| self.get(x, y).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Whole grid with the agent overlaid as (10, red, dir).
pub fn encode_full(state: &GridState) -> EncodedTensor {
    let mut t = EncodedTensor::new(state.width, state.height);
    for y in 0..state.height {
        for x in 0..state.width {
            t.set(x, y, Cell::encode_slot(state.get(x, y)));
        }
    }
    let (ax, ay) = state.agent_pos;
    t.set(ax, ay, Cell::new(OBJ_AGENT, Color::Red.id(), state.agent_dir));
    t
}

/// World coordinate of egocentric cell (lx, ly), or `None` off the grid.
pub fn view_to_world(state: &GridState, lx: usize, ly: usize) -> Option<(usize, usize)> {
    let (fx, fy) = state.dir_vec();
    let (rx, ry) = super::state::DIR_TO_VEC[((state.agent_dir + 1) % 4) as usize];
    let forward = (VIEW_AGENT.1 - ly) as i64;
    let right = lx as i64 - VIEW_AGENT.0 as i64;
    let x = state.agent_pos.0 as i64 + fx * forward + rx * right;
    let y = state.agent_pos.1 as i64 + fy * forward + ry * right;
    state.in_bounds(x, y).then_some((x as usize, y as usize))
}

/// Raw 7x7 window in the agent frame, before occlusion. Off-grid cells come
/// back as walls so they stop the visibility sweep; `on_grid` reports which
/// cells exist.
pub fn egocentric_window(state: &GridState) -> ([[Cell; VIEW_SIZE]; VIEW_SIZE], [[bool; VIEW_SIZE]; VIEW_SIZE]) {
    let wall = Cell::new(super::tile::OBJ_WALL, Color::Grey.id(), 0);
    let mut window = [[Cell::UNSEEN; VIEW_SIZE]; VIEW_SIZE];
    let mut on_grid = [[false; VIEW_SIZE]; VIEW_SIZE];
    for ly in 0..VIEW_SIZE {
        for lx in 0..VIEW_SIZE {
            match view_to_world(state, lx, ly) {
                Some((x, y)) => {
                    window[lx][ly] = Cell::encode_slot(state.get(x, y));
                    on_grid[lx][ly] = true;
                }
                None => window[lx][ly] = wall,
            }
        }
    }
    let (ax, ay) = VIEW_AGENT;
    window[ax][ay] = state.carrying.as_ref().map_or(Cell::EMPTY, |t| t.encode());
    (window, on_grid)
}

/// Outward visibility sweep over a window indexed `[x][y]`, agent at (3, 6).
pub fn visibility_mask(window: &[[Cell; VIEW_SIZE]; VIEW_SIZE]) -> [[bool; VIEW_SIZE]; VIEW_SIZE] {
    let mut mask = [[false; VIEW_SIZE]; VIEW_SIZE];
    mask[VIEW_AGENT.0][VIEW_AGENT.1] = true;
    for j in (0..VIEW_SIZE).rev() {
        for i in 0..VIEW_SIZE - 1 {
            if !mask[i][j] || !window[i][j].see_behind() {
                continue;
            }
            mask[i + 1][j] = true;
            if j > 0 {
                mask[i + 1][j - 1] = true;
                mask[i][j - 1] = true;
            }
        }
        for i in (1..VIEW_SIZE).rev() {
            if !mask[i][j] || !window[i][j].see_behind() {
                continue;
            }
            mask[i - 1][j] = true;
            if j > 0 {
                mask[i - 1][j - 1] = true;
                mask[i][j - 1] = true;
            }
        }
    }
    mask
}

/// The agent's 7x7 egocentric, occlusion-limited observation.
pub fn encode_partial(state: &GridState) -> EncodedTensor {
    let (window, on_grid) = egocentric_window(state);
    let mask = visibility_mask(&window);
    let mut t = EncodedTensor::new(VIEW_SIZE, VIEW_SIZE);
    for ly in 0..VIEW_SIZE {
        for lx in 0..VIEW_SIZE {
            if mask[lx][ly] && on_grid[lx][ly] {
                t.set(lx, ly, window[lx][ly]);
            }
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::state::{GridState, Mission};
    use crate::gridworld::tile::{DoorState, Tile, OBJ_WALL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn open_room(side: usize) -> GridState {
        let mut s = GridState::empty(side, side, 100, Mission::ReachGoal, ChaCha8Rng::seed_from_u64(0));
        for i in 0..side {
            s.set(i, 0, Some(Tile::Wall));
            s.set(i, side - 1, Some(Tile::Wall));
            s.set(0, i, Some(Tile::Wall));
            s.set(side - 1, i, Some(Tile::Wall));
        }
        s
    }

    #[test]
    fn full_encoding_of_walled_room() {
        let mut s = open_room(5);
        s.agent_pos = (2, 2);
        s.agent_dir = 1;
        let t = encode_full(&s);
        assert_eq!((t.width, t.height), (5, 5));
        for y in 0..5 {
            for x in 0..5 {
                let c = t.get(x, y);
                if x == 0 || y == 0 || x == 4 || y == 4 {
                    assert_eq!(c, Cell::new(2, 5, 0));
                } else if (x, y) == (2, 2) {
                    assert_eq!(c, Cell::new(10, 0, 1));
                } else {
                    assert_eq!(c, Cell::new(1, 0, 0));
                }
            }
        }
        assert!(t.data.chunks(3).all(|c| c[0] != 0));
    }

    #[test]
    fn full_encoding_door_and_direction() {
        let mut s = open_room(5);
        s.agent_pos = (1, 1);
        s.set(2, 0, Some(Tile::door(Color::Red, DoorState::Closed)));
        let t = encode_full(&s);
        assert_eq!(t.get(2, 0), Cell::new(4, 0, 1));
        let mut turned = s.clone();
        turned.agent_dir = 2;
        let u = encode_full(&turned);
        assert_ne!(t, u);
        assert_eq!(t.get(1, 1).object, u.get(1, 1).object);
        assert_ne!(t.get(1, 1), u.get(1, 1));
    }

    #[test]
    fn open_room_fully_visible() {
        let mut s = open_room(9);
        s.agent_pos = (4, 7);
        s.agent_dir = 3;
        let t = encode_partial(&s);
        assert_eq!((t.width, t.height), (7, 7));
        assert!(t.data.chunks(3).all(|c| c[0] != 0));
        // agent cell shows empty when not carrying
        assert_eq!(t.get(3, 6), Cell::EMPTY);
    }

    #[test]
    fn carried_object_replaces_agent_cell() {
        let mut s = open_room(9);
        s.agent_pos = (4, 4);
        s.carrying = Some(Tile::Key { color: Color::Yellow });
        let t = encode_partial(&s);
        assert_eq!(t.get(3, 6), Cell::new(5, 4, 0));
    }

    #[test]
    fn wall_row_in_front_hides_everything_beyond() {
        let mut s = open_room(15);
        s.agent_pos = (7, 10);
        s.agent_dir = 3;
        for x in 1..14 {
            s.set(x, 9, Some(Tile::Wall));
        }
        let t = encode_partial(&s);
        for ly in 0..5 {
            for lx in 0..7 {
                assert_eq!(t.get(lx, ly), Cell::UNSEEN, "({lx},{ly})");
            }
        }
        for lx in 0..7 {
            assert_eq!(t.get(lx, 5).object, OBJ_WALL);
        }
    }

    #[test]
    fn rotation_keeps_shape() {
        let mut s = open_room(9);
        s.agent_pos = (2, 2);
        let mut seen = Vec::new();
        for d in 0..4 {
            s.agent_dir = d;
            let t = encode_partial(&s);
            assert_eq!((t.width, t.height, t.data.len()), (7, 7, 147));
            seen.push(t);
        }
        assert_ne!(seen[0], seen[1]);
    }

    #[test]
    fn view_orientation_matches_heading() {
        let mut s = open_room(9);
        s.agent_pos = (2, 4);
        s.agent_dir = 0;
        // facing east: local straight ahead is +x
        assert_eq!(view_to_world(&s, 3, 5), Some((3, 4)));
        // local left is north when facing east
        assert_eq!(view_to_world(&s, 2, 6), Some((2, 3)));
        s.agent_dir = 1;
        assert_eq!(view_to_world(&s, 3, 5), Some((2, 5)));
        assert_eq!(view_to_world(&s, 2, 6), Some((3, 4)));
    }

    #[test]
    fn off_grid_cells_are_unseen() {
        let mut s = open_room(5);
        s.agent_pos = (1, 1);
        s.agent_dir = 3;
        let t = encode_partial(&s);
        // Agent looks straight at the top wall; everything past it is off-grid.
        assert_eq!(t.get(3, 5).object, OBJ_WALL);
        for ly in 0..5 {
            for lx in 0..7 {
                assert_eq!(t.get(lx, ly), Cell::UNSEEN);
            }
        }
    }
}
