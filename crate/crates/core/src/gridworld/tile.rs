//! World objects and their (object, color, state) encoding.

use std::fmt;

pub const OBJ_UNSEEN: u8 = 0;
pub const OBJ_EMPTY: u8 = 1;
pub const OBJ_WALL: u8 = 2;
pub const OBJ_FLOOR: u8 = 3;
pub const OBJ_DOOR: u8 = 4;
pub const OBJ_KEY: u8 = 5;
pub const OBJ_BALL: u8 = 6;
pub const OBJ_BOX: u8 = 7;
pub const OBJ_GOAL: u8 = 8;
pub const OBJ_LAVA: u8 = 9;
pub const OBJ_AGENT: u8 = 10;

pub const MAX_OBJECT_ID: u8 = 10;
pub const MAX_COLOR_ID: u8 = 5;
/// Largest value the state channel can take (door locked = 2, agent
/// direction = 3).
pub const MAX_STATE_ID: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Color {
    Red = 0,
    Green = 1,
    Blue = 2,
    Purple = 3,
    Yellow = 4,
    Grey = 5,
}

impl Color {
    pub const ALL: [Color; 6] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Purple,
        Color::Yellow,
        Color::Grey,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Color> {
        Color::ALL.get(id as usize).copied()
    }

    pub fn rgb(self) -> [u8; 3] {
        match self {
            Color::Red => [255, 0, 0],
            Color::Green => [0, 255, 0],
            Color::Blue => [0, 0, 255],
            Color::Purple => [112, 39, 195],
            Color::Yellow => [255, 255, 0],
            Color::Grey => [100, 100, 100],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum DoorState {
    Open = 0,
    Closed = 1,
    Locked = 2,
}

/// Anything that can occupy a grid cell. `None` in the grid means empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Tile {
    Wall,
    Floor,
    Door { color: Color, state: DoorState },
    Key { color: Color },
    Ball { color: Color },
    Box { color: Color, contents: Option<Box<Tile>> },
    Goal,
    Lava,
}

impl Tile {
    pub fn door(color: Color, state: DoorState) -> Tile {
        Tile::Door { color, state }
    }

    pub fn encode(&self) -> Cell {
        match self {
            Tile::Wall => Cell::new(OBJ_WALL, Color::Grey.id(), 0),
            Tile::Floor => Cell::new(OBJ_FLOOR, Color::Blue.id(), 0),
            Tile::Door { color, state } => Cell::new(OBJ_DOOR, color.id(), *state as u8),
            Tile::Key { color } => Cell::new(OBJ_KEY, color.id(), 0),
            Tile::Ball { color } => Cell::new(OBJ_BALL, color.id(), 0),
            Tile::Box { color, .. } => Cell::new(OBJ_BOX, color.id(), 0),
            Tile::Goal => Cell::new(OBJ_GOAL, Color::Green.id(), 0),
            Tile::Lava => Cell::new(OBJ_LAVA, Color::Red.id(), 0),
        }
    }

    /// Whether the agent may stand on this tile.
    pub fn can_overlap(&self) -> bool {
        matches!(
            self,
            Tile::Floor
                | Tile::Goal
                | Tile::Lava
                | Tile::Door {
                    state: DoorState::Open,
                    ..
                }
        )
    }

    pub fn can_pickup(&self) -> bool {
        matches!(self, Tile::Key { .. } | Tile::Ball { .. } | Tile::Box { .. })
    }

    /// Whether light passes through the tile for the egocentric view.
    pub fn see_behind(&self) -> bool {
        match self {
            Tile::Wall | Tile::Box { .. } => false,
            Tile::Door { state, .. } => *state == DoorState::Open,
            _ => true,
        }
    }
}

/// One encoded cell: (object id, color id, state id).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Cell {
    pub object: u8,
    pub color: u8,
    pub state: u8,
}

impl Cell {
    pub const UNSEEN: Cell = Cell::new(OBJ_UNSEEN, 0, 0);
    pub const EMPTY: Cell = Cell::new(OBJ_EMPTY, 0, 0);

    pub const fn new(object: u8, color: u8, state: u8) -> Cell {
        Cell {
            object,
            color,
            state,
        }
    }

    pub fn encode_slot(tile: Option<&Tile>) -> Cell {
        tile.map_or(Cell::EMPTY, Tile::encode)
    }

    /// See-through test on an encoded cell, used by the visibility sweep.
    pub fn see_behind(&self) -> bool {
        match self.object {
            OBJ_WALL | OBJ_BOX => false,
            OBJ_DOOR => self.state == DoorState::Open as u8,
            _ => true,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.object, self.color, self.state)
    }
}
