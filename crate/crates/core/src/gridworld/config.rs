use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the MultiRoom canvas, matching the benchmark's 25x25 grid.
pub const MULTIROOM_MAX_GRID: usize = 25;
pub const OBSTRUCTED_ROOM_SIZE: usize = 6;
pub const OBSTRUCTED_MAX_STEPS: u32 = 576;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    MultiRoom,
    KeyCorridor,
    ObstructedMaze2Dlh,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub family: Family,
    /// MultiRoom `N`.
    pub n_rooms: usize,
    /// MultiRoom `S` (largest room side, walls included) or KeyCorridor `S`.
    pub room_size: usize,
    /// KeyCorridor `R`.
    pub n_rows: usize,
    /// Episode step limit; `None` picks the family default.
    pub max_steps: Option<u32>,
    /// MultiRoom canvas side; `None` picks the smallest canvas that fits a
    /// straight chain, capped at 25.
    pub grid_size: Option<usize>,
    pub tile_size: usize,
    pub seed: u64,
}

impl EnvConfig {
    pub fn multi_room(n_rooms: usize, room_size: usize) -> Self {
        EnvConfig {
            family: Family::MultiRoom,
            n_rooms,
            room_size,
            n_rows: 0,
            max_steps: None,
            grid_size: None,
            tile_size: 8,
            seed: 0,
        }
    }

    pub fn key_corridor(room_size: usize, n_rows: usize) -> Self {
        EnvConfig {
            family: Family::KeyCorridor,
            n_rooms: 0,
            room_size,
            n_rows,
            max_steps: None,
            grid_size: None,
            tile_size: 8,
            seed: 0,
        }
    }

    pub fn obstructed_maze() -> Self {
        EnvConfig {
            family: Family::ObstructedMaze2Dlh,
            n_rooms: 0,
            room_size: OBSTRUCTED_ROOM_SIZE,
            n_rows: 3,
            max_steps: None,
            grid_size: None,
            tile_size: 8,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_steps(mut self, max_steps: u32) -> Self {
        self.max_steps = Some(max_steps);
        self
    }

    pub fn max_steps(&self) -> u32 {
        self.max_steps.unwrap_or_else(|| match self.family {
            Family::MultiRoom => 20 * self.n_rooms as u32,
            Family::KeyCorridor => 30 * (self.room_size * self.room_size) as u32,
            Family::ObstructedMaze2Dlh => OBSTRUCTED_MAX_STEPS,
        })
    }

    /// Grid dimensions (width, height) of generated layouts.
    pub fn grid_dims(&self) -> (usize, usize) {
        match self.family {
            Family::MultiRoom => {
                let side = self.grid_size.unwrap_or_else(|| {
                    ((self.room_size - 1) * self.n_rooms + 1).min(MULTIROOM_MAX_GRID)
                });
                (side, side)
            }
            Family::KeyCorridor => (
                (self.room_size - 1) * 3 + 1,
                (self.room_size - 1) * self.n_rows + 1,
            ),
            Family::ObstructedMaze2Dlh => {
                let side = (OBSTRUCTED_ROOM_SIZE - 1) * 3 + 1;
                (side, side)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tile_size == 0 {
            return Err(Error::config("tile_size", "must be at least 1"));
        }
        if self.max_steps == Some(0) {
            return Err(Error::config("max_steps", "must be positive"));
        }
        match self.family {
            Family::MultiRoom => {
                if self.n_rooms < 2 {
                    return Err(Error::config("n_rooms", "MultiRoom needs at least 2 rooms"));
                }
                if self.room_size < 4 {
                    return Err(Error::config("room_size", "MultiRoom rooms need size >= 4"));
                }
                let (side, _) = self.grid_dims();
                if side < 2 * self.room_size - 1 {
                    return Err(Error::config(
                        "grid_size",
                        format!("grid of side {side} cannot hold rooms of size {}", self.room_size),
                    ));
                }
            }
            Family::KeyCorridor => {
                if self.room_size < 3 {
                    return Err(Error::config("room_size", "KeyCorridor rooms need size >= 3"));
                }
                if self.n_rows < 1 {
                    return Err(Error::config("n_rows", "KeyCorridor needs at least 1 row"));
                }
            }
            Family::ObstructedMaze2Dlh => {
                if self.room_size != OBSTRUCTED_ROOM_SIZE {
                    return Err(Error::config("room_size", "ObstructedMaze-2Dlh uses 6x6 rooms"));
                }
            }
        }
        Ok(())
    }

    /// Canonical id string, e.g. `MultiRoom-N7-S4`.
    pub fn env_id(&self) -> String {
        match self.family {
            Family::MultiRoom => format!("MultiRoom-N{}-S{}", self.n_rooms, self.room_size),
            Family::KeyCorridor => format!("KeyCorridorS{}R{}", self.room_size, self.n_rows),
            Family::ObstructedMaze2Dlh => "ObstructedMaze-2Dlh".to_string(),
        }
    }
}

impl fmt::Display for EnvConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.env_id())
    }
}

fn parse_num(id: &str, digits: &str) -> Result<usize> {
    digits
        .parse()
        .map_err(|_| Error::config("env", format!("malformed environment id `{id}`")))
}

impl FromStr for EnvConfig {
    type Err = Error;

    fn from_str(id: &str) -> Result<Self> {
        let bare = id.strip_prefix("MiniGrid-").unwrap_or(id);
        let bare = bare.strip_suffix("-v0").unwrap_or(bare);
        let config = if let Some(rest) = bare.strip_prefix("MultiRoom-N") {
            let (n, s) = rest
                .split_once("-S")
                .ok_or_else(|| Error::config("env", format!("malformed environment id `{id}`")))?;
            EnvConfig::multi_room(parse_num(id, n)?, parse_num(id, s)?)
        } else if let Some(rest) = bare.strip_prefix("KeyCorridorS") {
            let (s, r) = rest
                .split_once('R')
                .ok_or_else(|| Error::config("env", format!("malformed environment id `{id}`")))?;
            EnvConfig::key_corridor(parse_num(id, s)?, parse_num(id, r)?)
        } else if bare == "ObstructedMaze-2Dlh" {
            EnvConfig::obstructed_maze()
        } else {
            return Err(Error::config("env", format!("unknown environment id `{id}`")));
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_table_ids() {
        for id in [
            "MultiRoom-N7-S4",
            "MultiRoom-N7-S8",
            "MultiRoom-N12-S10",
            "KeyCorridorS3R3",
            "KeyCorridorS4R3",
            "ObstructedMaze-2Dlh",
        ] {
            let cfg: EnvConfig = id.parse().unwrap();
            assert_eq!(cfg.env_id(), id);
        }
        let cfg: EnvConfig = "MiniGrid-MultiRoom-N2-S4-v0".parse().unwrap();
        assert_eq!(cfg.env_id(), "MultiRoom-N2-S4");
    }

    #[test]
    fn default_step_limits() {
        assert_eq!(EnvConfig::multi_room(7, 4).max_steps(), 140);
        assert_eq!(EnvConfig::key_corridor(3, 3).max_steps(), 270);
        assert_eq!(EnvConfig::obstructed_maze().max_steps(), 576);
        assert_eq!(EnvConfig::multi_room(2, 4).with_max_steps(9).max_steps(), 9);
    }

    #[test]
    fn invalid_configs_name_the_field() {
        let err = EnvConfig::multi_room(1, 4).validate().unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "n_rooms"));
        let err = EnvConfig::multi_room(3, 3).validate().unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "room_size"));
        let err = EnvConfig::key_corridor(3, 0).validate().unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "n_rows"));
        assert!("Maze-9000".parse::<EnvConfig>().is_err());
        assert!("MultiRoom-Nx-S4".parse::<EnvConfig>().is_err());
    }

    #[test]
    fn multiroom_canvas_is_capped() {
        assert_eq!(EnvConfig::multi_room(2, 4).grid_dims(), (7, 7));
        assert_eq!(EnvConfig::multi_room(12, 10).grid_dims(), (25, 25));
    }
}
