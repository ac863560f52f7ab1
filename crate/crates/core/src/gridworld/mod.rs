//! Deterministic MiniGrid-style gridworld.
//!
//! Three layout families are supported (MultiRoom, KeyCorridor and
//! ObstructedMaze-2Dlh). Each state can be viewed four ways: full or
//! egocentric, as an encoded `(object, color, state)` tensor or as an RGB
//! rendering of that tensor.

pub mod config;
pub mod generate;
pub mod observe;
pub mod render;
pub mod solver;
pub mod state;
pub mod tile;

pub use config::{EnvConfig, Family};
pub use generate::reset;
pub use observe::{encode_full, encode_partial, visibility_mask, EncodedTensor, VIEW_AGENT, VIEW_SIZE};
pub use render::{render_rgb, RgbImage};
pub use solver::solve;
pub use state::{Action, GridState, Mission, StepResult, NUM_ACTIONS};
pub use tile::{Cell, Color, DoorState, Tile};
