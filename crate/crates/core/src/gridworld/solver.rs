//! Scripted planner used to check solvability and estimate the optimal return.
//!
//! Search runs over "macro" states: navigation between interactions is a
//! shortest path over (position, heading); interactions (toggle, pickup,
//! drop, stepping onto the goal) are simulated through [`GridState::step_mut`]
//! so the planner can never disagree with the simulator. Macro states are
//! expanded in order of primitive-step cost.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use super::state::{Action, GridState, DIR_TO_VEC};
use super::tile::Tile;

/// Drop spots offered per macro state (nearest first).
const DROP_CANDIDATES: usize = 2;
const MAX_EXPANSIONS: usize = 20_000;

type Key = (Vec<Option<Tile>>, (usize, usize), u8, Option<Tile>);

fn key_of(s: &GridState) -> Key {
    (s.cells.clone(), s.agent_pos, s.agent_dir, s.carrying.clone())
}

fn passable(tile: Option<&Tile>) -> bool {
    match tile {
        None => true,
        Some(Tile::Goal) | Some(Tile::Lava) => false,
        Some(t) => t.can_overlap(),
    }
}

/// Breadth-first distances over poses from the agent's current pose.
struct NavMap {
    width: usize,
    height: usize,
    parent: Vec<Option<(usize, Action)>>,
    dist: Vec<u32>,
}

impl NavMap {
    fn pose(&self, x: usize, y: usize, d: u8) -> usize {
        (y * self.width + x) * 4 + d as usize
    }

    fn build(s: &GridState) -> NavMap {
        let n = s.width * s.height * 4;
        let mut map = NavMap {
            width: s.width,
            height: s.height,
            parent: vec![None; n],
            dist: vec![u32::MAX; n],
        };
        let start = map.pose(s.agent_pos.0, s.agent_pos.1, s.agent_dir);
        map.dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            let d = (p % 4) as u8;
            let cell = p / 4;
            let (x, y) = (cell % s.width, cell / s.width);
            let mut next = vec![
                (map.pose(x, y, (d + 3) % 4), Action::TurnLeft),
                (map.pose(x, y, (d + 1) % 4), Action::TurnRight),
            ];
            let (dx, dy) = DIR_TO_VEC[d as usize];
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if s.in_bounds(nx, ny) && passable(s.get(nx as usize, ny as usize)) {
                next.push((map.pose(nx as usize, ny as usize, d), Action::Forward));
            }
            for (q, a) in next {
                if map.dist[q] == u32::MAX {
                    map.dist[q] = map.dist[p] + 1;
                    map.parent[q] = Some((p, a));
                    queue.push_back(q);
                }
            }
        }
        map
    }

    fn path_to(&self, mut pose: usize) -> Vec<Action> {
        let mut out = Vec::new();
        while let Some((prev, a)) = self.parent[pose] {
            out.push(a);
            pose = prev;
        }
        out.reverse();
        out
    }

    /// Cheapest reachable pose facing (tx, ty).
    fn facing(&self, tx: usize, ty: usize) -> Option<usize> {
        (0..4u8)
            .filter_map(|d| {
                let (dx, dy) = DIR_TO_VEC[d as usize];
                let (x, y) = (tx as i64 - dx, ty as i64 - dy);
                if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
                    return None;
                }
                let p = self.pose(x as usize, y as usize, d);
                (self.dist[p] != u32::MAX).then_some(p)
            })
            .min_by_key(|&p| self.dist[p])
    }
}

/// Options for one macro step: navigation followed by a single interaction.
fn macro_moves(s: &GridState, nav: &NavMap) -> Vec<Vec<Action>> {
    let mut moves = Vec::new();
    for y in 0..s.height {
        for x in 0..s.width {
            let Some(tile) = s.get(x, y) else { continue };
            let act = match tile {
                Tile::Door { state, .. } if *state != super::tile::DoorState::Open => Action::Toggle,
                Tile::Box { .. } => Action::Toggle,
                Tile::Key { .. } | Tile::Ball { .. } if s.carrying.is_none() => Action::Pickup,
                Tile::Goal => Action::Forward,
                _ => continue,
            };
            if let Some(p) = nav.facing(x, y) {
                let mut path = nav.path_to(p);
                path.push(act);
                moves.push(path);
            }
        }
    }
    if s.carrying.is_some() {
        let mut spots: Vec<(u32, usize)> = Vec::new();
        for y in 0..s.height {
            for x in 0..s.width {
                if s.get(x, y).is_some() || (x, y) == s.agent_pos {
                    continue;
                }
                if let Some(p) = nav.facing(x, y) {
                    spots.push((nav.dist[p], p));
                }
            }
        }
        spots.sort();
        for (_, p) in spots.into_iter().take(DROP_CANDIDATES) {
            let mut path = nav.path_to(p);
            path.push(Action::Drop);
            moves.push(path);
        }
    }
    moves
}

/// Returns an action sequence that solves the episode from `start`, or
/// `None` if none exists within the step limit (or the search budget).
pub fn solve(start: &GridState) -> Option<Vec<Action>> {
    if start.terminated {
        return None;
    }
    let mut nodes: Vec<(GridState, Vec<Action>)> = vec![(start.clone(), Vec::new())];
    let mut best_cost: HashMap<Key, usize> = HashMap::from([(key_of(start), 0)]);
    let mut heap = BinaryHeap::from([Reverse((0usize, 0usize))]);
    let mut best: Option<Vec<Action>> = None;
    let mut expansions = 0;

    while let Some(Reverse((cost, id))) = heap.pop() {
        if best.as_ref().is_some_and(|b| b.len() <= cost) {
            break;
        }
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            break;
        }
        let (state, plan) = nodes[id].clone();
        if best_cost.get(&key_of(&state)).is_some_and(|&c| c < cost) {
            continue;
        }
        let nav = NavMap::build(&state);
        for path in macro_moves(&state, &nav) {
            let mut next = state.clone();
            let mut ok = true;
            for &a in &path {
                match next.step_mut(a) {
                    Ok(r) if r.done => {
                        ok = false;
                        break;
                    }
                    Ok(_) => {}
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            let mut full = plan.clone();
            full.extend_from_slice(&path);
            if next.success {
                if best.as_ref().is_none_or(|b| full.len() < b.len()) {
                    best = Some(full);
                }
                continue;
            }
            if !ok {
                continue;
            }
            // An interaction that changed nothing only moved the agent, and
            // navigation from here already covers every pose.
            if next.cells == state.cells && next.carrying == state.carrying {
                continue;
            }
            let key = key_of(&next);
            let c = full.len();
            if best_cost.get(&key).is_some_and(|&old| old <= c) {
                continue;
            }
            best_cost.insert(key, c);
            nodes.push((next, full));
            heap.push(Reverse((c, nodes.len() - 1)));
        }
    }
    best
}
