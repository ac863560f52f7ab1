//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use gridcurio::gridworld::*;
use gridcurio::learner::*;
use gridcurio::nn::{log_softmax, Module};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn loop_l2(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0;
    for i in 0..a.len() {
        sum += (b[i] - a[i]) * (b[i] - a[i]);
    }
    sum.sqrt()
}

const FIXTURES: &str = include_str!("../fixtures/visibility.txt");

pub struct Fixture {
    pub name: String,
    pub window: [[Cell; VIEW_SIZE]; VIEW_SIZE],
    pub mask: [[bool; VIEW_SIZE]; VIEW_SIZE],
}

fn parse_cell(c: char) -> Cell {
    let tile = match c {
        '.' | '^' => None,
        'W' => Some(Tile::Wall),
        'D' => Some(Tile::door(Color::Red, DoorState::Closed)),
        'L' => Some(Tile::door(Color::Yellow, DoorState::Locked)),
        'O' => Some(Tile::door(Color::Green, DoorState::Open)),
        other => panic!("unknown fixture cell {other:?}"),
    };
    Cell::encode_slot(tile.as_ref())
}

pub fn load_fixtures() -> Vec<Fixture> {
    let lines: Vec<&str> = FIXTURES.lines().filter(|l| !(l.starts_with("# ") || *l == "#" || l.trim().is_empty())).collect();
    let mut out = Vec::new();
    for chunk in lines.chunks(16) {
        let name = chunk[0].strip_prefix("case ").expect("case header").to_string();
        assert_eq!(chunk[8], "mask", "{name}");
        let mut window = [[Cell::UNSEEN; VIEW_SIZE]; VIEW_SIZE];
        let mut mask = [[false; VIEW_SIZE]; VIEW_SIZE];
        for y in 0..VIEW_SIZE {
            let w: Vec<char> = chunk[1 + y].chars().collect();
            let m: Vec<char> = chunk[9 + y].chars().collect();
            assert_eq!((w.len(), m.len()), (VIEW_SIZE, VIEW_SIZE), "{name} row {y}");
            for x in 0..VIEW_SIZE {
                window[x][y] = parse_cell(w[x]);
                mask[x][y] = m[x] == '#';
            }
        }
        assert_eq!(chunk[7].chars().nth(3), Some('^'), "{name}: agent marker");
        out.push(Fixture { name, window, mask });
    }
    out
}

pub fn show_mask(mask: &[[bool; VIEW_SIZE]; VIEW_SIZE]) -> String {
    (0..VIEW_SIZE)
        .map(|y| (0..VIEW_SIZE).map(|x| if mask[x][y] { '#' } else { '?' }).collect::<String>())
        .collect::<Vec<_>>()
        .join("\n")
}

/// A reset state advanced by a few random actions.
pub fn random_state(config: &EnvConfig, rng: &mut ChaCha8Rng) -> GridState {
    let mut s = reset(config, rng.random()).unwrap();
    let steps = rng.random_range(0..30);
    for _ in 0..steps {
        if s.terminated {
            break;
        }
        s.step_mut(Action::from_id(rng.random_range(0..NUM_ACTIONS)).unwrap()).unwrap();
    }
    s
}

/// Number of visible partial-view cells that disagree with the world.
pub fn partial_view_mismatches(s: &GridState) -> usize {
    let partial = encode_partial(s);
    let full = encode_full(s);
    let mut bad = 0;
    for ly in 0..VIEW_SIZE {
        for lx in 0..VIEW_SIZE {
            let seen = partial.get(lx, ly);
            if (lx, ly) == VIEW_AGENT || seen == Cell::UNSEEN {
                continue;
            }
            let Some((x, y)) = observe::view_to_world(s, lx, ly) else {
                bad += 1;
                continue;
            };
            let mut want = full.get(x, y);
            if want.object == tile::OBJ_AGENT {
                want = Cell::encode_slot(s.get(x, y));
            }
            if seen != want {
                bad += 1;
            }
        }
    }
    bad
}

pub fn random_record(rng: &mut ChaCha8Rng) -> StepRecord {
    let r: f64 = if rng.random_bool(0.1) { rng.random_range(0.1..1.0) } else { 0.0 };
    let bonus: f64 = rng.random_range(0.0..0.05);
    StepRecord {
        obs: EncodedTensor::new(7, 7),
        action: rng.random_range(0..NUM_ACTIONS),
        log_prob: -rng.random_range(0.0..3.0),
        value: rng.random_range(-1.0..1.0),
        extrinsic_reward: r,
        intrinsic_reward: bonus,
        combined_reward: r + bonus,
        done: rng.random_bool(0.03),
    }
}

pub fn random_buffer(rng: &mut ChaCha8Rng, n_envs: usize, len: usize) -> RolloutBuffer {
    let mut buf = RolloutBuffer::new(n_envs, len);
    for _ in 0..len {
        buf.push_step((0..n_envs).map(|_| random_record(rng)).collect()).unwrap();
    }
    buf.set_bootstrap((0..n_envs).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    buf
}

/// Advantage as an explicit truncated sum of discounted TD errors.
pub fn gae_by_sum(buf: &RolloutBuffer, cfg: &PpoConfig, e: usize, t: usize) -> f64 {
    let boot = buf.bootstrap_values.as_ref().unwrap();
    let mut total = 0.0;
    let mut weight = 1.0;
    for k in t..buf.rollout_len {
        let s = buf.get(e, k);
        let next_v = if k + 1 < buf.rollout_len { buf.get(e, k + 1).value } else { boot[e] };
        let live = if s.done { 0.0 } else { 1.0 };
        total += weight * (s.combined_reward + cfg.gamma * live * next_v - s.value);
        if s.done {
            break;
        }
        weight *= cfg.gamma * cfg.gae_lambda;
    }
    total
}

/// Largest absolute gap between `compute_gae` and the explicit sum, over
/// advantages and returns.
pub fn gae_max_error(buf: &RolloutBuffer, cfg: &PpoConfig) -> f64 {
    let (adv, ret) = compute_gae(buf, cfg).unwrap();
    let mut worst: f64 = 0.0;
    for e in 0..buf.n_envs {
        for t in 0..buf.rollout_len {
            let want = gae_by_sum(buf, cfg, e, t);
            let i = t * buf.n_envs + e;
            worst = worst.max((adv[i] - want).abs());
            worst = worst.max((ret[i] - (want + buf.get(e, t).value)).abs());
        }
    }
    worst
}

pub fn random_gae_config(rng: &mut ChaCha8Rng) -> PpoConfig {
    PpoConfig {
        gamma: rng.random_range(0.9..1.0),
        gae_lambda: rng.random_range(0.8..1.0),
        ..PpoConfig::default()
    }
}

pub fn sample_observations(n: usize, seed: u64) -> Vec<EncodedTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = EnvConfig::key_corridor(3, 3);
    (0..n)
        .map(|_| {
            let mut s = reset(&config, rng.random()).unwrap();
            for _ in 0..rng.random_range(0..10) {
                if !s.terminated {
                    s.step(rng.random_range(0..3)).map(|(n, _, _)| s = n).unwrap();
                }
            }
            encode_partial(&s)
        })
        .collect()
}

/// A few random coordinates (param index, entry) with a non-negligible
/// gradient in every tensor whose name passes `keep`.
pub fn probe_coordinates<M: Module>(m: &M, rng: &mut ChaCha8Rng, keep: impl Fn(&str) -> bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (pi, p) in m.params().iter().enumerate() {
        if !keep(&p.name) {
            continue;
        }
        let live: Vec<usize> = (0..p.len()).filter(|&j| p.grad[j].abs() > 1e-6).collect();
        for _ in 0..2.min(live.len()) {
            out.push((pi, live[rng.random_range(0..live.len())]));
        }
    }
    out
}

/// Central-difference check of the gradients stored in `m` at `coords`.
/// Returns `(name, analytic, numeric, relative error)` per coordinate.
pub fn finite_differences<M: Module>(m: &mut M, coords: &[(usize, usize)], loss: impl Fn(&M) -> f64) -> Vec<(String, f64, f64, f64)> {
    let analytic: Vec<f64> = coords.iter().map(|&(pi, j)| m.params()[pi].grad[j]).collect();
    let h = 1e-6;
    let mut out = Vec::with_capacity(coords.len());
    for (&(pi, j), &g) in coords.iter().zip(&analytic) {
        let orig = m.params()[pi].value[j];
        m.params_mut()[pi].value[j] = orig + h;
        let up = loss(m);
        m.params_mut()[pi].value[j] = orig - h;
        let down = loss(m);
        m.params_mut()[pi].value[j] = orig;
        let fd = (up - down) / (2.0 * h);
        let rel = (fd - g).abs() / fd.abs().max(g.abs());
        out.push((format!("{}[{j}]", m.params()[pi].name), g, fd, rel));
    }
    out
}

pub fn random_minibatch(net: &ActorCriticNet, rng: &mut ChaCha8Rng, n: usize) -> Minibatch {
    let obs = sample_observations(n, rng.random());
    let refs: Vec<&EncodedTensor> = obs.iter().collect();
    let inputs = scale_observations(&refs).unwrap();
    let (logits, _) = policy_forward(net, &refs).unwrap();
    let actions: Vec<usize> = (0..n).map(|_| rng.random_range(0..NUM_ACTIONS)).collect();
    // Keep ratios inside the clip range so the loss is smooth at the probe.
    let old_log_probs = actions
        .iter()
        .zip(&logits)
        .map(|(&a, l)| log_softmax(l)[a] + rng.random_range(-0.1..0.1))
        .collect();
    Minibatch {
        inputs,
        actions,
        old_log_probs,
        advantages: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        returns: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
    }
}

/// PPO-loss gradient check on a random 4-sample minibatch.
pub fn ppo_gradient_check(seed: u64) -> Vec<(String, f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = PpoConfig {
        entropy_coef: 0.01,
        ..PpoConfig::default()
    };
    let mut net = ActorCriticNet::new(seed);
    let mb = random_minibatch(&net, &mut rng, 4);
    ppo_loss_and_grad(&mut net, &mb, &cfg).unwrap();
    let coords = probe_coordinates(&net, &mut rng, |_| true);
    finite_differences(&mut net, &coords, |net| ppo_loss_and_grad(&mut net.clone(), &mb, &cfg).unwrap().0)
}

fn random_encoded(rng: &mut ChaCha8Rng, side: usize) -> EncodedTensor {
    let mut t = EncodedTensor::new(side, side);
    for i in 0..side * side {
        t.data[i * 3] = rng.random_range(0..=10);
        t.data[i * 3 + 1] = rng.random_range(0..=5);
        t.data[i * 3 + 2] = rng.random_range(0..=2);
    }
    t
}

/// RIDE gradient check. The forward model's target is held constant in the
/// backward pass, so the forward loss is differentiated only with respect to
/// the forward model and the embedder only through the inverse loss.
pub fn ride_gradient_check(seed: u64) -> Vec<(String, f64, f64, f64)> {
    use gridcurio::intrinsic::{RideNets, Transition};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nets = RideNets::new((5, 5), 8, 1e-3, seed);
    let obs: Vec<EncodedTensor> = (0..4).map(|_| random_encoded(&mut rng, 5)).collect();
    let next: Vec<EncodedTensor> = (0..4).map(|_| random_encoded(&mut rng, 5)).collect();
    let batch: Vec<Transition> = (0..4)
        .map(|i| Transition { obs: &obs[i], action: rng.random_range(0..NUM_ACTIONS), next_obs: &next[i] })
        .collect();
    nets.accumulate_gradients(&batch).unwrap();
    let losses = |n: &RideNets| n.clone().accumulate_gradients(&batch).unwrap();
    let mut out = Vec::new();
    let fwd = probe_coordinates(&nets, &mut rng, |n| n.starts_with("ride.forward"));
    out.extend(finite_differences(&mut nets, &fwd, |n| losses(n).forward));
    let rest = probe_coordinates(&nets, &mut rng, |n| !n.starts_with("ride.forward"));
    out.extend(finite_differences(&mut nets, &rest, |n| losses(n).inverse));
    out
}
