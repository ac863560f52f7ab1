mod common;

use common::loop_l2;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use gridcurio::gridworld::{encode_full, render_rgb, reset, EncodedTensor, EnvConfig, RgbImage};
use gridcurio::intrinsic::remote::{EmbedRequest, EmbedResponse, HealthResponse, ATTEMPTS, MAX_BATCH};
use gridcurio::intrinsic::*;
use gridcurio::Error;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn rewards_match_a_loop_oracle_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let n = rng.random_range(1..200);
        let scale = 10f64.powi(rng.random_range(-3..4));
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
        let count: u32 = rng.random_range(1..1000);
        for enabled in [true, false] {
            let div = episodic_divisor(count, enabled).unwrap();
            let want_div = if enabled { (count as f64).sqrt() } else { 1.0 };
            assert_eq!(div, want_div);
            let want = loop_l2(&a, &b) / want_div;
            for got in [ride_reward(&a, &b, div).unwrap(), embedding_novelty_reward(&a, &b, div).unwrap()] {
                assert!((got - want).abs() <= 1e-12 * want.abs().max(f64::MIN_POSITIVE), "{got} vs {want}");
            }
        }
    }
}

fn small_obs(rng: &mut ChaCha8Rng, alphabet: u8) -> EncodedTensor {
    let mut t = EncodedTensor::new(7, 7);
    // A few varying cells keep collisions frequent.
    for i in 0..3 {
        t.data[i * 17] = rng.random_range(0..alphabet);
    }
    t
}

#[test]
fn counter_matches_a_list_scan_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let len = rng.random_range(1..60);
        let mut counter = EpisodicCounter::new();
        let mut seen: Vec<EncodedTensor> = Vec::new();
        for _ in 0..len {
            let obs = small_obs(&mut rng, 3);
            let done = rng.random_bool(0.05);
            seen.push(obs.clone());
            let want = seen.iter().filter(|o| **o == obs).count() as u32;
            if counter.observe(&obs, done) != want {
                mismatches += 1;
            }
            if done {
                seen.clear();
            }
        }
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn without_the_episodic_term_rewards_ignore_visit_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let module = IntrinsicModule::new(IntrinsicConfig::embedding_novelty(View::Full, 0.01, false), (5, 5), 8, 0).unwrap();
    for _ in 0..200 {
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..20)
            .map(|_| {
                let a = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
                let b = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
                (a, b)
            })
            .collect();
        let obs: Vec<EncodedTensor> = (0..20).map(|_| small_obs(&mut rng, 2)).collect();
        let rewards = |order: &[usize]| {
            let mut counter = EpisodicCounter::new();
            let mut out = vec![0.0; order.len()];
            for &i in order {
                let c = counter.observe(&obs[i], false);
                out[i] = module.reward(&pairs[i].0, &pairs[i].1, c).unwrap();
            }
            out
        };
        let mut order: Vec<usize> = (0..20).collect();
        let base = rewards(&order);
        order.shuffle(&mut rng);
        assert_eq!(base, rewards(&order));
    }
}

#[test]
fn episodic_term_divides_repeat_visits() {
    let module = IntrinsicModule::new(IntrinsicConfig::ride(View::Full, 0.05, true), (5, 5), 8, 0).unwrap();
    let a = [0.0, 0.0];
    let b = [3.0, 4.0];
    let got: Vec<f64> = (1..=4).map(|c| module.reward(&a, &b, c).unwrap()).collect();
    assert_eq!(got, vec![5.0, 5.0 / 2f64.sqrt(), 5.0 / 3f64.sqrt(), 2.5]);
    assert!((module.combine(0.5, 2.0) - 0.6).abs() < 1e-15);
    let none = IntrinsicModule::new(IntrinsicConfig::none(), (5, 5), 8, 0).unwrap();
    assert_eq!(none.reward(&a, &b, 3).unwrap(), 0.0);
    assert_eq!(none.combine(0.5, 2.0), 0.5);
}

#[test]
fn frozen_provider_is_deterministic_and_normalized() {
    let config = EnvConfig::multi_room(2, 4);
    let images: Vec<RgbImage> = (0..5).map(|s| render_rgb(&encode_full(&reset(&config, s).unwrap()), 8)).collect();
    let p1 = FrozenRandomProvider::new(64, 9).unwrap();
    let p2 = FrozenRandomProvider::new(64, 9).unwrap();
    let p3 = FrozenRandomProvider::new(64, 10).unwrap();
    let a = p1.embed_batch(&images).unwrap();
    assert_eq!(a, p2.embed_batch(&images).unwrap());
    assert_ne!(a, p3.embed_batch(&images).unwrap());
    for (img, v) in images.iter().zip(&a) {
        assert_eq!(v.len(), 64);
        assert!((v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() < 1e-9);
        assert_eq!(&p1.embed(img).unwrap(), v);
    }
    assert!(loop_l2(&a[0], &a[1]) > 0.0);
}

// ---------------------------------------------------------------------------
// Mock embedding service
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
enum Behaviour {
    Normal,
    /// Fail this many `/embed` calls with a 500 before answering.
    FailFirst(usize),
    AlwaysFail,
    /// Answer `/embed` with vectors one element too short.
    WrongDim,
}

struct MockService {
    url: String,
    embeds: Arc<AtomicUsize>,
    images: Arc<AtomicUsize>,
}

fn fake_vector(b64: &str, dim: usize) -> Vec<f64> {
    let mut h: u64 = 1469598103934665603;
    for b in b64.bytes() {
        h = (h ^ b as u64).wrapping_mul(1099511628211);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(h);
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn respond(stream: &mut TcpStream, status: &str, body: &str) {
    let head = format!(
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    let _ = stream.write_all(head.as_bytes());
    let _ = stream.write_all(body.as_bytes());
    let _ = stream.flush();
}

fn handle(stream: TcpStream, dim: usize, behaviour: Behaviour, embeds: &AtomicUsize, images: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() {
        return;
    }
    let mut length = 0;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();
    let mut stream = stream;
    if request_line.starts_with("GET /health") {
        let health = HealthResponse {
            status: "ok".into(),
            model_name: "mock".into(),
            dim,
            preprocessing: "none".into(),
        };
        respond(&mut stream, "200 OK", &serde_json::to_string(&health).unwrap());
    } else if request_line.starts_with("POST /embed") {
        let n = embeds.fetch_add(1, Ordering::SeqCst);
        let fail = match behaviour {
            Behaviour::FailFirst(k) => n < k,
            Behaviour::AlwaysFail => true,
            _ => false,
        };
        if fail {
            respond(&mut stream, "500 Internal Server Error", r#"{"error":"boom"}"#);
            return;
        }
        let req: EmbedRequest = serde_json::from_slice(&body).unwrap();
        assert!(req.images.len() <= MAX_BATCH);
        images.fetch_add(req.images.len(), Ordering::SeqCst);
        let out_dim = if matches!(behaviour, Behaviour::WrongDim) { dim - 1 } else { dim };
        let resp = EmbedResponse {
            dim: out_dim,
            vectors: req.images.iter().map(|s| fake_vector(s, out_dim)).collect(),
        };
        respond(&mut stream, "200 OK", &serde_json::to_string(&resp).unwrap());
    } else {
        respond(&mut stream, "404 Not Found", "{}");
    }
}

fn spawn_service(dim: usize, behaviour: Behaviour) -> MockService {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let embeds = Arc::new(AtomicUsize::new(0));
    let images = Arc::new(AtomicUsize::new(0));
    let (e, i) = (embeds.clone(), images.clone());
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            handle(stream, dim, behaviour, &e, &i);
        }
    });
    MockService { url, embeds, images }
}

fn connect(service: &MockService, dim: usize) -> gridcurio::Result<RemoteProvider> {
    RemoteProvider::connect_with_backoff(&service.url, dim, Duration::from_millis(1))
}

fn test_images(n: usize) -> Vec<RgbImage> {
    let config = EnvConfig::multi_room(2, 4);
    (0..n as u64).map(|s| render_rgb(&encode_full(&reset(&config, s).unwrap()), 2)).collect()
}

#[test]
fn remote_health_reports_dim() {
    let service = spawn_service(16, Behaviour::Normal);
    let p = connect(&service, 16).unwrap();
    assert_eq!(p.health.dim, 16);
    assert_eq!(p.health.model_name, "mock");
    assert_eq!(p.dim(), 16);
}

#[test]
fn remote_dim_mismatch_is_a_config_error() {
    let service = spawn_service(16, Behaviour::Normal);
    let err = connect(&service, 32).err().expect("mismatch must fail");
    assert!(matches!(err, Error::Config { ref field, .. } if field == "intrinsic.embed_dim"), "{err}");
}

#[test]
fn remote_vectors_keep_input_order_and_duplicates_agree() {
    let service = spawn_service(8, Behaviour::Normal);
    let p = connect(&service, 8).unwrap();
    let mut images = test_images(3);
    images.push(images[0].clone());
    let v = p.embed_batch(&images).unwrap();
    assert_eq!(v.len(), 4);
    assert_eq!(v[0], v[3]);
    assert_ne!(v[0], v[1]);
    let single = p.embed(&images[1]).unwrap();
    assert_eq!(single, v[1]);
}

#[test]
fn remote_empty_batch_sends_nothing() {
    let service = spawn_service(8, Behaviour::Normal);
    let p = connect(&service, 8).unwrap();
    assert!(p.embed_batch(&[]).unwrap().is_empty());
    assert_eq!(service.embeds.load(Ordering::SeqCst), 0);
}

#[test]
fn remote_large_batches_are_chunked() {
    let service = spawn_service(4, Behaviour::Normal);
    let p = connect(&service, 4).unwrap();
    let base = test_images(2);
    let images: Vec<RgbImage> = (0..MAX_BATCH + 10).map(|i| base[i % 2].clone()).collect();
    let v = p.embed_batch(&images).unwrap();
    assert_eq!(v.len(), MAX_BATCH + 10);
    assert_eq!(service.embeds.load(Ordering::SeqCst), 2);
    assert_eq!(v[0], v[MAX_BATCH]);
}

#[test]
fn remote_retries_transient_failures() {
    let service = spawn_service(4, Behaviour::FailFirst(ATTEMPTS as usize - 1));
    let p = connect(&service, 4).unwrap();
    let v = p.embed_batch(&test_images(1)).unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(service.embeds.load(Ordering::SeqCst), ATTEMPTS as usize);
}

#[test]
fn remote_persistent_failure_is_a_transport_error() {
    let service = spawn_service(4, Behaviour::AlwaysFail);
    let p = connect(&service, 4).unwrap();
    let err = p.embed_batch(&test_images(1)).unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err}");
    assert_eq!(service.embeds.load(Ordering::SeqCst), ATTEMPTS as usize);
}

#[test]
fn remote_wrong_vector_dim_is_a_config_error() {
    let service = spawn_service(4, Behaviour::WrongDim);
    let p = connect(&service, 4).unwrap();
    let err = p.embed_batch(&test_images(1)).unwrap_err();
    assert!(matches!(err, Error::Config { .. }), "{err}");
}

#[test]
fn unreachable_service_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = RemoteProvider::connect_with_backoff(&format!("http://127.0.0.1:{port}"), 4, Duration::from_millis(1))
        .err()
        .expect("nothing listens there");
    assert!(matches!(err, Error::Transport(_)), "{err}");
}

#[test]
fn module_caches_remote_embeddings() {
    let service = spawn_service(8, Behaviour::Normal);
    let p = connect(&service, 8).unwrap();
    let cfg = IntrinsicConfig::embedding_novelty(View::Full, 0.01, true);
    let mut module = IntrinsicModule::new(cfg, (11, 11), 2, 0).unwrap().with_provider(Box::new(p));
    let config = EnvConfig::multi_room(2, 4);
    let a = encode_full(&reset(&config, 0).unwrap());
    let b = encode_full(&reset(&config, 1).unwrap());
    let first = module.embed_views(&[a.clone(), b.clone(), a.clone()]).unwrap();
    assert_eq!(first[0], first[2]);
    assert_eq!(service.images.load(Ordering::SeqCst), 2);
    let again = module.embed_views(&[b, a]).unwrap();
    assert_eq!(again, vec![first[1].clone(), first[0].clone()]);
    assert_eq!(service.embeds.load(Ordering::SeqCst), 1);
}
