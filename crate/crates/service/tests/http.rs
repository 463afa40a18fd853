//! End-to-end tests against a server on an ephemeral port.

use std::collections::HashSet;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use cgstitch_core::depset::{mediate, parse_tree, ArtifactSource, Fetcher, Transport, TransportFailure};
use cgstitch_core::engine::Engine;
use cgstitch_core::model::parse_coordinate;
use cgstitch_core::partial::PartialCG;
use cgstitch_core::pool::Pool;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

struct Server {
    addr: SocketAddr,
    engine: Arc<Engine>,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<thread::JoinHandle<()>>,
    _pool_dir: tempfile::TempDir,
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn start(fetcher: Fetcher) -> Server {
    let pool_dir = tempfile::tempdir().unwrap();
    let engine = Arc::new(Engine::new(
        Arc::new(Pool::open(pool_dir.path()).unwrap()),
        Arc::new(fetcher),
    ));
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let (addr_tx, addr_rx) = std::sync::mpsc::channel();
    let served = engine.clone();
    let thread = thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(4)
            .enable_all()
            .build()
            .unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            addr_tx.send(listener.local_addr().unwrap()).unwrap();
            cgstitch_service::serve(listener, served, async {
                let _ = stopped.await;
            })
            .await
            .unwrap();
        });
    });
    Server {
        addr: addr_rx.recv().unwrap(),
        engine,
        stop: Some(stop),
        thread: Some(thread),
        _pool_dir: pool_dir,
    }
}

fn local() -> Fetcher {
    Fetcher::new(ArtifactSource::Local(fixtures().join("repo")))
}

struct Reply {
    status: u16,
    content_type: String,
    timing: Option<String>,
    body: String,
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into()
}

fn reply(mut r: ureq::http::Response<ureq::Body>) -> Reply {
    let header = |name: &str| r.headers().get(name).map(|v| v.to_str().unwrap().to_string());
    let content_type = header("content-type").unwrap_or_default();
    let timing = header("server-timing");
    Reply {
        status: r.status().as_u16(),
        content_type,
        timing,
        body: r.body_mut().read_to_string().unwrap(),
    }
}

impl Server {
    fn get(&self, path: &str) -> Reply {
        reply(agent().get(&format!("http://{}{path}", self.addr)).call().unwrap())
    }

    fn post(&self, path: &str, body: &str) -> Reply {
        reply(
            agent()
                .post(&format!("http://{}{path}", self.addr))
                .header("content-type", "application/json")
                .send(body)
                .unwrap(),
        )
    }
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn tree_body(file: &str) -> String {
    format!(r#"{{"tree":{}}}"#, fs::read_to_string(fixtures().join(file)).unwrap())
}

#[test]
fn health_and_fresh_stats() {
    let s = start(local());
    let r = s.get("/v1/health");
    assert_eq!(r.status, 200);
    let r = s.get("/v1/stats");
    assert_eq!(r.status, 200);
    assert_eq!(
        json(&r.body),
        json(r#"{"avoided":0,"generations":0,"hits":0,"misses":0,"requests":0}"#)
    );
    assert_eq!(s.get("/v1/nowhere").status, 404);
}

#[test]
fn stitch_cold_then_warm() {
    let s = start(local());
    let body = tree_body("programs/p10_shapes.json");
    let cold = s.post("/v1/stitch", &body);
    assert_eq!(cold.status, 200, "{}", cold.body);
    assert_eq!(cold.content_type, "application/json");
    let timing = cold.timing.unwrap();
    assert!(timing.contains("pool;dur=") && timing.contains("uch;dur=") && timing.contains("stitch;dur="));

    let mut doc = json(&cold.body);
    assert_eq!(doc["stats"]["generations"], 3);
    doc.as_object_mut().unwrap().remove("stats");
    let expected = fs::read_to_string(fixtures().join("expected/shapes.fullcg.json")).unwrap();
    assert_eq!(serde_json::to_string(&doc).unwrap(), expected);

    let warm = s.post("/v1/stitch", &body);
    let again = s.post("/v1/stitch", &body);
    assert_eq!(json(&warm.body)["stats"]["generations"], 0);
    assert_eq!(json(&warm.body)["stats"]["parses"], 0);
    assert_eq!(warm.body, again.body);

    let stats = json(&s.get("/v1/stats").body);
    assert_eq!(stats["requests"], 9);
    assert_eq!(stats["generations"], 3);
    assert_eq!(stats["avoided"], 6);
}

#[test]
fn set_requests_and_options() {
    let s = start(local());
    let r = s.post(
        "/v1/stitch",
        r#"{"set":["fx.shapes:app:1.0","fx.shapes:shapes:jar:1.0"],"options":{"includeAbstractTargets":false}}"#,
    );
    assert_eq!(r.status, 200, "{}", r.body);
    let doc = json(&r.body);
    assert!(doc["edges"].as_array().unwrap().is_empty());
    assert_eq!(doc["unresolved"][0]["reason"], "abstract-only");
}

#[test]
fn malformed_requests_are_400() {
    let s = start(local());
    for body in [
        "not json",
        "[]",
        "{}",
        r#"{"tree":{"coordinate":"a:b:c"},"set":["a:b:c"]}"#,
        r#"{"set":[]}"#,
        r#"{"set":["a:b"]}"#,
        r#"{"tree":{"coordinate":"a:b"}}"#,
        r#"{"set":["a:b:c"],"options":{"bogus":true}}"#,
        r#"{"set":["a:b:c"],"extra":1}"#,
    ] {
        let r = s.post("/v1/stitch", body);
        assert_eq!(r.status, 400, "{body}");
        assert_eq!(r.content_type, "application/problem+json");
        assert_eq!(json(&r.body)["status"], 400);
    }
}

#[test]
fn missing_artifact_is_404_naming_it() {
    let s = start(local());
    let r = s.post("/v1/stitch", r#"{"set":["fx.shapes:app:1.0","fx.none:ghost:1.0"]}"#);
    assert_eq!(r.status, 404);
    assert_eq!(r.content_type, "application/problem+json");
    assert_eq!(json(&r.body)["coordinate"], "fx.none:ghost:1.0");
}

#[test]
fn pool_entries() {
    let s = start(local());
    assert_eq!(s.get("/v1/pool/fx.shapes/app/1.0").status, 404);
    s.post("/v1/stitch", r#"{"set":["fx.shapes:app:1.0"]}"#);
    let r = s.get("/v1/pool/fx.shapes/app/1.0");
    assert_eq!(r.status, 200);
    let pcg = PartialCG::from_json(&r.body).unwrap();
    assert_eq!(pcg.coordinate.to_string(), "fx.shapes:app:1.0");
    assert_eq!(pcg.to_canonical_json(), r.body);

    let corrupt = parse_coordinate("fx.bad:entry:1").unwrap();
    let path = s.engine.pool().entry_path(&corrupt);
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(&path, "{ truncated").unwrap();
    let r = s.get("/v1/pool/fx.bad/entry/1");
    assert_eq!(r.status, 500);
    assert_eq!(json(&r.body)["type"], "corrupt-entry");
}

/// Serves the fixture repository as if remote, slowly, counting requests.
struct SlowRepo {
    delay_ms: u64,
    requests: AtomicU64,
}

impl Transport for SlowRepo {
    fn get(&self, url: &str, _timeout: Duration) -> Result<Vec<u8>, TransportFailure> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        thread::sleep(Duration::from_millis(self.delay_ms));
        let rel = url.strip_prefix("http://repo.invalid/").unwrap();
        fs::read(fixtures().join("repo").join(rel)).map_err(|_| TransportFailure::NotFound)
    }
}

fn slow(delay_ms: u64) -> Fetcher {
    Fetcher::new("http://repo.invalid".parse().unwrap()).with_transport(Arc::new(SlowRepo {
        delay_ms,
        requests: AtomicU64::new(0),
    }))
}

#[test]
fn concurrent_requests_share_one_generation() {
    let shared = parse_coordinate("fx.p12:log:1.0").unwrap();
    let others = ["fx.p12:api:1.0", "fx.p12:net:1.0", "fx.p12:codecs:1.0", "fx.p12:app:1.0"];
    let mut rng = StdRng::seed_from_u64(2019);
    for schedule in 0..100 {
        let s = start(slow(rng.gen_range(1..6)));
        let delays: Vec<u64> = (0..8).map(|_| rng.gen_range(0..3000)).collect();
        let handles: Vec<_> = delays
            .iter()
            .enumerate()
            .map(|(i, &delay)| {
                let body = format!(r#"{{"set":["{}","{shared}"]}}"#, others[i % others.len()]);
                let addr = s.addr;
                thread::spawn(move || {
                    thread::sleep(Duration::from_micros(delay));
                    let r = reply(agent().post(&format!("http://{addr}/v1/stitch")).send(body).unwrap());
                    assert_eq!(r.status, 200, "{}", r.body);
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert_eq!(s.engine.generations_of(&shared), 1, "schedule {schedule}");
        let stats = s.engine.pool().stats();
        assert_eq!(stats.generations, 5, "schedule {schedule}");
        assert_eq!(stats.requests, 16);
        assert_eq!(stats.hits + stats.misses, stats.requests);
    }
}

#[test]
fn fifty_overlapping_requests() {
    let s = start(slow(2));
    let trees: Vec<String> = (0..6).map(|t| tree_body(&format!("bench/tree{t}.json"))).collect();
    let handles: Vec<_> = (0..50)
        .map(|i| {
            let body = trees[i % trees.len()].clone();
            let addr = s.addr;
            thread::spawn(move || {
                let r = reply(agent().post(&format!("http://{addr}/v1/stitch")).send(body).unwrap());
                assert_eq!(r.status, 200, "{}", r.body);
                let doc: Value = serde_json::from_str(&r.body).unwrap();
                doc["stats"]["requests"].as_u64().unwrap()
            })
        })
        .collect();
    let requested: u64 = handles.into_iter().map(|h| h.join().unwrap()).sum();
    let stats = s.engine.pool().stats();
    assert_eq!(stats.requests, requested);
    assert_eq!(stats.hits + stats.misses, stats.requests);
    let distinct: HashSet<_> = (0..6)
        .flat_map(|t| {
            let text = fs::read_to_string(fixtures().join(format!("bench/tree{t}.json"))).unwrap();
            mediate(&parse_tree(&text).unwrap()).coordinates
        })
        .collect();
    for c in &distinct {
        assert_eq!(s.engine.generations_of(c), 1, "{c}");
    }
    assert_eq!(stats.generations, distinct.len() as u64);
}
