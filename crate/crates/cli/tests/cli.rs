//! Every subcommand end to end, including its exit codes.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use cgstitch_core::depset::{mediate, parse_tree};
use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn fixture(rel: &str) -> String {
    fixtures().join(rel).display().to_string()
}

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Outcome {
    fn json(&self) -> Value {
        serde_json::from_str(self.stdout.trim()).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn cgstitch(args: &[&str]) -> Outcome {
    cgstitch_env(args, None)
}

fn cgstitch_env(args: &[&str], pool_env: Option<&Path>) -> Outcome {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cgstitch"));
    cmd.args(args).env_remove("CGSTITCH_POOL").env_remove("RUST_LOG");
    if let Some(p) = pool_env {
        cmd.env("CGSTITCH_POOL", p);
    }
    let out = cmd.output().unwrap();
    Outcome {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn failed(o: &Outcome, code: i32) {
    assert_eq!(o.code, code, "stderr: {}", o.stderr);
    assert!(o.stdout.is_empty(), "stdout of a failure: {}", o.stdout);
    assert!(!o.stderr.is_empty());
}

fn oracle_counts(listing: &str) -> (usize, usize, usize) {
    let count = |prefix: &str| listing.lines().filter(|l| l.starts_with(prefix)).count();
    (count("class "), count("method "), count("call "))
}

#[test]
fn usage_errors_exit_1() {
    failed(&cgstitch(&[]), 1);
    failed(&cgstitch(&["frobnicate"]), 1);
    failed(&cgstitch(&["pool-stats"]), 1);
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().display().to_string();
    failed(
        &cgstitch(&["ingest", "--jar", &fixture("jars/three.jar"), "--coordinate", "a:b", "--pool", &pool]),
        1,
    );
    failed(
        &cgstitch(&["stitch", "--pool", &pool, "--repo", ".", "--out", "x.json"]),
        1,
    );
    let help = cgstitch(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("stitch"));
}

#[test]
fn ingest_counts_match_the_oracle_listing() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().display().to_string();
    let fresh = cgstitch(&["pool-stats", "--pool", &pool]);
    assert_eq!(fresh.code, 0);
    assert_eq!(
        fresh.json(),
        serde_json::json!({"avoided":0,"generations":0,"hits":0,"misses":0,"requests":0})
    );

    let o = cgstitch(&["ingest", "--jar", &fixture("jars/three.jar"), "--coordinate", "demo:three:1.0", "--pool", &pool]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let listing = fs::read_to_string(fixtures().join("jars/three.jar.oracle")).unwrap();
    let (classes, methods, sites) = oracle_counts(&listing);
    let counts = o.json();
    assert_eq!(counts["classes"], classes);
    assert_eq!(counts["methods"], methods);
    assert_eq!(counts["callSites"], sites);
    assert_eq!(o.stdout.lines().count(), 1);
    assert!(dir.path().join("demo/three/1.0/partial-cg.json").is_file());
    assert_eq!(cgstitch(&["pool-stats", "--pool", &pool]).json()["generations"], 1);
}

#[test]
fn ingest_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().display().to_string();
    failed(
        &cgstitch(&["ingest", "--jar", "/no/such.jar", "--coordinate", "a:b:1", "--pool", &pool]),
        2,
    );
    failed(
        &cgstitch(&["ingest", "--jar", &fixture("classes/Empty.class"), "--coordinate", "a:b:1", "--pool", &pool]),
        2,
    );
}

#[test]
fn resolve_prints_winners_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let single = dir.path().join("single.json");
    fs::write(&single, r#"{"coordinate":"g:only:1","children":[]}"#).unwrap();
    let o = cgstitch(&["resolve", "--tree", single.to_str().unwrap()]);
    assert_eq!(o.code, 0);
    assert_eq!(o.json(), serde_json::json!({"coordinates":["g:only:1"],"mediationLog":[]}));

    for entry in fs::read_dir(fixtures().join("mediation")).unwrap() {
        let path = entry.unwrap().path();
        let o = cgstitch(&["resolve", "--tree", path.to_str().unwrap()]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        let tree = parse_tree(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(o.json(), mediate(&tree).to_json(), "{}", path.display());
    }

    failed(&cgstitch(&["resolve", "--tree", "/no/such/tree.json"]), 2);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"coordinate":"g:a"}"#).unwrap();
    failed(&cgstitch(&["resolve", "--tree", bad.to_str().unwrap()]), 2);
}

#[test]
fn stitch_cold_warm_and_env_pool() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool");
    let out = dir.path().join("shapes.json");
    let args = [
        "stitch",
        "--tree",
        &fixture("programs/p10_shapes.json"),
        "--repo",
        &fixture("repo"),
        "--out",
        out.to_str().unwrap(),
    ];
    let cold = cgstitch_env(&args, Some(&pool));
    assert_eq!(cold.code, 0, "{}", cold.stderr);
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        fs::read_to_string(fixtures().join("expected/shapes.fullcg.json")).unwrap()
    );
    let timings: Value = serde_json::from_str(cold.stderr.lines().last().unwrap()).unwrap();
    assert_eq!(timings["generations"], 3);
    for key in ["poolMs", "uchMs", "stitchMs"] {
        assert!(timings[key].is_u64(), "{key}");
    }
    assert_eq!(cold.json()["edges"], 2);

    let warm = cgstitch_env(&args, Some(&pool));
    assert_eq!(warm.code, 0);
    let timings: Value = serde_json::from_str(warm.stderr.lines().last().unwrap()).unwrap();
    assert_eq!((timings["generations"].as_u64(), timings["parses"].as_u64()), (Some(0), Some(0)));

    let stats = cgstitch_env(&["pool-stats"], Some(&pool)).json();
    assert_eq!(stats["requests"], 6);
    assert_eq!(stats["generations"], 3);
    assert_eq!(stats["avoided"], 3);
}

#[test]
fn stitch_from_a_set_file() {
    let dir = tempfile::tempdir().unwrap();
    let set = dir.path().join("set.txt");
    fs::write(&set, "# classpath order\nfx.shapes:app:1.0\n\nfx.shapes:shapes:jar:1.0:compile\n").unwrap();
    let out = dir.path().join("cg.json");
    let o = cgstitch(&[
        "stitch",
        "--set",
        set.to_str().unwrap(),
        "--pool",
        dir.path().join("pool").to_str().unwrap(),
        "--repo",
        &fixture("repo"),
        "--out",
        out.to_str().unwrap(),
        "--no-abstract-targets",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let cg: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(cg["edges"].as_array().unwrap().is_empty());
    assert_eq!(cg["unresolved"][0]["reason"], "abstract-only");
}

#[test]
fn stitch_missing_artifact_exits_3_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let set = dir.path().join("set.txt");
    fs::write(&set, "fx.shapes:app:1.0\nfx.none:ghost:9\n").unwrap();
    let out = dir.path().join("cg.json");
    let o = cgstitch(&[
        "stitch",
        "--set",
        set.to_str().unwrap(),
        "--pool",
        dir.path().join("pool").to_str().unwrap(),
        "--repo",
        &fixture("repo"),
        "--out",
        out.to_str().unwrap(),
    ]);
    failed(&o, 3);
    assert!(o.stderr.contains("fx.none:ghost:9"), "{}", o.stderr);
    assert!(!out.exists());
}

fn bench(pool: &Path, trees: &[String], rounds: &str, csv: &Path) -> Outcome {
    let mut args = vec!["bench", "--trees"];
    args.extend(trees.iter().map(String::as_str));
    let pool = pool.display().to_string();
    let csv = csv.display().to_string();
    let repo = fixture("repo");
    args.extend(["--pool", &pool, "--repo", &repo, "--rounds", rounds, "--csv", &csv]);
    cgstitch(&args)
}

#[test]
fn bench_single_tree_has_one_row_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("report.csv");
    let o = bench(&dir.path().join("pool"), &[fixture("programs/p10_shapes.json")], "1", &csv);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let rows = o.json();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["tree"], "p10_shapes");
    assert_eq!(rows[1]["tree"], "total");
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("round,tree,deps,poolMs,uchMs,stitchMs,totalMs,generations,avoided,parses"));
    assert_eq!(text.lines().count(), 3);
    assert!(o.stderr.contains("stitchMs"));
}

#[test]
fn bench_overlapping_trees_over_two_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let trees: Vec<String> = (0..3).map(|t| fixture(&format!("bench/tree{t}.json"))).collect();
    let o = bench(&dir.path().join("pool"), &trees, "2", &dir.path().join("r.csv"));
    assert_eq!(o.code, 0, "{}", o.stderr);
    let rows = o.json();
    let total = |round: u64| {
        rows.as_array()
            .unwrap()
            .iter()
            .find(|r| r["round"] == round && r["tree"] == "total")
            .unwrap()
            .clone()
    };

    let mut requests = 0;
    let mut unique = HashSet::new();
    for t in &trees {
        let resolved = mediate(&parse_tree(&fs::read_to_string(t).unwrap()).unwrap());
        requests += resolved.coordinates.len() as u64;
        unique.extend(resolved.coordinates);
    }
    let first = total(1);
    assert_eq!(first["deps"], requests);
    assert_eq!(first["generations"], unique.len() as u64);
    assert_eq!(first["avoided"], requests - unique.len() as u64);
    let second = total(2);
    assert_eq!(second["generations"], 0);
    assert_eq!(second["parses"], 0);
    assert_eq!(second["avoided"], requests);
}

#[test]
fn serve_answers_and_stops_on_interrupt() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool");
    let mut child = Command::new(env!("CARGO_BIN_EXE_cgstitch"))
        .args(["serve", "--listen", "127.0.0.1:0", "--repo", &fixture("repo")])
        .env("CGSTITCH_POOL", &pool)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stderr = BufReader::new(child.stderr.take().unwrap());
    let mut line = String::new();
    stderr.read_line(&mut line).unwrap();
    let base = line.trim().strip_prefix("listening on ").unwrap().to_string();

    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let mut r = agent.get(&format!("{base}/v1/health")).call().unwrap();
    assert_eq!(r.status(), 200);
    r.body_mut().read_to_string().unwrap();
    let mut r = agent
        .post(&format!("{base}/v1/stitch"))
        .send(r#"{"set":["fx.shapes:app:1.0","fx.shapes:shapes:1.0"]}"#)
        .unwrap();
    assert_eq!(r.status(), 200);
    let body: Value = serde_json::from_str(&r.body_mut().read_to_string().unwrap()).unwrap();
    assert_eq!(body["stats"]["generations"], 2);

    let status = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(status.success());
    let exit = child.wait().unwrap();
    assert!(exit.success(), "{exit:?}");
    assert_eq!(cgstitch_env(&["pool-stats"], Some(&pool)).json()["generations"], 2);
}
