//! Nearest-wins mediation on the conflict fixtures, checked by hand.

use std::fs;
use std::path::Path;

use cgstitch_core::depset::{mediate, parse_tree};

fn run(name: &str) -> (Vec<String>, Vec<String>) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/mediation")
        .join(format!("{name}.json"));
    let set = mediate(&parse_tree(&fs::read_to_string(path).unwrap()).unwrap());
    let winners = set.coordinates.iter().map(|c| c.to_string()).collect();
    let log = set
        .mediation_log
        .iter()
        .map(|e| {
            let losers: Vec<String> = e.losers.iter().map(|l| format!("{}@{}", l.version, l.depth)).collect();
            format!("{}:{}={}@{} [{}]", e.group_id, e.artifact_id, e.winner, e.winner_depth, losers.join(","))
        })
        .collect();
    (winners, log)
}

fn check(name: &str, winners: &[&str], log: &[&str]) {
    let (w, l) = run(name);
    assert_eq!(w, winners, "{name}");
    assert_eq!(l, log, "{name}");
}

#[test]
fn nearest() {
    check("m01_nearest", &["r:root:1", "g:a:1", "g:b:1"], &["g:a=1@1 [2@2]"]);
}

#[test]
fn tie_goes_to_leftmost() {
    check("m02_tie_leftmost", &["r:root:1", "g:a:1"], &["g:a=1@1 [2@1]"]);
    check("m03_tie_cousins", &["r:root:1", "g:b:1", "g:d:1", "g:c:3"], &["g:c=3@2 [2@2]"]);
}

#[test]
fn transitive_conflicts() {
    check(
        "m04_transitive",
        &["r:root:1", "g:x:1", "g:y:2", "g:w:1", "g:z:1"],
        &["g:y=2@1 [1@2]", "g:z=1@3 [2@3]"],
    );
    check("m05_deeper_newer", &["r:root:1", "g:p:1", "g:q:1"], &["g:q=1@1 [9@2]"]);
}

#[test]
fn repeats_groups_and_root() {
    check("m06_same_version", &["r:root:1", "g:a:1", "g:b:1"], &[]);
    check("m07_groups", &["r:root:1", "g1:lib:1", "g2:lib:2"], &["g1:lib=1@1 [3@2]"]);
    check("m08_root_conflict", &["r:root:1", "g:a:1"], &["r:root=1@0 [0@2]"]);
    check("m09_packaging", &["r:root:1", "g:a:1", "g:b:1"], &["g:a=1@1 [2@2]"]);
}

#[test]
fn mixed_levels() {
    check(
        "m10_mixed",
        &["r:root:1", "g:a:1", "g:b:1", "g:e:3", "g:c:1", "g:d:2"],
        &["g:a=1@1 [3@3]", "g:e=3@1 [1@3,2@3]", "g:c=1@2 [2@2]", "g:d=2@2 [1@2]"],
    );
}
