//! Stitched graphs against the whole-program oracle on the program corpus.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use cgstitch_core::classfile::{read_jar_file, ClassSummary};
use cgstitch_core::depset::{mediate, parse_tree};
use cgstitch_core::hierarchy::build_uch;
use cgstitch_core::model::{parse_coordinate, CallKind, MavenCoordinate};
use cgstitch_core::oracle::monolithic_cha;
use cgstitch_core::partial::{build_partial_cg, PartialCG};
use cgstitch_core::stitch::{stitch, FullCG, StitchOptions};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

struct Program {
    name: String,
    packages: Vec<(MavenCoordinate, Vec<ClassSummary>)>,
}

impl Program {
    fn load(tree_file: &Path) -> Program {
        let tree = parse_tree(&fs::read_to_string(tree_file).unwrap()).unwrap();
        let packages = mediate(&tree)
            .coordinates
            .into_iter()
            .map(|c| {
                let jar = fixtures().join("repo").join(c.jar_path());
                let listing = read_jar_file(&jar).unwrap();
                assert!(listing.skipped.is_empty(), "{}", jar.display());
                (c, listing.into_summaries())
            })
            .collect();
        Program {
            name: tree_file.file_stem().unwrap().to_string_lossy().into_owned(),
            packages,
        }
    }

    fn union(&self) -> Vec<(MavenCoordinate, ClassSummary)> {
        self.packages
            .iter()
            .flat_map(|(c, classes)| classes.iter().map(move |s| (c.clone(), s.clone())))
            .collect()
    }

    fn parts(&self) -> Vec<PartialCG> {
        self.packages
            .iter()
            .map(|(c, classes)| build_partial_cg(c.clone(), classes).unwrap())
            .collect()
    }
}

fn corpus() -> Vec<Program> {
    let mut files: Vec<PathBuf> = fs::read_dir(fixtures().join("programs"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    files.iter().map(|f| Program::load(f)).collect()
}

fn stitched(parts: &[PartialCG], options: &StitchOptions) -> FullCG {
    let uch = build_uch(parts).unwrap();
    stitch(&uch, parts, options).unwrap()
}

#[test]
fn corpus_covers_required_shapes() {
    let programs = corpus();
    assert!(programs.len() >= 12);
    let mut kinds = BTreeSet::new();
    let mut multi_package = 0;
    for p in &programs {
        if p.packages.len() > 1 {
            multi_package += 1;
        }
        for (_, classes) in &p.packages {
            for m in classes.iter().flat_map(|c| &c.methods) {
                kinds.extend(m.call_sites.iter().map(|s| s.kind));
            }
        }
    }
    assert!(multi_package >= 12);
    assert_eq!(kinds.len(), 5, "{kinds:?}");
    let all = |f: &dyn Fn(&FullCG) -> bool| programs.iter().any(|p| f(&monolithic_cha(&p.union()).unwrap()));
    assert!(all(&|cg| !cg.shadows.is_empty()), "shadowed duplicates");
    assert!(all(&|cg| cg.nodes.iter().any(|n| n.is_phantom())), "phantom supers");
    assert!(all(&|cg| !cg.abstract_targets.is_empty()), "abstract classes");
}

#[test]
fn stitched_equals_monolithic_on_every_program() {
    for p in corpus() {
        let expected = monolithic_cha(&p.union()).unwrap();
        let actual = stitched(&p.parts(), &StitchOptions::default());
        assert_eq!(actual.nodes, expected.nodes, "{}", p.name);
        assert_eq!(actual.edges, expected.edges, "{}", p.name);
        assert_eq!(actual, expected, "{}", p.name);
        assert_eq!(actual.shadows, expected.shadows, "{}", p.name);
        assert!(actual.accounting_holds(), "{}", p.name);
        assert!(expected.accounting_holds(), "{}", p.name);
    }
}

/// Reassigns a program's classes to random packages. Duplicate class names
/// keep their relative classpath order, so the oracle sees the same winners.
fn random_split(p: &Program, rng: &mut StdRng) -> Vec<PartialCG> {
    let union = p.union();
    let k = rng.gen_range(1..=union.len().clamp(1, 6));
    let mut buckets: Vec<Vec<ClassSummary>> = vec![Vec::new(); k];
    let mut last_bucket_of = std::collections::HashMap::new();
    for (_, summary) in union {
        let floor = last_bucket_of.get(&summary.name).map_or(0, |b| b + 1);
        if floor >= buckets.len() {
            buckets.push(Vec::new());
        }
        let b = rng.gen_range(floor..buckets.len());
        last_bucket_of.insert(summary.name.clone(), b);
        buckets[b].push(summary);
    }
    buckets
        .into_iter()
        .enumerate()
        .map(|(i, classes)| {
            let c = parse_coordinate(&format!("split.{}:part{i}:1", p.name.replace('_', "-"))).unwrap();
            build_partial_cg(c, &classes).unwrap()
        })
        .collect()
}

fn oracle_of(parts: &[PartialCG], p: &Program) -> FullCG {
    // The oracle works on raw summaries; map each class back to its part.
    let by_name: Vec<(MavenCoordinate, ClassSummary)> = {
        let mut remaining = p.union();
        let mut out = Vec::new();
        for part in parts {
            for name in part.classes.keys() {
                let i = remaining.iter().position(|(_, s)| &s.name == name).unwrap();
                let (_, s) = remaining.remove(i);
                out.push((part.coordinate.clone(), s));
            }
        }
        out
    };
    monolithic_cha(&by_name).unwrap()
}

#[test]
fn randomized_package_splits() {
    let programs = corpus();
    let mut rng = StdRng::seed_from_u64(0x5717c4);
    let mut splits = 0;
    for round in 0..10 {
        for p in &programs {
            let parts = random_split(p, &mut rng);
            let expected = oracle_of(&parts, p);
            let actual = stitched(&parts, &StitchOptions::default());
            assert_eq!(actual, expected, "{} round {round}", p.name);
            assert!(actual.accounting_holds());
            splits += 1;
        }
    }
    assert!(splits >= 100);
}

#[test]
fn internal_edge_fast_path_changes_nothing() {
    let mut rng = StdRng::seed_from_u64(7);
    for p in corpus() {
        let mut candidates = vec![p.parts()];
        candidates.extend((0..5).map(|_| random_split(&p, &mut rng)));
        for parts in candidates {
            let off = stitched(&parts, &StitchOptions::default());
            let on = stitched(
                &parts,
                &StitchOptions {
                    use_internal_edges: true,
                    ..StitchOptions::default()
                },
            );
            assert_eq!(on, off, "{}", p.name);
            assert_eq!(on.to_canonical_json(None), off.to_canonical_json(None));
        }
    }
}

#[test]
fn internal_edges_match_standalone_stitch() {
    for p in corpus() {
        for part in p.parts() {
            let alone = stitched(std::slice::from_ref(&part), &StitchOptions::default());
            let real: BTreeSet<_> = alone
                .edges
                .iter()
                .filter(|e| !e.target.is_phantom())
                .cloned()
                .collect();
            let internal: BTreeSet<_> = part.internal_edges.iter().cloned().collect();
            assert_eq!(internal, real, "{}", part.coordinate);
        }
    }
}

#[test]
fn call_sites_are_preserved() {
    for p in corpus() {
        for ((_, classes), part) in p.packages.iter().zip(p.parts()) {
            let mut from_summaries: Vec<_> = classes
                .iter()
                .flat_map(|c| c.methods.iter().flat_map(move |m| {
                    m.call_sites.iter().map(move |s| (c.name.clone(), m.name.clone(), m.descriptor.clone(), s.clone()))
                }))
                .collect();
            let mut from_part: Vec<_> = part
                .call_sites
                .iter()
                .map(|s| (s.caller.owner.clone(), s.caller.name.clone(), s.caller.descriptor.clone(), s.site.clone()))
                .collect();
            from_summaries.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
            from_part.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
            assert_eq!(from_part, from_summaries);
        }
    }
}

#[test]
fn adding_a_package_keeps_static_and_special_edges() {
    for p in corpus() {
        let parts = p.parts();
        let full = stitched(&parts, &StitchOptions::default());
        if !full.shadows.is_empty() {
            continue;
        }
        for n in 1..parts.len() {
            let smaller = stitched(&parts[..n], &StitchOptions::default());
            for e in &smaller.edges {
                if e.target.is_phantom() {
                    // a placeholder is replaced once the defining package joins
                    continue;
                }
                if matches!(e.kind, CallKind::Static | CallKind::Special) {
                    assert!(full.edges.contains(e), "{}: lost {e:?}", p.name);
                }
            }
            let kept: HashSet<_> = smaller.edges.iter().filter(|e| !e.target.is_phantom()).collect();
            assert!(kept.iter().all(|e| full.edges.contains(*e)), "{}", p.name);
        }
    }
}

#[test]
fn stitching_is_deterministic_across_thread_counts() {
    for p in corpus() {
        let parts = p.parts();
        let reference = stitched(&parts, &StitchOptions::default()).to_canonical_json(None);
        for threads in [1, 4] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let again = pool.install(|| stitched(&parts, &StitchOptions::default()));
            assert_eq!(again.to_canonical_json(None), reference);
        }
    }
}

#[test]
fn shapes_interface_call() {
    let p = Program::load(&fixtures().join("programs/p10_shapes.json"));
    let cg = stitched(&p.parts(), &StitchOptions::default());
    let area_targets = |cg: &FullCG| -> BTreeSet<String> {
        cg.edges
            .iter()
            .filter(|e| e.kind == CallKind::Interface && e.target.to_string().ends_with(".area()D"))
            .map(|e| e.target.to_string())
            .collect()
    };
    assert_eq!(
        area_targets(&cg),
        BTreeSet::from([
            "fx.shapes:circle:1.0!circle/Circle.area()D".to_string(),
            "fx.shapes:shapes:1.0!shapes/Shape.area()D".to_string(),
        ])
    );
    let reduced = Program::load(&fixtures().join("programs/variants/shapes_reduced.json"));
    let cg = stitched(&reduced.parts(), &StitchOptions::default());
    assert_eq!(cg, monolithic_cha(&reduced.union()).unwrap());
    assert_eq!(
        area_targets(&cg),
        BTreeSet::from(["fx.shapes:shapes:1.0!shapes/Shape.area()D".to_string()])
    );
    let without_abstract = stitched(
        &reduced.parts(),
        &StitchOptions {
            include_abstract_targets: false,
            ..StitchOptions::default()
        },
    );
    assert!(area_targets(&without_abstract).is_empty());
    assert!(without_abstract.accounting_holds());
}

/// Set `CGSTITCH_BLESS=1` to rewrite the expected file from the oracle.
#[test]
fn shapes_matches_committed_expected_graph() {
    let p = Program::load(&fixtures().join("programs/p10_shapes.json"));
    let path = fixtures().join("expected/shapes.fullcg.json");
    let oracle = monolithic_cha(&p.union()).unwrap().to_canonical_json(None);
    if std::env::var_os("CGSTITCH_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, &oracle).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap();
    assert_eq!(oracle, expected);
    assert_eq!(stitched(&p.parts(), &StitchOptions::default()).to_canonical_json(None), expected);
}
