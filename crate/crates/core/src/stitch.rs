//! Stitching: re-resolve every call site of every part against the UCH.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::hierarchy::{build_uch, Resolution, ShadowDiagnostic, Uch};
use crate::model::{
    CallKind, ClassName, Edge, GlobalMethodId, MavenCoordinate, MethodOrigin, MethodRef,
};
use crate::partial::{PartialCG, PartialCallSite};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StitchError {
    #[error("part {0} does not match the class hierarchy it is stitched against")]
    PartsMismatch(MavenCoordinate),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StitchOptions {
    /// Reuse a part's package-local edges for sites whose resolution provably
    /// cannot change. Output is identical either way.
    pub use_internal_edges: bool,
    /// Keep edges to abstract declarations. When false, sites whose only
    /// targets are abstract are reported unresolved.
    pub include_abstract_targets: bool,
}

impl Default for StitchOptions {
    fn default() -> Self {
        StitchOptions {
            use_internal_edges: false,
            include_abstract_targets: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum UnresolvedReason {
    #[serde(rename = "no-definition")]
    NoDefinition,
    #[serde(rename = "phantom-owner")]
    PhantomOwner,
    #[serde(rename = "abstract-only")]
    AbstractOnly,
}

impl fmt::Display for UnresolvedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnresolvedReason::NoDefinition => "no-definition",
            UnresolvedReason::PhantomOwner => "phantom-owner",
            UnresolvedReason::AbstractOnly => "abstract-only",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UnresolvedSite {
    pub caller: GlobalMethodId,
    pub pc: u32,
    pub kind: CallKind,
    pub declared_target: MethodRef,
    pub reason: UnresolvedReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DynamicSite {
    pub caller: GlobalMethodId,
    pub pc: u32,
}

/// A call site that was not stitched because its class is shadowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedSite {
    pub coordinate: MavenCoordinate,
    pub caller: MethodRef,
    pub pc: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseStats {
    pub pool: Duration,
    pub uch: Duration,
    pub stitch: Duration,
}

impl PhaseStats {
    pub fn total(&self) -> Duration {
        self.pool + self.uch + self.stitch
    }
}

#[derive(Debug, Clone, Default)]
pub struct FullCG {
    pub nodes: BTreeSet<GlobalMethodId>,
    pub edges: BTreeSet<Edge>,
    /// Sorted by (caller, pc).
    pub unresolved: Vec<UnresolvedSite>,
    /// Sorted by (caller, pc).
    pub dynamic: Vec<DynamicSite>,
    /// Edge targets that are abstract declarations.
    pub abstract_targets: BTreeSet<GlobalMethodId>,
    /// Non-dynamic call sites that were stitched (shadowed classes excluded).
    pub non_dynamic_sites: usize,
    pub skipped: Vec<SkippedSite>,
    pub shadows: Vec<ShadowDiagnostic>,
    pub phase_stats: PhaseStats,
}

impl PartialEq for FullCG {
    /// Graph equality over nodes and edges plus the per-site records.
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.unresolved == other.unresolved
            && self.dynamic == other.dynamic
            && self.abstract_targets == other.abstract_targets
    }
}

impl FullCG {
    /// Number of distinct (caller, pc) sites with at least one edge.
    pub fn resolved_site_count(&self) -> usize {
        self.edges
            .iter()
            .map(|e| (&e.source, e.site_pc))
            .collect::<HashSet<_>>()
            .len()
    }

    /// Checks that every stitched site is either resolved or unresolved,
    /// never both and never neither.
    pub fn accounting_holds(&self) -> bool {
        let resolved: HashSet<_> = self.edges.iter().map(|e| (&e.source, e.site_pc)).collect();
        let unresolved: HashSet<_> = self.unresolved.iter().map(|u| (&u.caller, u.pc)).collect();
        resolved.is_disjoint(&unresolved)
            && unresolved.len() == self.unresolved.len()
            && self.non_dynamic_sites == resolved.len() + unresolved.len()
    }

    /// Canonical JSON: sorted keys, sorted lists, no floats. `stats` is
    /// included only when given, so output without it is reproducible.
    pub fn to_canonical_json(&self, stats: Option<Value>) -> String {
        let doc = CanonicalDoc {
            dynamic: self
                .dynamic
                .iter()
                .map(|d| DynamicOut { caller: &d.caller, pc: d.pc })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeOut {
                    is_abstract: self.abstract_targets.contains(&e.target),
                    kind: e.kind.as_str(),
                    pc: e.site_pc,
                    source: &e.source,
                    target: &e.target,
                })
                .collect(),
            nodes: self.nodes.iter().map(Text).collect(),
            stats,
            unresolved: self
                .unresolved
                .iter()
                .map(|u| UnresolvedOut {
                    caller: &u.caller,
                    kind: u.kind.as_str(),
                    pc: u.pc,
                    reason: u.reason,
                    target: MethodOut {
                        descriptor: &u.declared_target.descriptor,
                        name: &u.declared_target.name,
                        owner: u.declared_target.owner.as_str(),
                    },
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("serializable")
    }
}

// Field order below is the canonical (sorted) key order.

/// Serializes through `Display` without an intermediate `String`.
struct Text<'a>(&'a GlobalMethodId);

impl Serialize for Text<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self.0)
    }
}

fn as_text<S: serde::Serializer>(id: &&GlobalMethodId, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(*id)
}

#[derive(Serialize)]
struct CanonicalDoc<'a> {
    dynamic: Vec<DynamicOut<'a>>,
    edges: Vec<EdgeOut<'a>>,
    nodes: Vec<Text<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stats: Option<Value>,
    unresolved: Vec<UnresolvedOut<'a>>,
}

#[derive(Serialize)]
struct DynamicOut<'a> {
    #[serde(serialize_with = "as_text")]
    caller: &'a GlobalMethodId,
    pc: u32,
}

#[derive(Serialize)]
struct EdgeOut<'a> {
    #[serde(rename = "abstract", skip_serializing_if = "std::ops::Not::not")]
    is_abstract: bool,
    kind: &'static str,
    pc: u32,
    #[serde(serialize_with = "as_text")]
    source: &'a GlobalMethodId,
    #[serde(serialize_with = "as_text")]
    target: &'a GlobalMethodId,
}

#[derive(Serialize)]
struct UnresolvedOut<'a> {
    #[serde(serialize_with = "as_text")]
    caller: &'a GlobalMethodId,
    kind: &'static str,
    pc: u32,
    reason: UnresolvedReason,
    target: MethodOut<'a>,
}

#[derive(Serialize)]
struct MethodOut<'a> {
    descriptor: &'a str,
    name: &'a str,
    owner: &'a str,
}

pub fn phase_stats_json(stats: &PhaseStats) -> Value {
    json!({
        "poolMs": stats.pool.as_millis() as u64,
        "stitchMs": stats.stitch.as_millis() as u64,
        "uchMs": stats.uch.as_millis() as u64,
    })
}

enum Outcome {
    Edges(Vec<(Edge, bool)>),
    Unresolved(UnresolvedSite),
    Dynamic(DynamicSite),
    Skipped(SkippedSite),
}

/// Targets of a VIRTUAL or INTERFACE call: the upward resolution plus every
/// concrete instance override in the owner's strict subtypes.
fn dispatch_targets<'a>(
    uch: &Uch<'a>,
    owner: &'a ClassName,
    name: &str,
    descriptor: &str,
) -> (Resolution<'a>, BTreeSet<(&'a ClassName, bool)>) {
    let resolution = uch.resolve_upwards(owner, name, descriptor);
    let mut targets = BTreeSet::new();
    if let Some(found) = resolution.found() {
        targets.insert(found);
    }
    for c in uch.subtypes(owner) {
        if c == owner {
            continue;
        }
        let Some(def) = uch.get(c) else { continue };
        if let Some(m) = def.record.method(name, descriptor) {
            if !m.is_abstract && !m.is_static && !m.is_private {
                targets.insert((c, false));
            }
        }
    }
    (resolution, targets)
}

struct PartView<'p> {
    part: &'p PartialCG,
    index: usize,
    has_shadowed: bool,
    internal: HashMap<SiteKey<'p>, Vec<&'p Edge>>,
}

type SiteKey<'p> = (&'p str, &'p str, &'p str, u32);

fn target_id(uch: &Uch<'_>, class: &ClassName, declared: &MethodRef) -> GlobalMethodId {
    let coordinate = uch.get(class).expect("resolved class is defined").coordinate;
    GlobalMethodId {
        origin: MethodOrigin::Package(coordinate.clone()),
        owner: class.clone(),
        name: declared.name.clone(),
        descriptor: declared.descriptor.clone(),
    }
}

/// True when every supertype reachable from `owner` is defined by part
/// `index` or is a phantom, so package-local resolution equals global.
fn ancestors_closed(uch: &Uch<'_>, owner: &ClassName, index: usize) -> bool {
    let mut stack = vec![owner];
    let mut seen = HashSet::new();
    while let Some(c) = stack.pop() {
        if !seen.insert(c) {
            continue;
        }
        match uch.get(c) {
            None => {}
            Some(def) if def.part != index => return false,
            Some(def) => stack.extend(def.record.supertypes()),
        }
    }
    uch.get(owner).is_some()
}

fn fast_path<'p>(
    uch: &Uch<'_>,
    view: &PartView<'p>,
    site: &'p PartialCallSite,
    declared: &MethodRef,
) -> Option<Vec<&'p Edge>> {
    if view.has_shadowed {
        return None;
    }
    let c = &site.caller;
    let edges = view
        .internal
        .get(&(c.owner.as_str(), c.name.as_str(), c.descriptor.as_str(), site.site.pc))?;
    let owner = &declared.owner;
    let eligible = match site.site.kind {
        CallKind::Static | CallKind::Special => true,
        CallKind::Virtual | CallKind::Interface => {
            uch.get(owner).is_some_and(|d| d.record.is_final) && uch.children(owner).next().is_none()
        }
        CallKind::Dynamic => false,
    };
    (eligible && ancestors_closed(uch, owner, view.index)).then(|| edges.clone())
}

/// Targets of one declared method under one dispatch style; `None` stands
/// for the phantom placeholder.
struct Resolved<'a> {
    targets: Vec<(Option<&'a ClassName>, bool)>,
    reason: Option<UnresolvedReason>,
}

type TargetKey<'p> = (bool, &'p str, &'p str, &'p str);

fn resolve_target<'a>(uch: &Uch<'a>, dispatched: bool, declared: &MethodRef) -> Resolved<'a> {
    let mut out = Resolved {
        targets: Vec::new(),
        reason: None,
    };
    if !dispatched {
        match uch.resolve_upwards(&declared.owner, &declared.name, &declared.descriptor) {
            Resolution::Found { class, is_abstract } => out.targets.push((Some(class), is_abstract)),
            Resolution::PhantomBoundary => out.targets.push((None, false)),
            Resolution::NotFound => {}
        }
        return out;
    }
    let Some(owner) = uch.defined_key(&declared.owner) else {
        out.reason = Some(UnresolvedReason::PhantomOwner);
        return out;
    };
    let (resolution, found) = dispatch_targets(uch, owner, &declared.name, &declared.descriptor);
    if resolution == Resolution::PhantomBoundary {
        out.reason = Some(UnresolvedReason::PhantomOwner);
    }
    out.targets = found.into_iter().map(|(c, a)| (Some(c), a)).collect();
    out
}

fn resolve_site<'a, 'p>(
    uch: &Uch<'a>,
    view: &PartView<'p>,
    site: &'p PartialCallSite,
    options: &StitchOptions,
    cache: &mut HashMap<TargetKey<'p>, Resolved<'a>>,
) -> Outcome {
    let part = view.part;
    let owner_def = uch.get(&site.caller.owner);
    if owner_def.map(|d| d.part) != Some(view.index) {
        return Outcome::Skipped(SkippedSite {
            coordinate: part.coordinate.clone(),
            caller: site.caller.clone(),
            pc: site.site.pc,
        });
    }
    let caller = GlobalMethodId::new(&part.coordinate, &site.caller);
    let pc = site.site.pc;
    let kind = site.site.kind;
    let Some(declared) = &site.site.declared_target else {
        return Outcome::Dynamic(DynamicSite { caller, pc });
    };
    let unresolved = |reason| {
        Outcome::Unresolved(UnresolvedSite {
            caller: caller.clone(),
            pc,
            kind,
            declared_target: declared.clone(),
            reason,
        })
    };
    let edge = |target: GlobalMethodId| Edge {
        source: caller.clone(),
        target,
        kind,
        site_pc: pc,
    };

    let mut targets: Vec<(Edge, bool)> = Vec::new();
    let mut reason = UnresolvedReason::NoDefinition;
    let fast = if options.use_internal_edges {
        fast_path(uch, view, site, declared)
    } else {
        None
    };
    if let Some(internal) = fast {
        for e in internal {
            let is_abstract = uch
                .get(&e.target.owner)
                .and_then(|d| d.record.method(&e.target.name, &e.target.descriptor))
                .is_some_and(|m| m.is_abstract);
            targets.push((e.clone(), is_abstract));
        }
    } else {
        let dispatched = matches!(kind, CallKind::Virtual | CallKind::Interface);
        let key = (
            dispatched,
            declared.owner.as_str(),
            declared.name.as_str(),
            declared.descriptor.as_str(),
        );
        let resolved = cache
            .entry(key)
            .or_insert_with(|| resolve_target(uch, dispatched, declared));
        if let Some(r) = resolved.reason {
            reason = r;
        }
        for &(class, is_abstract) in &resolved.targets {
            let target = match class {
                Some(class) => target_id(uch, class, declared),
                None => GlobalMethodId::phantom(declared),
            };
            targets.push((edge(target), is_abstract));
        }
    }
    if !options.include_abstract_targets && targets.iter().any(|(_, a)| *a) {
        targets.retain(|(_, a)| !*a);
        if targets.is_empty() {
            reason = UnresolvedReason::AbstractOnly;
        }
    }
    if targets.is_empty() {
        unresolved(reason)
    } else {
        Outcome::Edges(targets)
    }
}

/// Stitches `parts` (in classpath order) over `uch`, which must have been
/// built from the same parts in the same order.
pub fn stitch<P>(uch: &Uch<'_>, parts: &[P], options: &StitchOptions) -> Result<FullCG, StitchError>
where
    P: AsRef<PartialCG> + Sync,
{
    let started = Instant::now();
    let mut views = Vec::with_capacity(parts.len());
    for (index, part) in parts.iter().enumerate() {
        let part = part.as_ref();
        let mut has_shadowed = false;
        let mut any_present = part.classes.is_empty();
        for name in part.classes.keys() {
            match uch.get(name) {
                Some(def) => {
                    any_present = true;
                    if def.part != index {
                        has_shadowed = true;
                    }
                }
                None => has_shadowed = true,
            }
        }
        if !any_present {
            return Err(StitchError::PartsMismatch(part.coordinate.clone()));
        }
        let mut internal: HashMap<SiteKey<'_>, Vec<&Edge>> = HashMap::new();
        if options.use_internal_edges {
            for e in &part.internal_edges {
                let key = (
                    e.source.owner.as_str(),
                    e.source.name.as_str(),
                    e.source.descriptor.as_str(),
                    e.site_pc,
                );
                internal.entry(key).or_default().push(e);
            }
        }
        views.push(PartView {
            part,
            index,
            has_shadowed,
            internal,
        });
    }

    let mut cg = FullCG {
        shadows: uch.shadows().to_vec(),
        ..FullCG::default()
    };
    for view in &views {
        for (name, record) in &view.part.classes {
            if uch.get(name).map(|d| d.part) != Some(view.index) {
                continue;
            }
            for m in &record.methods {
                cg.nodes.insert(GlobalMethodId {
                    origin: MethodOrigin::Package(view.part.coordinate.clone()),
                    owner: name.clone(),
                    name: m.name.clone(),
                    descriptor: m.descriptor.clone(),
                });
            }
        }
    }

    let outcomes: Vec<Outcome> = views
        .par_iter()
        .flat_map_iter(|view| {
            let mut cache = HashMap::new();
            view.part
                .call_sites
                .iter()
                .map(move |site| resolve_site(uch, view, site, options, &mut cache))
        })
        .collect();

    let mut edges = Vec::new();
    for outcome in outcomes {
        match outcome {
            Outcome::Edges(found) => {
                cg.non_dynamic_sites += 1;
                for (e, is_abstract) in found {
                    if is_abstract {
                        cg.abstract_targets.insert(e.target.clone());
                    }
                    if e.target.is_phantom() {
                        cg.nodes.insert(e.target.clone());
                    }
                    edges.push(e);
                }
            }
            Outcome::Unresolved(u) => {
                cg.non_dynamic_sites += 1;
                cg.unresolved.push(u);
            }
            Outcome::Dynamic(d) => cg.dynamic.push(d),
            Outcome::Skipped(s) => cg.skipped.push(s),
        }
    }
    cg.edges = edges.into_iter().collect();
    cg.unresolved.sort_by(|a, b| (&a.caller, a.pc).cmp(&(&b.caller, b.pc)));
    cg.dynamic.sort_by(|a, b| (&a.caller, a.pc).cmp(&(&b.caller, b.pc)));
    for s in &cg.skipped {
        log::info!(
            "skipped call site {}!{}@{}: class is shadowed",
            s.coordinate,
            s.caller,
            s.pc
        );
    }
    cg.phase_stats.stitch = started.elapsed();
    Ok(cg)
}

impl AsRef<PartialCG> for PartialCG {
    fn as_ref(&self) -> &PartialCG {
        self
    }
}

/// Edges of a package stitched alone, minus those into phantom classes.
pub fn package_local_edges(pcg: &PartialCG) -> Result<Vec<Edge>, crate::hierarchy::HierarchyError> {
    let uch = build_uch([pcg])?;
    let cg = stitch(&uch, &[pcg], &StitchOptions::default())
        .expect("a package always matches its own hierarchy");
    Ok(cg
        .edges
        .into_iter()
        .filter(|e| !e.target.is_phantom())
        .collect())
}
