//! Whole-program CHA over raw class summaries, used as the reference the
//! stitched result must equal. Deliberately simple and independent of the
//! stitching code: it keeps its own class table and computes subtypes by
//! brute-force ancestor sets.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use crate::classfile::{ClassSummary, MethodSummary};
use crate::hierarchy::{HierarchyError, ShadowDiagnostic};
use crate::model::{CallKind, ClassName, Edge, GlobalMethodId, MavenCoordinate, MethodRef};
use crate::stitch::{DynamicSite, FullCG, SkippedSite, UnresolvedReason, UnresolvedSite};

enum Lookup<'a> {
    Found(&'a ClassName, bool),
    Phantom,
    Missing,
}

struct Program<'a> {
    defs: HashMap<&'a str, (&'a MavenCoordinate, &'a ClassSummary)>,
}

impl<'a> Program<'a> {
    fn method(&self, class: &str, name: &str, desc: &str) -> Option<&'a MethodSummary> {
        let (_, c) = self.defs.get(class)?;
        c.methods.iter().find(|m| m.name == name && m.descriptor == desc)
    }

    fn supers(&self, class: &str) -> Vec<&'a str> {
        match self.defs.get(class) {
            None => vec![],
            Some((_, c)) => c
                .super_name
                .iter()
                .chain(c.interfaces.iter())
                .map(|n| n.as_str())
                .collect(),
        }
    }

    fn lookup(&self, class: &str, name: &str, desc: &str) -> Lookup<'a> {
        if !self.defs.contains_key(class) {
            return Lookup::Phantom;
        }
        let mut phantom = false;
        let mut chain: Vec<&'a ClassSummary> = vec![];
        let mut cur = Some(class.to_string());
        while let Some(c) = cur {
            let Some(&(_, summary)) = self.defs.get(c.as_str()) else {
                phantom = true;
                break;
            };
            if let Some(m) = self.method(&c, name, desc) {
                return Lookup::Found(&summary.name, m.is_abstract);
            }
            chain.push(summary);
            cur = summary.super_name.as_ref().map(|s| s.to_string());
        }
        let mut queue: VecDeque<&str> = chain
            .iter()
            .flat_map(|c| c.interfaces.iter().map(|i| i.as_str()))
            .collect();
        let mut seen = HashSet::new();
        while let Some(i) = queue.pop_front() {
            if !seen.insert(i) {
                continue;
            }
            let Some(&(_, summary)) = self.defs.get(i) else {
                phantom = true;
                continue;
            };
            if let Some(m) = self.method(i, name, desc) {
                if !m.is_private && !m.is_static {
                    return Lookup::Found(&summary.name, m.is_abstract);
                }
            }
            queue.extend(summary.interfaces.iter().map(|n| n.as_str()));
        }
        if phantom {
            Lookup::Phantom
        } else {
            Lookup::Missing
        }
    }

    /// Reflexive-transitive supertypes of every defined class.
    fn ancestors(&self) -> HashMap<&'a str, HashSet<&'a str>> {
        self.defs
            .keys()
            .map(|&c| {
                let mut seen = HashSet::from([c]);
                let mut stack = vec![c];
                while let Some(x) = stack.pop() {
                    for s in self.supers(x) {
                        if seen.insert(s) {
                            stack.push(s);
                        }
                    }
                }
                (c, seen)
            })
            .collect()
    }

    fn find_cycle(&self) -> Option<Vec<ClassName>> {
        fn visit<'a>(
            p: &Program<'a>,
            c: &'a str,
            path: &mut Vec<&'a str>,
            done: &mut HashSet<&'a str>,
        ) -> Option<Vec<ClassName>> {
            if let Some(i) = path.iter().position(|x| *x == c) {
                let mut cycle: Vec<ClassName> =
                    path[i..].iter().map(|n| ClassName::new(*n).unwrap()).collect();
                cycle.push(ClassName::new(c).unwrap());
                return Some(cycle);
            }
            if done.contains(c) || !p.defs.contains_key(c) {
                return None;
            }
            path.push(c);
            for s in p.supers(c) {
                if let Some(cycle) = visit(p, s, path, done) {
                    return Some(cycle);
                }
            }
            path.pop();
            done.insert(c);
            None
        }
        let mut names: Vec<&str> = self.defs.keys().copied().collect();
        names.sort();
        let mut done = HashSet::new();
        names
            .into_iter()
            .find_map(|c| visit(self, c, &mut Vec::new(), &mut done))
    }
}

/// Builds the CHA call graph of all classes at once. Duplicate class names
/// resolve first-wins in list order.
pub fn monolithic_cha(
    classes: &[(MavenCoordinate, ClassSummary)],
) -> Result<FullCG, HierarchyError> {
    let mut program = Program {
        defs: HashMap::new(),
    };
    let mut effective = vec![false; classes.len()];
    let mut shadows = Vec::new();
    for (i, (coord, summary)) in classes.iter().enumerate() {
        match program.defs.get(summary.name.as_str()) {
            Some((winner, _)) => shadows.push(ShadowDiagnostic {
                class: summary.name.clone(),
                winner: (*winner).clone(),
                loser: coord.clone(),
            }),
            None => {
                program.defs.insert(summary.name.as_str(), (coord, summary));
                effective[i] = true;
            }
        }
    }
    if let Some(cycle) = program.find_cycle() {
        return Err(HierarchyError::HierarchyCycle(cycle));
    }
    let ancestors = program.ancestors();
    let id = |class: &ClassName, name: &str, desc: &str| {
        let (coord, _) = program.defs[class.as_str()];
        GlobalMethodId::new(
            coord,
            &MethodRef {
                owner: class.clone(),
                name: name.to_string(),
                descriptor: desc.to_string(),
            },
        )
    };

    let mut cg = FullCG {
        shadows,
        ..FullCG::default()
    };
    for (i, (coord, summary)) in classes.iter().enumerate() {
        if !effective[i] {
            for m in &summary.methods {
                for s in &m.call_sites {
                    cg.skipped.push(SkippedSite {
                        coordinate: coord.clone(),
                        caller: MethodRef {
                            owner: summary.name.clone(),
                            name: m.name.clone(),
                            descriptor: m.descriptor.clone(),
                        },
                        pc: s.pc,
                    });
                }
            }
            continue;
        }
        for m in &summary.methods {
            let caller = id(&summary.name, &m.name, &m.descriptor);
            cg.nodes.insert(caller.clone());
            for site in &m.call_sites {
                let Some(t) = &site.declared_target else {
                    cg.dynamic.push(DynamicSite {
                        caller: caller.clone(),
                        pc: site.pc,
                    });
                    continue;
                };
                cg.non_dynamic_sites += 1;
                let mut targets: BTreeSet<(GlobalMethodId, bool)> = BTreeSet::new();
                let mut reason = UnresolvedReason::NoDefinition;
                let lookup = program.lookup(t.owner.as_str(), &t.name, &t.descriptor);
                match site.kind {
                    CallKind::Static | CallKind::Special => match lookup {
                        Lookup::Found(c, abs) => {
                            targets.insert((id(c, &t.name, &t.descriptor), abs));
                        }
                        Lookup::Phantom => {
                            targets.insert((GlobalMethodId::phantom(t), false));
                        }
                        Lookup::Missing => {}
                    },
                    _ => {
                        match lookup {
                            Lookup::Found(c, abs) => {
                                targets.insert((id(c, &t.name, &t.descriptor), abs));
                            }
                            Lookup::Phantom => reason = UnresolvedReason::PhantomOwner,
                            Lookup::Missing => {}
                        }
                        if program.defs.contains_key(t.owner.as_str()) {
                            for (&c, ups) in &ancestors {
                                if c == t.owner.as_str() || !ups.contains(t.owner.as_str()) {
                                    continue;
                                }
                                if let Some(m) = program.method(c, &t.name, &t.descriptor) {
                                    if !m.is_abstract && !m.is_static && !m.is_private {
                                        let (_, s) = program.defs[c];
                                        targets.insert((id(&s.name, &t.name, &t.descriptor), false));
                                    }
                                }
                            }
                        }
                    }
                }
                if targets.is_empty() {
                    cg.unresolved.push(UnresolvedSite {
                        caller: caller.clone(),
                        pc: site.pc,
                        kind: site.kind,
                        declared_target: t.clone(),
                        reason,
                    });
                }
                for (target, abs) in targets {
                    if abs {
                        cg.abstract_targets.insert(target.clone());
                    }
                    cg.nodes.insert(target.clone());
                    cg.edges.insert(Edge {
                        source: caller.clone(),
                        target,
                        kind: site.kind,
                        site_pc: site.pc,
                    });
                }
            }
        }
    }
    cg.unresolved.sort_by(|a, b| (&a.caller, a.pc).cmp(&(&b.caller, b.pc)));
    cg.dynamic.sort_by(|a, b| (&a.caller, a.pc).cmp(&(&b.caller, b.pc)));
    Ok(cg)
}
