//! The Universal Class Hierarchy: class-hierarchy fragments of a dependency
//! set merged in classpath order.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::model::{ClassName, MavenCoordinate};
use crate::partial::{ClassRecord, MethodRecord, PartialCG};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("class hierarchy cycle: {}", format_cycle(.0))]
    HierarchyCycle(Vec<ClassName>),
}

fn format_cycle(cycle: &[ClassName]) -> String {
    cycle
        .iter()
        .map(ClassName::as_str)
        .collect::<Vec<_>>()
        .join(" -> ")
}

/// A class defined by more than one package; only the winner is visible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShadowDiagnostic {
    pub class: ClassName,
    pub winner: MavenCoordinate,
    pub loser: MavenCoordinate,
}

#[derive(Debug, Clone, Copy)]
pub struct DefinedClass<'a> {
    pub coordinate: &'a MavenCoordinate,
    /// Index of the defining part in the list passed to [`build_uch`].
    pub part: usize,
    pub record: &'a ClassRecord,
}

/// Outcome of searching a class and its supertypes for a method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution<'a> {
    Found {
        class: &'a ClassName,
        is_abstract: bool,
    },
    /// The search reached a class outside the dependency set before finding
    /// a definition; the answer is unknown.
    PhantomBoundary,
    NotFound,
}

impl<'a> Resolution<'a> {
    pub fn found(self) -> Option<(&'a ClassName, bool)> {
        match self {
            Resolution::Found { class, is_abstract } => Some((class, is_abstract)),
            _ => None,
        }
    }
}

#[derive(Debug)]
pub struct Uch<'a> {
    classes: HashMap<&'a ClassName, DefinedClass<'a>>,
    children: HashMap<&'a ClassName, BTreeSet<&'a ClassName>>,
    phantoms: BTreeSet<&'a ClassName>,
    shadows: Vec<ShadowDiagnostic>,
}

/// Merges the parts' hierarchies in the given (classpath) order. The first
/// definition of a class name wins.
pub fn build_uch<'a, I>(parts: I) -> Result<Uch<'a>, HierarchyError>
where
    I: IntoIterator<Item = &'a PartialCG>,
{
    let mut classes: HashMap<&'a ClassName, DefinedClass<'a>> = HashMap::new();
    let mut shadows = Vec::new();
    let mut parts_seen = Vec::new();
    for (index, part) in parts.into_iter().enumerate() {
        parts_seen.push(part);
        for (name, record) in &part.classes {
            match classes.get(name) {
                Some(winner) => shadows.push(ShadowDiagnostic {
                    class: name.clone(),
                    winner: winner.coordinate.clone(),
                    loser: part.coordinate.clone(),
                }),
                None => {
                    classes.insert(
                        name,
                        DefinedClass {
                            coordinate: &part.coordinate,
                            part: index,
                            record,
                        },
                    );
                }
            }
        }
    }

    let mut children: HashMap<&'a ClassName, BTreeSet<&'a ClassName>> = HashMap::new();
    let mut phantoms = BTreeSet::new();
    for (&name, def) in &classes {
        for sup in def.record.supertypes() {
            children.entry(sup).or_default().insert(name);
            if !classes.contains_key(sup) {
                phantoms.insert(sup);
            }
        }
    }
    // declared-target owners of every part count as references too
    for part in parts_seen {
        for site in &part.call_sites {
            if let Some(t) = &site.site.declared_target {
                if !classes.contains_key(&t.owner) {
                    phantoms.insert(&t.owner);
                }
            }
        }
    }

    let uch = Uch {
        classes,
        children,
        phantoms,
        shadows,
    };
    uch.check_acyclic()?;
    Ok(uch)
}

impl<'a> Uch<'a> {
    pub fn get(&self, class: &ClassName) -> Option<&DefinedClass<'a>> {
        self.classes.get(class)
    }

    /// The UCH's own key for a defined class, borrowed for the UCH's lifetime.
    pub fn defined_key(&self, class: &ClassName) -> Option<&'a ClassName> {
        self.classes.get_key_value(class).map(|(k, _)| *k)
    }

    pub fn is_defined(&self, class: &ClassName) -> bool {
        self.classes.contains_key(class)
    }

    pub fn is_phantom(&self, class: &ClassName) -> bool {
        self.phantoms.contains(class)
    }

    pub fn phantoms(&self) -> impl Iterator<Item = &'a ClassName> + '_ {
        self.phantoms.iter().copied()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn defined_classes(&self) -> impl Iterator<Item = (&'a ClassName, &DefinedClass<'a>)> {
        self.classes.iter().map(|(k, v)| (*k, v))
    }

    pub fn shadows(&self) -> &[ShadowDiagnostic] {
        &self.shadows
    }

    /// Direct subclasses and direct implementers.
    pub fn children(&self, class: &ClassName) -> impl Iterator<Item = &'a ClassName> + '_ {
        self.children.get(class).into_iter().flatten().copied()
    }

    /// `class` plus everything below it. Phantom and unknown classes have
    /// only themselves because their subtree is unknown.
    pub fn subtypes(&self, class: &'a ClassName) -> BTreeSet<&'a ClassName> {
        let mut out = BTreeSet::new();
        out.insert(class);
        if !self.is_defined(class) {
            return out;
        }
        let mut stack = vec![class];
        while let Some(c) = stack.pop() {
            for child in self.children(c) {
                if out.insert(child) {
                    stack.push(child);
                }
            }
        }
        out
    }

    fn method(&self, class: &ClassName, name: &str, descriptor: &str) -> Option<&'a MethodRecord> {
        self.classes.get(class)?.record.method(name, descriptor)
    }

    /// Searches `class`, then its superclass chain, then superinterfaces
    /// breadth-first in declaration order.
    pub fn resolve_upwards(
        &self,
        class: &ClassName,
        name: &str,
        descriptor: &str,
    ) -> Resolution<'a> {
        let Some((&start, _)) = self.classes.get_key_value(class) else {
            return Resolution::PhantomBoundary;
        };
        let mut phantom_seen = false;
        let mut chain = Vec::new();
        let mut current = start;
        loop {
            let Some((&key, def)) = self.classes.get_key_value(current) else {
                phantom_seen = true;
                break;
            };
            if let Some(m) = def.record.method(name, descriptor) {
                return Resolution::Found {
                    class: key,
                    is_abstract: m.is_abstract,
                };
            }
            chain.push(def.record);
            match &def.record.super_name {
                Some(s) => current = s,
                None => break,
            }
            if chain.len() > self.classes.len() {
                unreachable!("superclass cycle survived construction");
            }
        }

        let mut queue: VecDeque<&ClassName> =
            chain.iter().flat_map(|r| r.interfaces.iter()).collect();
        let mut visited = HashSet::new();
        while let Some(iface) = queue.pop_front() {
            if !visited.insert(iface) {
                continue;
            }
            let Some((&key, def)) = self.classes.get_key_value(iface) else {
                phantom_seen = true;
                continue;
            };
            if let Some(m) = self.method(iface, name, descriptor) {
                if !m.is_private && !m.is_static {
                    return Resolution::Found {
                        class: key,
                        is_abstract: m.is_abstract,
                    };
                }
            }
            queue.extend(def.record.interfaces.iter());
        }
        if phantom_seen {
            Resolution::PhantomBoundary
        } else {
            Resolution::NotFound
        }
    }

    /// Detects cycles through superclass and interface links among defined
    /// classes. Reports the first cycle found in class-name order.
    fn check_acyclic(&self) -> Result<(), HierarchyError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Active,
            Done,
        }
        let mut marks: HashMap<&ClassName, Mark> = HashMap::new();
        let ordered: BTreeMap<&ClassName, &DefinedClass> =
            self.classes.iter().map(|(k, v)| (*k, v)).collect();
        for &root in ordered.keys() {
            if marks.contains_key(root) {
                continue;
            }
            // iterative DFS: (class, next supertype index)
            let mut path: Vec<(&ClassName, usize)> = vec![(root, 0)];
            marks.insert(root, Mark::Active);
            while let Some(&mut (class, ref mut next)) = path.last_mut() {
                let record = self.classes[class].record;
                let sup = record.supertypes().nth(*next);
                *next += 1;
                match sup {
                    None => {
                        marks.insert(class, Mark::Done);
                        path.pop();
                    }
                    Some(s) if !self.classes.contains_key(s) => {}
                    Some(s) => match marks.get(s) {
                        Some(Mark::Done) => {}
                        Some(Mark::Active) => {
                            let start = path.iter().position(|(c, _)| *c == s).unwrap();
                            let mut cycle: Vec<ClassName> =
                                path[start..].iter().map(|(c, _)| (*c).clone()).collect();
                            cycle.push(s.clone());
                            return Err(HierarchyError::HierarchyCycle(cycle));
                        }
                        None => {
                            let (&key, _) = self.classes.get_key_value(s).unwrap();
                            marks.insert(key, Mark::Active);
                            path.push((key, 0));
                        }
                    },
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_coordinate;
    use crate::partial::MethodRecord;

    pub(crate) fn class(
        sup: Option<&str>,
        ifaces: &[&str],
        is_interface: bool,
        methods: &[(&str, bool)],
    ) -> ClassRecord {
        ClassRecord {
            super_name: sup.map(|s| ClassName::new(s).unwrap()),
            interfaces: ifaces.iter().map(|s| ClassName::new(*s).unwrap()).collect(),
            is_interface,
            is_abstract: is_interface,
            is_final: false,
            methods: methods
                .iter()
                .map(|(n, abs)| MethodRecord {
                    name: n.to_string(),
                    descriptor: "()V".into(),
                    is_static: false,
                    is_abstract: *abs,
                    is_private: false,
                    is_final: false,
                })
                .collect(),
        }
    }

    fn part(coord: &str, classes: Vec<(&str, ClassRecord)>) -> PartialCG {
        PartialCG {
            coordinate: parse_coordinate(coord).unwrap(),
            classes: classes
                .into_iter()
                .map(|(n, c)| (ClassName::new(n).unwrap(), c))
                .collect(),
            call_sites: vec![],
            internal_edges: vec![],
            format_version: crate::partial::FORMAT_VERSION,
        }
    }

    fn cn(s: &str) -> ClassName {
        ClassName::new(s).unwrap()
    }

    #[test]
    fn object_is_phantom_unless_provided() {
        let p = part("g:a:1", vec![("A", class(Some("java/lang/Object"), &[], false, &[]))]);
        let uch = build_uch([&p]).unwrap();
        assert!(uch.is_defined(&cn("A")));
        assert!(uch.is_phantom(&cn("java/lang/Object")));
        assert_eq!(uch.children(&cn("java/lang/Object")).count(), 1);
    }

    #[test]
    fn first_definition_wins() {
        let a = part("g:a:1", vec![("org/x/C", class(None, &[], false, &[("m", false)]))]);
        let b = part("g:b:1", vec![("org/x/C", class(None, &[], false, &[]))]);
        let uch = build_uch([&a, &b]).unwrap();
        assert_eq!(uch.get(&cn("org/x/C")).unwrap().coordinate.to_string(), "g:a:1");
        assert_eq!(uch.shadows().len(), 1);
        assert_eq!(uch.shadows()[0].loser.to_string(), "g:b:1");
    }

    #[test]
    fn subtypes_of_interface_and_phantom() {
        let p = part(
            "g:a:1",
            vec![
                ("I", class(Some("java/lang/Object"), &[], true, &[])),
                ("A", class(Some("java/lang/Object"), &["I"], false, &[])),
                ("B", class(Some("java/lang/Object"), &["I"], false, &[])),
                ("C", class(Some("A"), &[], false, &[])),
            ],
        );
        let uch = build_uch([&p]).unwrap();
        let i = cn("I");
        let got: Vec<_> = uch.subtypes(&i).into_iter().map(|c| c.as_str()).collect();
        assert_eq!(got, ["A", "B", "C", "I"]);
        let l = cn("C");
        assert_eq!(uch.subtypes(&l).len(), 1);
        let obj = cn("java/lang/Object");
        assert_eq!(uch.subtypes(&obj).len(), 1);
    }

    #[test]
    fn resolution_order() {
        let p = part(
            "g:a:1",
            vec![
                ("I1", class(None, &[], true, &[("m", true)])),
                ("I2", class(None, &[], true, &[("m", false)])),
                ("G", class(None, &[], false, &[("g", false)])),
                ("P", class(Some("G"), &[], false, &[])),
                ("C", class(Some("P"), &["I1", "I2"], false, &[("own", false)])),
            ],
        );
        let uch = build_uch([&p]).unwrap();
        let c = cn("C");
        assert_eq!(uch.resolve_upwards(&c, "own", "()V").found().unwrap().0.as_str(), "C");
        assert_eq!(uch.resolve_upwards(&c, "g", "()V").found().unwrap().0.as_str(), "G");
        assert_eq!(
            uch.resolve_upwards(&c, "m", "()V"),
            Resolution::Found { class: &cn("I1"), is_abstract: true }
        );
        assert_eq!(uch.resolve_upwards(&c, "zz", "()V"), Resolution::NotFound);
    }

    #[test]
    fn phantom_terminates_resolution() {
        let p = part("g:a:1", vec![("S", class(Some("javax/servlet/GenericServlet"), &[], false, &[]))]);
        let uch = build_uch([&p]).unwrap();
        assert!(uch.is_phantom(&cn("javax/servlet/GenericServlet")));
        assert_eq!(uch.resolve_upwards(&cn("S"), "init", "()V"), Resolution::PhantomBoundary);
        assert_eq!(uch.resolve_upwards(&cn("Nope"), "x", "()V"), Resolution::PhantomBoundary);
    }

    #[test]
    fn cycles_are_rejected() {
        let p = part(
            "g:a:1",
            vec![
                ("A", class(Some("B"), &[], false, &[])),
                ("B", class(Some("A"), &[], false, &[])),
            ],
        );
        match build_uch([&p]) {
            Err(HierarchyError::HierarchyCycle(c)) => {
                assert_eq!(c.first(), c.last());
                assert_eq!(c.len(), 3);
            }
            other => panic!("{other:?}"),
        }
        let p = part("g:a:1", vec![("I", class(None, &["I"], true, &[]))]);
        assert!(build_uch([&p]).is_err());
    }
}
