//! Per-package partial call graphs: the unit stored in the pool.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classfile::{CallSite, ClassSummary};
use crate::model::{CallKind, ClassName, Edge, GlobalMethodId, MavenCoordinate, MethodRef};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartialError {
    #[error("class {class} is defined twice in {coordinate}")]
    DuplicateClassInPackage {
        coordinate: MavenCoordinate,
        class: ClassName,
    },
    #[error(transparent)]
    Hierarchy(#[from] crate::hierarchy::HierarchyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("unsupported partial call graph format version {found} (expected {FORMAT_VERSION})")]
    VersionMismatch { found: u64 },
    #[error("corrupt partial call graph: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodRecord {
    pub name: String,
    pub descriptor: String,
    pub is_static: bool,
    pub is_abstract: bool,
    pub is_private: bool,
    pub is_final: bool,
}

/// Hierarchy facts for one class, including its method table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassRecord {
    pub super_name: Option<ClassName>,
    /// Declaration order; resolution searches interfaces in this order.
    pub interfaces: Vec<ClassName>,
    pub is_interface: bool,
    pub is_abstract: bool,
    pub is_final: bool,
    /// Sorted by `name` + `descriptor` text.
    pub methods: Vec<MethodRecord>,
}

fn method_key(name: &str, descriptor: &str) -> String {
    format!("{name}{descriptor}")
}

impl ClassRecord {
    pub fn from_summary(summary: &ClassSummary) -> Self {
        let mut methods: Vec<MethodRecord> = summary
            .methods
            .iter()
            .map(|m| MethodRecord {
                name: m.name.clone(),
                descriptor: m.descriptor.clone(),
                is_static: m.is_static,
                is_abstract: m.is_abstract,
                is_private: m.is_private,
                is_final: m.is_final,
            })
            .collect();
        methods.sort_by_cached_key(|m| method_key(&m.name, &m.descriptor));
        ClassRecord {
            super_name: summary.super_name.clone(),
            interfaces: summary.interfaces.clone(),
            is_interface: summary.is_interface,
            is_abstract: summary.is_abstract,
            is_final: summary.is_final,
            methods,
        }
    }

    pub fn method(&self, name: &str, descriptor: &str) -> Option<&MethodRecord> {
        self.methods
            .iter()
            .find(|m| m.name == name && m.descriptor == descriptor)
    }

    /// Direct supertypes: superclass first, then interfaces in declaration order.
    pub fn supertypes(&self) -> impl Iterator<Item = &ClassName> {
        self.super_name.iter().chain(self.interfaces.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialCallSite {
    pub caller: MethodRef,
    pub site: CallSite,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialCG {
    pub coordinate: MavenCoordinate,
    pub classes: BTreeMap<ClassName, ClassRecord>,
    /// Every call site of the package, sorted by (caller text, pc).
    pub call_sites: Vec<PartialCallSite>,
    /// Edges resolvable inside the package alone; sorted.
    pub internal_edges: Vec<Edge>,
    pub format_version: u32,
}

/// Builds a package's partial call graph from its parsed classes.
pub fn build_partial_cg(
    coordinate: MavenCoordinate,
    classes: &[ClassSummary],
) -> Result<PartialCG, PartialError> {
    let mut records = BTreeMap::new();
    let mut call_sites = Vec::new();
    for summary in classes {
        if records
            .insert(summary.name.clone(), ClassRecord::from_summary(summary))
            .is_some()
        {
            return Err(PartialError::DuplicateClassInPackage {
                coordinate,
                class: summary.name.clone(),
            });
        }
        for m in &summary.methods {
            let caller = MethodRef {
                owner: summary.name.clone(),
                name: m.name.clone(),
                descriptor: m.descriptor.clone(),
            };
            call_sites.extend(m.call_sites.iter().map(|site| PartialCallSite {
                caller: caller.clone(),
                site: site.clone(),
            }));
        }
    }
    sort_call_sites(&mut call_sites);
    let mut pcg = PartialCG {
        coordinate,
        classes: records,
        call_sites,
        internal_edges: Vec::new(),
        format_version: FORMAT_VERSION,
    };
    pcg.internal_edges = crate::stitch::package_local_edges(&pcg)?;
    Ok(pcg)
}

fn sort_call_sites(sites: &mut [PartialCallSite]) {
    sites.sort_by_cached_key(|s| (s.caller.to_string(), s.site.pc));
}

impl PartialCG {
    pub fn method_count(&self) -> usize {
        self.classes.values().map(|c| c.methods.len()).sum()
    }

    /// Checks the structural invariants a deserialized entry must satisfy.
    pub fn validate(&self) -> Result<(), FormatError> {
        let corrupt = |m: String| Err(FormatError::Corrupt(m));
        for site in &self.call_sites {
            let c = &site.caller;
            match self.classes.get(&c.owner).and_then(|r| r.method(&c.name, &c.descriptor)) {
                None => return corrupt(format!("call site caller {c} is not defined")),
                Some(m) if m.is_abstract => {
                    return corrupt(format!("call site caller {c} is abstract"))
                }
                _ => {}
            }
            if (site.site.kind == CallKind::Dynamic) != site.site.declared_target.is_none() {
                return corrupt(format!("call site {c}@{} has an inconsistent target", site.site.pc));
            }
        }
        for e in &self.internal_edges {
            if e.kind == CallKind::Dynamic {
                return corrupt("dynamic internal edge".into());
            }
            for end in [&e.source, &e.target] {
                if end.coordinate() != Some(&self.coordinate) || !self.classes.contains_key(&end.owner)
                {
                    return corrupt(format!("internal edge endpoint {end} is outside the package"));
                }
            }
        }
        let mut seen = HashSet::new();
        for c in self.classes.values() {
            seen.clear();
            for m in &c.methods {
                if !seen.insert((&m.name, &m.descriptor)) {
                    return corrupt(format!("duplicate method {}{}", m.name, m.descriptor));
                }
            }
        }
        Ok(())
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(&wire::Document::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<PartialCG, FormatError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| FormatError::Corrupt(e.to_string()))?;
        match value.get("formatVersion").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(found) => return Err(FormatError::VersionMismatch { found }),
            None => return Err(FormatError::Corrupt("missing formatVersion".into())),
        }
        let doc: wire::Document =
            serde_json::from_value(value).map_err(|e| FormatError::Corrupt(e.to_string()))?;
        let pcg = doc.into_partial()?;
        pcg.validate()?;
        Ok(pcg)
    }
}

/// JSON shapes. Struct fields are declared in sorted key order so the
/// serializer emits canonical output directly.
mod wire {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Method {
        pub descriptor: String,
        pub name: String,
        pub owner: ClassName,
    }

    impl From<&MethodRef> for Method {
        fn from(m: &MethodRef) -> Self {
            Method {
                descriptor: m.descriptor.clone(),
                name: m.name.clone(),
                owner: m.owner.clone(),
            }
        }
    }

    impl Method {
        fn into_ref(self) -> Result<MethodRef, FormatError> {
            MethodRef::new(self.owner, self.name, self.descriptor)
                .map_err(|e| FormatError::Corrupt(e.to_string()))
        }
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct MethodFlags {
        #[serde(rename = "abstract")]
        pub is_abstract: bool,
        #[serde(rename = "final")]
        pub is_final: bool,
        #[serde(rename = "private")]
        pub is_private: bool,
        #[serde(rename = "static")]
        pub is_static: bool,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct MethodEntry {
        pub descriptor: String,
        pub flags: MethodFlags,
        pub name: String,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct ClassFlags {
        #[serde(rename = "abstract")]
        pub is_abstract: bool,
        #[serde(rename = "final")]
        pub is_final: bool,
        #[serde(rename = "interface")]
        pub is_interface: bool,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Class {
        pub flags: ClassFlags,
        pub interfaces: Vec<ClassName>,
        pub methods: Vec<MethodEntry>,
        #[serde(rename = "super")]
        pub super_name: Option<ClassName>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Site {
        pub caller: Method,
        pub kind: CallKind,
        pub pc: u32,
        pub target: Option<Method>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct InternalEdge {
        pub kind: CallKind,
        pub pc: u32,
        pub source: Method,
        pub target: Method,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields, rename_all = "camelCase")]
    pub struct Document {
        pub call_sites: Vec<Site>,
        pub classes: BTreeMap<ClassName, Class>,
        pub coordinate: MavenCoordinate,
        pub format_version: u32,
        pub internal_edges: Vec<InternalEdge>,
    }

    impl From<&PartialCG> for Document {
        fn from(p: &PartialCG) -> Self {
            Document {
                call_sites: p
                    .call_sites
                    .iter()
                    .map(|s| Site {
                        caller: (&s.caller).into(),
                        kind: s.site.kind,
                        pc: s.site.pc,
                        target: s.site.declared_target.as_ref().map(Method::from),
                    })
                    .collect(),
                classes: p
                    .classes
                    .iter()
                    .map(|(name, c)| {
                        let class = Class {
                            flags: ClassFlags {
                                is_abstract: c.is_abstract,
                                is_final: c.is_final,
                                is_interface: c.is_interface,
                            },
                            interfaces: c.interfaces.clone(),
                            methods: c
                                .methods
                                .iter()
                                .map(|m| MethodEntry {
                                    descriptor: m.descriptor.clone(),
                                    flags: MethodFlags {
                                        is_abstract: m.is_abstract,
                                        is_final: m.is_final,
                                        is_private: m.is_private,
                                        is_static: m.is_static,
                                    },
                                    name: m.name.clone(),
                                })
                                .collect(),
                            super_name: c.super_name.clone(),
                        };
                        (name.clone(), class)
                    })
                    .collect(),
                coordinate: p.coordinate.clone(),
                format_version: p.format_version,
                internal_edges: p
                    .internal_edges
                    .iter()
                    .map(|e| InternalEdge {
                        kind: e.kind,
                        pc: e.site_pc,
                        source: (&e.source.method_ref()).into(),
                        target: (&e.target.method_ref()).into(),
                    })
                    .collect(),
            }
        }
    }

    impl Document {
        pub fn into_partial(self) -> Result<PartialCG, FormatError> {
            let coordinate = self.coordinate;
            let mut classes = BTreeMap::new();
            for (name, c) in self.classes {
                let mut methods = Vec::with_capacity(c.methods.len());
                for m in c.methods {
                    // validates name and descriptor
                    MethodRef::new(name.clone(), m.name.as_str(), m.descriptor.as_str())
                        .map_err(|e| FormatError::Corrupt(e.to_string()))?;
                    methods.push(MethodRecord {
                        name: m.name,
                        descriptor: m.descriptor,
                        is_static: m.flags.is_static,
                        is_abstract: m.flags.is_abstract,
                        is_private: m.flags.is_private,
                        is_final: m.flags.is_final,
                    });
                }
                methods.sort_by_cached_key(|m| method_key(&m.name, &m.descriptor));
                classes.insert(
                    name,
                    ClassRecord {
                        super_name: c.super_name,
                        interfaces: c.interfaces,
                        is_interface: c.flags.is_interface,
                        is_abstract: c.flags.is_abstract,
                        is_final: c.flags.is_final,
                        methods,
                    },
                );
            }
            let mut call_sites = Vec::with_capacity(self.call_sites.len());
            for s in self.call_sites {
                call_sites.push(PartialCallSite {
                    caller: s.caller.into_ref()?,
                    site: CallSite {
                        pc: s.pc,
                        kind: s.kind,
                        declared_target: s.target.map(Method::into_ref).transpose()?,
                    },
                });
            }
            sort_call_sites(&mut call_sites);
            let mut internal_edges = Vec::with_capacity(self.internal_edges.len());
            for e in self.internal_edges {
                internal_edges.push(Edge {
                    source: GlobalMethodId::new(&coordinate, &e.source.into_ref()?),
                    target: GlobalMethodId::new(&coordinate, &e.target.into_ref()?),
                    kind: e.kind,
                    site_pc: e.pc,
                });
            }
            internal_edges.sort();
            Ok(PartialCG {
                coordinate,
                classes,
                call_sites,
                internal_edges,
                format_version: self.format_version,
            })
        }
    }
}
