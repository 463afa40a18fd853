//! Identifiers and graph vocabulary shared by every other module.
//!
//! All types here are immutable values. Their canonical text forms are the
//! wire representation used by the pool and call-graph JSON documents.

use std::cmp::Ordering;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("malformed coordinate `{0}`: expected groupId:artifactId:version")]
    MalformedCoordinate(String),
    #[error("invalid class name `{0}`")]
    InvalidClassName(String),
    #[error("invalid method name `{0}`")]
    InvalidMethodName(String),
    #[error("invalid method descriptor `{0}`")]
    InvalidDescriptor(String),
    #[error("malformed method id `{0}`")]
    MalformedMethodId(String),
    #[error("unknown call kind `{0}`")]
    UnknownCallKind(String),
}

/// Unique package identity `groupId:artifactId:version`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MavenCoordinate {
    group_id: String,
    artifact_id: String,
    version: String,
}

fn valid_coordinate_part(part: &str) -> bool {
    // `!` separates the coordinate from the method in GlobalMethodId text;
    // path separators and dot segments would escape the repository layout
    !part.is_empty()
        && part != "."
        && part != ".."
        && !part
            .chars()
            .any(|c| matches!(c, ':' | '!' | '/' | '\\') || c.is_whitespace())
}

impl MavenCoordinate {
    pub fn new(
        group_id: impl Into<String>,
        artifact_id: impl Into<String>,
        version: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let coordinate = MavenCoordinate {
            group_id: group_id.into(),
            artifact_id: artifact_id.into(),
            version: version.into(),
        };
        if [&coordinate.group_id, &coordinate.artifact_id, &coordinate.version]
            .iter()
            .all(|p| valid_coordinate_part(p))
            && coordinate.group_id.split('.').all(|s| !s.is_empty())
        {
            Ok(coordinate)
        } else {
            Err(ModelError::MalformedCoordinate(coordinate.to_string()))
        }
    }

    pub fn group_id(&self) -> &str {
        &self.group_id
    }

    pub fn artifact_id(&self) -> &str {
        &self.artifact_id
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// The `(groupId, artifactId)` pair that version mediation keys on.
    pub fn package_key(&self) -> (&str, &str) {
        (&self.group_id, &self.artifact_id)
    }

    /// Relative directory in the Maven repository layout:
    /// `<groupId with '.' as '/'>/<artifactId>/<version>`.
    pub fn repository_dir(&self) -> PathBuf {
        let mut path: PathBuf = self.group_id.split('.').collect();
        path.push(&self.artifact_id);
        path.push(&self.version);
        path
    }

    /// Relative path of the artifact JAR in the Maven repository layout.
    pub fn jar_path(&self) -> PathBuf {
        self.repository_dir()
            .join(format!("{}-{}.jar", self.artifact_id, self.version))
    }
}

/// Strict parser: exactly three non-empty `:`-separated parts.
pub fn parse_coordinate(text: &str) -> Result<MavenCoordinate, ModelError> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [g, a, v] => MavenCoordinate::new(*g, *a, *v)
            .map_err(|_| ModelError::MalformedCoordinate(text.to_string())),
        _ => Err(ModelError::MalformedCoordinate(text.to_string())),
    }
}

impl FromStr for MavenCoordinate {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_coordinate(s)
    }
}

impl fmt::Display for MavenCoordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.group_id, self.artifact_id, self.version)
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let text = String::deserialize(deserializer)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(MavenCoordinate);

/// JVM internal binary class name, e.g. `org/example/Foo`.
///
/// Array types appear as method owners (`[Ljava/lang/Object;.clone()`), so
/// array descriptors are accepted as names too.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassName(String);

impl ClassName {
    pub fn new(name: impl Into<String>) -> Result<Self, ModelError> {
        let name = name.into();
        if name.is_empty() || name.contains('.') || name.starts_with('/') || name.ends_with('/') {
            return Err(ModelError::InvalidClassName(name));
        }
        Ok(ClassName(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_array(&self) -> bool {
        self.0.starts_with('[')
    }
}

impl FromStr for ClassName {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClassName::new(s)
    }
}

impl fmt::Display for ClassName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for ClassName {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

string_serde!(ClassName);

pub fn is_valid_method_name(name: &str) -> bool {
    if name == "<init>" || name == "<clinit>" {
        return true;
    }
    !name.is_empty() && !name.chars().any(|c| matches!(c, '.' | ';' | '[' | '/' | '<' | '>'))
}

/// Checks `( ParamType* ) ReturnType` against the JVM descriptor grammar.
pub fn is_valid_method_descriptor(descriptor: &str) -> bool {
    let bytes = descriptor.as_bytes();
    if bytes.first() != Some(&b'(') {
        return false;
    }
    let mut i = 1;
    while i < bytes.len() && bytes[i] != b')' {
        match field_type_len(&bytes[i..]) {
            Some(len) => i += len,
            None => return false,
        }
    }
    if i >= bytes.len() {
        return false;
    }
    let ret = &bytes[i + 1..];
    ret == b"V" || field_type_len(ret) == Some(ret.len())
}

fn field_type_len(bytes: &[u8]) -> Option<usize> {
    match bytes.first()? {
        b'B' | b'C' | b'D' | b'F' | b'I' | b'J' | b'S' | b'Z' => Some(1),
        b'L' => {
            let end = bytes.iter().position(|&b| b == b';')?;
            let name = &bytes[1..end];
            if name.is_empty() || name.iter().any(|&b| matches!(b, b'.' | b'[' | b'(' | b')')) {
                None
            } else {
                Some(end + 1)
            }
        }
        b'[' => field_type_len(&bytes[1..]).map(|n| n + 1),
        _ => None,
    }
}

/// A method as named at a call site (owner plus signature), without a
/// package. Used for declared call targets and package-local identities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MethodRef {
    pub owner: ClassName,
    pub name: String,
    pub descriptor: String,
}

impl MethodRef {
    pub fn new(
        owner: ClassName,
        name: impl Into<String>,
        descriptor: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        let descriptor = descriptor.into();
        if !is_valid_method_name(&name) {
            return Err(ModelError::InvalidMethodName(name));
        }
        if !is_valid_method_descriptor(&descriptor) {
            return Err(ModelError::InvalidDescriptor(descriptor));
        }
        Ok(MethodRef {
            owner,
            name,
            descriptor,
        })
    }
}

impl fmt::Display for MethodRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}{}", self.owner, self.name, self.descriptor)
    }
}

/// The five JVM invocation instructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CallKind {
    Static,
    Virtual,
    Interface,
    Special,
    Dynamic,
}

impl CallKind {
    pub const ALL: [CallKind; 5] = [
        CallKind::Static,
        CallKind::Virtual,
        CallKind::Interface,
        CallKind::Special,
        CallKind::Dynamic,
    ];

    pub fn opcode(self) -> u8 {
        match self {
            CallKind::Static => 0xB8,
            CallKind::Virtual => 0xB6,
            CallKind::Interface => 0xB9,
            CallKind::Special => 0xB7,
            CallKind::Dynamic => 0xBA,
        }
    }

    pub fn from_opcode(opcode: u8) -> Option<CallKind> {
        match opcode {
            0xB8 => Some(CallKind::Static),
            0xB6 => Some(CallKind::Virtual),
            0xB9 => Some(CallKind::Interface),
            0xB7 => Some(CallKind::Special),
            0xBA => Some(CallKind::Dynamic),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CallKind::Static => "STATIC",
            CallKind::Virtual => "VIRTUAL",
            CallKind::Interface => "INTERFACE",
            CallKind::Special => "SPECIAL",
            CallKind::Dynamic => "DYNAMIC",
        }
    }
}

impl FromStr for CallKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CallKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ModelError::UnknownCallKind(s.to_string()))
    }
}

impl fmt::Display for CallKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

string_serde!(CallKind);

/// Where a call-graph node lives: a real package, or the phantom sentinel for
/// methods on classes outside the dependency set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MethodOrigin {
    Package(MavenCoordinate),
    Phantom,
}

const PHANTOM_PREFIX: &str = "!phantom!";

/// Node identity in a stitched call graph.
///
/// Canonical text: `g:a:v!owner.name(desc)ret`, or `!phantom!owner.name(desc)ret`.
/// Ordering is lexicographic over that text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlobalMethodId {
    pub origin: MethodOrigin,
    pub owner: ClassName,
    pub name: String,
    pub descriptor: String,
}

impl GlobalMethodId {
    pub fn new(coordinate: &MavenCoordinate, method: &MethodRef) -> Self {
        GlobalMethodId {
            origin: MethodOrigin::Package(coordinate.clone()),
            owner: method.owner.clone(),
            name: method.name.clone(),
            descriptor: method.descriptor.clone(),
        }
    }

    pub fn phantom(method: &MethodRef) -> Self {
        GlobalMethodId {
            origin: MethodOrigin::Phantom,
            owner: method.owner.clone(),
            name: method.name.clone(),
            descriptor: method.descriptor.clone(),
        }
    }

    pub fn is_phantom(&self) -> bool {
        self.origin == MethodOrigin::Phantom
    }

    pub fn coordinate(&self) -> Option<&MavenCoordinate> {
        match &self.origin {
            MethodOrigin::Package(c) => Some(c),
            MethodOrigin::Phantom => None,
        }
    }

    pub fn method_ref(&self) -> MethodRef {
        MethodRef {
            owner: self.owner.clone(),
            name: self.name.clone(),
            descriptor: self.descriptor.clone(),
        }
    }

    fn canonical_parts(&self) -> [&[u8]; 10] {
        let tail: [&[u8]; 4] = [
            self.owner.as_str().as_bytes(),
            b".",
            self.name.as_bytes(),
            self.descriptor.as_bytes(),
        ];
        match &self.origin {
            MethodOrigin::Package(c) => [
                c.group_id.as_bytes(),
                b":",
                c.artifact_id.as_bytes(),
                b":",
                c.version.as_bytes(),
                b"!",
                tail[0],
                tail[1],
                tail[2],
                tail[3],
            ],
            MethodOrigin::Phantom => [
                PHANTOM_PREFIX.as_bytes(),
                b"",
                b"",
                b"",
                b"",
                b"",
                tail[0],
                tail[1],
                tail[2],
                tail[3],
            ],
        }
    }
}

impl Ord for GlobalMethodId {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_concatenated(&self.canonical_parts(), &other.canonical_parts())
    }
}

/// Orders two byte strings given as lists of pieces, without joining them.
fn compare_concatenated(lhs: &[&[u8]], rhs: &[&[u8]]) -> Ordering {
    let (mut li, mut ri) = (lhs.iter().copied(), rhs.iter().copied());
    let (mut l, mut r): (&[u8], &[u8]) = (&[], &[]);
    loop {
        while l.is_empty() {
            match li.next() {
                Some(next) => l = next,
                None => break,
            }
        }
        while r.is_empty() {
            match ri.next() {
                Some(next) => r = next,
                None => break,
            }
        }
        if l.is_empty() || r.is_empty() {
            return l.is_empty().cmp(&r.is_empty()).reverse();
        }
        let n = l.len().min(r.len());
        match l[..n].cmp(&r[..n]) {
            Ordering::Equal => {
                l = &l[n..];
                r = &r[n..];
            }
            unequal => return unequal,
        }
    }
}

impl PartialOrd for GlobalMethodId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GlobalMethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.origin {
            MethodOrigin::Package(c) => write!(f, "{c}!")?,
            MethodOrigin::Phantom => f.write_str(PHANTOM_PREFIX)?,
        }
        write!(f, "{}.{}{}", self.owner, self.name, self.descriptor)
    }
}

impl FromStr for GlobalMethodId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || ModelError::MalformedMethodId(s.to_string());
        let (origin, rest) = match s.strip_prefix(PHANTOM_PREFIX) {
            Some(rest) => (MethodOrigin::Phantom, rest),
            None => {
                let (coordinate, rest) = s.split_once('!').ok_or_else(malformed)?;
                let coordinate = parse_coordinate(coordinate).map_err(|_| malformed())?;
                (MethodOrigin::Package(coordinate), rest)
            }
        };
        let paren = rest.find('(').ok_or_else(malformed)?;
        let (qualified, descriptor) = rest.split_at(paren);
        let (owner, name) = qualified.rsplit_once('.').ok_or_else(malformed)?;
        let method = MethodRef::new(ClassName::new(owner)?, name, descriptor)?;
        Ok(GlobalMethodId {
            origin,
            owner: method.owner,
            name: method.name,
            descriptor: method.descriptor,
        })
    }
}

string_serde!(GlobalMethodId);

/// A resolved call edge. Dynamic call sites never produce edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: GlobalMethodId,
    pub target: GlobalMethodId,
    pub kind: CallKind,
    pub site_pc: u32,
}

impl Ord for Edge {
    fn cmp(&self, other: &Self) -> Ordering {
        self.source
            .cmp(&other.source)
            .then(self.site_pc.cmp(&other.site_pc))
            .then_with(|| self.target.cmp(&other.target))
            .then(self.kind.cmp(&other.kind))
    }
}

impl PartialOrd for Edge {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_three_part_coordinates() {
        let c = parse_coordinate("log4j:log4j:1.2.17").unwrap();
        assert_eq!(
            (c.group_id(), c.artifact_id(), c.version()),
            ("log4j", "log4j", "1.2.17")
        );
        let c = parse_coordinate("a:b:c").unwrap();
        assert_eq!(c.to_string(), "a:b:c");
    }

    #[test]
    fn rejects_malformed_coordinates() {
        for bad in [
            "a:b",
            "log4j:log4j:jar:1.2.17",
            "a::c",
            ":b:c",
            "a:b:",
            "a b:c:d",
            "",
            "a:..:1",
            "a/b:c:1",
            "a..b:c:1",
            ".a:c:1",
            "a:b:1\\x",
        ] {
            assert!(
                matches!(parse_coordinate(bad), Err(ModelError::MalformedCoordinate(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn repository_paths_follow_maven_layout() {
        let c = parse_coordinate("com.x:lib:1.0").unwrap();
        assert_eq!(c.jar_path(), PathBuf::from("com/x/lib/1.0/lib-1.0.jar"));
    }

    #[test]
    fn call_kind_opcodes_are_bijective() {
        let opcodes: Vec<u8> = CallKind::ALL.iter().map(|k| k.opcode()).collect();
        assert_eq!(opcodes, vec![0xB8, 0xB6, 0xB9, 0xB7, 0xBA]);
        for kind in CallKind::ALL {
            assert_eq!(CallKind::from_opcode(kind.opcode()), Some(kind));
            assert_eq!(kind.as_str().parse::<CallKind>().unwrap(), kind);
        }
        for op in (0u8..=255).filter(|op| !(0xB6..=0xBA).contains(op)) {
            assert_eq!(CallKind::from_opcode(op), None);
        }
    }

    #[test]
    fn descriptor_grammar() {
        for ok in ["()V", "(I)V", "(IJ[[Ljava/lang/String;)Ljava/lang/Object;", "([I)[D"] {
            assert!(is_valid_method_descriptor(ok), "{ok}");
        }
        for bad in ["", "V", "(I", "(I)", "(X)V", "(L;)V", "()VV", "(I)[V", "(Ljava/lang/String)V"]
        {
            assert!(!is_valid_method_descriptor(bad), "{bad}");
        }
    }

    #[test]
    fn method_names() {
        assert!(is_valid_method_name("<init>"));
        assert!(is_valid_method_name("<clinit>"));
        assert!(is_valid_method_name("lambda$main$0"));
        assert!(!is_valid_method_name("<foo>"));
        assert!(!is_valid_method_name("a.b"));
        assert!(!is_valid_method_name(""));
    }

    #[test]
    fn class_names() {
        assert!(ClassName::new("org/example/Foo").is_ok());
        assert!(ClassName::new("[Ljava/lang/Object;").is_ok());
        for bad in ["", "org.example.Foo", "/Foo", "Foo/"] {
            assert!(ClassName::new(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn method_id_text_forms() {
        let lib = parse_coordinate("lib:lib:1").unwrap();
        let m = MethodRef::new(ClassName::new("lib/Util").unwrap(), "max", "(II)I").unwrap();
        let id = GlobalMethodId::new(&lib, &m);
        assert_eq!(id.to_string(), "lib:lib:1!lib/Util.max(II)I");
        assert_eq!(id.to_string().parse::<GlobalMethodId>().unwrap(), id);
        let p = GlobalMethodId::phantom(&m);
        assert_eq!(p.to_string(), "!phantom!lib/Util.max(II)I");
        assert_eq!(p.to_string().parse::<GlobalMethodId>().unwrap(), p);
    }

    fn part() -> impl Strategy<Value = String> {
        "[a-zA-Z0-9_-]{1,6}(\\.[a-zA-Z0-9_-]{1,6}){0,2}"
    }

    fn method_id() -> impl Strategy<Value = GlobalMethodId> {
        (
            proptest::option::of((part(), part(), part())),
            "[a-z]{1,3}(/[A-Za-z$0-9]{1,4}){0,2}",
            "[a-z][a-zA-Z0-9$]{0,5}|<init>",
            prop_oneof![Just("()V"), Just("(I)I"), Just("(Ljava/lang/String;J)[I")],
        )
            .prop_map(|(coord, owner, name, desc)| {
                let m = MethodRef::new(ClassName::new(owner).unwrap(), name, desc).unwrap();
                match coord {
                    Some((g, a, v)) => GlobalMethodId::new(&MavenCoordinate::new(g, a, v).unwrap(), &m),
                    None => GlobalMethodId::phantom(&m),
                }
            })
    }

    proptest! {
        #[test]
        fn coordinate_round_trip((g, a, v) in (part(), part(), part())) {
            let c = MavenCoordinate::new(g, a, v).unwrap();
            prop_assert_eq!(parse_coordinate(&c.to_string()).unwrap(), c);
        }

        #[test]
        fn method_id_order_matches_canonical_text(a in method_id(), b in method_id()) {
            prop_assert_eq!(a.cmp(&b), a.to_string().cmp(&b.to_string()));
            prop_assert_eq!(a == b, a.to_string() == b.to_string());
            prop_assert_eq!(a.to_string().parse::<GlobalMethodId>().unwrap(), a);
        }
    }

    proptest! {
        #[test]
        fn piecewise_order_matches_joined(
            a in prop::collection::vec("[a:!.b]{0,3}", 0..4),
            b in prop::collection::vec("[a:!.b]{0,3}", 0..4),
        ) {
            let la: Vec<&[u8]> = a.iter().map(|p| p.as_bytes()).collect();
            let lb: Vec<&[u8]> = b.iter().map(|p| p.as_bytes()).collect();
            prop_assert_eq!(compare_concatenated(&la, &lb), a.concat().cmp(&b.concat()));
        }
    }
}
