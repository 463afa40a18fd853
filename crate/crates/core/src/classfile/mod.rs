//! JVM class-file and JAR parsing into hierarchy facts plus invocation sites.

pub mod bytecode;
mod constant_pool;
pub mod jar;
mod reader;

use std::collections::HashSet;

use thiserror::Error;

use crate::model::{CallKind, ClassName, MethodRef, ModelError};
use bytecode::BytecodeError;
use constant_pool::ConstantPool;
use reader::Reader;

pub use jar::{read_jar, read_jar_file, EntryDiagnostic, EntryProblem, JarEntry, JarError, JarListing};

/// Newest class-file major version the parser has been checked against (Java 25).
pub const MAX_TESTED_MAJOR_VERSION: u16 = 69;

const ACC_PRIVATE: u16 = 0x0002;
const ACC_STATIC: u16 = 0x0008;
const ACC_FINAL: u16 = 0x0010;
const ACC_INTERFACE: u16 = 0x0200;
const ACC_ABSTRACT: u16 = 0x0400;
const ACC_MODULE: u16 = 0x8000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassFileError {
    #[error("not a class file (bad magic)")]
    NotAClassFile,
    #[error("class file truncated at offset {offset}")]
    Truncated { offset: usize },
    #[error("malformed constant pool: {0}")]
    MalformedConstantPool(String),
    #[error("malformed class file: {0}")]
    Malformed(String),
    #[error("malformed code in {method}: {source}")]
    MalformedCode {
        method: String,
        #[source]
        source: BytecodeError,
    },
    #[error("duplicate method {name}{descriptor} in {class}")]
    DuplicateMethod {
        class: String,
        name: String,
        descriptor: String,
    },
}

impl From<ModelError> for ClassFileError {
    fn from(e: ModelError) -> Self {
        ClassFileError::Malformed(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CallSite {
    pub pc: u32,
    pub kind: CallKind,
    /// Absent only for `invokedynamic`.
    pub declared_target: Option<MethodRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSummary {
    pub name: String,
    pub descriptor: String,
    pub is_static: bool,
    pub is_abstract: bool,
    pub is_private: bool,
    pub is_final: bool,
    pub call_sites: Vec<CallSite>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSummary {
    pub name: ClassName,
    pub super_name: Option<ClassName>,
    pub interfaces: Vec<ClassName>,
    pub is_interface: bool,
    pub is_abstract: bool,
    pub is_final: bool,
    pub methods: Vec<MethodSummary>,
    pub major_version: u16,
}

impl ClassSummary {
    pub fn is_newer_than_tested(&self) -> bool {
        self.major_version > MAX_TESTED_MAJOR_VERSION
    }

    pub fn method(&self, name: &str, descriptor: &str) -> Option<&MethodSummary> {
        self.methods
            .iter()
            .find(|m| m.name == name && m.descriptor == descriptor)
    }
}

/// Parses one class file.
///
/// Classes newer than [`MAX_TESTED_MAJOR_VERSION`] are parsed best-effort and
/// logged; callers can check [`ClassSummary::is_newer_than_tested`].
pub fn parse_class(bytes: &[u8]) -> Result<ClassSummary, ClassFileError> {
    parse_class_with_code(bytes).map(|(summary, _)| summary)
}

/// Like [`parse_class`], also returning each method's bytecode array
/// (empty for methods without code), index-aligned with `methods`.
pub fn parse_class_with_code(bytes: &[u8]) -> Result<(ClassSummary, Vec<&[u8]>), ClassFileError> {
    let mut r = Reader::new(bytes);
    if bytes.len() < 4 || r.u4()? != 0xCAFE_BABE {
        return Err(ClassFileError::NotAClassFile);
    }
    let _minor = r.u2()?;
    let major = r.u2()?;
    let cp = ConstantPool::parse(&mut r)?;

    let access = r.u2()?;
    let this_class = r.u2()?;
    let name = ClassName::new(cp.class_name(this_class)?)?;
    if major > MAX_TESTED_MAJOR_VERSION {
        log::warn!(
            "{name}: class-file major version {major} is newer than {MAX_TESTED_MAJOR_VERSION}; parsing best-effort"
        );
    }
    let super_index = r.u2()?;
    let super_name = if super_index == 0 {
        if name.as_str() != "java/lang/Object" && access & ACC_MODULE == 0 {
            return Err(ClassFileError::Malformed(format!("{name} has no superclass")));
        }
        None
    } else {
        Some(ClassName::new(cp.class_name(super_index)?)?)
    };
    let interface_count = r.u2()?;
    let mut interfaces = Vec::with_capacity(interface_count as usize);
    for _ in 0..interface_count {
        interfaces.push(ClassName::new(cp.class_name(r.u2()?)?)?);
    }

    let field_count = r.u2()?;
    for _ in 0..field_count {
        r.skip(6)?;
        skip_attributes(&mut r)?;
    }

    let method_count = r.u2()?;
    let mut methods = Vec::with_capacity(method_count as usize);
    let mut codes = Vec::with_capacity(method_count as usize);
    let mut seen = HashSet::new();
    for _ in 0..method_count {
        let (method, code) = parse_method(&mut r, &cp, &name)?;
        codes.push(code);
        if !seen.insert((method.name.clone(), method.descriptor.clone())) {
            return Err(ClassFileError::DuplicateMethod {
                class: name.to_string(),
                name: method.name,
                descriptor: method.descriptor,
            });
        }
        methods.push(method);
    }
    skip_attributes(&mut r)?;

    let is_interface = access & ACC_INTERFACE != 0;
    let summary = ClassSummary {
        name,
        super_name,
        interfaces,
        is_interface,
        is_abstract: is_interface || access & ACC_ABSTRACT != 0,
        is_final: access & ACC_FINAL != 0,
        methods,
        major_version: major,
    };
    Ok((summary, codes))
}

fn skip_attributes(r: &mut Reader<'_>) -> Result<(), ClassFileError> {
    let count = r.u2()?;
    for _ in 0..count {
        r.skip(2)?;
        let len = r.u4()? as usize;
        r.skip(len)?;
    }
    Ok(())
}

fn parse_method<'a>(
    r: &mut Reader<'a>,
    cp: &ConstantPool,
    class: &ClassName,
) -> Result<(MethodSummary, &'a [u8]), ClassFileError> {
    let access = r.u2()?;
    let name = cp.utf8(r.u2()?)?.to_string();
    let descriptor = cp.utf8(r.u2()?)?.to_string();
    // validates name and descriptor
    MethodRef::new(class.clone(), name.as_str(), descriptor.as_str())?;
    let is_abstract = access & ACC_ABSTRACT != 0;

    let mut call_sites = Vec::new();
    let mut code: &[u8] = &[];
    let mut has_code = false;
    let attr_count = r.u2()?;
    for _ in 0..attr_count {
        let attr_name = cp.utf8(r.u2()?)?;
        let len = r.u4()? as usize;
        let body = r.bytes(len)?;
        if attr_name != "Code" {
            continue;
        }
        if has_code {
            return Err(ClassFileError::Malformed(format!(
                "{class}.{name}{descriptor} has two Code attributes"
            )));
        }
        if is_abstract {
            return Err(ClassFileError::Malformed(format!(
                "abstract method {class}.{name}{descriptor} has a Code attribute"
            )));
        }
        has_code = true;
        (code, call_sites) = parse_code(body, cp, || format!("{class}.{name}{descriptor}"))?;
    }

    let summary = MethodSummary {
        name,
        descriptor,
        is_static: access & ACC_STATIC != 0,
        is_abstract,
        is_private: access & ACC_PRIVATE != 0,
        is_final: access & ACC_FINAL != 0,
        call_sites,
    };
    Ok((summary, code))
}

fn parse_code<'a>(
    attribute: &'a [u8],
    cp: &ConstantPool,
    method: impl Fn() -> String,
) -> Result<(&'a [u8], Vec<CallSite>), ClassFileError> {
    let mut r = Reader::new(attribute);
    r.skip(4)?; // max_stack, max_locals
    let code_len = r.u4()? as usize;
    let code = r.bytes(code_len)?;
    let handlers = r.u2()? as usize;
    r.skip(handlers * 8)?;
    skip_attributes(&mut r)?;
    if r.position() != attribute.len() {
        return Err(ClassFileError::Malformed(format!(
            "Code attribute of {} has trailing bytes",
            method()
        )));
    }

    let mut sites = Vec::new();
    for ins in bytecode::instructions(code) {
        let (pc, opcode) = ins.map_err(|source| ClassFileError::MalformedCode {
            method: method(),
            source,
        })?;
        let Some(kind) = CallKind::from_opcode(opcode) else {
            continue;
        };
        let index = u16::from_be_bytes([code[pc + 1], code[pc + 2]]);
        let declared_target = match kind {
            CallKind::Dynamic => {
                cp.expect_invoke_dynamic(index)?;
                None
            }
            _ => {
                let allowed: &[&str] = match kind {
                    CallKind::Virtual => &["Methodref"],
                    CallKind::Interface => &["InterfaceMethodref"],
                    _ => &["Methodref", "InterfaceMethodref"],
                };
                let (owner, name, descriptor) = cp.method_ref(index, allowed)?;
                Some(MethodRef::new(ClassName::new(owner)?, name, descriptor)?)
            }
        };
        sites.push(CallSite {
            pc: pc as u32,
            kind,
            declared_target,
        });
    }
    Ok((code, sites))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Minimal hand-assembled class: `class T extends java/lang/Object` with
    /// one static method `m()V` whose code is `invokestatic T.m()V; return`.
    fn tiny_class(major: u16) -> Vec<u8> {
        let mut b = vec![0xca, 0xfe, 0xba, 0xbe, 0, 0];
        b.extend_from_slice(&major.to_be_bytes());
        let utf8 = |s: &str| {
            let mut v = vec![1];
            v.extend_from_slice(&(s.len() as u16).to_be_bytes());
            v.extend_from_slice(s.as_bytes());
            v
        };
        // #1 Utf8 T, #2 Class #1, #3 Utf8 Object, #4 Class #3, #5 m, #6 ()V,
        // #7 NAT #5 #6, #8 Methodref #2 #7, #9 Code
        b.extend_from_slice(&10u16.to_be_bytes());
        b.extend(utf8("T"));
        b.extend([7, 0, 1]);
        b.extend(utf8("java/lang/Object"));
        b.extend([7, 0, 3]);
        b.extend(utf8("m"));
        b.extend(utf8("()V"));
        b.extend([12, 0, 5, 0, 6]);
        b.extend([10, 0, 2, 0, 7]);
        b.extend(utf8("Code"));
        b.extend([0, 0x21, 0, 2, 0, 4, 0, 0, 0, 0]); // flags, this, super, no ifaces/fields
        b.extend([0, 1, 0, 9, 0, 5, 0, 6, 0, 1]); // 1 method, static, m, ()V, 1 attr
        let code = [0xb8, 0, 8, 0xb1];
        b.extend([0, 9]);
        b.extend(&(12u32 + code.len() as u32).to_be_bytes());
        b.extend([0, 0, 0, 0]);
        b.extend(&(code.len() as u32).to_be_bytes());
        b.extend(code);
        b.extend([0, 0, 0, 0]);
        b.extend([0, 0]); // class attributes
        b
    }

    #[test]
    fn parses_tiny_class() {
        let c = parse_class(&tiny_class(52)).unwrap();
        assert_eq!(c.name.as_str(), "T");
        assert_eq!(c.super_name.as_ref().unwrap().as_str(), "java/lang/Object");
        let m = c.method("m", "()V").unwrap();
        assert!(m.is_static);
        assert_eq!(m.call_sites.len(), 1);
        assert_eq!(m.call_sites[0].pc, 0);
        assert_eq!(m.call_sites[0].kind, CallKind::Static);
        assert_eq!(m.call_sites[0].declared_target.as_ref().unwrap().name, "m");
        assert!(!c.is_newer_than_tested());
    }

    #[test]
    fn future_version_is_parsed() {
        let c = parse_class(&tiny_class(99)).unwrap();
        assert!(c.is_newer_than_tested());
    }

    #[test]
    fn bad_magic() {
        assert_eq!(parse_class(&[0, 0, 0, 0, 0, 0]), Err(ClassFileError::NotAClassFile));
        assert_eq!(parse_class(&[]), Err(ClassFileError::NotAClassFile));
    }

    #[test]
    fn every_truncation_is_an_error() {
        let full = tiny_class(52);
        for len in 4..full.len() {
            let err = parse_class(&full[..len]).unwrap_err();
            assert!(
                matches!(err, ClassFileError::Truncated { .. } | ClassFileError::Malformed(_)),
                "len {len}: {err:?}"
            );
        }
    }

    #[test]
    fn invokevirtual_on_interface_methodref_is_rejected() {
        let mut b = tiny_class(52);
        let pos = b.windows(5).position(|w| w == [10, 0, 2, 0, 7]).unwrap();
        b[pos] = 11;
        // invokestatic accepts an InterfaceMethodref
        assert!(parse_class(&b).is_ok());
        let op = b.windows(4).position(|w| w == [0xb8, 0, 8, 0xb1]).unwrap();
        b[op] = 0xb6;
        assert!(matches!(parse_class(&b), Err(ClassFileError::MalformedConstantPool(_))));
    }
}
