//! Minimal ZIP reader driven by the central directory (zip64 aware).

use std::io::Read;
use std::path::Path;

use flate2::read::DeflateDecoder;
use rayon::prelude::*;
use thiserror::Error;

use super::{parse_class, ClassFileError, ClassSummary};

const EOCD_SIG: u32 = 0x0605_4b50;
const ZIP64_LOCATOR_SIG: u32 = 0x0706_4b50;
const ZIP64_EOCD_SIG: u32 = 0x0606_4b50;
const CENTRAL_SIG: u32 = 0x0201_4b50;
const LOCAL_SIG: u32 = 0x0403_4b50;

#[derive(Debug, Error)]
pub enum JarError {
    #[error("not a zip archive: {0}")]
    NotAZip(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Why an archive entry was skipped or flagged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntryProblem {
    /// The entry's bytes could not be extracted.
    Extract(String),
    /// The entry was extracted but is not a parseable class file.
    Parse(ClassFileError),
}

impl std::fmt::Display for EntryProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EntryProblem::Extract(m) => write!(f, "cannot extract: {m}"),
            EntryProblem::Parse(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryDiagnostic {
    pub path: String,
    pub problem: EntryProblem,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JarEntry {
    pub path: String,
    pub summary: ClassSummary,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JarListing {
    /// Parsed classes in central-directory order.
    pub classes: Vec<JarEntry>,
    /// Entries that were skipped. Never fatal.
    pub skipped: Vec<EntryDiagnostic>,
}

impl JarListing {
    pub fn summaries(&self) -> impl Iterator<Item = &ClassSummary> {
        self.classes.iter().map(|e| &e.summary)
    }

    pub fn into_summaries(self) -> Vec<ClassSummary> {
        self.classes.into_iter().map(|e| e.summary).collect()
    }
}

#[derive(Debug, Clone)]
struct CentralEntry {
    path: String,
    flags: u16,
    method: u16,
    crc: u32,
    compressed: u64,
    uncompressed: u64,
    local_offset: u64,
}

fn le16(b: &[u8], at: usize) -> Option<u16> {
    b.get(at..at + 2).map(|s| u16::from_le_bytes([s[0], s[1]]))
}

fn le32(b: &[u8], at: usize) -> Option<u32> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
}

fn le64(b: &[u8], at: usize) -> Option<u64> {
    b.get(at..at + 8).map(|s| {
        let mut a = [0u8; 8];
        a.copy_from_slice(s);
        u64::from_le_bytes(a)
    })
}

fn not_zip(msg: &str) -> JarError {
    JarError::NotAZip(msg.to_string())
}

/// Returns (entry count, central directory offset, central directory size).
fn find_central_directory(data: &[u8]) -> Result<(u64, u64, u64), JarError> {
    if data.len() < 22 {
        return Err(not_zip("too short for an end-of-central-directory record"));
    }
    let lowest = data.len().saturating_sub(22 + 0xffff);
    let eocd = (lowest..=data.len() - 22)
        .rev()
        .find(|&i| {
            le32(data, i) == Some(EOCD_SIG)
                && le16(data, i + 20).map(|c| i + 22 + c as usize == data.len()) == Some(true)
        })
        .ok_or_else(|| not_zip("no end-of-central-directory record"))?;

    let count = le16(data, eocd + 10).unwrap();
    let size = le32(data, eocd + 12).unwrap();
    let offset = le32(data, eocd + 16).unwrap();
    if count != 0xffff && size != 0xffff_ffff && offset != 0xffff_ffff {
        return Ok((u64::from(count), u64::from(offset), u64::from(size)));
    }

    // zip64: the locator sits immediately before the classic record
    let locator = eocd
        .checked_sub(20)
        .filter(|&l| le32(data, l) == Some(ZIP64_LOCATOR_SIG))
        .ok_or_else(|| not_zip("zip64 fields without a zip64 locator"))?;
    let record = le64(data, locator + 8).unwrap() as usize;
    if le32(data, record) != Some(ZIP64_EOCD_SIG) {
        return Err(not_zip("bad zip64 end-of-central-directory record"));
    }
    let read = |at| le64(data, record + at).ok_or_else(|| not_zip("truncated zip64 record"));
    Ok((read(32)?, read(48)?, read(40)?))
}

fn central_entries(data: &[u8]) -> Result<Vec<CentralEntry>, JarError> {
    let (count, offset, size) = find_central_directory(data)?;
    let start = usize::try_from(offset).map_err(|_| not_zip("central directory offset"))?;
    let end = start
        .checked_add(usize::try_from(size).map_err(|_| not_zip("central directory size"))?)
        .filter(|&e| e <= data.len())
        .ok_or_else(|| not_zip("central directory out of bounds"))?;
    let cd = &data[start..end];
    let truncated = || not_zip("truncated central directory");

    let mut entries = Vec::new();
    let mut pos = 0usize;
    for _ in 0..count {
        if le32(cd, pos) != Some(CENTRAL_SIG) {
            return Err(not_zip("bad central directory header signature"));
        }
        let flags = le16(cd, pos + 8).ok_or_else(truncated)?;
        let method = le16(cd, pos + 10).ok_or_else(truncated)?;
        let crc = le32(cd, pos + 16).ok_or_else(truncated)?;
        let mut compressed = u64::from(le32(cd, pos + 20).ok_or_else(truncated)?);
        let mut uncompressed = u64::from(le32(cd, pos + 24).ok_or_else(truncated)?);
        let name_len = le16(cd, pos + 28).ok_or_else(truncated)? as usize;
        let extra_len = le16(cd, pos + 30).ok_or_else(truncated)? as usize;
        let comment_len = le16(cd, pos + 32).ok_or_else(truncated)? as usize;
        let mut local_offset = u64::from(le32(cd, pos + 42).ok_or_else(truncated)?);
        let name_start = pos + 46;
        let name = cd.get(name_start..name_start + name_len).ok_or_else(truncated)?;
        let extra = cd
            .get(name_start + name_len..name_start + name_len + extra_len)
            .ok_or_else(truncated)?;

        let mut e = 0;
        while e + 4 <= extra.len() {
            let id = le16(extra, e).unwrap();
            let len = le16(extra, e + 2).unwrap() as usize;
            let body = extra.get(e + 4..e + 4 + len).unwrap_or(&[]);
            if id == 0x0001 {
                let mut at = 0;
                for field in [&mut uncompressed, &mut compressed, &mut local_offset] {
                    if *field == 0xffff_ffff {
                        if let Some(v) = le64(body, at) {
                            *field = v;
                        }
                        at += 8;
                    }
                }
            }
            e += 4 + len;
        }

        entries.push(CentralEntry {
            path: String::from_utf8_lossy(name).into_owned(),
            flags,
            method,
            crc,
            compressed,
            uncompressed,
            local_offset,
        });
        pos = name_start + name_len + extra_len + comment_len;
    }
    Ok(entries)
}

fn extract(data: &[u8], entry: &CentralEntry) -> Result<Vec<u8>, String> {
    if entry.flags & 1 != 0 {
        return Err("encrypted entry".into());
    }
    let at = usize::try_from(entry.local_offset).map_err(|_| "offset overflow".to_string())?;
    if le32(data, at) != Some(LOCAL_SIG) {
        return Err("bad local header signature".into());
    }
    let name_len = le16(data, at + 26).ok_or("truncated local header")? as usize;
    let extra_len = le16(data, at + 28).ok_or("truncated local header")? as usize;
    let start = at + 30 + name_len + extra_len;
    let compressed = usize::try_from(entry.compressed).map_err(|_| "size overflow".to_string())?;
    let raw = start
        .checked_add(compressed)
        .and_then(|end| data.get(start..end))
        .ok_or("entry data out of bounds")?;
    let expected = usize::try_from(entry.uncompressed).map_err(|_| "size overflow".to_string())?;

    let bytes = match entry.method {
        0 => raw.to_vec(),
        8 => {
            let mut out = Vec::with_capacity(expected);
            DeflateDecoder::new(raw)
                .take(entry.uncompressed + 1)
                .read_to_end(&mut out)
                .map_err(|e| format!("inflate failed: {e}"))?;
            out
        }
        m => return Err(format!("unsupported compression method {m}")),
    };
    if bytes.len() != expected {
        return Err(format!(
            "size mismatch: expected {expected} bytes, got {}",
            bytes.len()
        ));
    }
    let mut crc = flate2::Crc::new();
    crc.update(&bytes);
    if crc.sum() != entry.crc {
        return Err("CRC mismatch".into());
    }
    Ok(bytes)
}

/// True for entries that contribute classes: `.class` files outside
/// `META-INF/`, excluding module descriptors.
pub fn is_class_entry(path: &str) -> bool {
    path.ends_with(".class")
        && !path.starts_with("META-INF/")
        && path.rsplit('/').next() != Some("module-info.class")
}

/// Reads every class entry of an archive held in memory.
pub fn read_jar(data: &[u8]) -> Result<JarListing, JarError> {
    let entries: Vec<CentralEntry> = central_entries(data)?
        .into_iter()
        .filter(|e| is_class_entry(&e.path))
        .collect();

    let results: Vec<Result<JarEntry, EntryDiagnostic>> = entries
        .par_iter()
        .map(|entry| {
            let diagnostic = |problem| EntryDiagnostic {
                path: entry.path.clone(),
                problem,
            };
            let bytes = extract(data, entry).map_err(|m| diagnostic(EntryProblem::Extract(m)))?;
            let summary = parse_class(&bytes).map_err(|e| diagnostic(EntryProblem::Parse(e)))?;
            Ok(JarEntry {
                path: entry.path.clone(),
                summary,
            })
        })
        .collect();

    let mut listing = JarListing::default();
    for r in results {
        match r {
            Ok(entry) => listing.classes.push(entry),
            Err(d) => {
                log::warn!("skipping {}: {}", d.path, d.problem);
                listing.skipped.push(d);
            }
        }
    }
    Ok(listing)
}

pub fn read_jar_file(path: &Path) -> Result<JarListing, JarError> {
    let data = std::fs::read(path).map_err(|source| JarError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_jar(&data)
}
