//! Incremental class-hierarchy-analysis call graphs for JVM packages.
//!
//! Each package is parsed once into a [`partial::PartialCG`] and stored in a
//! [`pool::Pool`] keyed by its Maven coordinate. A dependency set is then
//! turned into a whole-program call graph by merging the pooled hierarchies
//! ([`hierarchy::Uch`]) and re-resolving every call site ([`stitch::stitch`]).

pub mod bench;
pub mod classfile;
pub mod depset;
pub mod engine;
pub mod hierarchy;
pub mod model;
pub mod oracle;
pub mod partial;
pub mod pool;
pub mod stitch;
