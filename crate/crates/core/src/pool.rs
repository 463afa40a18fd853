//! The CG pool: partial call graphs on disk, indexed by Maven coordinate,
//! with request counters and single-flight generation.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;
use thiserror::Error;

use crate::model::MavenCoordinate;
use crate::partial::{FormatError, PartialCG};

pub const ENTRY_FILE: &str = "partial-cg.json";
const STATS_FILE: &str = ".stats.json";

pub type SharedError = Arc<dyn std::error::Error + Send + Sync + 'static>;

#[derive(Debug, Clone, Error)]
pub enum PoolError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: Arc<io::Error>,
    },
    #[error("corrupt pool entry for {coordinate}: {reason}")]
    CorruptEntry {
        coordinate: MavenCoordinate,
        reason: String,
    },
    #[error("generating {coordinate} failed: {source}")]
    Generation {
        coordinate: MavenCoordinate,
        #[source]
        source: SharedError,
    },
}

impl PoolError {
    fn io(path: &Path, source: io::Error) -> Self {
        PoolError::Io {
            path: path.to_path_buf(),
            source: Arc::new(source),
        }
    }

    /// The generator's own error, when this is a generation failure.
    pub fn generation_source(&self) -> Option<&(dyn std::error::Error + Send + Sync + 'static)> {
        match self {
            PoolError::Generation { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolStats {
    pub requests: u64,
    pub hits: u64,
    pub misses: u64,
    pub generations: u64,
}

impl PoolStats {
    /// Requests that did not need a generation.
    pub fn avoided(&self) -> u64 {
        self.requests.saturating_sub(self.generations)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "avoided": self.avoided(),
            "generations": self.generations,
            "hits": self.hits,
            "misses": self.misses,
            "requests": self.requests,
        })
    }

    fn add(&mut self, other: &PoolStats) {
        self.requests += other.requests;
        self.hits += other.hits;
        self.misses += other.misses;
        self.generations += other.generations;
    }
}

type FlightResult = Result<Arc<PartialCG>, PoolError>;

#[derive(Default)]
struct Flight {
    result: Mutex<Option<FlightResult>>,
    done: Condvar,
}

impl Flight {
    fn wait(&self) -> FlightResult {
        let mut slot = self.result.lock().unwrap();
        loop {
            if let Some(r) = slot.as_ref() {
                return r.clone();
            }
            slot = self.done.wait(slot).unwrap();
        }
    }
}

/// Completes and unregisters a flight, including when the generator panics.
struct FlightGuard<'p> {
    pool: &'p Pool,
    coordinate: MavenCoordinate,
    flight: Arc<Flight>,
    finished: bool,
}

impl FlightGuard<'_> {
    fn finish(mut self, result: FlightResult) -> FlightResult {
        self.complete(result.clone());
        self.finished = true;
        result
    }

    fn complete(&self, result: FlightResult) {
        self.pool.flights.lock().unwrap().remove(&self.coordinate);
        *self.flight.result.lock().unwrap() = Some(result);
        self.flight.done.notify_all();
    }
}

impl Drop for FlightGuard<'_> {
    fn drop(&mut self) {
        if !self.finished {
            self.complete(Err(PoolError::Generation {
                coordinate: self.coordinate.clone(),
                source: Arc::new(io::Error::other("generator panicked")),
            }));
        }
    }
}

/// A serialized entry written to a temporary file next to its final
/// location. Visible to readers only after [`StagedEntry::commit`].
pub struct StagedEntry {
    temp: NamedTempFile,
    target: PathBuf,
}

impl StagedEntry {
    pub fn temp_path(&self) -> &Path {
        self.temp.path()
    }

    pub fn commit(self) -> Result<(), PoolError> {
        let target = self.target;
        self.temp
            .persist(&target)
            .map_err(|e| PoolError::io(&target, e.error))?;
        Ok(())
    }
}

pub struct Pool {
    root: PathBuf,
    stats: Mutex<PoolStats>,
    flights: Mutex<HashMap<MavenCoordinate, Arc<Flight>>>,
    memory: Option<RwLock<HashMap<MavenCoordinate, Arc<PartialCG>>>>,
}

impl std::fmt::Debug for Pool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pool").field("root", &self.root).finish()
    }
}

impl Pool {
    /// Opens (creating if needed) a pool rooted at `root`, with an in-memory
    /// cache of entries already read or written by this process.
    pub fn open(root: impl Into<PathBuf>) -> Result<Pool, PoolError> {
        Self::open_with_cache(root, true)
    }

    pub fn open_with_cache(root: impl Into<PathBuf>, memory_cache: bool) -> Result<Pool, PoolError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| PoolError::io(&root, e))?;
        Ok(Pool {
            root,
            stats: Mutex::new(PoolStats::default()),
            flights: Mutex::new(HashMap::new()),
            memory: memory_cache.then(|| RwLock::new(HashMap::new())),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// `<root>/<groupId with '.' as '/'>/<artifactId>/<version>/partial-cg.json`
    pub fn entry_path(&self, coordinate: &MavenCoordinate) -> PathBuf {
        self.root.join(coordinate.repository_dir()).join(ENTRY_FILE)
    }

    /// Serializes `pcg` into a temporary file beside its entry path.
    pub fn stage(&self, pcg: &PartialCG) -> Result<StagedEntry, PoolError> {
        let target = self.entry_path(&pcg.coordinate);
        let dir = target.parent().expect("entry path has a parent");
        fs::create_dir_all(dir).map_err(|e| PoolError::io(dir, e))?;
        let mut temp = NamedTempFile::new_in(dir).map_err(|e| PoolError::io(dir, e))?;
        temp.write_all(pcg.to_canonical_json().as_bytes())
            .and_then(|_| temp.as_file().sync_all())
            .map_err(|e| PoolError::io(temp.path(), e))?;
        Ok(StagedEntry { temp, target })
    }

    /// Stores `pcg`, atomically replacing any existing entry.
    pub fn put(&self, pcg: &PartialCG) -> Result<(), PoolError> {
        self.stage(pcg)?.commit()?;
        if let Some(memory) = &self.memory {
            memory
                .write()
                .unwrap()
                .insert(pcg.coordinate.clone(), Arc::new(pcg.clone()));
        }
        Ok(())
    }

    /// Stores a freshly generated entry and counts it as a generation.
    pub fn ingest(&self, pcg: &PartialCG) -> Result<(), PoolError> {
        self.put(pcg)?;
        let mut s = self.stats.lock().unwrap();
        s.requests += 1;
        s.misses += 1;
        s.generations += 1;
        Ok(())
    }

    fn cached(&self, coordinate: &MavenCoordinate) -> Option<Arc<PartialCG>> {
        self.memory
            .as_ref()
            .and_then(|m| m.read().unwrap().get(coordinate).cloned())
    }

    /// Reads an entry without touching the counters. A format-version
    /// mismatch reads as absent.
    fn load(&self, coordinate: &MavenCoordinate) -> Result<Option<Arc<PartialCG>>, PoolError> {
        if let Some(hit) = self.cached(coordinate) {
            return Ok(Some(hit));
        }
        let path = self.entry_path(coordinate);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(PoolError::io(&path, e)),
        };
        let corrupt = |reason: String| PoolError::CorruptEntry {
            coordinate: coordinate.clone(),
            reason,
        };
        let pcg = match PartialCG::from_json(&text) {
            Ok(p) => p,
            Err(e @ FormatError::VersionMismatch { .. }) => {
                log::warn!("{}: {e}; treating as absent", path.display());
                return Ok(None);
            }
            Err(FormatError::Corrupt(reason)) => return Err(corrupt(reason)),
        };
        if &pcg.coordinate != coordinate {
            return Err(corrupt(format!("entry is for {}", pcg.coordinate)));
        }
        let pcg = Arc::new(pcg);
        if let Some(memory) = &self.memory {
            memory
                .write()
                .unwrap()
                .insert(coordinate.clone(), pcg.clone());
        }
        Ok(Some(pcg))
    }

    fn count(&self, hit: bool) {
        let mut s = self.stats.lock().unwrap();
        s.requests += 1;
        if hit {
            s.hits += 1;
        } else {
            s.misses += 1;
        }
    }

    /// Looks up an entry, counting a hit or a miss. Corrupt entries are
    /// errors; absent entries are `Ok(None)`.
    pub fn get(&self, coordinate: &MavenCoordinate) -> Result<Option<Arc<PartialCG>>, PoolError> {
        let found = self.load(coordinate)?;
        self.count(found.is_some());
        Ok(found)
    }

    /// Reads an entry without counting, for inspection.
    pub fn peek(&self, coordinate: &MavenCoordinate) -> Result<Option<Arc<PartialCG>>, PoolError> {
        self.load(coordinate)
    }

    /// Returns the pooled entry, generating and storing it if absent. The
    /// generator runs at most once per coordinate at a time; concurrent
    /// callers wait for that run and share its result or its error. Failed
    /// runs are not remembered.
    pub fn ensure<F, E>(
        &self,
        coordinate: &MavenCoordinate,
        generate: F,
    ) -> Result<Arc<PartialCG>, PoolError>
    where
        F: FnOnce(&MavenCoordinate) -> Result<PartialCG, E>,
        E: std::error::Error + Send + Sync + 'static,
    {
        let in_flight = self.flights.lock().unwrap().get(coordinate).cloned();
        if let Some(flight) = in_flight {
            return self.await_flight(&flight);
        }
        if let Some(found) = self.load(coordinate)? {
            self.count(true);
            return Ok(found);
        }

        let mut recheck = true;
        let flight = loop {
            let mut flights = self.flights.lock().unwrap();
            if let Some(flight) = flights.get(coordinate).cloned() {
                drop(flights);
                return self.await_flight(&flight);
            }
            // a flight that finished after our lookup has already stored its entry
            if recheck && (self.cached(coordinate).is_some() || self.entry_path(coordinate).exists()) {
                drop(flights);
                recheck = false;
                if let Some(found) = self.load(coordinate)? {
                    self.count(true);
                    return Ok(found);
                }
                continue;
            }
            let flight = Arc::new(Flight::default());
            flights.insert(coordinate.clone(), flight.clone());
            break flight;
        };
        self.count(false);
        let guard = FlightGuard {
            pool: self,
            coordinate: coordinate.clone(),
            flight,
            finished: false,
        };

        let result = match generate(coordinate) {
            Ok(pcg) => self.put(&pcg).map(|_| {
                self.stats.lock().unwrap().generations += 1;
                self.cached(coordinate).unwrap_or_else(|| Arc::new(pcg))
            }),
            Err(e) => Err(PoolError::Generation {
                coordinate: coordinate.clone(),
                source: Arc::new(e),
            }),
        };
        guard.finish(result)
    }

    fn await_flight(&self, flight: &Flight) -> Result<Arc<PartialCG>, PoolError> {
        let result = flight.wait();
        self.count(result.is_ok());
        result
    }

    /// Counters accumulated by this process.
    pub fn stats(&self) -> PoolStats {
        *self.stats.lock().unwrap()
    }

    /// Counters accumulated by earlier processes via [`Pool::persist_stats`].
    pub fn persisted_stats(&self) -> Result<PoolStats, PoolError> {
        let path = self.root.join(STATS_FILE);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| PoolError::io(
                &path,
                io::Error::new(io::ErrorKind::InvalidData, e),
            )),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(PoolStats::default()),
            Err(e) => Err(PoolError::io(&path, e)),
        }
    }

    /// Adds this process's counters to the persisted totals and resets them.
    pub fn persist_stats(&self) -> Result<PoolStats, PoolError> {
        let mut session = self.stats.lock().unwrap();
        let mut total = self.persisted_stats()?;
        total.add(&session);
        let path = self.root.join(STATS_FILE);
        let mut temp = NamedTempFile::new_in(&self.root).map_err(|e| PoolError::io(&self.root, e))?;
        temp.write_all(serde_json::to_string(&total).unwrap().as_bytes())
            .map_err(|e| PoolError::io(temp.path(), e))?;
        temp.persist(&path).map_err(|e| PoolError::io(&path, e.error))?;
        *session = PoolStats::default();
        Ok(total)
    }
}
