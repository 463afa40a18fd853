//! The end-to-end pipeline: dependency input to pooled partial graphs to a
//! stitched call graph, with phase timing and generation accounting.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Instant;

use serde_json::json;
use thiserror::Error;

use crate::classfile::{read_jar, read_jar_file, JarError, JarListing};
use crate::depset::{mediate, DependencyTree, FetchError, Fetcher, ResolvedSet};
use crate::hierarchy::{build_uch, HierarchyError};
use crate::model::MavenCoordinate;
use crate::partial::{build_partial_cg, PartialCG, PartialError};
use crate::pool::{Pool, PoolError};
use crate::stitch::{stitch, FullCG, PhaseStats, StitchError, StitchOptions};

/// Why a partial graph could not be generated.
#[derive(Debug, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error("artifact {coordinate} is not a readable jar: {source}")]
    Jar {
        coordinate: MavenCoordinate,
        #[source]
        source: JarError,
    },
    #[error(transparent)]
    Partial(#[from] PartialError),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Stitch(#[from] StitchError),
    #[error("cannot read jar {path}: {source}")]
    Jar {
        path: String,
        #[source]
        source: JarError,
    },
    #[error(transparent)]
    Partial(#[from] PartialError),
}

/// Coarse classification used for exit codes and HTTP statuses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ErrorClass {
    NotFound(MavenCoordinate),
    Input,
    Internal,
}

impl EngineError {
    pub fn class(&self) -> ErrorClass {
        match self {
            EngineError::Pool(e) => match e
                .generation_source()
                .and_then(|s| s.downcast_ref::<GenerateError>())
            {
                Some(GenerateError::Fetch(FetchError::ArtifactNotFound { coordinate, .. })) => {
                    ErrorClass::NotFound(coordinate.clone())
                }
                Some(GenerateError::Jar { .. } | GenerateError::Partial(_)) => ErrorClass::Input,
                _ => ErrorClass::Internal,
            },
            EngineError::Hierarchy(_) | EngineError::Jar { .. } | EngineError::Partial(_) => {
                ErrorClass::Input
            }
            EngineError::Stitch(_) => ErrorClass::Internal,
        }
    }
}

#[derive(Debug, Clone)]
pub enum DependencyInput {
    Tree(DependencyTree),
    /// Already mediated, in classpath order.
    Set(Vec<MavenCoordinate>),
}

#[derive(Debug, Clone)]
pub struct StitchRun {
    pub cg: FullCG,
    pub coordinates: Vec<MavenCoordinate>,
    pub mediation: Option<ResolvedSet>,
    /// Pool requests made by this run.
    pub requests: u64,
    /// Partial graphs generated by this run.
    pub generations: u64,
    /// Class files parsed by this run.
    pub parses: u64,
}

impl StitchRun {
    pub fn phases(&self) -> &PhaseStats {
        &self.cg.phase_stats
    }

    /// Deterministic counters for this run.
    pub fn counters_json(&self) -> serde_json::Value {
        json!({
            "avoided": self.requests - self.generations,
            "coordinates": self.coordinates.len(),
            "generations": self.generations,
            "parses": self.parses,
            "requests": self.requests,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestSummary {
    pub classes: usize,
    pub methods: usize,
    pub call_sites: usize,
    pub skipped_entries: usize,
}

impl IngestSummary {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "callSites": self.call_sites,
            "classes": self.classes,
            "methods": self.methods,
            "skippedEntries": self.skipped_entries,
        })
    }
}

pub struct Engine {
    pool: Arc<Pool>,
    fetcher: Arc<Fetcher>,
    threads: Option<rayon::ThreadPool>,
    jobs: usize,
    parses: AtomicU64,
    generations: Mutex<HashMap<MavenCoordinate, u64>>,
}

impl Engine {
    pub fn new(pool: Arc<Pool>, fetcher: Arc<Fetcher>) -> Self {
        Engine {
            pool,
            fetcher,
            threads: None,
            jobs: thread::available_parallelism().map_or(4, |n| n.get()),
            parses: AtomicU64::new(0),
            generations: Mutex::new(HashMap::new()),
        }
    }

    /// Caps worker parallelism at `jobs` threads.
    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self.threads = Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .thread_name(|i| format!("cgstitch-{i}"))
                .build()
                .expect("thread pool"),
        );
        self
    }

    pub fn pool(&self) -> &Arc<Pool> {
        &self.pool
    }

    pub fn fetcher(&self) -> &Fetcher {
        &self.fetcher
    }

    /// Class files parsed since this engine was created.
    pub fn parse_count(&self) -> u64 {
        self.parses.load(Ordering::SeqCst)
    }

    /// Successful generations of one coordinate since this engine was created.
    pub fn generations_of(&self, coordinate: &MavenCoordinate) -> u64 {
        self.generations
            .lock()
            .unwrap()
            .get(coordinate)
            .copied()
            .unwrap_or(0)
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.threads {
            Some(threads) => threads.install(f),
            None => f(),
        }
    }

    fn count_parses(&self, listing: &JarListing) {
        let n = listing.classes.len() + listing.skipped.len();
        self.parses.fetch_add(n as u64, Ordering::SeqCst);
    }

    /// Fetches one artifact and builds its partial graph.
    pub fn generate(&self, coordinate: &MavenCoordinate) -> Result<PartialCG, GenerateError> {
        let bytes = self.fetcher.fetch_jar(coordinate)?;
        let listing = self.install(|| read_jar(&bytes)).map_err(|source| GenerateError::Jar {
            coordinate: coordinate.clone(),
            source,
        })?;
        self.count_parses(&listing);
        let pcg = build_partial_cg(coordinate.clone(), &listing.into_summaries())?;
        *self
            .generations
            .lock()
            .unwrap()
            .entry(coordinate.clone())
            .or_default() += 1;
        Ok(pcg)
    }

    /// Reads a local jar and stores its partial graph under `coordinate`.
    pub fn ingest_jar(
        &self,
        path: &Path,
        coordinate: &MavenCoordinate,
    ) -> Result<IngestSummary, EngineError> {
        let listing = self.install(|| read_jar_file(path)).map_err(|source| EngineError::Jar {
            path: path.display().to_string(),
            source,
        })?;
        self.count_parses(&listing);
        let skipped_entries = listing.skipped.len();
        let pcg = build_partial_cg(coordinate.clone(), &listing.into_summaries())?;
        self.pool.ingest(&pcg)?;
        Ok(IngestSummary {
            classes: pcg.classes.len(),
            methods: pcg.method_count(),
            call_sites: pcg.call_sites.len(),
            skipped_entries,
        })
    }

    /// Ensures every coordinate is pooled, generating missing ones in
    /// parallel. Returns the parts in input order and the number of
    /// generations this call performed.
    ///
    /// Callers may block on another caller's generation, so this runs on
    /// plain threads rather than on the rayon pool used for parsing.
    pub fn ensure_all(
        &self,
        coordinates: &[MavenCoordinate],
    ) -> Result<(Vec<Arc<PartialCG>>, u64), EngineError> {
        let generated = AtomicU64::new(0);
        let next = AtomicUsize::new(0);
        let ensure_one = |c: &MavenCoordinate| {
            let ran = AtomicBool::new(false);
            let part = self.pool.ensure(c, |c| {
                ran.store(true, Ordering::Relaxed);
                self.generate(c)
            });
            if part.is_ok() && ran.load(Ordering::Relaxed) {
                generated.fetch_add(1, Ordering::Relaxed);
            }
            part
        };
        let workers = self.jobs.min(coordinates.len()).max(1);
        let mut results: Vec<(usize, Result<Arc<PartialCG>, PoolError>)> = thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    scope.spawn(|| {
                        let mut done = Vec::new();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            let Some(c) = coordinates.get(i) else { break };
                            done.push((i, ensure_one(c)));
                        }
                        done
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("ensure worker panicked"))
                .collect()
        });
        results.sort_by_key(|(i, _)| *i);
        let parts = results
            .into_iter()
            .map(|(_, r)| r)
            .collect::<Result<Vec<_>, _>>()?;
        Ok((parts, generated.into_inner()))
    }

    pub fn run(
        &self,
        input: &DependencyInput,
        options: &StitchOptions,
    ) -> Result<StitchRun, EngineError> {
        let (coordinates, mediation) = match input {
            DependencyInput::Tree(tree) => {
                let set = mediate(tree);
                (set.coordinates.clone(), Some(set))
            }
            DependencyInput::Set(coordinates) => (coordinates.clone(), None),
        };
        let parses_before = self.parse_count();

        let started = Instant::now();
        let (parts, generations) = self.ensure_all(&coordinates)?;
        let pool_time = started.elapsed();

        let started = Instant::now();
        let uch = build_uch(parts.iter().map(|p| p.as_ref()))?;
        let uch_time = started.elapsed();

        let mut cg = self.install(|| stitch(&uch, &parts, options))?;
        cg.phase_stats.pool = pool_time;
        cg.phase_stats.uch = uch_time;
        for shadow in &cg.shadows {
            log::info!(
                "class {} from {} is shadowed by {}",
                shadow.class.as_str(),
                shadow.loser,
                shadow.winner
            );
        }
        Ok(StitchRun {
            cg,
            requests: coordinates.len() as u64,
            coordinates,
            mediation,
            generations,
            parses: self.parse_count() - parses_before,
        })
    }
}
