//! Dependency trees with nearest-wins mediation, plus artifact fetching.

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use tempfile::NamedTempFile;
use thiserror::Error;

use crate::model::{MavenCoordinate, ModelError};

const PACKAGINGS: &[&str] = &[
    "jar", "war", "ear", "ejb", "rar", "aar", "pom", "bundle", "maven-plugin", "test-jar",
];
const SCOPES: &[&str] = &["compile", "runtime", "provided", "test", "system", "import"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("malformed dependency tree: {0}")]
    MalformedTree(String),
}

/// Accepts `g:a:v`, `g:a:<packaging>:v` and `g:a:<packaging>:v:<scope>`,
/// the forms printed by Maven's dependency tree.
pub fn parse_lenient_coordinate(text: &str) -> Result<MavenCoordinate, ModelError> {
    let parts: Vec<&str> = text.trim().split(':').collect();
    let (g, a, v) = match parts.as_slice() {
        [g, a, v] => (*g, *a, *v),
        [g, a, p, v] if PACKAGINGS.contains(p) => (*g, *a, *v),
        [g, a, p, v, s] if PACKAGINGS.contains(p) && SCOPES.contains(s) => (*g, *a, *v),
        _ => return Err(ModelError::MalformedCoordinate(text.to_string())),
    };
    MavenCoordinate::new(g, a, v).map_err(|_| ModelError::MalformedCoordinate(text.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyNode {
    pub coordinate: MavenCoordinate,
    pub children: Vec<DependencyNode>,
}

impl DependencyNode {
    pub fn leaf(coordinate: MavenCoordinate) -> Self {
        DependencyNode {
            coordinate,
            children: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyTree {
    pub root: DependencyNode,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    coordinate: String,
    #[serde(default)]
    children: Vec<RawNode>,
}

fn convert(raw: RawNode) -> Result<DependencyNode, TreeError> {
    let coordinate = parse_lenient_coordinate(&raw.coordinate)
        .map_err(|e| TreeError::MalformedTree(e.to_string()))?;
    let children = raw
        .children
        .into_iter()
        .map(convert)
        .collect::<Result<_, _>>()?;
    Ok(DependencyNode {
        coordinate,
        children,
    })
}

/// Parses `{"coordinate": "g:a:v", "children": [...]}` recursively.
pub fn parse_tree(text: &str) -> Result<DependencyTree, TreeError> {
    let raw: RawNode =
        serde_json::from_str(text).map_err(|e| TreeError::MalformedTree(e.to_string()))?;
    Ok(DependencyTree { root: convert(raw)? })
}

/// Parses a flat, already mediated set: one coordinate per line, blank lines
/// and `#` comments ignored. Order is classpath order.
pub fn parse_set(text: &str) -> Result<Vec<MavenCoordinate>, TreeError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(
            parse_lenient_coordinate(line)
                .map_err(|e| TreeError::MalformedTree(format!("line {}: {e}", n + 1)))?,
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LosingVersion {
    pub version: String,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MediationEntry {
    pub group_id: String,
    pub artifact_id: String,
    pub winner: String,
    pub winner_depth: usize,
    pub losers: Vec<LosingVersion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResolvedSet {
    /// Classpath order: breadth-first discovery order of the winners.
    pub coordinates: Vec<MavenCoordinate>,
    /// Only packages that had a conflicting version.
    pub mediation_log: Vec<MediationEntry>,
}

impl ResolvedSet {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "coordinates": self.coordinates.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "mediationLog": self.mediation_log.iter().map(|e| json!({
                "losers": e.losers.iter().map(|l| json!({"depth": l.depth, "version": l.version})).collect::<Vec<_>>(),
                "package": format!("{}:{}", e.group_id, e.artifact_id),
                "winner": e.winner,
                "winnerDepth": e.winner_depth,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Nearest-wins mediation: breadth-first from the root, the first version
/// seen of each `groupId:artifactId` wins; equal depths go to the leftmost.
///
/// Every occurrence is visited, including below losing versions.
pub fn mediate(tree: &DependencyTree) -> ResolvedSet {
    let mut winners: HashMap<(&str, &str), usize> = HashMap::new();
    let mut set = ResolvedSet::default();
    let mut queue = VecDeque::from([(&tree.root, 0usize)]);
    while let Some((node, depth)) = queue.pop_front() {
        let c = &node.coordinate;
        match winners.get(&c.package_key()) {
            None => {
                winners.insert(c.package_key(), set.coordinates.len());
                set.coordinates.push(c.clone());
                set.mediation_log.push(MediationEntry {
                    group_id: c.group_id().to_string(),
                    artifact_id: c.artifact_id().to_string(),
                    winner: c.version().to_string(),
                    winner_depth: depth,
                    losers: Vec::new(),
                });
            }
            Some(&i) => {
                let entry = &mut set.mediation_log[i];
                if entry.winner != c.version() {
                    entry.losers.push(LosingVersion {
                        version: c.version().to_string(),
                        depth,
                    });
                }
            }
        }
        queue.extend(node.children.iter().map(|child| (child, depth + 1)));
    }
    set.mediation_log.retain(|e| !e.losers.is_empty());
    set
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArtifactSource {
    Local(PathBuf),
    Remote(String),
}

impl FromStr for ArtifactSource {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.starts_with("http://") || s.starts_with("https://") {
            Ok(ArtifactSource::Remote(s.trim_end_matches('/').to_string()))
        } else {
            Ok(ArtifactSource::Local(PathBuf::from(s)))
        }
    }
}

impl std::fmt::Display for ArtifactSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ArtifactSource::Local(p) => write!(f, "{}", p.display()),
            ArtifactSource::Remote(u) => f.write_str(u),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportFailure {
    NotFound,
    /// Worth retrying: connection problems, timeouts, 5xx, 429.
    Transient(String),
    Fatal(String),
}

/// Plain HTTP GET.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str, timeout: Duration) -> Result<Vec<u8>, TransportFailure>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct UreqTransport;

impl Transport for UreqTransport {
    fn get(&self, url: &str, timeout: Duration) -> Result<Vec<u8>, TransportFailure> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut response = agent.get(url).call().map_err(|e| match e {
            ureq::Error::Io(_)
            | ureq::Error::Timeout(_)
            | ureq::Error::HostNotFound
            | ureq::Error::ConnectionFailed
            | ureq::Error::BodyStalled => TransportFailure::Transient(e.to_string()),
            other => TransportFailure::Fatal(other.to_string()),
        })?;
        match response.status().as_u16() {
            200..=299 => response
                .body_mut()
                .with_config()
                .limit(u64::MAX)
                .read_to_vec()
                .map_err(|e| TransportFailure::Transient(e.to_string())),
            404 | 410 => Err(TransportFailure::NotFound),
            s @ (429 | 500..=599) => Err(TransportFailure::Transient(format!("HTTP {s}"))),
            s => Err(TransportFailure::Fatal(format!("HTTP {s}"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("artifact {coordinate} not found at {location}")]
    ArtifactNotFound {
        coordinate: MavenCoordinate,
        location: String,
    },
    #[error("fetching {coordinate} failed after {attempts} attempts: {message}")]
    Transport {
        coordinate: MavenCoordinate,
        attempts: u32,
        message: String,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Reads JARs from a Maven-layout directory or URL. Remote downloads are
/// cached on disk under the same relative path.
pub struct Fetcher {
    source: ArtifactSource,
    transport: Arc<dyn Transport>,
    cache_dir: Option<PathBuf>,
    timeout: Duration,
    retries: u32,
    retry_delay: Duration,
    network_requests: AtomicU64,
}

impl Fetcher {
    pub fn new(source: ArtifactSource) -> Self {
        Fetcher {
            source,
            transport: Arc::new(UreqTransport),
            cache_dir: None,
            timeout: Duration::from_secs(30),
            retries: 2,
            retry_delay: Duration::from_millis(200),
            network_requests: AtomicU64::new(0),
        }
    }

    pub fn with_transport(mut self, transport: Arc<dyn Transport>) -> Self {
        self.transport = transport;
        self
    }

    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Retries after a transient failure, at most 2.
    pub fn with_retries(mut self, retries: u32, delay: Duration) -> Self {
        self.retries = retries.min(2);
        self.retry_delay = delay;
        self
    }

    pub fn source(&self) -> &ArtifactSource {
        &self.source
    }

    /// Number of transport requests issued so far.
    pub fn network_requests(&self) -> u64 {
        self.network_requests.load(Ordering::Relaxed)
    }

    pub fn fetch_jar(&self, coordinate: &MavenCoordinate) -> Result<Vec<u8>, FetchError> {
        let relative = coordinate.jar_path();
        match &self.source {
            ArtifactSource::Local(dir) => {
                let path = dir.join(&relative);
                fs::read(&path).map_err(|e| match e.kind() {
                    io::ErrorKind::NotFound => FetchError::ArtifactNotFound {
                        coordinate: coordinate.clone(),
                        location: path.display().to_string(),
                    },
                    _ => FetchError::Io { path, source: e },
                })
            }
            ArtifactSource::Remote(base) => {
                let cached = self.cache_dir.as_ref().map(|d| d.join(&relative));
                if let Some(path) = &cached {
                    match fs::read(path) {
                        Ok(bytes) => return Ok(bytes),
                        Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                        Err(e) => return Err(FetchError::Io { path: path.clone(), source: e }),
                    }
                }
                let url = format!(
                    "{base}/{}",
                    relative
                        .iter()
                        .map(|s| s.to_string_lossy())
                        .collect::<Vec<_>>()
                        .join("/")
                );
                let bytes = self.download(coordinate, &url)?;
                if let Some(path) = &cached {
                    write_atomic(path, &bytes)?;
                }
                Ok(bytes)
            }
        }
    }

    fn download(&self, coordinate: &MavenCoordinate, url: &str) -> Result<Vec<u8>, FetchError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.network_requests.fetch_add(1, Ordering::Relaxed);
            match self.transport.get(url, self.timeout) {
                Ok(bytes) => return Ok(bytes),
                Err(TransportFailure::NotFound) => {
                    return Err(FetchError::ArtifactNotFound {
                        coordinate: coordinate.clone(),
                        location: url.to_string(),
                    })
                }
                Err(TransportFailure::Transient(m)) if attempt <= self.retries => {
                    log::warn!("{url}: {m}; retrying");
                    thread::sleep(self.retry_delay * attempt);
                }
                Err(TransportFailure::Transient(message) | TransportFailure::Fatal(message)) => {
                    return Err(FetchError::Transport {
                        coordinate: coordinate.clone(),
                        attempts: attempt,
                        message,
                    })
                }
            }
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FetchError> {
    let io_err = |path: &Path, source| FetchError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().expect("cache path has a parent");
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut temp = NamedTempFile::new_in(dir).map_err(|e| io_err(dir, e))?;
    temp.write_all(bytes).map_err(|e| io_err(path, e))?;
    temp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}
