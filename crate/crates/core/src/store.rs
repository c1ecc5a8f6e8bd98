//! The on-disk workspace: artifact files, staged edits, per-gate snapshots
//! and diffs between them.
//!
//! Layout under the root:
//!
//! ```text
//! add.config.json
//! ArchitecturalDrivers.md
//! Drivers/*.md
//! Design/{DomainModel,IterationPlan,Architecture}.md
//! Design/Iteration<N>.md
//! prompts/
//! journal/events.jsonl
//! journal/transcript.jsonl
//! journal/staging/<id>.json
//! journal/snapshots/<id>/{manifest.json,files/...}
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::audit::Severity;
use crate::doc::{section_spans, SectionKind};
use crate::prompt::{builtin_files, DEFAULT_BUDGET};

pub const CONFIG_FILE: &str = "add.config.json";
pub const DRIVERS_FILE: &str = "ArchitecturalDrivers.md";
pub const DRIVERS_DIR: &str = "Drivers";
pub const DOMAIN_MODEL_FILE: &str = "Design/DomainModel.md";
pub const PLAN_FILE: &str = "Design/IterationPlan.md";
pub const ARCHITECTURE_FILE: &str = "Design/Architecture.md";
pub const JOURNAL_DIR: &str = "journal";
pub const EVENTS_FILE: &str = "journal/events.jsonl";
pub const TRANSCRIPT_FILE: &str = "journal/transcript.jsonl";
const STAGING_DIR: &str = "journal/staging";
const SNAPSHOT_DIR: &str = "journal/snapshots";
const INTENT_FILE: &str = "journal/commit.intent";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("ILLEGAL_PATH: {0}")]
    IllegalPath(String),
    #[error("UNKNOWN_STAGING: {0}")]
    UnknownStaging(StagingId),
    #[error("UNKNOWN_SNAPSHOT: {0}")]
    UnknownSnapshot(SnapshotId),
    #[error("NOT_A_WORKSPACE: {0} has no {CONFIG_FILE}")]
    NotAWorkspace(String),
    #[error("ALREADY_A_WORKSPACE: {0} already has {CONFIG_FILE}")]
    AlreadyAWorkspace(String),
    #[error("INVALID_CONFIG: {0}")]
    InvalidConfig(String),
    #[error("IO_ERROR: {path}: {message}")]
    Io { path: String, message: String },
    #[error("INJECTED_FAULT: commit interrupted {0:?}")]
    InjectedFault(FaultPoint),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::IllegalPath(_) => "ILLEGAL_PATH",
            StoreError::UnknownStaging(_) => "UNKNOWN_STAGING",
            StoreError::UnknownSnapshot(_) => "UNKNOWN_SNAPSHOT",
            StoreError::NotAWorkspace(_) => "NOT_A_WORKSPACE",
            StoreError::AlreadyAWorkspace(_) => "ALREADY_A_WORKSPACE",
            StoreError::InvalidConfig(_) => "INVALID_CONFIG",
            StoreError::Io { .. } => "IO_ERROR",
            StoreError::InjectedFault(_) => "INJECTED_FAULT",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |e| StoreError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// A workspace-relative artifact path that passed the naming rules.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ArtifactPath(String);

impl ArtifactPath {
    pub fn parse(s: &str) -> Result<Self, StoreError> {
        let illegal = || StoreError::IllegalPath(s.to_string());
        if s.contains('\\') || s.starts_with('/') || s.contains(':') {
            return Err(illegal());
        }
        let parts: Vec<&str> = s.split('/').collect();
        if parts.iter().any(|p| p.is_empty() || *p == "." || *p == "..") {
            return Err(illegal());
        }
        let ok = match parts.as_slice() {
            [f] => *f == DRIVERS_FILE,
            ["Design", f] => {
                ["DomainModel.md", "IterationPlan.md", "Architecture.md"].contains(f)
                    || regex!(r"^Iteration[1-9][0-9]*\.md$").is_match(f)
            }
            ["Drivers", f] => regex!(r"^[A-Za-z0-9][A-Za-z0-9._ -]*\.md$").is_match(f),
            _ => false,
        };
        if ok {
            Ok(Self(s.to_string()))
        } else {
            Err(illegal())
        }
    }

    pub fn iteration(n: u32) -> Self {
        Self(format!("Design/Iteration{n}.md"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Iteration number for `Design/Iteration<N>.md`.
    pub fn iteration_number(&self) -> Option<u32> {
        regex!(r"^Design/Iteration([0-9]+)\.md$")
            .captures(&self.0)
            .and_then(|c| c[1].parse().ok())
    }
}

impl TryFrom<String> for ArtifactPath {
    type Error = StoreError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::parse(&s)
    }
}

impl From<ArtifactPath> for String {
    fn from(p: ArtifactPath) -> Self {
        p.0
    }
}

impl fmt::Display for ArtifactPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEdit {
    pub path: ArtifactPath,
    pub content: String,
}

macro_rules! id_newtype {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_newtype!(StagingId);
id_newtype!(SnapshotId);

pub fn content_digest(content: &str) -> String {
    hex::encode(Sha256::digest(content.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: SnapshotId,
    /// Artifact path to content digest.
    pub digests: BTreeMap<ArtifactPath, String>,
    /// The gate this snapshot was taken at; `None` for the baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<String>,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignMode {
    Ddd,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub model_id: String,
    pub temperature: f64,
    pub context_budget: usize,
    pub severity_overrides: BTreeMap<String, Severity>,
    pub prompts_dir: String,
    pub mode: DesignMode,
    /// Take an existing `Design/IterationPlan.md` as the plan instead of
    /// asking the model for one.
    pub import_plan: bool,
    pub strict_replay: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            model_id: "default".into(),
            temperature: 0.0,
            context_budget: DEFAULT_BUDGET,
            severity_overrides: BTreeMap::new(),
            prompts_dir: "prompts".into(),
            mode: DesignMode::Ddd,
            import_plan: false,
            strict_replay: true,
        }
    }
}

/// Where a commit can be interrupted by the fault-injection hook.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultPoint {
    AfterIntent,
    /// After this many snapshot files were written to the temporary
    /// snapshot directory.
    DuringSnapshot(usize),
    AfterSnapshot,
    /// After this many live files were replaced.
    DuringApply(usize),
    BeforeCleanup,
}

#[derive(Serialize, Deserialize)]
struct Intent {
    staging: StagingId,
    snapshot: SnapshotId,
}

#[derive(Serialize, Deserialize)]
struct StagingFile {
    id: StagingId,
    edits: Vec<ArtifactEdit>,
}

pub(crate) fn write_atomic(path: &Path, content: &[u8]) -> Result<(), StoreError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension("tmp-write");
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(content).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn read_opt(path: &Path) -> Result<Option<String>, StoreError> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(path)(e)),
    }
}

const DRIVERS_TEMPLATE: &str = "# Architectural Drivers

## User Stories

| ID | Title | Description | Importance | Difficulty | Primary |
| --- | --- | --- | --- | --- | --- |

## Quality Attribute Scenarios

| ID | Title | Description | Importance | Difficulty | Primary |
| --- | --- | --- | --- | --- | --- |

## Constraints

| ID | Title | Description | Primary |
| --- | --- | --- | --- |

## Concerns

| ID | Title | Description | Primary |
| --- | --- | --- | --- |
";

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
    config: Config,
    fault: Option<FaultPoint>,
}

impl Workspace {
    /// Creates a fresh workspace with default prompts, config and an empty
    /// drivers document.
    pub fn scaffold(root: &Path, mode: DesignMode) -> Result<Self, StoreError> {
        if root.join(CONFIG_FILE).exists() {
            return Err(StoreError::AlreadyAWorkspace(root.display().to_string()));
        }
        let config = Config {
            mode,
            ..Config::default()
        };
        let prompts = root.join(&config.prompts_dir);
        for (name, content) in builtin_files() {
            write_atomic(&prompts.join(name), content.as_bytes())?;
        }
        fs::create_dir_all(root.join("Design")).map_err(io_err(root))?;
        fs::create_dir_all(root.join(DRIVERS_DIR)).map_err(io_err(root))?;
        fs::create_dir_all(root.join(JOURNAL_DIR)).map_err(io_err(root))?;
        if !root.join(DRIVERS_FILE).exists() {
            write_atomic(&root.join(DRIVERS_FILE), DRIVERS_TEMPLATE.as_bytes())?;
        }
        write_atomic(
            &root.join(CONFIG_FILE),
            serde_json::to_string_pretty(&config).unwrap().as_bytes(),
        )?;
        Self::open(root)
    }

    /// Opens a workspace and finishes or rolls back an interrupted commit.
    pub fn open(root: &Path) -> Result<Self, StoreError> {
        let cfg_path = root.join(CONFIG_FILE);
        let text = read_opt(&cfg_path)?.ok_or_else(|| StoreError::NotAWorkspace(root.display().to_string()))?;
        let config: Config = serde_json::from_str(&text).map_err(|e| StoreError::InvalidConfig(e.to_string()))?;
        let ws = Self {
            root: root.to_path_buf(),
            config,
            fault: None,
        };
        ws.recover()?;
        Ok(ws)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut Config {
        &mut self.config
    }

    pub fn save_config(&self) -> Result<(), StoreError> {
        write_atomic(
            &self.root.join(CONFIG_FILE),
            serde_json::to_string_pretty(&self.config).unwrap().as_bytes(),
        )
    }

    pub fn prompts_dir(&self) -> PathBuf {
        self.root.join(&self.config.prompts_dir)
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Arms the fault-injection hook for the next commit.
    pub fn inject_fault(&mut self, point: Option<FaultPoint>) {
        self.fault = point;
    }

    pub fn read(&self, path: &ArtifactPath) -> Result<Option<String>, StoreError> {
        read_opt(&self.root.join(path.as_str()))
    }

    /// Live artifacts present on disk, sorted by path.
    pub fn artifacts(&self) -> Result<Vec<ArtifactPath>, StoreError> {
        let mut out = Vec::new();
        if self.root.join(DRIVERS_FILE).is_file() {
            out.push(ArtifactPath(DRIVERS_FILE.into()));
        }
        for dir in ["Design", DRIVERS_DIR] {
            let full = self.root.join(dir);
            let Ok(entries) = fs::read_dir(&full) else { continue };
            for e in entries {
                let e = e.map_err(io_err(&full))?;
                if !e.file_type().map_err(io_err(&full))?.is_file() {
                    continue;
                }
                if let Some(name) = e.file_name().to_str() {
                    if let Ok(p) = ArtifactPath::parse(&format!("{dir}/{name}")) {
                        out.push(p);
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn live_contents(&self) -> Result<BTreeMap<ArtifactPath, String>, StoreError> {
        let mut out = BTreeMap::new();
        for p in self.artifacts()? {
            if let Some(c) = self.read(&p)? {
                out.insert(p, c);
            }
        }
        Ok(out)
    }

    pub fn live_digests(&self) -> Result<BTreeMap<ArtifactPath, String>, StoreError> {
        Ok(self
            .live_contents()?
            .into_iter()
            .map(|(p, c)| (p, content_digest(&c)))
            .collect())
    }

    fn staging_path(&self, id: StagingId) -> PathBuf {
        self.root.join(STAGING_DIR).join(format!("{id}.json"))
    }

    fn next_staging_id(&self) -> Result<StagingId, StoreError> {
        let counter = self.root.join(STAGING_DIR).join("next");
        let next: u64 = read_opt(&counter)?.and_then(|s| s.trim().parse().ok()).unwrap_or(1);
        write_atomic(&counter, (next + 1).to_string().as_bytes())?;
        Ok(StagingId(next))
    }

    /// Stores edits apart from the live artifacts.
    pub fn stage_edits(&self, edits: &[ArtifactEdit]) -> Result<StagingId, StoreError> {
        let id = self.next_staging_id()?;
        let file = StagingFile {
            id,
            edits: edits.to_vec(),
        };
        write_atomic(&self.staging_path(id), serde_json::to_string(&file).unwrap().as_bytes())?;
        Ok(id)
    }

    pub fn staged(&self, id: StagingId) -> Result<Vec<ArtifactEdit>, StoreError> {
        let text = read_opt(&self.staging_path(id))?.ok_or(StoreError::UnknownStaging(id))?;
        let file: StagingFile = serde_json::from_str(&text).map_err(|e| StoreError::Io {
            path: self.staging_path(id).display().to_string(),
            message: e.to_string(),
        })?;
        Ok(file.edits)
    }

    /// Replaces the edits of an existing staging area.
    pub fn restage(&self, id: StagingId, edits: &[ArtifactEdit]) -> Result<(), StoreError> {
        self.staged(id)?;
        let file = StagingFile {
            id,
            edits: edits.to_vec(),
        };
        write_atomic(&self.staging_path(id), serde_json::to_string(&file).unwrap().as_bytes())
    }

    /// Live artifacts with the staged edits laid over them.
    pub fn staged_view(&self, id: StagingId) -> Result<BTreeMap<ArtifactPath, String>, StoreError> {
        let mut view = self.live_contents()?;
        for e in self.staged(id)? {
            view.insert(e.path, e.content);
        }
        Ok(view)
    }

    pub fn discard(&self, id: StagingId) -> Result<(), StoreError> {
        let p = self.staging_path(id);
        if !p.exists() {
            return Err(StoreError::UnknownStaging(id));
        }
        fs::remove_file(&p).map_err(io_err(&p))
    }

    fn snapshot_dir(&self, id: SnapshotId) -> PathBuf {
        self.root.join(SNAPSHOT_DIR).join(id.to_string())
    }

    pub fn snapshots(&self) -> Result<Vec<Snapshot>, StoreError> {
        let dir = self.root.join(SNAPSHOT_DIR);
        let mut ids: Vec<u64> = match fs::read_dir(&dir) {
            Ok(entries) => entries
                .filter_map(|e| e.ok())
                .filter_map(|e| e.file_name().to_str().and_then(|n| n.parse().ok()))
                .collect(),
            Err(_) => Vec::new(),
        };
        ids.sort_unstable();
        ids.into_iter().map(|i| self.snapshot(SnapshotId(i))).collect()
    }

    pub fn snapshot(&self, id: SnapshotId) -> Result<Snapshot, StoreError> {
        let path = self.snapshot_dir(id).join("manifest.json");
        let text = read_opt(&path)?.ok_or(StoreError::UnknownSnapshot(id))?;
        serde_json::from_str(&text).map_err(|e| StoreError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn latest_snapshot(&self) -> Result<Option<Snapshot>, StoreError> {
        Ok(self.snapshots()?.pop())
    }

    /// Content of an artifact as of a snapshot; `None` if it did not exist.
    pub fn snapshot_content(&self, id: SnapshotId, path: &ArtifactPath) -> Result<Option<String>, StoreError> {
        let snap = self.snapshot(id)?;
        if !snap.digests.contains_key(path) {
            return Ok(None);
        }
        read_opt(&self.snapshot_dir(id).join("files").join(path.as_str()))
    }

    /// Takes snapshot 0 of the live state if no snapshot exists yet.
    pub fn ensure_baseline(&self) -> Result<Snapshot, StoreError> {
        if let Some(s) = self.snapshots()?.into_iter().next() {
            return Ok(s);
        }
        let contents = self.live_contents()?;
        self.write_snapshot(SnapshotId(0), &contents, None, false)
    }

    fn hit(&self, point: FaultPoint) -> Result<(), StoreError> {
        if self.fault == Some(point) {
            return Err(StoreError::InjectedFault(point));
        }
        Ok(())
    }

    fn write_snapshot(
        &self,
        id: SnapshotId,
        contents: &BTreeMap<ArtifactPath, String>,
        gate: Option<String>,
        faults: bool,
    ) -> Result<Snapshot, StoreError> {
        let final_dir = self.snapshot_dir(id);
        let tmp_dir = self.root.join(SNAPSHOT_DIR).join(format!(".tmp-{id}"));
        if tmp_dir.exists() {
            fs::remove_dir_all(&tmp_dir).map_err(io_err(&tmp_dir))?;
        }
        for (n, (path, content)) in contents.iter().enumerate() {
            if faults {
                self.hit(FaultPoint::DuringSnapshot(n))?;
            }
            write_atomic(&tmp_dir.join("files").join(path.as_str()), content.as_bytes())?;
        }
        let snap = Snapshot {
            id,
            digests: contents.iter().map(|(p, c)| (p.clone(), content_digest(c))).collect(),
            gate,
            created_at: Utc::now(),
        };
        write_atomic(
            &tmp_dir.join("manifest.json"),
            serde_json::to_string_pretty(&snap).unwrap().as_bytes(),
        )?;
        fs::rename(&tmp_dir, &final_dir).map_err(io_err(&final_dir))?;
        Ok(snap)
    }

    /// Applies staged edits to the live artifacts and records a snapshot.
    ///
    /// The intent marker is written first and the snapshot is complete
    /// before any live file changes, so [`Workspace::open`] can always roll
    /// an interrupted commit forward from the snapshot or back to the
    /// untouched live files.
    pub fn commit(&self, id: StagingId, gate: impl Into<String>) -> Result<Snapshot, StoreError> {
        let edits = self.staged(id)?;
        let snap_id = match self.latest_snapshot()? {
            Some(s) => SnapshotId(s.id.0 + 1),
            None => SnapshotId(0),
        };
        let mut contents = self.live_contents()?;
        for e in &edits {
            contents.insert(e.path.clone(), e.content.clone());
        }
        let intent = Intent {
            staging: id,
            snapshot: snap_id,
        };
        write_atomic(&self.root.join(INTENT_FILE), serde_json::to_string(&intent).unwrap().as_bytes())?;
        self.hit(FaultPoint::AfterIntent)?;
        let snap = self.write_snapshot(snap_id, &contents, Some(gate.into()), true)?;
        self.hit(FaultPoint::AfterSnapshot)?;
        for (n, e) in edits.iter().enumerate() {
            self.hit(FaultPoint::DuringApply(n))?;
            write_atomic(&self.root.join(e.path.as_str()), e.content.as_bytes())?;
        }
        self.hit(FaultPoint::BeforeCleanup)?;
        self.finish_commit(id)?;
        Ok(snap)
    }

    fn finish_commit(&self, id: StagingId) -> Result<(), StoreError> {
        let staging = self.staging_path(id);
        if staging.exists() {
            fs::remove_file(&staging).map_err(io_err(&staging))?;
        }
        let intent = self.root.join(INTENT_FILE);
        fs::remove_file(&intent).map_err(io_err(&intent))
    }

    fn recover(&self) -> Result<(), StoreError> {
        let intent_path = self.root.join(INTENT_FILE);
        let Some(text) = read_opt(&intent_path)? else {
            return Ok(());
        };
        let Ok(intent) = serde_json::from_str::<Intent>(&text) else {
            // The marker itself was never fully written; nothing else was.
            return fs::remove_file(&intent_path).map_err(io_err(&intent_path));
        };
        let tmp_dir = self.root.join(SNAPSHOT_DIR).join(format!(".tmp-{}", intent.snapshot));
        if tmp_dir.exists() {
            fs::remove_dir_all(&tmp_dir).map_err(io_err(&tmp_dir))?;
        }
        if self.snapshot_dir(intent.snapshot).join("manifest.json").exists() {
            let snap = self.snapshot(intent.snapshot)?;
            for path in snap.digests.keys() {
                let content = self
                    .snapshot_content(intent.snapshot, path)?
                    .ok_or(StoreError::UnknownSnapshot(intent.snapshot))?;
                write_atomic(&self.root.join(path.as_str()), content.as_bytes())?;
            }
            self.finish_commit(intent.staging)
        } else {
            fs::remove_file(&intent_path).map_err(io_err(&intent_path))
        }
    }

    /// Line diff of one artifact between two snapshots.
    pub fn diff(&self, from: SnapshotId, to: SnapshotId, path: &ArtifactPath) -> Result<ArtifactDiff, StoreError> {
        let old = self.snapshot_content(from, path)?.unwrap_or_default();
        let new = self.snapshot_content(to, path)?.unwrap_or_default();
        Ok(diff_texts(path, from, to, &old, &new))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineTag {
    Equal,
    Delete,
    Insert,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffLine {
    pub tag: LineTag,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffHunk {
    /// 1-based start lines and lengths, as in unified diffs.
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    /// Architecture sections the changed lines fall in.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sections: Vec<SectionKind>,
    pub lines: Vec<DiffLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactDiff {
    pub artifact: ArtifactPath,
    pub from: SnapshotId,
    pub to: SnapshotId,
    pub hunks: Vec<DiffHunk>,
}

fn section_at(spans: &[(SectionKind, usize, usize)], line: usize) -> Option<SectionKind> {
    spans
        .iter()
        .find(|(_, start, end)| (*start..*end).contains(&line))
        .map(|(k, _, _)| *k)
}

pub fn diff_texts(path: &ArtifactPath, from: SnapshotId, to: SnapshotId, old: &str, new: &str) -> ArtifactDiff {
    use similar::{ChangeTag, TextDiff};

    let annotate = path.as_str() == ARCHITECTURE_FILE;
    let (old_spans, new_spans) = if annotate {
        (section_spans(old), section_spans(new))
    } else {
        (Vec::new(), Vec::new())
    };
    let diff = TextDiff::from_lines(old, new);
    let mut hunks = Vec::new();
    for group in diff.grouped_ops(3) {
        let (first, last) = (group.first().unwrap(), group.last().unwrap());
        let old_range = first.old_range().start..last.old_range().end;
        let new_range = first.new_range().start..last.new_range().end;
        let mut lines = Vec::new();
        let mut sections: Vec<SectionKind> = Vec::new();
        for op in &group {
            for change in diff.iter_changes(op) {
                let tag = match change.tag() {
                    ChangeTag::Equal => LineTag::Equal,
                    ChangeTag::Delete => LineTag::Delete,
                    ChangeTag::Insert => LineTag::Insert,
                };
                let section = match tag {
                    LineTag::Equal => None,
                    LineTag::Delete => change.old_index().and_then(|i| section_at(&old_spans, i + 1)),
                    LineTag::Insert => change.new_index().and_then(|i| section_at(&new_spans, i + 1)),
                };
                if let Some(s) = section {
                    if !sections.contains(&s) {
                        sections.push(s);
                    }
                }
                lines.push(DiffLine {
                    tag,
                    text: change.value().trim_end_matches('\n').to_string(),
                });
            }
        }
        sections.sort();
        hunks.push(DiffHunk {
            old_start: old_range.start + 1,
            old_len: old_range.len(),
            new_start: new_range.start + 1,
            new_len: new_range.len(),
            sections,
            lines,
        });
    }
    ArtifactDiff {
        artifact: path.clone(),
        from,
        to,
        hunks,
    }
}
