//! On-disk workspace: one hierarchy, one sheet per decision maker, and a
//! directory of computed reports.
//!
//! ```text
//! <root>/hierarchy.json
//! <root>/sheets/<decisionMakerId>.json
//! <root>/reports/<id>.report.json   (+ .csv, .md renderings)
//! ```
//!
//! Every file carries `schemaVersion`; sheets and reports also name the
//! hierarchy they were made for, and loading refuses a mismatch.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{self, EngineError};
use crate::hierarchy::{Hierarchy, Violation};
use crate::judgment::ResponseSheet;
use crate::report::{self, ReportDocument, ReportFormat};

pub const SCHEMA_VERSION: u64 = 1;

const HIERARCHY_FILE: &str = "hierarchy.json";
const SHEETS_DIR: &str = "sheets";
const ARCHIVE_DIR: &str = "archive";
const REPORTS_DIR: &str = "reports";
const LOCK_FILE: &str = ".lock";
const REPORT_SUFFIX: &str = ".report.json";

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: unsupported schemaVersion {found:?} (expected {SCHEMA_VERSION})")]
    SchemaVersion {
        path: PathBuf,
        found: Option<serde_json::Value>,
    },
    #[error("{path}: made for hierarchy {found}, workspace hierarchy is {expected}")]
    HashMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{0}: directory exists and is not empty")]
    NotEmpty(PathBuf),
    #[error("{0}: not a workspace (no {HIERARCHY_FILE})")]
    NotAWorkspace(PathBuf),
    #[error("{0}: workspace is locked by another writer")]
    Locked(PathBuf),
    #[error("invalid hierarchy: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidHierarchy(Vec<Violation>),
    #[error("invalid decision maker id {0:?}")]
    InvalidDecisionMaker(String),
    #[error("no report with id {0:?}")]
    UnknownReport(String),
    #[error("workspace has no reports")]
    NoReports,
    #[error("unsupported format {0:?} (expected json, csv or md)")]
    UnsupportedFormat(String),
    #[error("no complete response sheets")]
    NoCompleteSheets,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Serialization wrapper that adds the `schemaVersion` field.
#[derive(Serialize)]
pub struct Versioned<'a, T> {
    #[serde(rename = "schemaVersion")]
    schema_version: u64,
    #[serde(flatten)]
    body: &'a T,
}

impl<'a, T> Versioned<'a, T> {
    pub fn new(body: &'a T) -> Self {
        Versioned {
            schema_version: SCHEMA_VERSION,
            body,
        }
    }
}

/// Encode with `schemaVersion`, pretty-printed, newline-terminated.
pub fn to_versioned_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&Versioned::new(value)).expect("serializable");
    out.push(b'\n');
    out
}

/// Check `schemaVersion` and return the remaining JSON value.
///
/// Hand-written input files (`required == false`) may omit the field; a
/// present field must always name the current version.
pub fn versioned_value(
    path: &Path,
    bytes: &[u8],
    required: bool,
) -> Result<serde_json::Value, WorkspaceError> {
    let json_err = |source| WorkspaceError::Json {
        path: path.to_path_buf(),
        source,
    };
    let mut value: serde_json::Value = serde_json::from_slice(bytes).map_err(json_err)?;
    let found = value
        .as_object_mut()
        .and_then(|o| o.remove("schemaVersion"));
    let ok = match &found {
        None => !required,
        Some(v) => v.as_u64() == Some(SCHEMA_VERSION),
    };
    if !ok {
        return Err(WorkspaceError::SchemaVersion {
            path: path.to_path_buf(),
            found,
        });
    }
    Ok(value)
}

/// Read a JSON file written by a workspace.
pub fn read_versioned<T: DeserializeOwned>(path: &Path) -> Result<T, WorkspaceError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let value = versioned_value(path, &bytes, true)?;
    serde_json::from_value(value).map_err(|source| WorkspaceError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a hand-written JSON input file; `schemaVersion` is optional.
pub fn read_input(path: &Path) -> Result<serde_json::Value, WorkspaceError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    versioned_value(path, &bytes, false)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), WorkspaceError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn load_hierarchy_file(path: &Path) -> Result<Hierarchy, WorkspaceError> {
    check_hierarchy(read_versioned(path)?)
}

/// Parse and validate a hand-written hierarchy file.
pub fn load_hierarchy_input(path: &Path) -> Result<Hierarchy, WorkspaceError> {
    let value = read_input(path)?;
    let h = serde_json::from_value(value).map_err(|source| WorkspaceError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    check_hierarchy(h)
}

fn check_hierarchy(h: Hierarchy) -> Result<Hierarchy, WorkspaceError> {
    let violations = h.violations();
    if violations.is_empty() {
        Ok(h)
    } else {
        Err(WorkspaceError::InvalidHierarchy(violations))
    }
}

/// Decision maker ids double as file names.
pub fn is_valid_dm_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | '@'))
}

/// Held while mutating a workspace; released on drop.
#[derive(Debug)]
pub struct WriteLock {
    path: PathBuf,
}

impl Drop for WriteLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
    hierarchy: Hierarchy,
    hash: String,
}

impl Workspace {
    /// Create a workspace in `root`, which must be absent or empty.
    pub fn init(root: impl AsRef<Path>, hierarchy: Hierarchy) -> Result<Self, WorkspaceError> {
        let root = root.as_ref();
        if root.exists() {
            let mut entries = fs::read_dir(root).map_err(io_err(root))?;
            if entries.next().is_some() {
                return Err(WorkspaceError::NotEmpty(root.to_path_buf()));
            }
        }
        let violations = hierarchy.violations();
        if !violations.is_empty() {
            return Err(WorkspaceError::InvalidHierarchy(violations));
        }
        for dir in [
            root.to_path_buf(),
            root.join(SHEETS_DIR),
            root.join(REPORTS_DIR),
        ] {
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        let path = root.join(HIERARCHY_FILE);
        write_atomic(&path, &to_versioned_json(&hierarchy))?;
        Self::open(root)
    }

    pub fn open(root: impl AsRef<Path>) -> Result<Self, WorkspaceError> {
        let root = root.as_ref().to_path_buf();
        let path = root.join(HIERARCHY_FILE);
        if !path.is_file() {
            return Err(WorkspaceError::NotAWorkspace(root));
        }
        let hierarchy = load_hierarchy_file(&path)?;
        let hash = hierarchy.content_hash();
        Ok(Workspace {
            root,
            hierarchy,
            hash,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn hierarchy_hash(&self) -> &str {
        &self.hash
    }

    /// Take the single-writer lock.
    pub fn lock(&self) -> Result<WriteLock, WorkspaceError> {
        let path = self.root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(WriteLock { path })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                Err(WorkspaceError::Locked(self.root.clone()))
            }
            Err(e) => Err(WorkspaceError::Io { path, source: e }),
        }
    }

    fn sheet_path(&self, dm: &str) -> Result<PathBuf, WorkspaceError> {
        if !is_valid_dm_id(dm) {
            return Err(WorkspaceError::InvalidDecisionMaker(dm.to_string()));
        }
        Ok(self.root.join(SHEETS_DIR).join(format!("{dm}.json")))
    }

    /// Load a sheet file and check it belongs to this workspace.
    pub fn read_sheet_file(&self, path: &Path) -> Result<ResponseSheet, WorkspaceError> {
        let sheet: ResponseSheet = read_versioned(path)?;
        if !self.hierarchy.matches_ref(&sheet.hierarchy_ref) {
            return Err(WorkspaceError::HashMismatch {
                path: path.to_path_buf(),
                expected: self.hash.clone(),
                found: sheet.hierarchy_ref,
            });
        }
        Ok(sheet)
    }

    pub fn load_sheet(&self, dm: &str) -> Result<Option<ResponseSheet>, WorkspaceError> {
        let path = self.sheet_path(dm)?;
        if !path.exists() {
            return Ok(None);
        }
        self.read_sheet_file(&path).map(Some)
    }

    /// All sheets, ordered by decision maker id.
    pub fn load_sheets(&self) -> Result<Vec<ResponseSheet>, WorkspaceError> {
        let dir = self.root.join(SHEETS_DIR);
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        paths.iter().map(|p| self.read_sheet_file(p)).collect()
    }

    pub fn save_sheet(
        &self,
        _lock: &WriteLock,
        sheet: &ResponseSheet,
    ) -> Result<PathBuf, WorkspaceError> {
        let path = self.sheet_path(&sheet.decision_maker_id)?;
        if !self.hierarchy.matches_ref(&sheet.hierarchy_ref) {
            return Err(WorkspaceError::HashMismatch {
                path,
                expected: self.hash.clone(),
                found: sheet.hierarchy_ref.clone(),
            });
        }
        write_atomic(&path, &to_versioned_json(sheet))?;
        Ok(path)
    }

    /// Move a decision maker's sheet into `sheets/archive/` with a timestamp.
    pub fn archive_sheet(&self, _lock: &WriteLock, dm: &str) -> Result<(), WorkspaceError> {
        let path = self.sheet_path(dm)?;
        if !path.exists() {
            return Ok(());
        }
        let dir = self.root.join(SHEETS_DIR).join(ARCHIVE_DIR);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let stamp = Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
        let target = dir.join(format!("{dm}.{stamp}.json"));
        fs::rename(&path, &target).map_err(io_err(&target))
    }

    /// Complete sheets, plus one warning per incomplete sheet.
    pub fn complete_sheets(&self) -> Result<(Vec<ResponseSheet>, Vec<String>), WorkspaceError> {
        let mut complete = Vec::new();
        let mut warnings = Vec::new();
        for sheet in self.load_sheets()? {
            let c = sheet
                .completeness(&self.hierarchy)
                .map_err(|e| EngineError::Sheet {
                    decision_maker_id: sheet.decision_maker_id.clone(),
                    source: e,
                })?;
            if c.is_complete() {
                complete.push(sheet);
            } else {
                warnings.push(format!(
                    "{}: incomplete ({}/{} answered), excluded",
                    sheet.decision_maker_id, c.answered, c.total
                ));
            }
        }
        Ok((complete, warnings))
    }

    /// Evaluate all complete sheets into a report document (not saved).
    pub fn compute(&self) -> Result<ReportDocument, WorkspaceError> {
        let (sheets, warnings) = self.complete_sheets()?;
        if sheets.is_empty() {
            return Err(WorkspaceError::NoCompleteSheets);
        }
        let report = engine::evaluate(&self.hierarchy, &sheets)?;
        let now = Utc::now();
        let id = now.format("%Y%m%dT%H%M%S%.3fZ").to_string();
        Ok(ReportDocument::new(
            id,
            now.to_rfc3339_opts(SecondsFormat::Millis, true),
            self.hash.clone(),
            report,
            warnings,
        ))
    }

    /// Write the report and its CSV and Markdown renderings. Returns the
    /// path of the JSON document.
    pub fn save_report(
        &self,
        _lock: &WriteLock,
        doc: &mut ReportDocument,
    ) -> Result<PathBuf, WorkspaceError> {
        let dir = self.root.join(REPORTS_DIR);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let base = doc.metadata.id.clone();
        let mut id = base.clone();
        let mut n = 1;
        while dir.join(format!("{id}{REPORT_SUFFIX}")).exists() {
            n += 1;
            id = format!("{base}-{n}");
        }
        doc.metadata.id = id.clone();
        let path = dir.join(format!("{id}{REPORT_SUFFIX}"));
        write_atomic(&path, &report::render(doc, ReportFormat::Json))?;
        for format in [ReportFormat::Csv, ReportFormat::Markdown] {
            let p = dir.join(format!("{id}.{}", format.extension()));
            write_atomic(&p, &report::render(doc, format))?;
        }
        Ok(path)
    }

    /// Report ids, oldest first.
    pub fn report_ids(&self) -> Result<Vec<String>, WorkspaceError> {
        let dir = self.root.join(REPORTS_DIR);
        let mut ids: Vec<String> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|e| e.ok()?.file_name().into_string().ok())
            .filter_map(|name| name.strip_suffix(REPORT_SUFFIX).map(str::to_string))
            .collect();
        ids.sort();
        Ok(ids)
    }

    pub fn report_path(&self, id: &str) -> PathBuf {
        self.root
            .join(REPORTS_DIR)
            .join(format!("{id}{REPORT_SUFFIX}"))
    }

    /// Load report `id`, or the latest when `None`.
    pub fn load_report(&self, id: Option<&str>) -> Result<ReportDocument, WorkspaceError> {
        let id = match id {
            Some(id) => id.to_string(),
            None => self.report_ids()?.pop().ok_or(WorkspaceError::NoReports)?,
        };
        let path = self.report_path(&id);
        if !path.is_file() {
            return Err(WorkspaceError::UnknownReport(id));
        }
        self.read_report_file(&path)
    }

    pub fn read_report_file(&self, path: &Path) -> Result<ReportDocument, WorkspaceError> {
        let doc: ReportDocument = read_versioned(path)?;
        if doc.metadata.hierarchy_hash != self.hash {
            return Err(WorkspaceError::HashMismatch {
                path: path.to_path_buf(),
                expected: self.hash.clone(),
                found: doc.metadata.hierarchy_hash,
            });
        }
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::EGOV_PRESET;
    use crate::judgment::{Answer, Favored};
    use crate::LinguisticTerm;

    fn full_sheet(dm: &str) -> ResponseSheet {
        let h = Hierarchy::preset_egov();
        let mut s = ResponseSheet::new(dm, EGOV_PRESET);
        s.answers = h
            .questions()
            .unwrap()
            .into_iter()
            .map(|q| Answer {
                set: q.set,
                first: q.first.id,
                second: q.second.id,
                favored: if q.index % 2 == 0 {
                    Favored::First
                } else {
                    Favored::Second
                },
                term: LinguisticTerm::ALL[q.index % 5],
            })
            .collect();
        s
    }

    #[test]
    fn init_refuses_non_empty_dir() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("x"), "y").unwrap();
        assert!(matches!(
            Workspace::init(dir.path(), Hierarchy::preset_egov()),
            Err(WorkspaceError::NotEmpty(_))
        ));
    }

    #[test]
    fn init_rejects_invalid_hierarchy() {
        let dir = tempfile::tempdir().unwrap();
        let mut h = Hierarchy::preset_egov();
        h.criteria.truncate(1);
        assert!(matches!(
            Workspace::init(dir.path().join("ws"), h),
            Err(WorkspaceError::InvalidHierarchy(_))
        ));
    }

    #[test]
    fn hierarchy_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::init(dir.path().join("ws"), Hierarchy::preset_egov()).unwrap();
        let again = Workspace::open(ws.root()).unwrap();
        assert_eq!(again.hierarchy(), &Hierarchy::preset_egov());
        assert!(matches!(
            Workspace::open(dir.path()),
            Err(WorkspaceError::NotAWorkspace(_))
        ));
    }

    #[test]
    fn sheet_round_trip_preserves_order() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::init(dir.path().join("ws"), Hierarchy::preset_egov()).unwrap();
        let mut sheet = full_sheet("dm-01");
        sheet.answers.reverse();
        let lock = ws.lock().unwrap();
        ws.save_sheet(&lock, &sheet).unwrap();
        assert_eq!(ws.load_sheet("dm-01").unwrap().unwrap(), sheet);
        assert_eq!(ws.load_sheets().unwrap(), vec![sheet]);
        assert!(ws.load_sheet("nobody").unwrap().is_none());
        assert!(matches!(
            ws.load_sheet("../x"),
            Err(WorkspaceError::InvalidDecisionMaker(_))
        ));
    }

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::init(dir.path().join("ws"), Hierarchy::preset_egov()).unwrap();
        let lock = ws.lock().unwrap();
        assert!(matches!(ws.lock(), Err(WorkspaceError::Locked(_))));
        drop(lock);
        assert!(ws.lock().is_ok());
    }

    #[test]
    fn report_round_trip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::init(dir.path().join("ws"), Hierarchy::preset_egov()).unwrap();
        let lock = ws.lock().unwrap();
        assert!(matches!(
            ws.compute(),
            Err(WorkspaceError::NoCompleteSheets)
        ));
        ws.save_sheet(&lock, &full_sheet("a")).unwrap();
        let mut partial = full_sheet("b");
        partial.answers.truncate(10);
        ws.save_sheet(&lock, &partial).unwrap();

        let mut doc = ws.compute().unwrap();
        assert_eq!(doc.metadata.panel_size, 1);
        assert_eq!(doc.metadata.warnings.len(), 1);
        let path = ws.save_report(&lock, &mut doc).unwrap();
        assert_eq!(ws.load_report(None).unwrap(), doc);
        assert!(path.with_extension("").with_extension("csv").exists());

        let mut second = doc.clone();
        ws.save_report(&lock, &mut second).unwrap();
        assert_ne!(second.metadata.id, doc.metadata.id);
        assert_eq!(ws.report_ids().unwrap().len(), 2);

        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replace(ws.hierarchy_hash(), &"0".repeat(64))).unwrap();
        assert!(matches!(
            ws.load_report(Some(&doc.metadata.id)),
            Err(WorkspaceError::HashMismatch { .. })
        ));
        assert!(matches!(
            ws.load_report(Some("nope")),
            Err(WorkspaceError::UnknownReport(_))
        ));
    }

    #[test]
    fn schema_version_is_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.json");
        fs::write(&p, serde_json::to_vec(&Hierarchy::preset_egov()).unwrap()).unwrap();
        assert!(matches!(
            load_hierarchy_file(&p),
            Err(WorkspaceError::SchemaVersion { found: None, .. })
        ));
        let mut v = serde_json::to_value(Hierarchy::preset_egov()).unwrap();
        v["schemaVersion"] = 2.into();
        fs::write(&p, serde_json::to_vec(&v).unwrap()).unwrap();
        assert!(matches!(
            load_hierarchy_file(&p),
            Err(WorkspaceError::SchemaVersion { .. })
        ));
        v["schemaVersion"] = 1.into();
        fs::write(&p, serde_json::to_vec(&v).unwrap()).unwrap();
        assert_eq!(load_hierarchy_file(&p).unwrap(), Hierarchy::preset_egov());
    }

    #[test]
    fn foreign_sheet_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::init(dir.path().join("ws"), Hierarchy::preset_egov()).unwrap();
        let mut sheet = full_sheet("x");
        sheet.hierarchy_ref = "f".repeat(64);
        let p = dir.path().join("x.json");
        fs::write(&p, to_versioned_json(&sheet)).unwrap();
        assert!(matches!(
            ws.read_sheet_file(&p),
            Err(WorkspaceError::HashMismatch { .. })
        ));
    }

    #[test]
    fn archive_moves_sheet_aside() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::init(dir.path().join("ws"), Hierarchy::preset_egov()).unwrap();
        let lock = ws.lock().unwrap();
        ws.save_sheet(&lock, &full_sheet("a")).unwrap();
        ws.archive_sheet(&lock, "a").unwrap();
        assert!(ws.load_sheet("a").unwrap().is_none());
        assert!(ws.load_sheets().unwrap().is_empty());
    }
}
