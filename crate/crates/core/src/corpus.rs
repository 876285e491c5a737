//! Loading a corpus directory: a `labels.csv` plus one sub-directory of
//! `task1.svc`..`task7.svc` files per participant.

use std::collections::BTreeSet;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{read_labels_file, ModelError, Session, TaskId};
use crate::svc::{parse_svc, ParseMode};
use crate::synth::LABELS_FILE;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus directory {0} contains no participants")]
    EmptyCorpus(PathBuf),
    #[error("corpus directory {0} has no {LABELS_FILE}")]
    MissingLabels(PathBuf),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// Outcome of reading one recording file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileStatus {
    Pass,
    Warn(Vec<String>),
    Fail(String),
    Missing,
}

impl FileStatus {
    pub fn tag(&self) -> &'static str {
        match self {
            FileStatus::Pass => "pass",
            FileStatus::Warn(_) => "warn",
            FileStatus::Fail(_) => "fail",
            FileStatus::Missing => "missing",
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, FileStatus::Fail(_) | FileStatus::Missing)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileReport {
    pub participant_id: String,
    pub task: TaskId,
    pub path: PathBuf,
    pub status: FileStatus,
}

/// Sessions built from every readable recording, plus a report per expected file.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub sessions: Vec<Session>,
    pub files: Vec<FileReport>,
    /// Participant directories with no row in the label file.
    pub unlabeled_dirs: Vec<String>,
}

impl LoadedCorpus {
    pub fn n_failures(&self) -> usize {
        self.files.iter().filter(|f| f.status.is_failure()).count()
    }

    pub fn n_warnings(&self) -> usize {
        self.files
            .iter()
            .filter(|f| matches!(f.status, FileStatus::Warn(_)))
            .count()
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a corpus. Files that fail to parse are reported and left out of their session.
pub fn load_corpus(root: &Path, mode: ParseMode) -> Result<LoadedCorpus, CorpusError> {
    let labels_path = root.join(LABELS_FILE);
    let mut dirs = BTreeSet::new();
    for entry in std::fs::read_dir(root).map_err(io_err(root))? {
        let entry = entry.map_err(io_err(root))?;
        if entry.file_type().map_err(io_err(root))?.is_dir() {
            dirs.insert(entry.file_name().to_string_lossy().into_owned());
        }
    }
    if !labels_path.is_file() {
        if dirs.is_empty() {
            return Err(CorpusError::EmptyCorpus(root.to_path_buf()));
        }
        return Err(CorpusError::MissingLabels(root.to_path_buf()));
    }
    let labels = read_labels_file(&labels_path)?;
    if labels.is_empty() {
        return Err(CorpusError::EmptyCorpus(root.to_path_buf()));
    }

    let mut sessions = Vec::with_capacity(labels.len());
    let mut files = Vec::new();
    for (id, scores) in &labels {
        let mut session = Session::new(id.clone(), *scores);
        for task in TaskId::ALL {
            let path = root.join(id).join(task.file_name());
            let status = match std::fs::read(&path) {
                Err(e) if e.kind() == io::ErrorKind::NotFound => FileStatus::Missing,
                Err(e) => FileStatus::Fail(e.to_string()),
                Ok(bytes) => match parse_svc(&bytes, task, mode) {
                    Err(e) => FileStatus::Fail(e.to_string()),
                    Ok(parsed) => {
                        session.insert(parsed.recording);
                        if parsed.warnings.is_empty() {
                            FileStatus::Pass
                        } else {
                            FileStatus::Warn(
                                parsed.warnings.iter().map(ToString::to_string).collect(),
                            )
                        }
                    }
                },
            };
            files.push(FileReport {
                participant_id: id.clone(),
                task,
                path,
                status,
            });
        }
        sessions.push(session);
    }
    let unlabeled_dirs = dirs
        .into_iter()
        .filter(|d| !labels.contains_key(d))
        .collect();
    Ok(LoadedCorpus {
        sessions,
        files,
        unlabeled_dirs,
    })
}
