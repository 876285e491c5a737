//! Timing and ductus features per task, and the participant × feature matrix.
//!
//! Each inter-sample interval `t[i+1] - t[i]` is charged to the pen status of
//! sample `i`, so in-air time plus on-paper time equals the total task time
//! exactly. Gaps where the pen left the tablet's sensing range show up as a
//! long interval after the last in-air sample and are therefore charged to
//! in-air time.

use std::fmt;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::model::{Session, TaskId};
use crate::scalar::Scalar;
use crate::svc::{segment_strokes, PenStatus, StrokeKind, TaskRecording};

/// Number of columns in a canonical feature matrix.
pub const N_FEATURES: usize = TaskId::FEATURE_BEARING.len() * FeatureKind::ALL.len();

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("participant `{participant}` has no recording for task {task}")]
    MissingTask { participant: String, task: TaskId },
    #[error("no participants left to build a feature matrix from")]
    EmptyCorpus,
    #[error("row {row} has {found} values, expected {expected}")]
    ShapeMismatch {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("feature file: {0}")]
    Csv(#[from] csv::Error),
    #[error("feature file: cannot parse `{value}` in column `{column}`")]
    BadValue { column: String, value: String },
    #[error("feature file has no participant_id column")]
    MissingIdColumn,
    #[error("participant id `{0}` appears more than once")]
    DuplicateParticipant(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// The four per-task measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    InAirDuration,
    OnPaperDuration,
    TotalDuration,
    PenDownStrokes,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 4] = [
        FeatureKind::InAirDuration,
        FeatureKind::OnPaperDuration,
        FeatureKind::TotalDuration,
        FeatureKind::PenDownStrokes,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            FeatureKind::InAirDuration => "in_air_ms",
            FeatureKind::OnPaperDuration => "on_paper_ms",
            FeatureKind::TotalDuration => "total_ms",
            FeatureKind::PenDownStrokes => "pen_down_strokes",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FeatureKind::InAirDuration => "in-air duration",
            FeatureKind::OnPaperDuration => "on-paper duration",
            FeatureKind::TotalDuration => "total duration",
            FeatureKind::PenDownStrokes => "number of pen-down strokes",
        }
    }

    pub fn is_duration(self) -> bool {
        self != FeatureKind::PenDownStrokes
    }
}

/// A column of the canonical feature matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureColumn {
    pub task: TaskId,
    pub kind: FeatureKind,
}

impl FeatureColumn {
    /// Canonical order: task-major over I, II, III, VI, VII; feature-minor.
    pub fn canonical() -> Vec<FeatureColumn> {
        TaskId::FEATURE_BEARING
            .iter()
            .flat_map(|&task| {
                FeatureKind::ALL
                    .iter()
                    .map(move |&kind| FeatureColumn { task, kind })
            })
            .collect()
    }

    pub fn index(self) -> Option<usize> {
        let t = TaskId::FEATURE_BEARING
            .iter()
            .position(|&t| t == self.task)?;
        let k = FeatureKind::ALL.iter().position(|&k| k == self.kind)?;
        Some(t * FeatureKind::ALL.len() + k)
    }

    /// Machine name such as `clock_in_air_ms`.
    pub fn name(self) -> String {
        format!("{}_{}", self.task.slug(), self.kind.slug())
    }

    /// Report name such as `in-air duration (clock)`.
    pub fn display_name(self) -> String {
        format!("{} ({})", self.kind.label(), self.task.slug())
    }

    pub fn from_name(name: &str) -> Option<FeatureColumn> {
        FeatureColumn::canonical()
            .into_iter()
            .find(|c| c.name() == name)
    }
}

impl fmt::Display for FeatureColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_name())
    }
}

pub fn canonical_column_names() -> Vec<String> {
    FeatureColumn::canonical()
        .into_iter()
        .map(FeatureColumn::name)
        .collect()
}

/// Features of one task recording; durations in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TaskFeatures {
    pub in_air_ms: i64,
    pub on_paper_ms: i64,
    pub total_ms: i64,
    pub pen_down_strokes: i64,
}

impl TaskFeatures {
    pub fn get(&self, kind: FeatureKind) -> i64 {
        match kind {
            FeatureKind::InAirDuration => self.in_air_ms,
            FeatureKind::OnPaperDuration => self.on_paper_ms,
            FeatureKind::TotalDuration => self.total_ms,
            FeatureKind::PenDownStrokes => self.pen_down_strokes,
        }
    }
}

pub fn extract_task_features(recording: &TaskRecording) -> TaskFeatures {
    let mut f = TaskFeatures::default();
    for pair in recording.points.windows(2) {
        let dt = pair[1].timestamp - pair[0].timestamp;
        match pair[0].pen_status {
            PenStatus::InAir => f.in_air_ms += dt,
            PenStatus::OnPaper => f.on_paper_ms += dt,
        }
    }
    if let (Some(first), Some(last)) = (recording.points.first(), recording.points.last()) {
        f.total_ms = last.timestamp - first.timestamp;
    }
    f.pen_down_strokes = segment_strokes(recording)
        .iter()
        .filter(|s| s.kind == StrokeKind::OnPaper)
        .count() as i64;
    f
}

/// What to do with a participant missing a feature-bearing task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingTaskPolicy {
    #[default]
    Strict,
    DropParticipant,
}

/// Participants × features, rows ordered by participant id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub participant_ids: Vec<String>,
    pub column_names: Vec<String>,
    pub rows: Vec<Vec<T>>,
}

impl<T: Scalar> FeatureMatrix<T> {
    /// Builds a matrix from arbitrary rows. Rows are kept in the given order.
    pub fn new(
        participant_ids: Vec<String>,
        column_names: Vec<String>,
        rows: Vec<Vec<T>>,
    ) -> Result<Self, FeatureError> {
        if participant_ids.len() != rows.len() {
            return Err(FeatureError::ShapeMismatch {
                row: rows.len().min(participant_ids.len()),
                found: rows.len(),
                expected: participant_ids.len(),
            });
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != column_names.len() {
                return Err(FeatureError::ShapeMismatch {
                    row: i,
                    found: r.len(),
                    expected: column_names.len(),
                });
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = participant_ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(FeatureError::DuplicateParticipant(dup.clone()));
        }
        Ok(FeatureMatrix {
            participant_ids,
            column_names,
            rows,
        })
    }

    /// Matrix with generated ids `r000`, `r001`, ... and columns `f0`, `f1`, ...
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, FeatureError> {
        let width = rows.first().map_or(0, Vec::len);
        let ids = (0..rows.len()).map(|i| format!("r{i:04}")).collect();
        let names = (0..width).map(|j| format!("f{j}")).collect();
        Self::new(ids, names, rows)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.column_names.len()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Reorders rows so participant ids ascend.
    pub fn sorted_by_id(mut self) -> Self {
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by(|&a, &b| self.participant_ids[a].cmp(&self.participant_ids[b]));
        self.participant_ids = order
            .iter()
            .map(|&i| self.participant_ids[i].clone())
            .collect();
        let mut rows = std::mem::take(&mut self.rows);
        let mut taken: Vec<Option<Vec<T>>> = rows.drain(..).map(Some).collect();
        self.rows = order
            .iter()
            .map(|&i| taken[i].take().expect("index used once"))
            .collect();
        self
    }

    /// Column name as a report label; canonical columns get their long form.
    pub fn display_name(&self, j: usize) -> String {
        FeatureColumn::from_name(&self.column_names[j])
            .map(FeatureColumn::display_name)
            .unwrap_or_else(|| self.column_names[j].clone())
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), FeatureError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["participant_id".to_string()];
        header.extend(self.column_names.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.participant_ids.iter().zip(&self.rows) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self, FeatureError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("participant_id") {
            return Err(FeatureError::MissingIdColumn);
        }
        let column_names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            ids.push(rec[0].to_string());
            let row = rec
                .iter()
                .skip(1)
                .zip(&column_names)
                .map(|(v, col)| {
                    v.parse::<T>().map_err(|_| FeatureError::BadValue {
                        column: col.clone(),
                        value: v.to_string(),
                    })
                })
                .collect::<Result<Vec<T>, _>>()?;
            rows.push(row);
        }
        Self::new(ids, column_names, rows)
    }

    pub fn read_csv_file(path: &Path) -> Result<Self, FeatureError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// A participant left out of the matrix under [`MissingTaskPolicy::DropParticipant`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedParticipant {
    pub participant_id: String,
    pub missing: Vec<TaskId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledMatrix<T> {
    pub matrix: FeatureMatrix<T>,
    pub dropped: Vec<DroppedParticipant>,
}

/// Extracts the 20 canonical features for each session. Loop tasks are ignored.
pub fn assemble_feature_matrix<T: Scalar>(
    sessions: &[Session],
    policy: MissingTaskPolicy,
) -> Result<AssembledMatrix<T>, FeatureError> {
    let mut order: Vec<&Session> = sessions.iter().collect();
    order.sort_by(|a, b| a.participant_id.cmp(&b.participant_id));

    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for session in order {
        let missing: Vec<TaskId> = TaskId::FEATURE_BEARING
            .into_iter()
            .filter(|t| !session.recordings.contains_key(t))
            .collect();
        if let Some(&task) = missing.first() {
            match policy {
                MissingTaskPolicy::Strict => {
                    return Err(FeatureError::MissingTask {
                        participant: session.participant_id.clone(),
                        task,
                    })
                }
                MissingTaskPolicy::DropParticipant => {
                    log::warn!(
                        "dropping participant {}: missing tasks {:?}",
                        session.participant_id,
                        missing
                    );
                    dropped.push(DroppedParticipant {
                        participant_id: session.participant_id.clone(),
                        missing,
                    });
                    continue;
                }
            }
        }
        let mut row = Vec::with_capacity(N_FEATURES);
        for task in TaskId::FEATURE_BEARING {
            let f = extract_task_features(&session.recordings[&task]);
            for kind in FeatureKind::ALL {
                row.push(T::from_i64(f.get(kind)).unwrap_or_else(T::nan));
            }
        }
        ids.push(session.participant_id.clone());
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    Ok(AssembledMatrix {
        matrix: FeatureMatrix::new(ids, canonical_column_names(), rows)?,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DassScores;
    use crate::svc::SamplePoint;

    fn rec(task: TaskId, pts: &[(i64, u8)]) -> TaskRecording {
        TaskRecording::new(
            task,
            pts.iter()
                .map(|&(t, s)| SamplePoint {
                    x: 0,
                    y: 0,
                    timestamp: t,
                    pen_status: if s == 1 {
                        PenStatus::OnPaper
                    } else {
                        PenStatus::InAir
                    },
                    azimuth_raw: 0,
                    altitude_raw: 0,
                    pressure: u32::from(s),
                })
                .collect(),
        )
    }

    #[test]
    fn interval_attribution_example() {
        let f = extract_task_features(&rec(TaskId::House, &[(0, 1), (10, 1), (20, 0), (30, 1)]));
        assert_eq!(
            f,
            TaskFeatures {
                in_air_ms: 10,
                on_paper_ms: 20,
                total_ms: 30,
                pen_down_strokes: 2
            }
        );
    }

    #[test]
    fn evenly_spaced_pen_down() {
        let n = 13;
        let pts: Vec<_> = (0..n).map(|i| (1000 + i * 10, 1)).collect();
        let f = extract_task_features(&rec(TaskId::House, &pts));
        assert_eq!(f.in_air_ms, 0);
        assert_eq!(f.on_paper_ms, (n - 1) * 10);
        assert_eq!(f.total_ms, (n - 1) * 10);
        assert_eq!(f.pen_down_strokes, 1);
    }

    #[test]
    fn degenerate_recordings() {
        assert_eq!(
            extract_task_features(&rec(TaskId::Clock, &[(5, 1)])),
            TaskFeatures {
                pen_down_strokes: 1,
                ..Default::default()
            }
        );
        assert_eq!(
            extract_task_features(&rec(TaskId::Clock, &[])),
            TaskFeatures::default()
        );
    }

    #[test]
    fn canonical_columns() {
        let names = canonical_column_names();
        assert_eq!(names.len(), 20);
        assert_eq!(names[0], "pentagons_in_air_ms");
        assert_eq!(names[12], "clock_in_air_ms");
        assert_eq!(names[19], "cursive_pen_down_strokes");
        for (i, c) in FeatureColumn::canonical().into_iter().enumerate() {
            assert_eq!(c.index(), Some(i));
            assert_eq!(FeatureColumn::from_name(&c.name()), Some(c));
        }
        assert_eq!(
            FeatureColumn::from_name("clock_in_air_ms")
                .unwrap()
                .display_name(),
            "in-air duration (clock)"
        );
    }

    fn session(id: &str, tasks: &[TaskId]) -> Session {
        let mut s = Session::new(id, DassScores::new(1, 2, 3).unwrap());
        for &t in tasks {
            s.insert(rec(t, &[(0, 1), (10, 0), (25, 1), (40, 1)]));
        }
        s
    }

    #[test]
    fn assemble_orders_rows_and_columns() {
        let sessions = vec![session("b", &TaskId::ALL), session("a", &TaskId::ALL)];
        let m = assemble_feature_matrix::<f64>(&sessions, MissingTaskPolicy::Strict)
            .unwrap()
            .matrix;
        assert_eq!(m.participant_ids, vec!["a", "b"]);
        assert_eq!(m.rows.len(), 2);
        assert_eq!(m.rows[0][..4], [15.0, 25.0, 40.0, 2.0]);
        assert_eq!(m.column_names, canonical_column_names());
    }

    #[test]
    fn strict_policy_reports_missing_task() {
        let tasks: Vec<_> = TaskId::ALL
            .into_iter()
            .filter(|&t| t != TaskId::Clock)
            .collect();
        let err =
            assemble_feature_matrix::<f64>(&[session("a", &tasks)], MissingTaskPolicy::Strict)
                .unwrap_err();
        assert!(matches!(
            err,
            FeatureError::MissingTask {
                task: TaskId::Clock,
                ..
            }
        ));
    }

    #[test]
    fn drop_policy_excludes_loop_only_sessions() {
        let sessions = vec![
            session("a", &[TaskId::LoopsLeft, TaskId::LoopsRight]),
            session("b", &TaskId::FEATURE_BEARING),
        ];
        let out =
            assemble_feature_matrix::<f32>(&sessions, MissingTaskPolicy::DropParticipant).unwrap();
        assert_eq!(out.matrix.participant_ids, vec!["b"]);
        assert_eq!(out.dropped.len(), 1);
        assert_eq!(out.dropped[0].missing, TaskId::FEATURE_BEARING.to_vec());

        let only_loops = vec![session("a", &[TaskId::LoopsLeft])];
        assert!(matches!(
            assemble_feature_matrix::<f64>(&only_loops, MissingTaskPolicy::DropParticipant),
            Err(FeatureError::EmptyCorpus)
        ));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let ids = vec!["a".to_string(), "b".to_string(), "a".to_string()];
        let r = FeatureMatrix::<f64>::new(ids, vec!["f0".into()], vec![vec![1.0]; 3]);
        assert!(matches!(r, Err(FeatureError::DuplicateParticipant(id)) if id == "a"));
    }

    #[test]
    fn csv_round_trip() {
        let sessions = vec![session("p2", &TaskId::ALL), session("p1", &TaskId::ALL)];
        let m = assemble_feature_matrix::<f64>(&sessions, MissingTaskPolicy::Strict)
            .unwrap()
            .matrix;
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("participant_id,pentagons_in_air_ms,"));
        assert!(text.contains("\np1,15,25,40,2,"));
        let back = FeatureMatrix::<f64>::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn sorted_by_id_permutes_rows() {
        let m = FeatureMatrix::new(
            vec!["c".into(), "a".into(), "b".into()],
            vec!["x".into()],
            vec![vec![3.0], vec![1.0], vec![2.0]],
        )
        .unwrap()
        .sorted_by_id();
        assert_eq!(m.participant_ids, vec!["a", "b", "c"]);
        assert_eq!(m.rows, vec![vec![1.0], vec![2.0], vec![3.0]]);
    }
}
