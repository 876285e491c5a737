//! Session data model, DASS severity scoring, dichotomized labels and
//! label co-occurrence statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::svc::TaskRecording;

/// Highest attainable score on one DASS-42 scale (14 items rated 0..=3).
pub const MAX_SCALE_SCORE: u32 = 42;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{scale} score {score} outside 0..={MAX_SCALE_SCORE}")]
    ScoreOutOfRange { scale: Scale, score: u32 },
    #[error("no labels to cross-tabulate")]
    EmptyInput,
    #[error("contingency table has an empty row or column: {table:?}")]
    DegenerateMarginal { table: [[u64; 2]; 2] },
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("unknown scale `{0}`")]
    UnknownScale(String),
    #[error("duplicate participant id `{0}` in label file")]
    DuplicateParticipant(String),
    #[error("label file: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// The seven recorded tasks, in acquisition order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskId {
    Pentagons,
    House,
    Handprint,
    LoopsLeft,
    LoopsRight,
    Clock,
    Cursive,
}

impl TaskId {
    pub const ALL: [TaskId; 7] = [
        TaskId::Pentagons,
        TaskId::House,
        TaskId::Handprint,
        TaskId::LoopsLeft,
        TaskId::LoopsRight,
        TaskId::Clock,
        TaskId::Cursive,
    ];

    /// Tasks features are extracted from. The loop tasks have no pen-up movement.
    pub const FEATURE_BEARING: [TaskId; 5] = [
        TaskId::Pentagons,
        TaskId::House,
        TaskId::Handprint,
        TaskId::Clock,
        TaskId::Cursive,
    ];

    /// 1-based task number (I..VII).
    pub fn number(self) -> u8 {
        match self {
            TaskId::Pentagons => 1,
            TaskId::House => 2,
            TaskId::Handprint => 3,
            TaskId::LoopsLeft => 4,
            TaskId::LoopsRight => 5,
            TaskId::Clock => 6,
            TaskId::Cursive => 7,
        }
    }

    pub fn from_number(n: u8) -> Option<TaskId> {
        TaskId::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn roman(self) -> &'static str {
        ["I", "II", "III", "IV", "V", "VI", "VII"][usize::from(self.number() - 1)]
    }

    /// Short lowercase name used in column names and report labels.
    pub fn slug(self) -> &'static str {
        match self {
            TaskId::Pentagons => "pentagons",
            TaskId::House => "house",
            TaskId::Handprint => "handprint",
            TaskId::LoopsLeft => "loops_left",
            TaskId::LoopsRight => "loops_right",
            TaskId::Clock => "clock",
            TaskId::Cursive => "cursive",
        }
    }

    pub fn is_feature_bearing(self) -> bool {
        !matches!(self, TaskId::LoopsLeft | TaskId::LoopsRight)
    }

    /// File name of this task inside a participant directory.
    pub fn file_name(self) -> String {
        format!("task{}.svc", self.number())
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.roman(), self.slug())
    }
}

impl FromStr for TaskId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        TaskId::ALL
            .into_iter()
            .find(|t| {
                t.slug() == lower
                    || t.roman().eq_ignore_ascii_case(&lower)
                    || t.number().to_string() == lower
            })
            .ok_or_else(|| ModelError::UnknownTask(s.to_string()))
    }
}

/// One of the three DASS scales; also names the binary classification target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Depression,
    Anxiety,
    Stress,
}

impl Scale {
    pub const ALL: [Scale; 3] = [Scale::Depression, Scale::Anxiety, Scale::Stress];

    /// Inclusive lower bounds of Mild, Moderate, Severe and Extremely Severe.
    fn band_starts(self) -> [u32; 4] {
        match self {
            Scale::Depression => [10, 14, 21, 28],
            Scale::Anxiety => [8, 10, 15, 20],
            Scale::Stress => [15, 19, 26, 34],
        }
    }

    /// Inclusive score range of `level` on this scale.
    pub fn band(self, level: SeverityLevel) -> (u32, u32) {
        let starts = self.band_starts();
        let i = level as usize;
        let lo = if i == 0 { 0 } else { starts[i - 1] };
        let hi = if i == 4 {
            MAX_SCALE_SCORE
        } else {
            starts[i] - 1
        };
        (lo, hi)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scale::Depression => "depression",
            Scale::Anxiety => "anxiety",
            Scale::Stress => "stress",
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scale {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "depression" | "dep" | "depressed" => Ok(Scale::Depression),
            "anxiety" | "anx" | "anxious" => Ok(Scale::Anxiety),
            "stress" | "str" | "stressed" => Ok(Scale::Stress),
            _ => Err(ModelError::UnknownScale(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SeverityLevel {
    Normal = 0,
    Mild = 1,
    Moderate = 2,
    Severe = 3,
    ExtremelySevere = 4,
}

impl SeverityLevel {
    pub const ALL: [SeverityLevel; 5] = [
        SeverityLevel::Normal,
        SeverityLevel::Mild,
        SeverityLevel::Moderate,
        SeverityLevel::Severe,
        SeverityLevel::ExtremelySevere,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeverityLevel::Normal => "normal",
            SeverityLevel::Mild => "mild",
            SeverityLevel::Moderate => "moderate",
            SeverityLevel::Severe => "severe",
            SeverityLevel::ExtremelySevere => "extremely_severe",
        }
    }
}

/// Scores on the three DASS scales, each in `0..=42`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DassScores {
    pub depression: u32,
    pub anxiety: u32,
    pub stress: u32,
}

impl DassScores {
    pub fn new(depression: u32, anxiety: u32, stress: u32) -> Result<Self, ModelError> {
        let s = DassScores {
            depression,
            anxiety,
            stress,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn get(&self, scale: Scale) -> u32 {
        match scale {
            Scale::Depression => self.depression,
            Scale::Anxiety => self.anxiety,
            Scale::Stress => self.stress,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for scale in Scale::ALL {
            let score = self.get(scale);
            if score > MAX_SCALE_SCORE {
                return Err(ModelError::ScoreOutOfRange { scale, score });
            }
        }
        Ok(())
    }
}

/// Binary emotional state labels: a state is present unless its scale is in the Normal band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct EmotionLabels {
    pub depressed: bool,
    pub anxious: bool,
    pub stressed: bool,
}

impl EmotionLabels {
    pub fn get(&self, scale: Scale) -> bool {
        match scale {
            Scale::Depression => self.depressed,
            Scale::Anxiety => self.anxious,
            Scale::Stress => self.stressed,
        }
    }

    pub fn set(&mut self, scale: Scale, value: bool) {
        match scale {
            Scale::Depression => self.depressed = value,
            Scale::Anxiety => self.anxious = value,
            Scale::Stress => self.stressed = value,
        }
    }
}

/// Severity band of `score` on `scale`.
pub fn severity_level(scale: Scale, score: u32) -> Result<SeverityLevel, ModelError> {
    if score > MAX_SCALE_SCORE {
        return Err(ModelError::ScoreOutOfRange { scale, score });
    }
    let band = scale
        .band_starts()
        .iter()
        .take_while(|&&start| score >= start)
        .count();
    Ok(SeverityLevel::ALL[band])
}

/// Upper edge of the Normal band: the label is positive for scores strictly above it.
pub fn normal_upper_bound(scale: Scale) -> u32 {
    scale.band(SeverityLevel::Normal).1
}

pub fn dichotomize(scores: &DassScores) -> EmotionLabels {
    EmotionLabels {
        depressed: scores.depression > normal_upper_bound(Scale::Depression),
        anxious: scores.anxiety > normal_upper_bound(Scale::Anxiety),
        stressed: scores.stress > normal_upper_bound(Scale::Stress),
    }
}

/// One participant: DASS scores plus whatever task recordings are available.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub participant_id: String,
    pub scores: DassScores,
    pub recordings: BTreeMap<TaskId, TaskRecording>,
}

impl Session {
    pub fn new(participant_id: impl Into<String>, scores: DassScores) -> Self {
        Session {
            participant_id: participant_id.into(),
            scores,
            recordings: BTreeMap::new(),
        }
    }

    /// Adds a recording under its own task, replacing any previous one.
    pub fn insert(&mut self, recording: TaskRecording) -> Option<TaskRecording> {
        self.recordings.insert(recording.task, recording)
    }

    pub fn labels(&self) -> EmotionLabels {
        dichotomize(&self.scores)
    }
}

/// Pair of states compared in a cross table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelPair {
    AnxStr,
    StrDep,
    AnxDep,
}

impl LabelPair {
    pub const ALL: [LabelPair; 3] = [LabelPair::AnxStr, LabelPair::StrDep, LabelPair::AnxDep];

    pub fn scales(self) -> (Scale, Scale) {
        match self {
            LabelPair::AnxStr => (Scale::Anxiety, Scale::Stress),
            LabelPair::StrDep => (Scale::Stress, Scale::Depression),
            LabelPair::AnxDep => (Scale::Anxiety, Scale::Depression),
        }
    }
}

impl fmt::Display for LabelPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.scales();
        write!(f, "{a}/{b}")
    }
}

/// 2×2 co-occurrence table. Index 0 is the negative state, 1 the positive one;
/// rows follow the first scale of the pair, columns the second.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossTable {
    pub pair: LabelPair,
    pub counts: [[u64; 2]; 2],
    pub percentages: [[f64; 2]; 2],
}

impl CrossTable {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn cross_tabulate(labels: &[EmotionLabels], pair: LabelPair) -> Result<CrossTable, ModelError> {
    if labels.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    let (first, second) = pair.scales();
    let mut counts = [[0u64; 2]; 2];
    for l in labels {
        counts[usize::from(l.get(first))][usize::from(l.get(second))] += 1;
    }
    let n = labels.len() as f64;
    let percentages = counts.map(|row| row.map(|c| 100.0 * c as f64 / n));
    Ok(CrossTable {
        pair,
        counts,
        percentages,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare<T> {
    pub statistic: T,
    pub p_value: T,
}

/// Pearson's χ² test of independence on a 2×2 table, without continuity correction.
pub fn chi_square_2x2<T: Scalar>(table: [[u64; 2]; 2]) -> Result<ChiSquare<T>, ModelError> {
    let [[a, b], [c, d]] = table;
    let marginals = [a + b, c + d, a + c, b + d];
    if marginals.contains(&0) {
        return Err(ModelError::DegenerateMarginal { table });
    }
    let n = a + b + c + d;
    // The numerator can overflow u64 for large tables; compute it in floating point.
    let cross = a as f64 * d as f64 - b as f64 * c as f64;
    let denom: f64 = marginals.iter().map(|&m| m as f64).product();
    let statistic = n as f64 * cross * cross / denom;
    Ok(ChiSquare {
        statistic: T::from_f64_lossy(statistic),
        p_value: T::from_f64_lossy(chi2_1df_survival(statistic)),
    })
}

/// Survival function of the χ² distribution with one degree of freedom.
pub fn chi2_1df_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    statrs::function::erf::erfc((x / 2.0).sqrt())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LabelRow {
    participant_id: String,
    depression: u32,
    anxiety: u32,
    stress: u32,
}

/// Reads a label file (`participant_id,depression,anxiety,stress`) into an ordered map.
pub fn read_labels_csv<R: io::Read>(reader: R) -> Result<BTreeMap<String, DassScores>, ModelError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = BTreeMap::new();
    for row in rdr.deserialize() {
        let row: LabelRow = row?;
        let scores = DassScores::new(row.depression, row.anxiety, row.stress)?;
        if out.insert(row.participant_id.clone(), scores).is_some() {
            return Err(ModelError::DuplicateParticipant(row.participant_id));
        }
    }
    Ok(out)
}

pub fn read_labels_file(path: &Path) -> Result<BTreeMap<String, DassScores>, ModelError> {
    read_labels_csv(std::fs::File::open(path)?)
}

pub fn write_labels_csv<'a, W, I>(writer: W, rows: I) -> Result<(), ModelError>
where
    W: io::Write,
    I: IntoIterator<Item = (&'a str, &'a DassScores)>,
{
    let mut w = csv::Writer::from_writer(writer);
    for (id, s) in rows {
        w.serialize(LabelRow {
            participant_id: id.to_string(),
            depression: s.depression,
            anxiety: s.anxiety,
            stress: s.stress,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn severity_band_edges() {
        assert_eq!(
            severity_level(Scale::Depression, 9).unwrap(),
            SeverityLevel::Normal
        );
        assert_eq!(
            severity_level(Scale::Depression, 10).unwrap(),
            SeverityLevel::Mild
        );
        assert_eq!(
            severity_level(Scale::Anxiety, 20).unwrap(),
            SeverityLevel::ExtremelySevere
        );
        assert_eq!(
            severity_level(Scale::Stress, 0).unwrap(),
            SeverityLevel::Normal
        );
        assert_eq!(
            severity_level(Scale::Stress, 33).unwrap(),
            SeverityLevel::Severe
        );
        assert_eq!(
            severity_level(Scale::Stress, 34).unwrap(),
            SeverityLevel::ExtremelySevere
        );
        assert!(matches!(
            severity_level(Scale::Anxiety, 43),
            Err(ModelError::ScoreOutOfRange { .. })
        ));
    }

    #[test]
    fn severity_is_monotone() {
        for scale in Scale::ALL {
            let levels: Vec<_> = (0..=MAX_SCALE_SCORE)
                .map(|s| severity_level(scale, s).unwrap())
                .collect();
            assert!(levels.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn bands_partition_the_score_range() {
        for scale in Scale::ALL {
            let mut next = 0;
            for level in SeverityLevel::ALL {
                let (lo, hi) = scale.band(level);
                assert_eq!(lo, next);
                assert!(hi >= lo);
                for s in lo..=hi {
                    assert_eq!(severity_level(scale, s).unwrap(), level);
                }
                next = hi + 1;
            }
            assert_eq!(next, MAX_SCALE_SCORE + 1);
        }
    }

    #[test]
    fn dichotomize_edges() {
        let none = dichotomize(&DassScores::new(9, 7, 14).unwrap());
        assert_eq!(none, EmotionLabels::default());
        let all = dichotomize(&DassScores::new(10, 8, 15).unwrap());
        assert!(all.depressed && all.anxious && all.stressed);
        assert_eq!(
            dichotomize(&DassScores::new(0, 0, 0).unwrap()),
            EmotionLabels::default()
        );
    }

    #[test]
    fn cross_tab_examples() {
        let t = cross_tabulate(
            &[EmotionLabels {
                depressed: true,
                anxious: true,
                stressed: true,
            }],
            LabelPair::AnxStr,
        )
        .unwrap();
        assert_eq!(t.percentages[1][1], 100.0);

        let four: Vec<_> = [(false, false), (false, true), (true, false), (true, true)]
            .into_iter()
            .map(|(a, s)| EmotionLabels {
                depressed: false,
                anxious: a,
                stressed: s,
            })
            .collect();
        let t = cross_tabulate(&four, LabelPair::AnxStr).unwrap();
        assert!(t.percentages.iter().flatten().all(|&p| p == 25.0));

        let mut ten = vec![EmotionLabels::default(); 10];
        for l in ten.iter_mut().take(3) {
            l.anxious = true;
            l.stressed = true;
        }
        let t = cross_tabulate(&ten, LabelPair::AnxStr).unwrap();
        assert_eq!(t.counts[1][1], 3);
        assert!((t.percentages[1][1] - 30.0).abs() < 1e-12);
        assert_eq!(t.total(), 10);

        assert!(matches!(
            cross_tabulate(&[], LabelPair::StrDep),
            Err(ModelError::EmptyInput)
        ));
    }

    #[test]
    fn chi_square_examples() {
        let r = chi_square_2x2::<f64>([[25, 25], [25, 25]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);

        let r = chi_square_2x2::<f64>([[30, 10], [10, 30]]).unwrap();
        assert!((r.statistic - 20.0).abs() < 1e-12);
        assert!((r.p_value - 7.744e-6).abs() < 1e-8, "{}", r.p_value);

        let r32 = chi_square_2x2::<f32>([[30, 10], [10, 30]]).unwrap();
        assert!((r32.statistic - 20.0).abs() < 1e-5);

        assert!(matches!(
            chi_square_2x2::<f64>([[10, 0], [10, 0]]),
            Err(ModelError::DegenerateMarginal { .. })
        ));
    }

    #[test]
    fn chi_square_swap_invariance() {
        let t = [[12, 5], [7, 20]];
        let base = chi_square_2x2::<f64>(t).unwrap().statistic;
        let rows = chi_square_2x2::<f64>([t[1], t[0]]).unwrap().statistic;
        let both = chi_square_2x2::<f64>([[t[1][1], t[1][0]], [t[0][1], t[0][0]]])
            .unwrap()
            .statistic;
        assert!((base - rows).abs() < 1e-12);
        assert!((base - both).abs() < 1e-12);
    }

    #[test]
    fn task_parsing() {
        assert_eq!("clock".parse::<TaskId>().unwrap(), TaskId::Clock);
        assert_eq!("VI".parse::<TaskId>().unwrap(), TaskId::Clock);
        assert_eq!("4".parse::<TaskId>().unwrap(), TaskId::LoopsLeft);
        assert_eq!(TaskId::from_number(7), Some(TaskId::Cursive));
        assert_eq!(TaskId::from_number(0), None);
        assert_eq!(TaskId::Cursive.file_name(), "task7.svc");
    }

    #[test]
    fn labels_csv_round_trip() {
        let data = "participant_id,depression,anxiety,stress\np1,3,6,6\np2,11,2,5\n";
        let labels = read_labels_csv(data.as_bytes()).unwrap();
        assert_eq!(labels["p2"], DassScores::new(11, 2, 5).unwrap());
        let mut out = Vec::new();
        write_labels_csv(&mut out, labels.iter().map(|(k, v)| (k.as_str(), v))).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), data);

        let bad = "participant_id,depression,anxiety,stress\np1,50,0,0\n";
        assert!(matches!(
            read_labels_csv(bad.as_bytes()),
            Err(ModelError::ScoreOutOfRange { .. })
        ));
        let dup = "participant_id,depression,anxiety,stress\np1,1,0,0\np1,2,0,0\n";
        assert!(matches!(
            read_labels_csv(dup.as_bytes()),
            Err(ModelError::DuplicateParticipant(_))
        ));
    }
}
