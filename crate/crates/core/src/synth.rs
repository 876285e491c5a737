//! Seeded generator of synthetic handwriting corpora with planted effects.
//!
//! Each participant gets labels drawn from the configured prevalences
//! (optionally correlated through a shared Gaussian factor), DASS scores
//! inside a band consistent with those labels, and seven task recordings.
//! Feature-bearing tasks alternate pen-down strokes and in-air gaps whose
//! durations come from per-task base distributions, multiplied by any planted
//! effect that applies to a positive label. Loop tasks are single pen-down runs.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::model::{
    dichotomize, write_labels_csv, DassScores, EmotionLabels, ModelError, Scale, Session,
    SeverityLevel, TaskId,
};
use crate::seed::{derive_seed, stream_rng, StreamRng};
use crate::svc::{serialize_svc, PenStatus, SamplePoint, TaskRecording};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic corpus configuration: {0}")]
    InvalidConfig(String),
    #[error("corpus has no participants")]
    EmptyCorpus,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Which duration or count parameter an effect scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectChannel {
    InAir,
    OnPaper,
    Strokes,
}

/// Multiplies one parameter of one task for participants carrying `emotion`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedEffect {
    pub emotion: Scale,
    pub task: TaskId,
    pub channel: EffectChannel,
    pub factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prevalence {
    pub depression: f64,
    pub anxiety: f64,
    pub stress: f64,
}

impl Prevalence {
    pub fn uniform(p: f64) -> Self {
        Prevalence {
            depression: p,
            anxiety: p,
            stress: p,
        }
    }

    pub fn get(&self, scale: Scale) -> f64 {
        match scale {
            Scale::Depression => self.depression,
            Scale::Anxiety => self.anxiety,
            Scale::Stress => self.stress,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_participants: usize,
    pub seed: u64,
    pub sampling_period_ms: u32,
    pub label_prevalence: Prevalence,
    /// Correlation of the latent factors behind the three labels, in `[0, 1)`.
    pub label_correlation: f64,
    pub effects: Vec<PlantedEffect>,
}

impl Default for SynthConfig {
    /// 129 participants; effects follow the clock-drawing contrasts of a
    /// depressed participant (on-paper 36.8 s vs 8.7 s, in-air 39 s vs 22 s)
    /// and a stressed one (in-air 46 s vs 22 s).
    fn default() -> Self {
        SynthConfig {
            n_participants: 129,
            seed: 0,
            sampling_period_ms: 10,
            label_prevalence: Prevalence::uniform(0.4),
            label_correlation: 0.0,
            effects: vec![
                PlantedEffect {
                    emotion: Scale::Depression,
                    task: TaskId::Clock,
                    channel: EffectChannel::OnPaper,
                    factor: 36.8 / 8.7,
                },
                PlantedEffect {
                    emotion: Scale::Depression,
                    task: TaskId::Clock,
                    channel: EffectChannel::InAir,
                    factor: 39.0 / 22.0,
                },
                PlantedEffect {
                    emotion: Scale::Stress,
                    task: TaskId::Clock,
                    channel: EffectChannel::InAir,
                    factor: 46.0 / 22.0,
                },
            ],
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.n_participants == 0 {
            return bad("n_participants must be at least 1".into());
        }
        if self.sampling_period_ms == 0 {
            return bad("sampling_period_ms must be at least 1".into());
        }
        for scale in Scale::ALL {
            let p = self.label_prevalence.get(scale);
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{scale} prevalence {p} outside [0, 1]"));
            }
        }
        if !(0.0..1.0).contains(&self.label_correlation) {
            return bad(format!(
                "label_correlation {} outside [0, 1)",
                self.label_correlation
            ));
        }
        for e in &self.effects {
            if !(e.factor.is_finite() && e.factor > 0.0) {
                return bad(format!("effect factor {} must be positive", e.factor));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let c: SynthConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Product of planted factors on `(task, channel)` for a participant with `labels`.
    pub fn multiplier(&self, labels: &EmotionLabels, task: TaskId, channel: EffectChannel) -> f64 {
        self.effects
            .iter()
            .filter(|e| e.task == task && e.channel == channel && labels.get(e.emotion))
            .map(|e| e.factor)
            .product()
    }
}

/// Base distribution parameters of one task before any effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskProfile {
    pub task: TaskId,
    pub mean_strokes: f64,
    pub stroke_ms: f64,
    pub gap_ms: f64,
}

/// Per-task base rates. The clock task lands near 8.7 s on paper and 22 s in air.
pub const TASK_PROFILES: [TaskProfile; 7] = [
    TaskProfile {
        task: TaskId::Pentagons,
        mean_strokes: 10.0,
        stroke_ms: 600.0,
        gap_ms: 700.0,
    },
    TaskProfile {
        task: TaskId::House,
        mean_strokes: 14.0,
        stroke_ms: 550.0,
        gap_ms: 700.0,
    },
    TaskProfile {
        task: TaskId::Handprint,
        mean_strokes: 45.0,
        stroke_ms: 300.0,
        gap_ms: 450.0,
    },
    TaskProfile {
        task: TaskId::LoopsLeft,
        mean_strokes: 1.0,
        stroke_ms: 8000.0,
        gap_ms: 0.0,
    },
    TaskProfile {
        task: TaskId::LoopsRight,
        mean_strokes: 1.0,
        stroke_ms: 7000.0,
        gap_ms: 0.0,
    },
    TaskProfile {
        task: TaskId::Clock,
        mean_strokes: 25.0,
        stroke_ms: 350.0,
        gap_ms: 900.0,
    },
    TaskProfile {
        task: TaskId::Cursive,
        mean_strokes: 20.0,
        stroke_ms: 1200.0,
        gap_ms: 500.0,
    },
];

pub fn task_profile(task: TaskId) -> TaskProfile {
    TASK_PROFILES[usize::from(task.number() - 1)]
}

/// Log-scale standard deviations of the duration noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub participant_speed_sigma: f64,
    pub task_speed_sigma: f64,
    pub segment_sigma: f64,
    /// Relative half-width of the uniform jitter on the stroke count.
    pub stroke_count_jitter: f64,
    /// Probability that an in-air gap leaves the sensing range and is mostly unsampled.
    pub out_of_range_gap_probability: f64,
}

pub const NOISE: NoiseModel = NoiseModel {
    participant_speed_sigma: 0.25,
    task_speed_sigma: 0.15,
    segment_sigma: 0.35,
    stroke_count_jitter: 0.2,
    out_of_range_gap_probability: 0.25,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRow {
    pub participant_id: String,
    pub depressed: bool,
    pub anxious: bool,
    pub stressed: bool,
}

/// Everything needed to reproduce and interpret a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub config: SynthConfig,
    pub task_profiles: Vec<TaskProfile>,
    pub noise: NoiseModel,
    pub ground_truth: Vec<GroundTruthRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub sessions: Vec<Session>,
    pub ground_truth: Vec<EmotionLabels>,
    pub manifest: SynthManifest,
}

fn participant_id(i: usize, n: usize) -> String {
    let width = n.to_string().len().max(3);
    format!("p{:0width$}", i + 1)
}

fn draw_labels(config: &SynthConfig, rng: &mut StreamRng) -> EmotionLabels {
    let std_normal = Normal::standard();
    let rho = config.label_correlation;
    let shared: f64 = rng.sample(StandardNormal);
    let mut labels = EmotionLabels::default();
    for scale in Scale::ALL {
        let own: f64 = rng.sample(StandardNormal);
        let latent = rho.sqrt() * shared + (1.0 - rho).sqrt() * own;
        labels.set(
            scale,
            std_normal.cdf(latent) < config.label_prevalence.get(scale),
        );
    }
    labels
}

/// Uniform within the Normal band for a negative label; otherwise a uniformly
/// chosen non-Normal band, then uniform within it.
fn draw_score(scale: Scale, positive: bool, rng: &mut StreamRng) -> u32 {
    let level = if positive {
        SeverityLevel::ALL[rng.random_range(1..SeverityLevel::ALL.len())]
    } else {
        SeverityLevel::Normal
    };
    let (lo, hi) = scale.band(level);
    rng.random_range(lo..=hi)
}

struct Pen<'a> {
    rng: &'a mut StreamRng,
    t: i64,
    x: i64,
    y: i64,
    points: Vec<SamplePoint>,
}

impl Pen<'_> {
    fn emit(&mut self, status: PenStatus, step: i64, dt: i64) {
        self.x += self.rng.random_range(-step..=step);
        self.y += self.rng.random_range(-step..=step);
        let pressure = match status {
            PenStatus::OnPaper => self.rng.random_range(50..=1023),
            PenStatus::InAir => 0,
        };
        self.points.push(SamplePoint {
            x: self.x,
            y: self.y,
            timestamp: self.t,
            pen_status: status,
            azimuth_raw: 1900,
            altitude_raw: 540,
            pressure,
        });
        self.t += dt;
    }
}

fn samples_for(duration_ms: f64, period: i64) -> i64 {
    ((duration_ms / period as f64).round() as i64).max(1)
}

fn synth_recording(
    config: &SynthConfig,
    task: TaskId,
    labels: &EmotionLabels,
    speed: f64,
    rng: &mut StreamRng,
) -> TaskRecording {
    let profile = task_profile(task);
    let period = i64::from(config.sampling_period_ms);
    let task_speed = LogNormal::new(0.0, NOISE.task_speed_sigma)
        .expect("valid sigma")
        .sample(rng);
    let segment = LogNormal::new(0.0, NOISE.segment_sigma).expect("valid sigma");
    let on_mult = config.multiplier(labels, task, EffectChannel::OnPaper);
    let air_mult = config.multiplier(labels, task, EffectChannel::InAir);
    let strokes_mult = config.multiplier(labels, task, EffectChannel::Strokes);

    let t0 = rng.random_range(10_000_000..20_000_000);
    let (x0, y0) = (
        rng.random_range(20_000..60_000),
        rng.random_range(20_000..50_000),
    );
    let mut pen = Pen {
        rng,
        t: t0,
        x: x0,
        y: y0,
        points: Vec::new(),
    };

    if !task.is_feature_bearing() {
        let d = profile.stroke_ms * on_mult * speed * task_speed;
        for _ in 0..samples_for(d, period) {
            pen.emit(PenStatus::OnPaper, 15, period);
        }
        return TaskRecording::new(task, pen.points);
    }

    let jitter = NOISE.stroke_count_jitter;
    let k =
        (profile.mean_strokes * strokes_mult * pen.rng.random_range(1.0 - jitter..=1.0 + jitter))
            .round()
            .max(1.0) as usize;
    for s in 0..k {
        let d_on = profile.stroke_ms * on_mult * speed * task_speed * segment.sample(pen.rng);
        for _ in 0..samples_for(d_on, period) {
            pen.emit(PenStatus::OnPaper, 20, period);
        }
        if s + 1 == k {
            break;
        }
        let d_air = profile.gap_ms * air_mult * speed * task_speed * segment.sample(pen.rng);
        let m_air = samples_for(d_air, period);
        if pen.rng.random_bool(NOISE.out_of_range_gap_probability) && m_air > 3 {
            // Pen lifted out of range: only the first samples are registered,
            // the last one spans the unrecorded remainder of the gap.
            let seen = (m_air / 3).max(1);
            for i in 0..seen {
                let dt = if i + 1 == seen {
                    (m_air - seen + 1) * period
                } else {
                    period
                };
                pen.emit(PenStatus::InAir, 40, dt);
            }
        } else {
            for _ in 0..m_air {
                pen.emit(PenStatus::InAir, 40, period);
            }
        }
    }
    TaskRecording::new(task, pen.points)
}

fn synth_participant(config: &SynthConfig, index: usize) -> (Session, EmotionLabels) {
    let mut rng = stream_rng(derive_seed(config.seed, index as u64));
    let labels = draw_labels(config, &mut rng);
    let scores = DassScores {
        depression: draw_score(Scale::Depression, labels.depressed, &mut rng),
        anxiety: draw_score(Scale::Anxiety, labels.anxious, &mut rng),
        stress: draw_score(Scale::Stress, labels.stressed, &mut rng),
    };
    debug_assert_eq!(dichotomize(&scores), labels);
    let speed = LogNormal::new(0.0, NOISE.participant_speed_sigma)
        .expect("valid sigma")
        .sample(&mut rng);
    let mut session = Session::new(participant_id(index, config.n_participants), scores);
    for task in TaskId::ALL {
        session.insert(synth_recording(config, task, &labels, speed, &mut rng));
    }
    (session, labels)
}

pub fn generate_corpus(config: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    config.validate()?;
    let (sessions, ground_truth): (Vec<Session>, Vec<EmotionLabels>) = (0..config.n_participants)
        .into_par_iter()
        .map(|i| synth_participant(config, i))
        .unzip();
    let manifest = SynthManifest {
        config: config.clone(),
        task_profiles: TASK_PROFILES.to_vec(),
        noise: NOISE,
        ground_truth: sessions
            .iter()
            .zip(&ground_truth)
            .map(|(s, l)| GroundTruthRow {
                participant_id: s.participant_id.clone(),
                depressed: l.depressed,
                anxious: l.anxious,
                stressed: l.stressed,
            })
            .collect(),
    };
    Ok(SynthCorpus {
        sessions,
        ground_truth,
        manifest,
    })
}

pub const LABELS_FILE: &str = "labels.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `labels.csv`, `manifest.json` and one directory of `task1.svc`..`task7.svc` per participant.
pub fn write_corpus(corpus: &SynthCorpus, dir: &Path) -> Result<(), SynthError> {
    std::fs::create_dir_all(dir)?;
    let labels = std::fs::File::create(dir.join(LABELS_FILE))?;
    write_labels_csv(
        io::BufWriter::new(labels),
        corpus
            .sessions
            .iter()
            .map(|s| (s.participant_id.as_str(), &s.scores)),
    )?;
    let mut manifest = serde_json::to_string_pretty(&corpus.manifest)?;
    manifest.push('\n');
    std::fs::write(dir.join(MANIFEST_FILE), manifest)?;
    for s in &corpus.sessions {
        let pdir = dir.join(&s.participant_id);
        std::fs::create_dir_all(&pdir)?;
        for (task, rec) in &s.recordings {
            std::fs::write(pdir.join(task.file_name()), serialize_svc(rec))?;
        }
    }
    Ok(())
}

/// Severity band counts and dichotomized prevalence per scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSummary {
    pub n_participants: usize,
    pub band_counts: BTreeMap<Scale, [usize; 5]>,
    pub prevalence: BTreeMap<Scale, f64>,
    pub positive_counts: BTreeMap<Scale, usize>,
}

pub fn score_distribution_summary(sessions: &[Session]) -> Result<ScoreSummary, SynthError> {
    if sessions.is_empty() {
        return Err(SynthError::EmptyCorpus);
    }
    let mut band_counts = BTreeMap::new();
    let mut positive_counts = BTreeMap::new();
    for scale in Scale::ALL {
        let mut bands = [0usize; 5];
        let mut positives = 0;
        for s in sessions {
            let level = crate::model::severity_level(scale, s.scores.get(scale))?;
            bands[level as usize] += 1;
            positives += usize::from(level != SeverityLevel::Normal);
        }
        band_counts.insert(scale, bands);
        positive_counts.insert(scale, positives);
    }
    let n = sessions.len();
    Ok(ScoreSummary {
        n_participants: n,
        prevalence: positive_counts
            .iter()
            .map(|(&k, &v)| (k, v as f64 / n as f64))
            .collect(),
        band_counts,
        positive_counts,
    })
}

impl SynthCorpus {
    pub fn score_summary(&self) -> Result<ScoreSummary, SynthError> {
        score_distribution_summary(&self.sessions)
    }
}
