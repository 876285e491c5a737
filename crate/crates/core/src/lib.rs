//! Emotional-state detection from online handwriting and drawing.
//!
//! The pipeline reads tablet recordings in SVC format, extracts timing and
//! stroke-count features per task, trains random forests on dichotomized DASS
//! labels, ranks features by aggregated importance over a forest ensemble and
//! estimates accuracy with repeated leave-one-out cross-validation. A seeded
//! synthetic corpus generator provides data with known planted effects.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below fix the precision.

pub mod corpus;
pub mod evaluation;
pub mod features;
pub mod forest;
pub mod model;
pub mod ranking;
pub mod scalar;
pub mod seed;
pub mod svc;
pub mod synth;

pub use corpus::{load_corpus, CorpusError, FileReport, FileStatus, LoadedCorpus};
pub use evaluation::{
    five_number_summary, format_cv_table, loocv, repeated_cv, write_cv_csv, CvReport, EvalError,
    FiveNumberSummary, LoocvResult,
};
pub use features::{
    assemble_feature_matrix, canonical_column_names, extract_task_features, AssembledMatrix,
    FeatureColumn, FeatureError, FeatureKind, FeatureMatrix, MissingTaskPolicy, TaskFeatures,
    N_FEATURES,
};
pub use forest::{
    importance, train_forest, DecisionTree, FeatureImportance, Forest, ForestConfig, ForestError,
    Measure,
};
pub use model::{
    chi_square_2x2, cross_tabulate, dichotomize, severity_level, ChiSquare, CrossTable, DassScores,
    EmotionLabels, LabelPair, ModelError, Scale, Session, SeverityLevel, TaskId,
};
pub use ranking::{format_top_k_table, rank_features, RankConfig, RankError, RankReport};
pub use scalar::Scalar;
pub use seed::{derive_seed, derive_seed_str};
pub use svc::{
    normalize_angles, parse_svc, segment_strokes, serialize_svc, ParseMode, ParsedSvc, PenStatus,
    SamplePoint, SvcError, SvcWarning, TaskRecording,
};
pub use synth::{generate_corpus, write_corpus, SynthConfig, SynthCorpus, SynthError};

pub type FeatureMatrix64 = FeatureMatrix<f64>;
pub type FeatureMatrix32 = FeatureMatrix<f32>;
pub type Forest64 = Forest<f64>;
pub type Forest32 = Forest<f32>;
pub type CvReport64 = CvReport<f64>;
pub type CvReport32 = CvReport<f32>;
pub type ChiSquare64 = ChiSquare<f64>;
