//! Signal alignment, hypothesis tests and interference metrics.

mod dtw;
mod homeostasis;
mod interference;
mod stats;

pub use dtw::{downsample, dtw};
pub use homeostasis::{aggregate_dtw, aggregate_dtw_traces, DTW_MAX_LEN};
pub use interference::{chapter_two_metrics, delta_angle_degrees, ChapterTwoMetrics};
pub use stats::{
    bonferroni, erfc, ln_gamma, mann_whitney, normal_sf, pearson, ranks, reg_inc_beta, spearman,
    student_t_two_sided, MannWhitney, PMethod, StatResult, EXACT_LIMIT,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("signal is empty")]
    EmptySignal,
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("need at least two environments, got {0}")]
    TooFewEnvironments(usize),
    #[error("lineage logs disagree on environment count: expected {expected}, got {got}")]
    EnvironmentCount { expected: usize, got: usize },
}
