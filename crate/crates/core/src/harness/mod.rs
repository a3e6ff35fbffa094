//! End-to-end runs: simulate, correct, cluster, track, then score against
//! ground truth.

pub mod bench;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod scenarios;

pub use metrics::{
    compute_metrics, match_frame, spatial_lag, Counts, FrameMatch, LagStats, MatchConfig, Rates,
};
pub use pipeline::{
    aggregate, detect_frames, evaluate, run_pipeline, run_variants, CandidateRecord, MetricsReport, PipelineConfig,
    PipelineVariant, Relocation, RunOutput, Timing,
};
