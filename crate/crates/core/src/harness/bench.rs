//! Wall-clock comparison of the segmented and curved correction paths, and a
//! projected frame rate for the whole per-frame chain.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::pipeline::PipelineConfig;
use crate::correction::{
    correct_frame, correct_ghost, CorrectionConfig, CorrectionModel, FrameOptions, SelectionStrategy,
};
use crate::detection::{cluster_frame, Tracker};
use crate::geometry::Vec2;
use crate::point::RadarPoint;
use crate::sim::{prepare_scenario, simulate_with_model, ScenarioConfig, SimError};
use crate::tunnel::SegmentedTunnelModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Ghost points timed per repetition.
    pub batch: usize,
    /// Points per frame for the projected frame rate.
    pub frame_size: usize,
    /// Frames pushed through the full chain.
    pub frames: usize,
    /// Repetitions; the median is reported.
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            batch: 1000,
            frame_size: 200,
            frames: 20,
            repeats: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub scenario: String,
    pub batch: usize,
    pub frame_size: usize,
    pub parallel: bool,
    /// Mean single-thread latency per ghost, seconds.
    pub segmented_per_point_s: f64,
    pub curved_per_point_s: f64,
    /// `curved / segmented` per-point time.
    pub speedup: f64,
    /// Correction alone, projected to `frame_size` ghosts per frame.
    pub segmented_correction_fps: f64,
    pub curved_correction_fps: f64,
    /// Correction, clustering and tracking on `frame_size`-point frames.
    pub pipeline_fps: f64,
}

/// Collects at least `n` ghost points from simulating `scenario`, cycling
/// through the frames if the run has fewer.
pub fn ghost_batch(
    scenario: &ScenarioConfig,
    n: usize,
) -> Result<(SegmentedTunnelModel, Vec<RadarPoint>), SimError> {
    let model = prepare_scenario(scenario)?;
    let sim = simulate_with_model(scenario, &model);
    let ghosts: Vec<RadarPoint> = sim
        .frames
        .iter()
        .flat_map(|f| f.points.iter())
        .filter(|p| p.provenance.is_ghost())
        .map(|p| p.point)
        .filter(|p| model.classify_point(p).is_ok_and(|c| c.is_ghost()))
        .collect();
    if ghosts.is_empty() {
        return Ok((model, ghosts));
    }
    let out = ghosts.iter().copied().cycle().take(n.max(ghosts.len())).collect();
    Ok((model, out))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// Median wall-clock seconds to correct every point of `ghosts` one by one
/// on the calling thread.
pub fn time_batch(
    model: &SegmentedTunnelModel,
    cfg: &CorrectionConfig,
    ghosts: &[RadarPoint],
    surface: CorrectionModel,
    repeats: usize,
) -> f64 {
    let runs = (0..repeats.max(1))
        .map(|_| {
            let t = Instant::now();
            for g in ghosts {
                std::hint::black_box(correct_ghost(model, cfg, g, &[], SelectionStrategy::Fused, surface));
            }
            t.elapsed().as_secs_f64()
        })
        .collect();
    median(runs)
}

/// Mean seconds per frame for correction, clustering and tracking of
/// `frames` consecutive `frame_size`-point frames cut from `points`.
pub fn time_pipeline(
    model: &SegmentedTunnelModel,
    cfg: &PipelineConfig,
    points: &[RadarPoint],
    frame_size: usize,
    frames: usize,
) -> f64 {
    let opts = FrameOptions::default();
    let mut tracker = Tracker::new(cfg.tracker);
    let mut previous: Vec<Vec2> = Vec::new();
    let mut stream = points.iter().copied().cycle();
    let frames = frames.max(1);
    let t = Instant::now();
    for _ in 0..frames {
        let frame: Vec<RadarPoint> = stream.by_ref().take(frame_size).collect();
        let corrected = correct_frame(model, &cfg.correction, &frame, &previous, &opts);
        let clusters = cluster_frame(&corrected.radar_points(), &cfg.cluster);
        let centroids: Vec<Vec2> = clusters.iter().map(|c| c.centroid).collect();
        tracker.step(&centroids);
        previous = tracker.predicted_positions();
    }
    t.elapsed().as_secs_f64() / frames as f64
}

pub fn run_bench(
    scenario: &ScenarioConfig,
    pipeline: &PipelineConfig,
    cfg: &BenchConfig,
) -> Result<BenchReport, SimError> {
    let (model, ghosts) = ghost_batch(scenario, cfg.batch)?;
    let mut corr = pipeline.correction;
    corr.radar_position = scenario.radar.position;
    let pipeline = PipelineConfig {
        correction: corr,
        ..*pipeline
    };
    let n = ghosts.len().max(1) as f64;
    let seg = time_batch(&model, &corr, &ghosts, CorrectionModel::Segmented, cfg.repeats) / n;
    let cur = time_batch(&model, &corr, &ghosts, CorrectionModel::Curved, cfg.repeats) / n;
    let frame_s = if ghosts.is_empty() {
        0.0
    } else {
        median(
            (0..cfg.repeats.max(1))
                .map(|_| time_pipeline(&model, &pipeline, &ghosts, cfg.frame_size, cfg.frames))
                .collect(),
        )
    };
    let fps = |s: f64| if s > 0.0 { 1.0 / s } else { f64::INFINITY };
    Ok(BenchReport {
        scenario: scenario.name.clone(),
        batch: ghosts.len(),
        frame_size: cfg.frame_size,
        parallel: crate::par::is_parallel(),
        segmented_per_point_s: seg,
        curved_per_point_s: cur,
        speedup: if seg > 0.0 { cur / seg } else { f64::INFINITY },
        segmented_correction_fps: fps(seg * cfg.frame_size as f64),
        curved_correction_fps: fps(cur * cfg.frame_size as f64),
        pipeline_fps: fps(frame_s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenarios;

    #[test]
    fn batch_reaches_requested_size() {
        let (model, g) = ghost_batch(&scenarios::straight(1), 1500).unwrap();
        assert!(g.len() >= 1500);
        assert!(g.iter().all(|p| model.classify_point(p).unwrap().is_ghost()));
    }

    #[test]
    fn timing_grows_with_batch() {
        let s = scenarios::curved(2);
        let (model, g) = ghost_batch(&s, 4000).unwrap();
        let cfg = CorrectionConfig {
            radar_position: s.radar.position,
            ..CorrectionConfig::default()
        };
        let small = time_batch(&model, &cfg, &g[..250], CorrectionModel::Segmented, 5);
        let large = time_batch(&model, &cfg, &g[..4000], CorrectionModel::Segmented, 5);
        assert!(large > small, "{small} vs {large}");
    }
}
