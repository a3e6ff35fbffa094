use serde::{Deserialize, Serialize};

use super::{
    enumerate_reflection_segments, fuse_true_position, generate_candidate, select_by_path_loss,
    select_by_spatial_distance, CorrectionConfig, ReflectionSegment, Rejection,
    TruePointCandidate,
};
use crate::geometry::Vec2;
use crate::par;
use crate::point::RadarPoint;
use crate::tunnel::SegmentedTunnelModel;

/// How the final position is picked among a ghost's candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionStrategy {
    /// Strongest return only.
    PathLoss,
    /// Closest to a previous detection only; ghosts with no candidate near a
    /// detection are uncorrectable.
    SpatialDistance,
    /// Midpoint of both when the spatial choice exists, else path loss.
    Fused,
}

/// Path approximation used to build the correction geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionModel {
    /// Straight path segments.
    Segmented,
    /// Tangent of the polynomial centerline at the reflection foot point.
    Curved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UncorrectablePolicy {
    Drop,
    KeepFlagged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UncorrectableReason {
    OutOfExtent,
    NoReflectionSegment,
    NoValidCandidate,
    NoNearbyDetection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum PointStatus {
    Normal,
    Corrected { segment: ReflectionSegment },
    Uncorrectable { reason: UncorrectableReason },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedPoint {
    pub point: RadarPoint,
    /// Index of the point in the input frame.
    pub source_index: usize,
    #[serde(flatten)]
    pub status: PointStatus,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrectedFrame {
    pub points: Vec<CorrectedPoint>,
    pub dropped: usize,
}

impl CorrectedFrame {
    pub fn radar_points(&self) -> Vec<RadarPoint> {
        self.points.iter().map(|p| p.point).collect()
    }

    pub fn corrected_count(&self) -> usize {
        self.points
            .iter()
            .filter(|p| matches!(p.status, PointStatus::Corrected { .. }))
            .count()
    }
}

/// Everything computed for one ghost, kept for debug dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostOutcome {
    pub segments: Vec<ReflectionSegment>,
    pub candidates: Vec<TruePointCandidate>,
    pub rejected: Vec<(ReflectionSegment, Rejection)>,
    /// Index into `candidates`.
    pub by_path_loss: Option<usize>,
    pub by_distance: Option<usize>,
    pub position: Option<Vec2>,
    pub reason: Option<UncorrectableReason>,
}

impl GhostOutcome {
    fn failed(reason: UncorrectableReason) -> Self {
        Self {
            segments: Vec::new(),
            candidates: Vec::new(),
            rejected: Vec::new(),
            by_path_loss: None,
            by_distance: None,
            position: None,
            reason: Some(reason),
        }
    }

    /// Segment of the path-loss choice, or of the spatial one when that is
    /// all there is.
    pub fn chosen_segment(&self) -> Option<ReflectionSegment> {
        self.by_path_loss
            .or(self.by_distance)
            .map(|k| self.candidates[k].segment)
    }
}

/// Corrects a single ghost point.
pub fn correct_ghost(
    model: &SegmentedTunnelModel,
    config: &CorrectionConfig,
    ghost: &RadarPoint,
    previous: &[Vec2],
    strategy: SelectionStrategy,
    surface: CorrectionModel,
) -> GhostOutcome {
    let segments = match enumerate_reflection_segments(model, ghost, &config.radar()) {
        Ok(s) => s,
        Err(_) => return GhostOutcome::failed(UncorrectableReason::OutOfExtent),
    };
    if segments.is_empty() {
        return GhostOutcome::failed(UncorrectableReason::NoReflectionSegment);
    }
    let mut candidates = Vec::with_capacity(segments.len());
    let mut rejected = Vec::new();
    for &seg in &segments {
        let c = match surface {
            CorrectionModel::Segmented => generate_candidate(model, config, ghost, seg),
            CorrectionModel::Curved => {
                crate::curved::generate_candidate_curved(model, config, ghost, seg)
            }
        };
        match c {
            Ok(c) => candidates.push(c),
            Err(r) => rejected.push((seg, r)),
        }
    }
    let index_of = |c: &TruePointCandidate| candidates.iter().position(|x| std::ptr::eq(x, c));
    let by_path_loss = select_by_path_loss(&candidates).ok().and_then(index_of);
    let by_distance = select_by_spatial_distance(&candidates, previous, config.association_gate)
        .and_then(index_of);

    let signal = by_path_loss.map(|k| candidates[k].position);
    let dist = by_distance.map(|k| candidates[k].position);
    let (position, reason) = match (strategy, signal) {
        (_, None) => (None, Some(UncorrectableReason::NoValidCandidate)),
        (SelectionStrategy::PathLoss, Some(s)) => (Some(s), None),
        (SelectionStrategy::Fused, Some(s)) => (Some(fuse_true_position(s, dist)), None),
        (SelectionStrategy::SpatialDistance, Some(_)) => match dist {
            Some(d) => (Some(d), None),
            None => (None, Some(UncorrectableReason::NoNearbyDetection)),
        },
    };
    GhostOutcome {
        segments,
        candidates,
        rejected,
        by_path_loss,
        by_distance,
        position,
        reason,
    }
}

/// Options shared by the frame-level entry points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameOptions {
    pub strategy: SelectionStrategy,
    pub surface: CorrectionModel,
    pub uncorrectable: UncorrectablePolicy,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self {
            strategy: SelectionStrategy::Fused,
            surface: CorrectionModel::Segmented,
            uncorrectable: UncorrectablePolicy::Drop,
        }
    }
}

fn process_point(
    model: &SegmentedTunnelModel,
    config: &CorrectionConfig,
    previous: &[Vec2],
    opts: &FrameOptions,
    index: usize,
    p: &RadarPoint,
) -> (CorrectedPoint, Option<GhostOutcome>) {
    let flagged = |reason| CorrectedPoint {
        point: *p,
        source_index: index,
        status: PointStatus::Uncorrectable { reason },
    };
    let class = match model.classify_point(p) {
        Ok(c) => c,
        Err(_) => return (flagged(UncorrectableReason::OutOfExtent), None),
    };
    if !class.is_ghost() {
        let out = CorrectedPoint {
            point: *p,
            source_index: index,
            status: PointStatus::Normal,
        };
        return (out, None);
    }
    let outcome = correct_ghost(model, config, p, previous, opts.strategy, opts.surface);
    let out = match (outcome.position, outcome.chosen_segment()) {
        (Some(pos), Some(segment)) => CorrectedPoint {
            point: RadarPoint::new(pos.x, pos.y, p.v_d),
            source_index: index,
            status: PointStatus::Corrected { segment },
        },
        _ => flagged(
            outcome
                .reason
                .unwrap_or(UncorrectableReason::NoValidCandidate),
        ),
    };
    (out, Some(outcome))
}

fn assemble(results: Vec<(CorrectedPoint, Option<GhostOutcome>)>, policy: UncorrectablePolicy) -> CorrectedFrame {
    let mut frame = CorrectedFrame::default();
    for (p, _) in results {
        let bad = matches!(p.status, PointStatus::Uncorrectable { .. });
        if bad && policy == UncorrectablePolicy::Drop {
            frame.dropped += 1;
        } else {
            frame.points.push(p);
        }
    }
    frame
}

/// Replaces every ghost in `points` by its corrected position. Normal points
/// pass through unchanged; points are processed in parallel when the
/// `parallel` feature is on.
pub fn correct_frame(
    model: &SegmentedTunnelModel,
    config: &CorrectionConfig,
    points: &[RadarPoint],
    previous: &[Vec2],
    opts: &FrameOptions,
) -> CorrectedFrame {
    let results = par::map_range(points.len(), |k| {
        process_point(model, config, previous, opts, k, &points[k])
    });
    assemble(results, opts.uncorrectable)
}

/// [`correct_frame`] on the calling thread only.
pub fn correct_frame_sequential(
    model: &SegmentedTunnelModel,
    config: &CorrectionConfig,
    points: &[RadarPoint],
    previous: &[Vec2],
    opts: &FrameOptions,
) -> CorrectedFrame {
    let results = par::seq::map_range(points.len(), |k| {
        process_point(model, config, previous, opts, k, &points[k])
    });
    assemble(results, opts.uncorrectable)
}

/// Per-ghost outcomes for a frame, keyed by input index.
pub fn ghost_outcomes(
    model: &SegmentedTunnelModel,
    config: &CorrectionConfig,
    points: &[RadarPoint],
    previous: &[Vec2],
    opts: &FrameOptions,
) -> Vec<(usize, GhostOutcome)> {
    par::map_range(points.len(), |k| {
        process_point(model, config, previous, opts, k, &points[k])
    })
    .into_iter()
    .enumerate()
    .filter_map(|(k, (_, o))| o.map(|o| (k, o)))
    .collect()
}

/// Drops every point classified as a ghost, and any outside the model.
pub fn remove_ghosts(model: &SegmentedTunnelModel, points: &[RadarPoint]) -> Vec<RadarPoint> {
    points
        .iter()
        .filter(|p| matches!(model.classify_point(p), Ok(c) if !c.is_ghost()))
        .copied()
        .collect()
}
