use std::cmp::Ordering;

use super::{CorrectionError, TruePointCandidate};
use crate::geometry::Vec2;

/// Received-power proxy `1 / (L1 L2)^2`. The radar-equation constants are
/// common to every candidate and drop out of the ranking.
pub fn path_loss_proxy(c: &TruePointCandidate) -> f64 {
    1.0 / (c.l1 * c.l2).powi(2)
}

fn tie_break(a: &TruePointCandidate, b: &TruePointCandidate) -> Ordering {
    (a.segment.roof, a.segment.path).cmp(&(b.segment.roof, b.segment.path))
}

/// Candidate with the shortest `L1 * L2`, i.e. the strongest return. Ties go
/// to the lower roof index, then the lower path index.
pub fn select_by_path_loss(
    candidates: &[TruePointCandidate],
) -> Result<&TruePointCandidate, CorrectionError> {
    candidates
        .iter()
        .min_by(|a, b| {
            (a.l1 * a.l2)
                .total_cmp(&(b.l1 * b.l2))
                .then_with(|| tie_break(a, b))
        })
        .ok_or(CorrectionError::NoCandidate)
}

/// Candidate closest to any previously detected vehicle, if that distance is
/// below `d_max`.
pub fn select_by_spatial_distance<'a>(
    candidates: &'a [TruePointCandidate],
    previous: &[Vec2],
    d_max: f64,
) -> Option<&'a TruePointCandidate> {
    let nearest = |c: &TruePointCandidate| {
        previous
            .iter()
            .map(|p| (c.position - p).norm())
            .fold(f64::INFINITY, f64::min)
    };
    candidates
        .iter()
        .map(|c| (nearest(c), c))
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| tie_break(a.1, b.1)))
        .filter(|(d, _)| *d < d_max)
        .map(|(_, c)| c)
}

/// Point minimizing the summed squared distance to both selections: their
/// midpoint, or the path-loss choice alone.
pub fn fuse_true_position(t_signal: Vec2, t_dist: Option<Vec2>) -> Vec2 {
    match t_dist {
        Some(t) => 0.5 * (t_signal + t),
        None => t_signal,
    }
}
