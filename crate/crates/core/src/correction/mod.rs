//! Ghost correction: one true-position candidate per plausible reflecting
//! plane, then selection by path loss and by distance to vehicles already
//! detected.
//!
//! For a chord of sector angle `theta` whose upper end sits at elevation
//! `alpha`, a ghost seen at perpendicular distance `dist` from the path line
//! is moved back towards the centerline by
//!
//! ```text
//! gamma = (pi - theta) / 2,  beta = pi - alpha - gamma
//! |AD|  = R + (H - H_car) / sin(alpha)
//! |CD|  = |AD| sin(gamma) / sin(beta)
//! |DG|  = dist + (H - H_car) / tan(alpha)
//! d     = (|CD| - |DG|) (1 - cos 2 beta) / cos 2 beta
//! ```
//!
//! which is the exact inverse of mirroring a roof point at height `H_car`
//! across that plane and dropping the height.

mod frame;
mod select;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use frame::{
    correct_frame, correct_frame_sequential, correct_ghost, ghost_outcomes, remove_ghosts,
    CorrectedFrame, CorrectedPoint, CorrectionModel, FrameOptions, GhostOutcome, PointStatus,
    SelectionStrategy, UncorrectablePolicy, UncorrectableReason,
};
pub use select::{
    fuse_true_position, path_loss_proxy, select_by_path_loss, select_by_spatial_distance,
};

use crate::geometry::{clip_segment_to_rect, LineFrame, Vec2, Vec3};
use crate::point::{RadarPoint, Side};
use crate::tunnel::{roof_plane, CrossSectionSpec, RoofSegment, SegmentedTunnelModel, TunnelError};

/// Below this, `sin beta`, `cos 2 beta` or `sin alpha` make the triangle
/// degenerate.
pub const DEGENERACY_EPS: f64 = 1e-6;
/// How far past its path segment's ends a candidate's reflection point may
/// fall, meters. Vehicles taller than the assumed roof height move the
/// implied reflection point by up to about 30 m.
pub const REFLECTION_SLACK: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectionConfig {
    /// Height of the roof point assumed for every vehicle, meters.
    pub vehicle_roof_height: f64,
    /// Spatial selection gate, meters.
    pub association_gate: f64,
    /// Radar antenna position `[x, y, z]`, meters.
    pub radar_position: [f64; 3],
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            vehicle_roof_height: 1.5,
            association_gate: 4.0,
            radar_position: [0.0, 0.0, 5.1],
        }
    }
}

impl CorrectionConfig {
    pub fn radar(&self) -> Vec3 {
        Vec3::from(self.radar_position)
    }

    pub fn radar_height(&self) -> f64 {
        self.radar_position[2]
    }

    pub fn validate(&self, cross_section: &CrossSectionSpec) -> Result<(), CorrectionError> {
        let h = self.vehicle_roof_height;
        if !(h > 0.0 && h < 2.0 * cross_section.radius) {
            return Err(CorrectionError::InvalidConfig(format!(
                "vehicle roof height {h} must lie in (0, 2 * radius)"
            )));
        }
        if !(self.association_gate > 0.0) {
            return Err(CorrectionError::InvalidConfig(
                "association gate must be positive".into(),
            ));
        }
        if self.radar_position.iter().any(|v| !v.is_finite()) {
            return Err(CorrectionError::InvalidConfig(
                "radar position must be finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrectionError {
    #[error("no candidate to select from")]
    NoCandidate,
    #[error("invalid correction config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Tunnel(#[from] TunnelError),
}

/// Why a reflecting plane did not yield a usable candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rejection {
    /// The correction triangle collapses for this chord.
    Degenerate,
    /// The recovered position is off the road.
    OutsideLanes,
    /// The radar-to-image ray does not cross the plane.
    NoReflectionPath,
    /// The curved-centerline foot point could not be found.
    SolverFailed,
}

/// A roof chord on one side, extruded along one path segment. Indices are
/// 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReflectionSegment {
    pub side: Side,
    pub roof: usize,
    pub path: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruePointCandidate {
    pub position: Vec2,
    pub segment: ReflectionSegment,
    /// Radar to reflection point.
    pub l1: f64,
    /// Reflection point to vehicle roof point.
    pub l2: f64,
    pub reflection_point: Vec3,
    /// Image of the vehicle roof point across the plane.
    pub mirrored_ghost: Vec3,
}

/// Reflecting planes a ghost may have come from: the chords on the ghost's
/// side whose top-view footprint the radar-to-ghost segment crosses.
pub fn enumerate_reflection_segments(
    model: &SegmentedTunnelModel,
    ghost: &RadarPoint,
    radar: &Vec3,
) -> Result<Vec<ReflectionSegment>, TunnelError> {
    let side = model.classify_point(ghost)?.offset_side();
    let o = radar.xy();
    let g = ghost.position();
    let mut out = Vec::new();
    for j in 1..=model.path_segments.len() {
        for roof in model.reflecting_roof_segments() {
            let fp = model.footprint(side, roof.index, j);
            let (s0, u0) = fp.frame.to_local(&o);
            let (s1, u1) = fp.frame.to_local(&g);
            if clip_segment_to_rect(
                Vec2::new(s0, u0),
                Vec2::new(s1, u1),
                fp.local_min(),
                fp.local_max(),
            )
            .is_some()
            {
                out.push(ReflectionSegment {
                    side,
                    roof: roof.index,
                    path: j,
                });
            }
        }
    }
    out.sort_by_key(|s| (s.roof, s.path));
    Ok(out)
}

/// Distance the ghost moves back towards the centerline for a ghost seen at
/// perpendicular distance `dist` from the line.
pub fn lateral_correction(
    cross_section: &CrossSectionSpec,
    roof: &RoofSegment,
    dist: f64,
    roof_height: f64,
) -> Result<f64, Rejection> {
    let r = cross_section.radius;
    let h = cross_section.center_height;
    let theta = roof.sector_angle;
    let alpha = roof.elevation_upper;
    let gamma = 0.5 * (std::f64::consts::PI - theta);
    let beta = std::f64::consts::PI - alpha - gamma;
    let cos2b = (2.0 * beta).cos();
    if alpha.sin().abs() < DEGENERACY_EPS
        || beta.sin().abs() < DEGENERACY_EPS
        || cos2b.abs() < DEGENERACY_EPS
    {
        return Err(Rejection::Degenerate);
    }
    let ad = r + (h - roof_height) / alpha.sin();
    let cd = ad * gamma.sin() / beta.sin();
    let dg = dist + (h - roof_height) / alpha.tan();
    Ok((cd - dg) * (1.0 - cos2b) / cos2b)
}

/// Candidate for `segment` with the path approximated by `line`.
pub(crate) fn candidate_on_line(
    model: &SegmentedTunnelModel,
    config: &CorrectionConfig,
    ghost: &Vec2,
    segment: ReflectionSegment,
    line: &LineFrame,
    check_lanes: bool,
) -> Result<TruePointCandidate, Rejection> {
    let roof = model.roof_segment(segment.roof);
    let sigma = segment.side.sign();
    let dist = sigma * line.to_local(ghost).1;
    let d = lateral_correction(
        &model.cross_section,
        roof,
        dist,
        config.vehicle_roof_height,
    )?;
    let position = ghost - sigma * d * line.right();
    if check_lanes && !model.in_lanes(&position) {
        return Err(Rejection::OutsideLanes);
    }

    let plane = roof_plane(roof, line, segment.side);
    let roof_point = Vec3::new(position.x, position.y, config.vehicle_roof_height);
    let mirrored_ghost = plane.mirror(&roof_point);
    let radar = config.radar();
    let (_, reflection_point) = plane
        .intersect_segment(&radar, &mirrored_ghost)
        .ok_or(Rejection::NoReflectionPath)?;
    let l1 = (reflection_point - radar).norm();
    let l2 = (reflection_point - roof_point).norm();
    if !(l1 > 0.0 && l2 > 0.0) {
        return Err(Rejection::NoReflectionPath);
    }
    Ok(TruePointCandidate {
        position,
        segment,
        l1,
        l2,
        reflection_point,
        mirrored_ghost,
    })
}

/// True-position candidate for a ghost assuming it was reflected by
/// `segment`.
pub fn generate_candidate(
    model: &SegmentedTunnelModel,
    config: &CorrectionConfig,
    ghost: &RadarPoint,
    segment: ReflectionSegment,
) -> Result<TruePointCandidate, Rejection> {
    let line = model.path_segment(segment.path).frame();
    let c = candidate_on_line(model, config, &ghost.position(), segment, &line, true)?;
    check_reflection_on_path(model, &c)?;
    Ok(c)
}

/// Rejects a candidate whose reflection point lies beyond its path segment.
/// The top-view crossing test in enumeration cannot see the height of the
/// ray, so the extended plane may be hit far outside the segment.
pub(crate) fn check_reflection_on_path(
    model: &SegmentedTunnelModel,
    c: &TruePointCandidate,
) -> Result<(), Rejection> {
    let frame = model.path_segment(c.segment.path).frame();
    let (s, _) = frame.to_local(&c.reflection_point.xy());
    if s < -REFLECTION_SLACK || s > frame.length + REFLECTION_SLACK {
        return Err(Rejection::NoReflectionPath);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn straight() -> SegmentedTunnelModel {
        SegmentedTunnelModel::straight_default()
    }

    /// Forward image of a vehicle roof point, dropped to the road plane.
    fn forward_ghost(
        model: &SegmentedTunnelModel,
        cfg: &CorrectionConfig,
        t: Vec2,
        seg: ReflectionSegment,
    ) -> RadarPoint {
        let plane = model.plane(seg.side, seg.roof, seg.path);
        let g = plane.mirror(&Vec3::new(t.x, t.y, cfg.vehicle_roof_height));
        RadarPoint::new(g.x, g.y, 0.0)
    }

    #[test]
    fn zero_shift_when_sides_match() {
        // Pick dist so that |CD| = |DG|; the ghost must stay put.
        let m = straight();
        let cfg = CorrectionConfig::default();
        let roof = m.roof_segment(5);
        let big = lateral_correction(&m.cross_section, roof, 0.0, 1.5).unwrap();
        let slope = -lateral_correction(&m.cross_section, roof, 1.0, 1.5).unwrap() + big;
        let dist = big / slope;
        assert_relative_eq!(
            lateral_correction(&m.cross_section, roof, dist, cfg.vehicle_roof_height).unwrap(),
            0.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn recovers_forward_mirror_exactly() {
        let m = straight();
        let cfg = CorrectionConfig::default();
        for roof in 1..=6 {
            for side in [Side::Left, Side::Right] {
                let seg = ReflectionSegment { side, roof, path: 2 };
                let t = Vec2::new(0.7 * side.sign(), 150.0);
                let g = forward_ghost(&m, &cfg, t, seg);
                let c = candidate_on_line(&m, &cfg, &g.position(), seg, &m.path_segment(2).frame(), false)
                    .unwrap();
                assert!((c.position - t).norm() < 1e-9, "roof {roof}: {:?}", c.position);
            }
        }
    }

    #[test]
    fn left_right_mirror_symmetry() {
        let m = straight();
        let cfg = CorrectionConfig::default();
        let g = RadarPoint::new(3.7, 120.0, 0.0);
        let gm = RadarPoint::new(-3.7, 120.0, 0.0);
        for roof in 1..=6 {
            let r = ReflectionSegment { side: Side::Right, roof, path: 2 };
            let l = ReflectionSegment { side: Side::Left, roof, path: 2 };
            let line = m.path_segment(2).frame();
            let (a, b) = (
                candidate_on_line(&m, &cfg, &g.position(), r, &line, false),
                candidate_on_line(&m, &cfg, &gm.position(), l, &line, false),
            );
            if let (Ok(a), Ok(b)) = (a, b) {
                assert_eq!(a.position.x, -b.position.x);
                assert_eq!(a.position.y, b.position.y);
                assert_relative_eq!(a.l1, b.l1, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn far_ghost_has_no_planes() {
        let m = straight();
        let cfg = CorrectionConfig::default();
        // A ray along the centerline passes between the chords of both sides.
        let g = RadarPoint::new(0.0, 200.0, 0.0);
        let segs = enumerate_reflection_segments(&m, &g, &cfg.radar()).unwrap();
        assert!(segs.is_empty());
    }

    #[test]
    fn outside_lanes_rejected() {
        let m = straight();
        let cfg = CorrectionConfig::default();
        let seg = ReflectionSegment { side: Side::Right, roof: 6, path: 2 };
        // A ghost far out maps back to beyond the opposite lane edge.
        let g = RadarPoint::new(40.0, 150.0, 0.0);
        assert_eq!(
            generate_candidate(&m, &cfg, &g, seg).unwrap_err(),
            Rejection::OutsideLanes
        );
    }

    #[test]
    fn config_validation() {
        let cs = straight().cross_section;
        let mut c = CorrectionConfig::default();
        assert!(c.validate(&cs).is_ok());
        c.vehicle_roof_height = 20.0;
        assert!(c.validate(&cs).is_err());
        c = CorrectionConfig { association_gate: 0.0, ..Default::default() };
        assert!(c.validate(&cs).is_err());
    }

    proptest! {
        // Most random positions have no valid specular path on a given chord.
        #![proptest_config(ProptestConfig { cases: 128, max_global_rejects: 100_000, ..ProptestConfig::default() })]

        #[test]
        fn true_segment_is_enumerated(
            x in -1.9..1.9f64,
            y in 60.0..340.0f64,
            roof in 5usize..=6,
            right in any::<bool>(),
        ) {
            let m = straight();
            let cfg = CorrectionConfig::default();
            let side = if right { Side::Right } else { Side::Left };
            let t = Vec2::new(x, y);
            let j = m.path_segment_for(y).unwrap();
            let seg = ReflectionSegment { side, roof, path: j };
            let plane = m.plane(side, roof, j);
            let gp = plane.mirror(&Vec3::new(x, y, cfg.vehicle_roof_height));
            let radar = cfg.radar();
            // Only keep geometrically valid specular paths.
            let Some((_, r)) = plane.intersect_segment(&radar, &gp) else { return Ok(()) };
            let fp = m.footprint(side, roof, j);
            let (s, u) = fp.frame.to_local(&r.xy());
            prop_assume!(s >= 0.0 && s <= fp.frame.length && u >= fp.u_min && u <= fp.u_max);
            let g = RadarPoint::new(gp.x, gp.y, 0.0);
            prop_assume!(!m.in_lanes(&g.position()));
            prop_assume!(Side::of_offset(gp.x) == side);
            let segs = enumerate_reflection_segments(&m, &g, &radar).unwrap();
            prop_assert!(segs.contains(&seg));
            let c = generate_candidate(&m, &cfg, &g, seg).unwrap();
            prop_assert!((c.position - t).norm() < 1e-6);
            prop_assert!((c.reflection_point - r).norm() < 1e-6);
        }
    }
}
