//! Segmented tunnel geometry.
//!
//! Axes: `x` is lateral (positive to the right of the radar boresight), `y`
//! is longitudinal along the boresight and `z` is height above the road. The
//! centerline gives `x` as a polynomial in `y`.
//!
//! The roof arc is cut into `N` equal chords, numbered from the road edge of
//! the wall that a reflection pushes ghosts towards, upward over the roof.
//! Every chord exists on both sides; a chord on the right side is the mirror
//! image of the same-index chord on the left. The path is cut into `M`
//! straight pieces. A reflecting plane is the chord extruded along a path
//! piece.

mod centerline;
mod cross_section;
mod params;
mod path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use centerline::{fit_centerline, CenterlineFit, CenterlineSpec};
pub use cross_section::{segment_cross_section, CrossSectionSpec, RoofSegment};
pub use params::{
    cross_section_error_bound, optimize_segmentation_params, path_error_bound,
    segmentation_error_bounds, ErrorBudget, SegmentationParams, DEFAULT_MAX_SEGMENT_LENGTH,
    DEFAULT_SECTOR_CAP,
};
pub use path::{segment_tunnel_path, PathSegment, PathSegmentation};

use crate::geometry::{LineFrame, Plane, Vec2, Vec3};
use crate::point::{RadarPoint, Side};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TunnelError {
    #[error("invalid cross-section: {0}")]
    InvalidCrossSection(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("underdetermined fit: {distinct} distinct longitudinal samples for degree {degree}")]
    Underdetermined { distinct: usize, degree: usize },
    #[error("non-finite calibration sample at index {index}")]
    NonFiniteSample { index: usize },
    #[error("resolution limit needs {needed} roof sectors, cap is {cap}")]
    TooManySectors { needed: usize, cap: usize },
    #[error("longitudinal position {y} outside the modeled extent [{min}, {max}]")]
    OutOfExtent { y: f64, min: f64, max: f64 },
    #[error("config error: {0}")]
    Config(String),
}

/// Drivable area as offsets from the centerline, both positive meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneBoundaries {
    pub left: f64,
    pub right: f64,
}

impl LaneBoundaries {
    pub fn symmetric(half_width: f64) -> Self {
        Self {
            left: half_width,
            right: half_width,
        }
    }

    pub fn contains_offset(&self, offset: f64) -> bool {
        offset >= -self.left && offset <= self.right
    }

    pub fn limit(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointLabel {
    Ghost,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaneSide {
    Left,
    Right,
    OnLane,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: PointLabel,
    pub side: LaneSide,
    /// 1-based path segment index.
    pub path_segment_index: usize,
    /// Perpendicular distance to the local segment line.
    pub dist_center: f64,
    /// Same distance, signed positive to the right.
    pub signed_offset: f64,
}

impl Classification {
    pub fn is_ghost(&self) -> bool {
        self.label == PointLabel::Ghost
    }

    /// Tunnel half the point lies on, regardless of its label.
    pub fn offset_side(&self) -> Side {
        Side::of_offset(self.signed_offset)
    }
}

/// Top-view footprint of one reflecting plane: a rectangle in the path
/// segment's local frame, `s` along the segment and `u` to its right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFootprint {
    pub frame: LineFrame,
    pub u_min: f64,
    pub u_max: f64,
}

impl PlaneFootprint {
    pub fn local_min(&self) -> Vec2 {
        Vec2::new(0.0, self.u_min)
    }

    pub fn local_max(&self) -> Vec2 {
        Vec2::new(self.frame.length, self.u_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CenterlineConfig {
    Coefficients {
        coefficients: Vec<f64>,
    },
    Samples {
        samples: Vec<[f64; 2]>,
        #[serde(default = "default_degree")]
        degree: usize,
    },
}

fn default_degree() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentationConfig {
    /// Localization error allowed for each segmentation, meters.
    #[serde(default)]
    pub resolution_limit: Option<f64>,
    #[serde(default)]
    pub sector_count: Option<usize>,
    /// Tangent threshold in degrees, used with an explicit `sector_count`.
    #[serde(default)]
    pub tangent_threshold_deg: Option<f64>,
    #[serde(default = "default_l_max")]
    pub max_segment_length: f64,
    #[serde(default = "default_sector_cap")]
    pub sector_cap: usize,
}

fn default_l_max() -> f64 {
    DEFAULT_MAX_SEGMENT_LENGTH
}

fn default_sector_cap() -> usize {
    DEFAULT_SECTOR_CAP
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            resolution_limit: Some(2.0),
            sector_count: None,
            tangent_threshold_deg: None,
            max_segment_length: DEFAULT_MAX_SEGMENT_LENGTH,
            sector_cap: DEFAULT_SECTOR_CAP,
        }
    }
}

/// Tunnel description as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunnelConfig {
    pub cross_section: CrossSectionSpec,
    pub centerline: CenterlineConfig,
    #[serde(default)]
    pub segmentation: SegmentationConfig,
    /// Longitudinal range to model, meters.
    #[serde(default = "default_extent")]
    pub extent: [f64; 2],
    /// Overrides the lanes derived from the road width.
    #[serde(default)]
    pub lanes: Option<LaneBoundaries>,
}

fn default_extent() -> [f64; 2] {
    [0.0, 400.0]
}

impl Default for TunnelConfig {
    fn default() -> Self {
        Self {
            cross_section: CrossSectionSpec {
                radius: 5.5,
                center_height: 1.6,
                road_width: 4.0,
            },
            centerline: CenterlineConfig::Coefficients {
                coefficients: vec![0.0, 0.0],
            },
            segmentation: SegmentationConfig::default(),
            extent: default_extent(),
            lanes: None,
        }
    }
}

impl TunnelConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, TunnelError> {
        toml::from_str(s).map_err(|e| TunnelError::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String, TunnelError> {
        toml::to_string_pretty(self).map_err(|e| TunnelError::Config(e.to_string()))
    }

    pub fn with_centerline(mut self, coefficients: Vec<f64>) -> Self {
        self.centerline = CenterlineConfig::Coefficients { coefficients };
        self
    }

    pub fn build(&self) -> Result<SegmentedTunnelModel, TunnelError> {
        self.cross_section.validate()?;
        let mut warnings = Vec::new();
        let centerline = match &self.centerline {
            CenterlineConfig::Coefficients { coefficients } => {
                CenterlineSpec::new(coefficients.clone())?
            }
            CenterlineConfig::Samples { samples, degree } => {
                let pts: Vec<Vec2> = samples.iter().map(|p| Vec2::new(p[0], p[1])).collect();
                let fit = fit_centerline(&pts, *degree)?;
                warnings.push(format!(
                    "centerline fitted from {} samples, residual rms {:.4} m",
                    pts.len(),
                    fit.residual_rms
                ));
                fit.centerline
            }
        };
        let seg = &self.segmentation;
        let params = match (seg.resolution_limit, seg.sector_count, seg.tangent_threshold_deg) {
            (_, Some(n), Some(dphi)) => SegmentationParams {
                sector_count: n,
                sector_angle: self.cross_section.roof_arc_angle() / n as f64,
                tangent_threshold: dphi.to_radians(),
                max_segment_length: seg.max_segment_length,
            },
            (Some(limit), None, None) => optimize_segmentation_params(
                &self.cross_section,
                limit,
                seg.max_segment_length,
                seg.sector_cap,
            )?,
            _ => {
                return Err(TunnelError::Config(
                    "segmentation needs either resolution_limit or both sector_count and \
                     tangent_threshold_deg"
                        .into(),
                ))
            }
        };
        let lanes = self
            .lanes
            .unwrap_or_else(|| LaneBoundaries::symmetric(0.5 * self.cross_section.road_width));
        let mut model =
            SegmentedTunnelModel::build(self.cross_section, centerline, params, self.extent, lanes)?;
        warnings.append(&mut model.warnings);
        model.warnings = warnings;
        Ok(model)
    }
}

/// Plane of roof chord `roof` on `side`, extruded along the top-view line
/// `frame`.
pub fn roof_plane(roof: &RoofSegment, frame: &LineFrame, side: Side) -> Plane {
    let right = frame.right();
    let sigma = side.sign();
    let p = frame.origin + sigma * roof.plane_point.x * right;
    let n = sigma * roof.plane_normal.x * right;
    Plane::new(
        Vec3::new(p.x, p.y, roof.plane_point.y),
        Vec3::new(n.x, n.y, roof.plane_normal.y),
    )
}

/// The tunnel as `N` roof chords per side times `M` straight path pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedTunnelModel {
    pub cross_section: CrossSectionSpec,
    pub centerline: CenterlineSpec,
    pub roof_segments: Vec<RoofSegment>,
    pub path_segments: Vec<PathSegment>,
    pub params: SegmentationParams,
    pub lane_boundaries: LaneBoundaries,
    pub extent: [f64; 2],
    /// Error bounds for the chords actually built.
    pub error_budget: ErrorBudget,
    pub warnings: Vec<String>,
}

impl SegmentedTunnelModel {
    pub fn build(
        cross_section: CrossSectionSpec,
        centerline: CenterlineSpec,
        params: SegmentationParams,
        extent: [f64; 2],
        lane_boundaries: LaneBoundaries,
    ) -> Result<Self, TunnelError> {
        cross_section.validate()?;
        params.validate()?;
        let half = 0.5 * cross_section.road_width;
        if !(lane_boundaries.left > 0.0 && lane_boundaries.right > 0.0)
            || lane_boundaries.left > half + 1e-9
            || lane_boundaries.right > half + 1e-9
        {
            return Err(TunnelError::InvalidParameter(format!(
                "lane boundaries {lane_boundaries:?} must lie within the road half width {half}"
            )));
        }
        let roof_segments = segment_cross_section(&cross_section, params.sector_count)?;
        let PathSegmentation { segments, warnings } = segment_tunnel_path(
            &centerline,
            params.tangent_threshold,
            params.max_segment_length,
            extent,
        )?;
        let built = SegmentationParams {
            sector_angle: roof_segments[0].sector_angle,
            ..params
        };
        let error_budget = segmentation_error_bounds(&cross_section, &built);
        Ok(Self {
            cross_section,
            centerline,
            roof_segments,
            path_segments: segments,
            params,
            lane_boundaries,
            extent,
            error_budget,
            warnings,
        })
    }

    /// Straight tunnel with the default cross-section and a 2 m resolution
    /// limit.
    pub fn straight_default() -> Self {
        TunnelConfig::default()
            .build()
            .expect("default tunnel config is valid")
    }

    pub fn roof_segment(&self, i: usize) -> &RoofSegment {
        &self.roof_segments[i - 1]
    }

    pub fn path_segment(&self, j: usize) -> &PathSegment {
        &self.path_segments[j - 1]
    }

    /// Roof chords that can push a ghost outward on their own side.
    pub fn reflecting_roof_segments(&self) -> impl Iterator<Item = &RoofSegment> {
        self.roof_segments
            .iter()
            .filter(|s| s.faces_correction_side())
    }

    /// 1-based index of the path segment covering longitudinal position `y`.
    pub fn path_segment_for(&self, y: f64) -> Result<usize, TunnelError> {
        let first = self.path_segments.first().map(|s| s.start.y);
        let last = self.path_segments.last().map(|s| s.end.y);
        let (Some(min), Some(max)) = (first, last) else {
            return Err(TunnelError::Geometry("model has no path segments".into()));
        };
        if !(y >= min - 1e-9 && y <= max + 1e-9) {
            return Err(TunnelError::OutOfExtent { y, min, max });
        }
        let k = self.path_segments.partition_point(|s| s.end.y < y);
        Ok(k.min(self.path_segments.len() - 1) + 1)
    }

    /// Reflecting plane of roof chord `i` on `side`, extruded along path
    /// segment `j`.
    pub fn plane(&self, side: Side, i: usize, j: usize) -> Plane {
        roof_plane(self.roof_segment(i), &self.path_segment(j).frame(), side)
    }

    /// Top-view footprint of the plane for `(side, i, j)`.
    pub fn footprint(&self, side: Side, i: usize, j: usize) -> PlaneFootprint {
        let (lo, hi) = self.roof_segment(i).lateral_band();
        let sigma = side.sign();
        let (a, b) = (sigma * lo, sigma * hi);
        PlaneFootprint {
            frame: self.path_segment(j).frame(),
            u_min: a.min(b),
            u_max: a.max(b),
        }
    }

    pub fn classify_point(&self, p: &RadarPoint) -> Result<Classification, TunnelError> {
        let j = self.path_segment_for(p.y)?;
        let offset = self.path_segment(j).signed_offset(&p.position());
        let inside = self.lane_boundaries.contains_offset(offset);
        let side = if inside {
            LaneSide::OnLane
        } else if offset > 0.0 {
            LaneSide::Right
        } else {
            LaneSide::Left
        };
        Ok(Classification {
            label: if inside {
                PointLabel::Normal
            } else {
                PointLabel::Ghost
            },
            side,
            path_segment_index: j,
            dist_center: offset.abs(),
            signed_offset: offset,
        })
    }

    /// Whether a top-view position lies inside the lanes of its path segment.
    pub fn in_lanes(&self, p: &Vec2) -> bool {
        match self.path_segment_for(p.y) {
            Ok(j) => self
                .lane_boundaries
                .contains_offset(self.path_segment(j).signed_offset(p)),
            Err(_) => false,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn curved_model() -> SegmentedTunnelModel {
        TunnelConfig::default()
            .with_centerline(vec![0.0, 0.0, 2e-4, -3e-7])
            .build()
            .unwrap()
    }

    /// Lane region of one path segment as a parallelogram with edges of
    /// constant `y`, tested by edge cross products.
    fn in_parallelogram(m: &SegmentedTunnelModel, j: usize, p: Vec2) -> bool {
        let s = m.path_segment(j);
        let k = (1.0 + s.slope * s.slope).sqrt();
        let x = |y: f64, w: f64| s.slope * y + s.intercept + w * k;
        let (y0, y1) = (s.start.y, s.end.y);
        let (l, r) = (-m.lane_boundaries.left, m.lane_boundaries.right);
        let poly = [
            Vec2::new(x(y0, l), y0),
            Vec2::new(x(y0, r), y0),
            Vec2::new(x(y1, r), y1),
            Vec2::new(x(y1, l), y1),
        ];
        let signs: Vec<f64> = (0..4)
            .map(|k| {
                let (a, b) = (poly[k], poly[(k + 1) % 4]);
                (b - a).perp(&(p - a))
            })
            .collect();
        signs.iter().all(|c| *c >= 0.0) || signs.iter().all(|c| *c <= 0.0)
    }

    #[test]
    fn point_on_centerline_is_normal() {
        let m = curved_model();
        for y in [0.0, 37.0, 120.5, 399.0] {
            let c = m.centerline.point_at(y);
            let r = m.classify_point(&RadarPoint::new(c.x, c.y, 0.0)).unwrap();
            assert_eq!(r.label, PointLabel::Normal);
            assert_eq!(r.side, LaneSide::OnLane);
            assert!(r.dist_center <= m.error_budget.path_bound);
        }
    }

    #[test]
    fn straight_ghost_distance() {
        let m = SegmentedTunnelModel::straight_default();
        let r = m.classify_point(&RadarPoint::new(6.0, 100.0, 0.0)).unwrap();
        assert_eq!(r.label, PointLabel::Ghost);
        assert_eq!(r.side, LaneSide::Right);
        assert_eq!(r.dist_center, 6.0);
        let r = m.classify_point(&RadarPoint::new(-2.5, 10.0, 0.0)).unwrap();
        assert_eq!(r.side, LaneSide::Left);
    }

    #[test]
    fn out_of_extent_rejected() {
        let m = SegmentedTunnelModel::straight_default();
        assert!(matches!(
            m.classify_point(&RadarPoint::new(0.0, -1.0, 0.0)),
            Err(TunnelError::OutOfExtent { .. })
        ));
        assert!(m.classify_point(&RadarPoint::new(0.0, 401.0, 0.0)).is_err());
    }

    #[test]
    fn planes_match_chords_in_straight_tunnel() {
        let m = SegmentedTunnelModel::straight_default();
        for roof in &m.roof_segments {
            let right = m.plane(Side::Right, roof.index, 2);
            let left = m.plane(Side::Left, roof.index, 2);
            for q in [roof.lower, roof.upper] {
                let pr = Vec3::new(q.x, 150.0, q.y);
                let pl = Vec3::new(-q.x, 150.0, q.y);
                assert!(right.signed_distance(&pr).abs() < 1e-12);
                assert!(left.signed_distance(&pl).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn default_model_budget() {
        let m = SegmentedTunnelModel::straight_default();
        assert_eq!(m.roof_segments.len(), 12);
        assert_eq!(m.path_segments.len(), 4);
        assert!(m.error_budget.cross_section_bound <= 2.0);
        assert_eq!(m.reflecting_roof_segments().count(), 6);
    }

    #[test]
    fn config_round_trip_and_samples() {
        let cfg = TunnelConfig::default().with_centerline(vec![0.5, 0.01, 1e-4]);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(TunnelConfig::from_toml_str(&text).unwrap(), cfg);

        let toml = r#"
            extent = [0.0, 300.0]
            [cross_section]
            radius = 5.5
            center_height = 1.6
            road_width = 4.0
            [centerline]
            samples = [[0.0, 0.0], [0.1, 100.0], [0.4, 200.0], [0.9, 300.0]]
            degree = 2
            [lanes]
            left = 1.5
            right = 1.8
        "#;
        let m = TunnelConfig::from_toml_str(toml).unwrap().build().unwrap();
        assert_eq!(m.lane_boundaries.left, 1.5);
        assert_eq!(m.centerline.degree(), 2);
        assert!(TunnelConfig::from_toml_str("[cross_section]\nradius = 1").is_err());
    }

    #[test]
    fn explicit_segmentation_needs_both_values() {
        let mut cfg = TunnelConfig::default();
        cfg.segmentation.sector_count = Some(8);
        assert!(matches!(cfg.build(), Err(TunnelError::Config(_))));
        cfg.segmentation.resolution_limit = None;
        cfg.segmentation.tangent_threshold_deg = Some(1.0);
        assert_eq!(cfg.build().unwrap().roof_segments.len(), 8);
    }

    #[test]
    fn lanes_wider_than_road_rejected() {
        let mut cfg = TunnelConfig::default();
        cfg.lanes = Some(LaneBoundaries::symmetric(2.5));
        assert!(cfg.build().is_err());
    }

    fn cubic() -> impl Strategy<Value = Vec<f64>> {
        (-1.0..1.0f64, -0.02..0.02f64, -1e-4..1e-4f64, -2e-7..2e-7f64)
            .prop_map(|(a0, a1, a2, a3)| vec![a0, a1, a2, a3])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn labels_match_polygon_oracle(coef in cubic(), pts in prop::collection::vec((-6.0..6.0f64, 0.0..400.0f64), 50)) {
            let m = TunnelConfig::default().with_centerline(coef).build().unwrap();
            for (dx, y) in pts {
                let x = m.centerline.lateral_at(y) + dx;
                let r = m.classify_point(&RadarPoint::new(x, y, 0.0)).unwrap();
                let oracle = in_parallelogram(&m, r.path_segment_index, Vec2::new(x, y));
                prop_assert_eq!(r.label == PointLabel::Normal, oracle);
            }
        }

        #[test]
        fn path_constraints_hold_under_dense_sampling(coef in cubic()) {
            let m = TunnelConfig::default().with_centerline(coef).build().unwrap();
            let dphi = m.params.tangent_threshold;
            for s in &m.path_segments {
                prop_assert!(s.length <= m.params.max_segment_length + 1e-9);
                let psi0 = m.centerline.tangent_angle(s.start.y);
                let mut y = s.start.y;
                while y <= s.end.y {
                    prop_assert!((m.centerline.tangent_angle(y) - psi0).abs() <= dphi + 1e-9);
                    y += 0.1;
                }
            }
            for w in m.path_segments.windows(2) {
                prop_assert_eq!(w[0].end, w[1].start);
            }
            prop_assert!(m.path_segments[0].start.y == 0.0);
            prop_assert!((m.path_segments.last().unwrap().end.y - 400.0).abs() < 1e-9);
        }

        #[test]
        fn classification_independent_of_order(pts in prop::collection::vec((-6.0..6.0f64, 0.0..400.0f64), 1..30)) {
            let m = curved_model();
            let pts: Vec<RadarPoint> = pts.into_iter().map(|(x, y)| RadarPoint::new(x, y, 0.0)).collect();
            let fwd: Vec<_> = pts.iter().map(|p| m.classify_point(p).unwrap()).collect();
            let mut rev: Vec<_> = pts.iter().rev().map(|p| m.classify_point(p).unwrap()).collect();
            rev.reverse();
            prop_assert_eq!(fwd, rev);
        }
    }

    #[test]
    fn footprint_band_is_outside_lanes() {
        let m = SegmentedTunnelModel::straight_default();
        let f = m.footprint(Side::Left, 3, 1);
        assert!(f.u_max < 0.0);
        let f = m.footprint(Side::Right, 3, 1);
        assert!(f.u_min > 0.0);
        assert_relative_eq!(f.frame.length, 100.0, epsilon = 1e-9);
    }
}
