use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::TunnelError;
use crate::geometry::Vec2;

/// Circular-segment tunnel profile: a roof arc of radius `radius` whose
/// center sits `center_height` above the road, over a road `road_width` wide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionSpec {
    pub radius: f64,
    pub center_height: f64,
    pub road_width: f64,
}

impl CrossSectionSpec {
    pub fn validate(&self) -> Result<(), TunnelError> {
        let ok = |c: bool, msg: &str| {
            if c {
                Ok(())
            } else {
                Err(TunnelError::InvalidCrossSection(msg.to_string()))
            }
        };
        ok(
            self.radius.is_finite() && self.radius > 0.0,
            "radius must be positive",
        )?;
        ok(
            self.center_height >= 0.0 && self.center_height < self.radius,
            "center height must lie in [0, radius)",
        )?;
        ok(
            self.road_width > 0.0 && self.road_width < 2.0 * self.radius,
            "road width must lie in (0, 2 * radius)",
        )
    }

    /// Central angle of the arc above the road surface.
    pub fn roof_arc_angle(&self) -> f64 {
        2.0 * PI - 2.0 * (self.center_height / self.radius).acos()
    }

    /// Elevation (from the horizontal through the center, towards the
    /// correction-side wall) where the arc meets the road.
    pub fn ground_elevation(&self) -> f64 {
        -(self.center_height / self.radius).asin()
    }

    /// Cross-section point `(u, z)` at elevation `e`, `u` measured towards
    /// the correction-side wall.
    pub fn arc_point(&self, elevation: f64) -> Vec2 {
        Vec2::new(
            self.radius * elevation.cos(),
            self.center_height + self.radius * elevation.sin(),
        )
    }

    /// Half width of the tunnel floor.
    pub fn floor_half_width(&self) -> f64 {
        (self.radius.powi(2) - self.center_height.powi(2)).sqrt()
    }
}

/// Straight chord replacing one sector of the roof arc.
///
/// Coordinates are in the cross-section frame `(u, z)`: `u` is the lateral
/// offset towards the correction-side wall, `z` the height. Index 1 starts at
/// the correction-side wall and indices grow upward over the roof.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoofSegment {
    pub index: usize,
    /// Chord end closer to the correction-side road edge.
    pub lower: Vec2,
    /// Chord end further along the arc.
    pub upper: Vec2,
    /// Point on the chord plane (its midpoint).
    pub plane_point: Vec2,
    /// Outward unit normal of the chord plane.
    pub plane_normal: Vec2,
    pub sector_angle: f64,
    /// Elevations of the chord ends.
    pub elevation_lower: f64,
    pub elevation_upper: f64,
}

impl RoofSegment {
    pub fn mid_elevation(&self) -> f64 {
        0.5 * (self.elevation_lower + self.elevation_upper)
    }

    /// Whether reflections off this chord push images outward on the
    /// correction side (the chord normal has a positive lateral component).
    pub fn faces_correction_side(&self) -> bool {
        self.mid_elevation() < FRAC_PI_2 - 1e-12
    }

    /// Lateral extent `[min u, max u]` of the chord in the top view.
    pub fn lateral_band(&self) -> (f64, f64) {
        (
            self.lower.x.min(self.upper.x),
            self.lower.x.max(self.upper.x),
        )
    }

    /// Position of a cross-section point along the chord, 0 at `lower`, 1 at
    /// `upper`.
    pub fn chord_parameter(&self, p: &Vec2) -> f64 {
        let d = self.upper - self.lower;
        (p - self.lower).dot(&d) / d.norm_squared()
    }
}

/// Splits the roof arc into `n` equal sectors and returns their chords.
pub fn segment_cross_section(
    spec: &CrossSectionSpec,
    n: usize,
) -> Result<Vec<RoofSegment>, TunnelError> {
    if spec.center_height >= spec.radius {
        return Err(TunnelError::Geometry(format!(
            "center height {} must be below the radius {}",
            spec.center_height, spec.radius
        )));
    }
    spec.validate()?;
    if n == 0 {
        return Err(TunnelError::InvalidParameter(
            "sector count must be at least 1".into(),
        ));
    }
    let theta = spec.roof_arc_angle() / n as f64;
    let e0 = spec.ground_elevation();
    Ok((1..=n)
        .map(|i| {
            let el = e0 + (i - 1) as f64 * theta;
            let eu = e0 + i as f64 * theta;
            let lower = spec.arc_point(el);
            let upper = spec.arc_point(eu);
            let em = 0.5 * (el + eu);
            RoofSegment {
                index: i,
                lower,
                upper,
                plane_point: 0.5 * (lower + upper),
                plane_normal: Vec2::new(em.cos(), em.sin()),
                sector_angle: theta,
                elevation_lower: el,
                elevation_upper: eu,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paper_section() -> CrossSectionSpec {
        CrossSectionSpec {
            radius: 5.5,
            center_height: 1.6,
            road_width: 4.0,
        }
    }

    #[test]
    fn twelve_sectors() {
        let segs = segment_cross_section(&paper_section(), 12).unwrap();
        assert_eq!(segs.len(), 12);
        // (2pi - 2 acos(1.6/5.5)) / 12 evaluated independently
        assert_relative_eq!(segs[0].sector_angle, 0.311_0, epsilon = 5e-5);
        assert!(segs[0].sector_angle.to_degrees() < 18.08);
        assert_eq!(segs.iter().filter(|s| s.faces_correction_side()).count(), 6);
    }

    #[test]
    fn single_sector_spans_arc() {
        let spec = paper_section();
        let segs = segment_cross_section(&spec, 1).unwrap();
        assert_relative_eq!(
            segs[0].sector_angle,
            2.0 * PI - 2.0 * (1.6_f64 / 5.5).acos(),
            epsilon = 1e-12
        );
        assert_relative_eq!(segs[0].lower.y, 0.0, epsilon = 1e-12);
        assert_relative_eq!(segs[0].upper.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn chords_tile_the_arc() {
        let spec = paper_section();
        for n in 1..40 {
            let segs = segment_cross_section(&spec, n).unwrap();
            let total: f64 = segs.iter().map(|s| s.sector_angle).sum();
            assert_relative_eq!(
                n as f64 * segs[0].sector_angle + 2.0 * (spec.center_height / spec.radius).acos(),
                2.0 * PI,
                epsilon = 1e-12
            );
            assert_relative_eq!(total, spec.roof_arc_angle(), epsilon = 1e-12);
            for w in segs.windows(2) {
                assert_relative_eq!(w[0].upper, w[1].lower, epsilon = 1e-12);
            }
            for s in &segs {
                let c = Vec2::new(0.0, spec.center_height);
                assert_relative_eq!((s.lower - c).norm(), spec.radius, epsilon = 1e-12);
                assert_relative_eq!((s.upper - c).norm(), spec.radius, epsilon = 1e-12);
                assert_relative_eq!(s.plane_normal.norm(), 1.0, epsilon = 1e-12);
                assert!((s.upper - s.lower).dot(&s.plane_normal).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_center_above_radius() {
        let spec = CrossSectionSpec {
            radius: 5.0,
            center_height: 5.0,
            road_width: 4.0,
        };
        assert!(matches!(
            segment_cross_section(&spec, 4),
            Err(TunnelError::Geometry(_))
        ));
    }
}
