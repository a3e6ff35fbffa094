//! Geometric primitives shared by the tunnel model, the simulator and the
//! correction stage.
//!
//! World coordinates are right-handed: `x` is lateral (positive to the right
//! of the radar boresight), `y` is longitudinal (along the tunnel, away from
//! the radar) and `z` is height above the road surface.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

/// Infinite plane given by a point on it and a unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub point: Vec3,
    pub normal: Vec3,
}

impl Plane {
    /// Builds a plane, normalising `normal`.
    pub fn new(point: Vec3, normal: Vec3) -> Self {
        Self {
            point,
            normal: normal.normalize(),
        }
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        (p - self.point).dot(&self.normal)
    }

    /// Specular image of `p`.
    pub fn mirror(&self, p: &Vec3) -> Vec3 {
        p - 2.0 * self.signed_distance(p) * self.normal
    }

    /// Crossing of the closed segment `a -> b` with the plane.
    ///
    /// Returns the segment parameter in `[0, 1]` and the crossing point, or
    /// `None` when both ends lie strictly on the same side or the segment is
    /// parallel to the plane.
    pub fn intersect_segment(&self, a: &Vec3, b: &Vec3) -> Option<(f64, Vec3)> {
        let da = self.signed_distance(a);
        let db = self.signed_distance(b);
        if da * db > 0.0 || (da - db).abs() < f64::EPSILON {
            return None;
        }
        let t = da / (da - db);
        Some((t, a + t * (b - a)))
    }
}

/// Reflects `point` across `plane`. An involution and an isometry.
pub fn mirror_point_across_plane(point: &Vec3, plane: &Plane) -> Vec3 {
    plane.mirror(point)
}

/// Straight line in the top view with a unit direction and a finite length,
/// used as the local frame of a path segment or of a centerline tangent.
///
/// Local coordinates are `s` (along `dir` from `origin`) and `u` (signed
/// offset, positive to the right of `dir`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFrame {
    pub origin: Vec2,
    pub dir: Vec2,
    pub length: f64,
}

impl LineFrame {
    pub fn through(a: Vec2, b: Vec2) -> Self {
        let d = b - a;
        let length = d.norm();
        Self {
            origin: a,
            dir: d / length,
            length,
        }
    }

    /// Frame of the line `x = m * y + b`, oriented towards increasing `y`.
    pub fn from_slope_intercept(m: f64, b: f64, y0: f64, length: f64) -> Self {
        let dir = Vec2::new(m, 1.0).normalize();
        Self {
            origin: Vec2::new(m * y0 + b, y0),
            dir,
            length,
        }
    }

    /// Unit vector pointing to the right of the travel direction.
    pub fn right(&self) -> Vec2 {
        Vec2::new(self.dir.y, -self.dir.x)
    }

    pub fn to_local(&self, p: &Vec2) -> (f64, f64) {
        let d = p - self.origin;
        (d.dot(&self.dir), d.dot(&self.right()))
    }

    pub fn to_world(&self, s: f64, u: f64) -> Vec2 {
        self.origin + s * self.dir + u * self.right()
    }

    /// Slope and intercept of the line written as `x = m * y + b`.
    pub fn slope_intercept(&self) -> (f64, f64) {
        let m = self.dir.x / self.dir.y;
        (m, self.origin.x - m * self.origin.y)
    }
}

/// Liang-Barsky clip of the segment `p0 -> p1` against the axis-aligned
/// rectangle `[min, max]`. Returns the parameter interval inside.
pub fn clip_segment_to_rect(p0: Vec2, p1: Vec2, min: Vec2, max: Vec2) -> Option<(f64, f64)> {
    let d = p1 - p0;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    let checks = [
        (-d.x, p0.x - min.x),
        (d.x, max.x - p0.x),
        (-d.y, p0.y - min.y),
        (d.y, max.y - p0.y),
    ];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                if r > t1 {
                    return None;
                }
                t0 = t0.max(r);
            } else {
                if r < t0 {
                    return None;
                }
                t1 = t1.min(r);
            }
        }
    }
    Some((t0, t1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn plane() -> Plane {
        Plane::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.3, -0.4, 0.8))
    }

    #[test]
    fn point_on_plane_is_fixed() {
        let p = plane();
        let q = p.point + Vec3::new(0.4, 0.3, 0.0).cross(&p.normal);
        assert_relative_eq!(mirror_point_across_plane(&q, &p), q, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn mirror_is_isometric_involution(x in -50.0..50.0f64, y in -50.0..50.0f64, z in -50.0..50.0f64) {
            let p = plane();
            let q = Vec3::new(x, y, z);
            let m = mirror_point_across_plane(&q, &p);
            prop_assert!((mirror_point_across_plane(&m, &p) - q).norm() < 1e-9);
            prop_assert!((p.signed_distance(&q).abs() - p.signed_distance(&m).abs()).abs() < 1e-9);
        }
    }

    #[test]
    fn segment_crossing() {
        let p = Plane::new(Vec3::zeros(), Vec3::z());
        let (t, x) = p
            .intersect_segment(&Vec3::new(0.0, 0.0, 1.0), &Vec3::new(2.0, 0.0, -3.0))
            .unwrap();
        assert_relative_eq!(t, 0.25);
        assert_relative_eq!(x, Vec3::new(0.5, 0.0, 0.0));
        assert!(p
            .intersect_segment(&Vec3::new(0.0, 0.0, 1.0), &Vec3::new(0.0, 0.0, 2.0))
            .is_none());
    }

    #[test]
    fn line_frame_round_trip() {
        let f = LineFrame::through(Vec2::new(1.0, 0.0), Vec2::new(2.0, 10.0));
        let (m, b) = f.slope_intercept();
        assert_relative_eq!(m, 0.1);
        assert_relative_eq!(b, 1.0);
        let p = Vec2::new(3.0, 4.0);
        let (s, u) = f.to_local(&p);
        assert_relative_eq!(f.to_world(s, u), p, epsilon = 1e-12);
        // right of a +y heading is +x
        assert!(LineFrame::through(Vec2::zeros(), Vec2::y()).right().x > 0.99);
    }

    #[test]
    fn clip() {
        let r = clip_segment_to_rect(
            Vec2::new(-1.0, 0.5),
            Vec2::new(3.0, 0.5),
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
        )
        .unwrap();
        assert_relative_eq!(r.0, 0.25);
        assert_relative_eq!(r.1, 0.5);
        assert!(clip_segment_to_rect(
            Vec2::new(-1.0, 2.0),
            Vec2::new(3.0, 2.0),
            Vec2::zeros(),
            Vec2::new(1.0, 1.0)
        )
        .is_none());
    }
}
