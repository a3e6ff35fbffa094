use serde::{Deserialize, Serialize};

use super::SimError;
use crate::geometry::Vec2;
use crate::tunnel::SegmentedTunnelModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleKind {
    #[default]
    Car,
    Truck,
}

impl VehicleKind {
    /// Default `(length, width, roof height)` in meters.
    pub fn dimensions(self) -> (f64, f64, f64) {
        match self {
            VehicleKind::Car => (4.5, 1.8, 1.5),
            VehicleKind::Truck => (12.0, 2.5, 3.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: u32,
    pub kind: VehicleKind,
    pub position: Vec2,
    pub velocity: Vec2,
    /// Unit vector along the vehicle's length, pointing forward.
    pub heading: Vec2,
    pub length: f64,
    pub width: f64,
    pub roof_height: f64,
}

impl VehicleState {
    /// Right-hand unit vector of the footprint.
    pub fn lateral_axis(&self) -> Vec2 {
        Vec2::new(self.heading.y, -self.heading.x)
    }

    /// Footprint coordinates `(along, across)` of a top-view point.
    pub fn to_local(&self, p: &Vec2) -> Vec2 {
        let d = p - self.position;
        Vec2::new(d.dot(&self.heading), d.dot(&self.lateral_axis()))
    }

    pub fn footprint_contains(&self, p: &Vec2) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= 0.5 * self.length && l.y.abs() <= 0.5 * self.width
    }

    /// Footprint corners, counter-clockwise from rear right.
    pub fn corners(&self) -> [Vec2; 4] {
        let h = 0.5 * self.length * self.heading;
        let w = 0.5 * self.width * self.lateral_axis();
        [
            self.position - h + w,
            self.position + h + w,
            self.position + h - w,
            self.position - h - w,
        ]
    }
}

/// Scripted motion: constant speed through waypoints given as
/// `[longitudinal, lateral offset from the centerline]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleScript {
    pub id: u32,
    #[serde(default)]
    pub kind: VehicleKind,
    #[serde(default)]
    pub length: Option<f64>,
    #[serde(default)]
    pub width: Option<f64>,
    #[serde(default)]
    pub roof_height: Option<f64>,
    pub waypoints: Vec<[f64; 2]>,
    /// m/s along the waypoint polyline.
    pub speed: f64,
    #[serde(default)]
    pub start_time: f64,
}

impl VehicleScript {
    pub fn new(id: u32, kind: VehicleKind, waypoints: Vec<[f64; 2]>, speed: f64) -> Self {
        Self {
            id,
            kind,
            length: None,
            width: None,
            roof_height: None,
            waypoints,
            speed,
            start_time: 0.0,
        }
    }

    /// Straight run along a constant lateral offset.
    pub fn lane(id: u32, kind: VehicleKind, offset: f64, from: f64, to: f64, speed: f64) -> Self {
        Self::new(id, kind, vec![[from, offset], [to, offset]], speed)
    }

    pub fn starting_at(mut self, t: f64) -> Self {
        self.start_time = t;
        self
    }

    pub fn dimensions(&self) -> (f64, f64, f64) {
        let (l, w, h) = self.kind.dimensions();
        (
            self.length.unwrap_or(l),
            self.width.unwrap_or(w),
            self.roof_height.unwrap_or(h),
        )
    }

    fn polyline_length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| (Vec2::from(w[1]) - Vec2::from(w[0])).norm())
            .sum()
    }

    /// Time the vehicle reaches its last waypoint.
    pub fn end_time(&self) -> f64 {
        if self.speed > 0.0 {
            self.start_time + self.polyline_length() / self.speed
        } else {
            f64::INFINITY
        }
    }

    /// Rejects scripts whose footprint would leave the lanes or the model.
    pub fn validate(&self, model: &SegmentedTunnelModel) -> Result<(), SimError> {
        let err = |msg: String| SimError::Script { id: self.id, msg };
        if self.waypoints.is_empty() {
            return Err(err("no waypoints".into()));
        }
        if !(self.speed >= 0.0 && self.speed.is_finite()) || !self.start_time.is_finite() {
            return Err(err("speed must be finite and non-negative".into()));
        }
        let (l, w, h) = self.dimensions();
        if !(l > 0.0 && w > 0.0 && h > 0.0) {
            return Err(err("footprint and roof height must be positive".into()));
        }
        let lanes = model.lane_boundaries;
        for wp in &self.waypoints {
            let [y, off] = *wp;
            if !(y >= model.extent[0] && y <= model.extent[1]) {
                return Err(err(format!("waypoint at {y} m outside the tunnel extent")));
            }
            if off - 0.5 * w < -lanes.left - 1e-9 || off + 0.5 * w > lanes.right + 1e-9 {
                return Err(err(format!(
                    "waypoint offset {off} m puts the footprint outside the lanes"
                )));
            }
        }
        Ok(())
    }

    /// `(longitudinal, offset, direction in that plane)` after travelling
    /// `dist` along the polyline.
    fn along(&self, dist: f64) -> (Vec2, Vec2) {
        let mut left = dist;
        let mut dir = Vec2::new(1.0, 0.0);
        for w in self.waypoints.windows(2) {
            let (a, b) = (Vec2::from(w[0]), Vec2::from(w[1]));
            let seg = (b - a).norm();
            if seg == 0.0 {
                continue;
            }
            dir = (b - a) / seg;
            if left <= seg {
                return (a + left * dir, dir);
            }
            left -= seg;
        }
        (Vec2::from(*self.waypoints.last().unwrap()), dir)
    }

    /// State at time `t`, or `None` before the start or after the last
    /// waypoint.
    pub fn state_at(&self, t: f64, model: &SegmentedTunnelModel) -> Option<VehicleState> {
        if t < self.start_time || t > self.end_time() {
            return None;
        }
        let c = &model.centerline;
        let world = |q: Vec2| c.point_at(q.x) + q.y * c.right_normal_at(q.x);
        let dist = self.speed * (t - self.start_time);
        let (q, dir) = self.along(dist);
        let position = world(q);
        // Direction of travel in the world from a short step along the script.
        let step = 1e-3;
        let ahead = world(q + step * dir);
        let forward = (ahead - position).normalize();
        let (length, width, roof_height) = self.dimensions();
        Some(VehicleState {
            id: self.id,
            kind: self.kind,
            position,
            velocity: self.speed * forward,
            heading: forward,
            length,
            width,
            roof_height,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_speed_lane_motion() {
        let m = SegmentedTunnelModel::straight_default();
        let s = VehicleScript::lane(1, VehicleKind::Car, 1.0, 60.0, 300.0, 20.0);
        s.validate(&m).unwrap();
        let v = s.state_at(2.0, &m).unwrap();
        assert_relative_eq!(v.position, Vec2::new(1.0, 100.0), epsilon = 1e-9);
        assert_relative_eq!(v.velocity, Vec2::new(0.0, 20.0), epsilon = 1e-6);
        assert!(s.state_at(12.5, &m).is_none());
        assert!(s.state_at(-0.1, &m).is_none());
    }

    #[test]
    fn approaching_vehicle_heads_down() {
        let m = SegmentedTunnelModel::straight_default();
        let s = VehicleScript::lane(2, VehicleKind::Truck, -0.5, 340.0, 60.0, 15.0);
        let v = s.state_at(1.0, &m).unwrap();
        assert_relative_eq!(v.position.y, 325.0, epsilon = 1e-9);
        assert!(v.velocity.y < 0.0 && v.heading.y < 0.0);
        assert_eq!((v.length, v.roof_height), (12.0, 3.5));
    }

    #[test]
    fn leaving_lanes_rejected() {
        let m = SegmentedTunnelModel::straight_default();
        let s = VehicleScript::lane(3, VehicleKind::Car, 1.5, 60.0, 300.0, 20.0);
        assert!(matches!(s.validate(&m), Err(SimError::Script { id: 3, .. })));
        let s = VehicleScript::new(4, VehicleKind::Car, vec![[60.0, 0.0], [100.0, -1.5]], 10.0);
        assert!(s.validate(&m).is_err());
        let s = VehicleScript::lane(5, VehicleKind::Car, 0.0, 60.0, 500.0, 20.0);
        assert!(s.validate(&m).is_err());
    }

    #[test]
    fn footprint_geometry() {
        let m = SegmentedTunnelModel::straight_default();
        let v = VehicleScript::lane(1, VehicleKind::Car, 0.5, 100.0, 200.0, 10.0)
            .state_at(0.0, &m)
            .unwrap();
        assert!(v.footprint_contains(&Vec2::new(0.5, 102.2)));
        assert!(!v.footprint_contains(&Vec2::new(1.5, 100.0)));
        let c = v.corners();
        assert_relative_eq!(c[0], Vec2::new(1.4, 97.75), epsilon = 1e-12);
    }

    #[test]
    fn curved_motion_follows_centerline() {
        let m = crate::tunnel::TunnelConfig::default()
            .with_centerline(vec![0.0, 0.0, 1e-4])
            .build()
            .unwrap();
        let s = VehicleScript::lane(1, VehicleKind::Car, 0.0, 60.0, 300.0, 20.0);
        let v = s.state_at(5.0, &m).unwrap();
        assert_relative_eq!(v.position.x, m.centerline.lateral_at(v.position.y), epsilon = 1e-9);
        let t = m.centerline.tangent_at(v.position.y);
        assert!((v.heading - t).norm() < 1e-3);
    }
}
