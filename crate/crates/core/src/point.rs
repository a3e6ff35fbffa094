use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;

/// A single top-view radar detection: lateral `x`, longitudinal `y` (meters)
/// and Doppler velocity `v_d` (m/s, positive when receding).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarPoint {
    pub x: f64,
    pub y: f64,
    pub v_d: f64,
}

impl RadarPoint {
    pub fn new(x: f64, y: f64, v_d: f64) -> Self {
        Self { x, y, v_d }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.v_d.is_finite()
    }
}

/// Tunnel side relative to the centerline, looking along increasing `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// +1 for the right side, -1 for the left side.
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }

    pub fn of_offset(offset: f64) -> Self {
        if offset >= 0.0 {
            Side::Right
        } else {
            Side::Left
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}
