//! Constant-velocity Kalman filter on `(x, y, v_x, v_y)`.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;

/// Velocity variance given to a freshly born state (m²/s²).
pub const INITIAL_VELOCITY_VARIANCE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanState {
    pub x: Vector4<f64>,
    pub p: Matrix4<f64>,
    pub last_update: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionModel {
    pub dt: f64,
    /// White-acceleration intensity (m²/s³).
    pub q: f64,
    pub r: Matrix2<f64>,
}

impl MotionModel {
    pub fn new(dt: f64, q: f64, sigma_lateral: f64, sigma_longitudinal: f64) -> Self {
        Self {
            dt,
            q,
            r: Matrix2::new(sigma_lateral.powi(2), 0.0, 0.0, sigma_longitudinal.powi(2)),
        }
    }

    fn f(&self) -> Matrix4<f64> {
        let mut f = Matrix4::identity();
        f[(0, 2)] = self.dt;
        f[(1, 3)] = self.dt;
        f
    }

    fn process_noise(&self) -> Matrix4<f64> {
        let dt = self.dt;
        let (a, b, c) = (dt.powi(3) / 3.0, dt.powi(2) / 2.0, dt);
        let mut q = Matrix4::zeros();
        for k in 0..2 {
            q[(k, k)] = a;
            q[(k, k + 2)] = b;
            q[(k + 2, k)] = b;
            q[(k + 2, k + 2)] = c;
        }
        self.q * q
    }

    fn h() -> Matrix2x4<f64> {
        Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
    }
}

impl KalmanState {
    pub fn new(z: Vec2, model: &MotionModel, frame: usize) -> Self {
        let mut p = Matrix4::zeros();
        p.fixed_view_mut::<2, 2>(0, 0).copy_from(&model.r);
        p[(2, 2)] = INITIAL_VELOCITY_VARIANCE;
        p[(3, 3)] = INITIAL_VELOCITY_VARIANCE;
        Self {
            x: Vector4::new(z.x, z.y, 0.0, 0.0),
            p,
            last_update: frame,
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x[0], self.x[1])
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.x[2], self.x[3])
    }

    pub fn predicted_position(&self, model: &MotionModel) -> Vec2 {
        self.position() + model.dt * self.velocity()
    }

    pub fn predict(&mut self, model: &MotionModel) {
        let f = model.f();
        self.x = f * self.x;
        self.p = symmetrize(f * self.p * f.transpose() + model.process_noise());
    }

    /// Joseph-form update with position measurement `z`.
    pub fn update(&mut self, z: Vec2, model: &MotionModel, frame: usize) {
        let h = MotionModel::h();
        let innov = Vector2::new(z.x, z.y) - h * self.x;
        let s = h * self.p * h.transpose() + model.r;
        let Some(s_inv) = s.try_inverse() else {
            return;
        };
        let k = self.p * h.transpose() * s_inv;
        self.x += k * innov;
        let ikh = Matrix4::identity() - k * h;
        self.p = symmetrize(ikh * self.p * ikh.transpose() + k * model.r * k.transpose());
        self.last_update = frame;
    }
}

fn symmetrize(m: Matrix4<f64>) -> Matrix4<f64> {
    0.5 * (m + m.transpose())
}
