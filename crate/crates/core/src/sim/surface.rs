//! Specular paths off the planar segments and off the exact curved tunnel
//! surface.

use serde::{Deserialize, Serialize};

use crate::correction::ReflectionSegment;
use crate::geometry::{Vec2, Vec3};
use crate::point::Side;
use crate::tunnel::SegmentedTunnelModel;

const BOUNDS_EPS: f64 = 1e-9;
const NEWTON_MAX: usize = 40;

/// One wall reflection: the image the radar sees and where it bounced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhostPath {
    pub image: Vec3,
    pub reflection: Vec3,
    pub segment: ReflectionSegment,
}

/// Chord `i` of the arc counted from the right road edge, as the side and
/// index the correction stage uses.
fn normalize_chord(model: &SegmentedTunnelModel, i: usize) -> (Side, usize) {
    if model.roof_segment(i).faces_correction_side() {
        (Side::Right, i)
    } else {
        let mirrored = model.roof_segments.len() + 1 - i;
        if model.roof_segment(mirrored).faces_correction_side() {
            (Side::Left, mirrored)
        } else {
            // the zenith chord of an odd split
            (Side::Right, i)
        }
    }
}

/// All single-bounce paths radar -> planar segment -> `target` whose
/// reflection point lies inside the segment.
pub fn planar_ghost_paths(
    model: &SegmentedTunnelModel,
    radar: &Vec3,
    target: &Vec3,
) -> Vec<GhostPath> {
    let mut out = Vec::new();
    for (jj, seg) in model.path_segments.iter().enumerate() {
        let frame = seg.frame();
        for roof in &model.roof_segments {
            let plane = model.plane(Side::Right, roof.index, jj + 1);
            let image = plane.mirror(target);
            let Some((_, r)) = plane.intersect_segment(radar, &image) else {
                continue;
            };
            let (s, u) = frame.to_local(&r.xy());
            if s < -BOUNDS_EPS || s > frame.length + BOUNDS_EPS {
                continue;
            }
            let t = roof.chord_parameter(&Vec2::new(u, r.z));
            if !(-BOUNDS_EPS..=1.0 + BOUNDS_EPS).contains(&t) {
                continue;
            }
            let (side, index) = normalize_chord(model, roof.index);
            out.push(GhostPath {
                image,
                reflection: r,
                segment: ReflectionSegment {
                    side,
                    roof: index,
                    path: jj + 1,
                },
            });
        }
    }
    out
}

/// Exact tunnel surface: the circular profile swept along the polynomial
/// centerline. `e` is the elevation measured from the right wall.
#[derive(Debug, Clone, Copy)]
pub struct TubeSurface<'a> {
    model: &'a SegmentedTunnelModel,
}

impl<'a> TubeSurface<'a> {
    pub fn new(model: &'a SegmentedTunnelModel) -> Self {
        Self { model }
    }

    pub fn point(&self, y0: f64, e: f64) -> Vec3 {
        let cs = &self.model.cross_section;
        let c = &self.model.centerline;
        let p = c.point_at(y0) + cs.radius * e.cos() * c.right_normal_at(y0);
        Vec3::new(p.x, p.y, cs.center_height + cs.radius * e.sin())
    }

    fn elevation_range(&self) -> (f64, f64) {
        let e0 = self.model.cross_section.ground_elevation();
        (e0, std::f64::consts::PI - e0)
    }

    /// Tangential components of the bisector of the two unit rays at
    /// `P(y0, e)`; zero at a specular point.
    fn residual(&self, q: [f64; 2], radar: &Vec3, target: &Vec3) -> [f64; 2] {
        let h = 1e-5;
        let p = self.point(q[0], q[1]);
        let g = (p - radar).normalize() + (p - target).normalize();
        let dy = (self.point(q[0] + h, q[1]) - self.point(q[0] - h, q[1])) / (2.0 * h);
        let cs = &self.model.cross_section;
        let n = self.model.centerline.right_normal_at(q[0]);
        let de = Vec3::new(
            -cs.radius * q[1].sin() * n.x,
            -cs.radius * q[1].sin() * n.y,
            cs.radius * q[1].cos(),
        );
        [g.dot(&dy), g.dot(&de)]
    }

    /// Newton on the two tangential conditions from `seed`, with a
    /// finite-difference Jacobian.
    pub fn specular_point(&self, seed: [f64; 2], radar: &Vec3, target: &Vec3) -> Option<[f64; 2]> {
        let mut q = seed;
        let h = 1e-6;
        for _ in 0..NEWTON_MAX {
            let r = self.residual(q, radar, target);
            let mut jac = [[0.0; 2]; 2];
            for k in 0..2 {
                let (mut a, mut b) = (q, q);
                a[k] += h;
                b[k] -= h;
                let (ra, rb) = (self.residual(a, radar, target), self.residual(b, radar, target));
                jac[0][k] = (ra[0] - rb[0]) / (2.0 * h);
                jac[1][k] = (ra[1] - rb[1]) / (2.0 * h);
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if !det.is_finite() || det.abs() < 1e-300 {
                return None;
            }
            let dq = [
                (jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
                (jac[0][0] * r[1] - jac[1][0] * r[0]) / det,
            ];
            q = [q[0] - dq[0], q[1] - dq[1]];
            if !(q[0].is_finite() && q[1].is_finite()) {
                return None;
            }
            if dq[0].abs() < 1e-10 && dq[1].abs() < 1e-12 {
                let r = self.residual(q, radar, target);
                return (r[0].abs().max(r[1].abs()) < 1e-9).then_some(q);
            }
        }
        None
    }

    /// Single-bounce paths off the curved surface, seeded from the planar
    /// reflection points of every chord and path segment.
    pub fn ghost_paths(&self, radar: &Vec3, target: &Vec3) -> Vec<GhostPath> {
        let m = self.model;
        let (e_lo, e_hi) = self.elevation_range();
        let [y_lo, y_hi] = m.extent;
        let mut found: Vec<[f64; 2]> = Vec::new();
        let mut out = Vec::new();
        for (jj, seg) in m.path_segments.iter().enumerate() {
            for roof in &m.roof_segments {
                let plane = m.plane(Side::Right, roof.index, jj + 1);
                let image = plane.mirror(target);
                let Some((_, r)) = plane.intersect_segment(radar, &image) else {
                    continue;
                };
                // loose bounds: the curved point may sit just past a joint
                if r.y < seg.start.y.min(seg.end.y) - 10.0 || r.y > seg.start.y.max(seg.end.y) + 10.0 {
                    continue;
                }
                let seed = [r.y, roof.mid_elevation()];
                let Some(q) = self.specular_point(seed, radar, target) else {
                    continue;
                };
                if !(q[1] > e_lo && q[1] < e_hi && q[0] >= y_lo && q[0] <= y_hi) {
                    continue;
                }
                if found
                    .iter()
                    .any(|f| (f[0] - q[0]).abs() < 1e-6 && (f[1] - q[1]).abs() < 1e-9)
                {
                    continue;
                }
                found.push(q);
                let p = self.point(q[0], q[1]);
                let l1 = (p - radar).norm();
                let l2 = (p - target).norm();
                let image = radar + (l1 + l2) * (p - radar) / l1;
                let theta = m.roof_segments[0].sector_angle;
                let i = (((q[1] - e_lo) / theta).floor() as usize + 1).min(m.roof_segments.len());
                let (side, index) = normalize_chord(m, i);
                let Ok(path) = m.path_segment_for(p.y) else {
                    continue;
                };
                out.push(GhostPath {
                    image,
                    reflection: p,
                    segment: ReflectionSegment {
                        side,
                        roof: index,
                        path,
                    },
                });
            }
        }
        out
    }
}
