//! Reflection geometry against the polynomial centerline itself rather than
//! its straight segments.
//!
//! The reflection point `R` seen from the radar lies on the radar-to-ghost
//! line at lateral offset `d` from the centerline: `R = S + sigma d n(S)`
//! where `S` is the foot point on the centerline and `n` the right normal
//! there. Finding `S` has no closed form for a cubic, so it is solved with
//! Newton's method. The tangent at `S` then takes the place of the path
//! segment line in the usual correction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correction::{candidate_on_line, check_reflection_on_path, CorrectionConfig, ReflectionSegment, Rejection, TruePointCandidate};
use crate::geometry::{LineFrame, Vec2};
use crate::point::{RadarPoint, Side};
use crate::tunnel::{CenterlineSpec, SegmentedTunnelModel};

pub const MAX_NEWTON_ITERATIONS: usize = 50;
pub const RESIDUAL_TOL: f64 = 1e-9;
const MAX_OFFSET_REFINEMENTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("radar and ghost coincide")]
    Degenerate,
    #[error("no foot point found, last residual {residual}")]
    NoConvergence { residual: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct CurvedReflectionProblem<'a> {
    pub radar: Vec2,
    pub ghost: Vec2,
    pub centerline: &'a CenterlineSpec,
    /// Offset of the reflection point from the centerline, meters.
    pub lateral_offset: f64,
    pub side: Side,
    /// Longitudinal range tried by the bisection fallback first.
    pub bracket: [f64; 2],
    /// Whole modeled range, the last resort of the fallback.
    pub extent: [f64; 2],
}

impl CurvedReflectionProblem<'_> {
    /// Radar-to-ghost line as `x = b1 y + b0`, or `None` when it runs
    /// parallel to the lateral axis.
    pub fn line_coefficients(&self) -> Option<(f64, f64)> {
        let d = self.ghost - self.radar;
        if d.y.abs() < 1e-12 {
            return None;
        }
        let b1 = d.x / d.y;
        Some((b1, self.radar.x - b1 * self.radar.y))
    }

    /// Signed distance of the candidate reflection point for foot point
    /// longitude `y` from the radar-to-ghost line, and its derivative.
    ///
    /// Using the line's unit normal avoids special-casing a line parallel to
    /// either axis.
    fn residual(&self, normal: &Vec2, y: f64) -> (f64, f64) {
        let c = self.centerline;
        let m = c.slope_at(y);
        let m2 = c.curvature_term_at(y);
        let k = (1.0 + m * m).sqrt();
        let sd = self.side.sign() * self.lateral_offset;
        let foot = c.point_at(y);
        let r = foot + sd * Vec2::new(1.0, -m) / k;
        let f = normal.dot(&(r - self.radar));
        let df = (1.0 - sd * m2 / (k * k * k)) * normal.dot(&Vec2::new(m, 1.0));
        (f, df)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvedTangent {
    /// Tangent line at the foot point, `x = slope * y + intercept`.
    pub slope: f64,
    pub intercept: f64,
    pub foot: Vec2,
    pub reflection: Vec2,
    pub iterations: usize,
    pub residual: f64,
    pub used_fallback: bool,
}

impl CurvedTangent {
    pub fn frame(&self) -> LineFrame {
        LineFrame::from_slope_intercept(self.slope, self.intercept, self.foot.y, 1.0)
    }
}

/// Foot point and tangent for a curved reflection problem.
pub fn solve_curved_tangent(p: &CurvedReflectionProblem) -> Result<CurvedTangent, SolverError> {
    let dir = p.ghost - p.radar;
    if dir.norm() < 1e-12 {
        return Err(SolverError::Degenerate);
    }
    let normal = Vec2::new(dir.y, -dir.x).normalize();

    let mut y = p.ghost.y;
    let mut iterations = 0;
    let mut last = f64::INFINITY;
    let mut converged = false;
    while iterations <= MAX_NEWTON_ITERATIONS {
        let (f, df) = p.residual(&normal, y);
        last = f.abs();
        if last < RESIDUAL_TOL {
            converged = true;
            break;
        }
        if iterations == MAX_NEWTON_ITERATIONS || !df.is_finite() || df.abs() < 1e-14 {
            break;
        }
        y -= f / df;
        iterations += 1;
        if !y.is_finite() {
            break;
        }
    }
    let mut used_fallback = false;
    if !converged {
        used_fallback = true;
        let f = |y: f64| p.residual(&normal, y).0;
        y = bracketed_root(&f, p.bracket, p.ghost.y)
            .or_else(|| bracketed_root(&f, p.extent, p.ghost.y))
            .ok_or(SolverError::NoConvergence { residual: last })?;
        last = f(y).abs();
        if last >= RESIDUAL_TOL {
            return Err(SolverError::NoConvergence { residual: last });
        }
    }

    let c = p.centerline;
    let foot = c.point_at(y);
    let slope = c.slope_at(y);
    let reflection = foot + p.side.sign() * p.lateral_offset * c.right_normal_at(y);
    Ok(CurvedTangent {
        slope,
        intercept: foot.x - slope * foot.y,
        foot,
        reflection,
        iterations,
        residual: last,
        used_fallback,
    })
}

/// Root of `f` in `range`, taking the sign change nearest `near` among a
/// uniform scan of the range.
fn bracketed_root(f: &impl Fn(f64) -> f64, [lo, hi]: [f64; 2], near: f64) -> Option<f64> {
    const PIECES: usize = 64;
    let step = (hi - lo) / PIECES as f64;
    (0..PIECES)
        .map(|k| [lo + k as f64 * step, lo + (k + 1) as f64 * step])
        .filter(|[a, b]| f(*a) * f(*b) <= 0.0)
        .min_by(|x, y| {
            let dx = (0.5 * (x[0] + x[1]) - near).abs();
            let dy = (0.5 * (y[0] + y[1]) - near).abs();
            dx.total_cmp(&dy)
        })
        .and_then(|r| bisect_root(f, r))
}

fn bisect_root(f: &impl Fn(f64) -> f64, [mut a, mut b]: [f64; 2]) -> Option<f64> {
    let (mut fa, fb) = (f(a), f(b));
    if !(fa * fb <= 0.0) {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm.abs() < RESIDUAL_TOL * 1e-3 || m <= a || m >= b {
            return Some(m);
        }
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Some(0.5 * (a + b))
}

/// Same as [`crate::correction::generate_candidate`] but with the centerline
/// tangent at the reflection foot point in place of the path segment line.
///
/// The reflection offset starts from the segmented candidate and is refined
/// a few times against the tangent it produces.
pub fn generate_candidate_curved(
    model: &SegmentedTunnelModel,
    config: &CorrectionConfig,
    ghost: &RadarPoint,
    segment: ReflectionSegment,
) -> Result<TruePointCandidate, Rejection> {
    let g = ghost.position();
    let seg = model.path_segment(segment.path);
    let sigma = segment.side.sign();
    let mut cand = candidate_on_line(model, config, &g, segment, &seg.frame(), false)?;
    check_reflection_on_path(model, &cand)?;
    let mut d = sigma * seg.frame().to_local(&cand.reflection_point.xy()).1;
    // a reflection on the far side of the centerline cannot come from this side
    if d <= 0.0 {
        return Err(Rejection::NoReflectionPath);
    }
    let first = model.path_segments[0].start.y;
    let last = model.path_segments[model.path_segments.len() - 1].end.y;
    for _ in 0..MAX_OFFSET_REFINEMENTS {
        let problem = CurvedReflectionProblem {
            radar: config.radar().xy(),
            ghost: g,
            centerline: &model.centerline,
            lateral_offset: d,
            side: segment.side,
            bracket: [seg.start.y, seg.end.y],
            extent: [first, last],
        };
        let tangent = solve_curved_tangent(&problem).map_err(|_| Rejection::SolverFailed)?;
        let line = tangent.frame();
        cand = candidate_on_line(model, config, &g, segment, &line, false)?;
        let next = sigma * line.to_local(&cand.reflection_point.xy()).1;
        let done = (next - d).abs() < RESIDUAL_TOL;
        d = next;
        if done {
            break;
        }
    }
    if !model.in_lanes(&cand.position) {
        return Err(Rejection::OutsideLanes);
    }
    Ok(cand)
}
