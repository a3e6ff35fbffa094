use serde::{Deserialize, Serialize};

use super::{CenterlineSpec, TunnelError};
use crate::geometry::{LineFrame, Vec2};

/// Longitudinal scan step used to locate tangent-angle crossings, meters.
const SCAN_STEP: f64 = 0.05;
/// Leftover extent shorter than this does not start a new segment.
const END_TOL: f64 = 1e-9;
const MAX_SEGMENTS: usize = 100_000;

/// Straight piece of the tunnel path between two dividing points on the
/// centerline. Its local line is `x = slope * y + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSegment {
    pub index: usize,
    pub start: Vec2,
    pub end: Vec2,
    pub slope: f64,
    pub intercept: f64,
    pub length: f64,
}

impl PathSegment {
    pub fn from_endpoints(index: usize, start: Vec2, end: Vec2) -> Self {
        let frame = LineFrame::through(start, end);
        let (slope, intercept) = frame.slope_intercept();
        Self {
            index,
            start,
            end,
            slope,
            intercept,
            length: frame.length,
        }
    }

    pub fn frame(&self) -> LineFrame {
        LineFrame::through(self.start, self.end)
    }

    /// Signed perpendicular offset of `p` from the segment line, positive
    /// to the right.
    pub fn signed_offset(&self, p: &Vec2) -> f64 {
        (p.x - self.slope * p.y - self.intercept) / (1.0 + self.slope * self.slope).sqrt()
    }

    pub fn heading(&self) -> f64 {
        self.slope.atan()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSegmentation {
    pub segments: Vec<PathSegment>,
    pub warnings: Vec<String>,
}

/// Splits the centerline over `extent` into straight segments.
///
/// Dividing points start at `extent[0]`; each next point is the first place
/// where the tangent heading has turned by `delta_phi` relative to the
/// previous dividing point, or where the chord reaches `l_max`, whichever
/// comes first.
pub fn segment_tunnel_path(
    centerline: &CenterlineSpec,
    delta_phi: f64,
    l_max: f64,
    extent: [f64; 2],
) -> Result<PathSegmentation, TunnelError> {
    centerline.validate()?;
    if !(delta_phi > 0.0) || !(l_max > 0.0) {
        return Err(TunnelError::InvalidParameter(
            "tangent threshold and maximum segment length must be positive".into(),
        ));
    }
    if !(extent[1] > extent[0]) || !extent[0].is_finite() || !extent[1].is_finite() {
        return Err(TunnelError::InvalidParameter(format!(
            "empty longitudinal extent [{}, {}]",
            extent[0], extent[1]
        )));
    }

    let mut warnings = Vec::new();
    if let Some([lo, hi]) = centerline.valid_range {
        if extent[0] < lo - 1e-9 || extent[1] > hi + 1e-9 {
            warnings.push(format!(
                "extent [{}, {}] exceeds the centerline fit range [{lo}, {hi}]",
                extent[0], extent[1]
            ));
        }
    }

    let mut segments = Vec::new();
    let mut y0 = extent[0];
    while y0 < extent[1] - END_TOL {
        if segments.len() >= MAX_SEGMENTS {
            return Err(TunnelError::InvalidParameter(format!(
                "path segmentation exceeded {MAX_SEGMENTS} segments"
            )));
        }
        let y_turn = next_turn(centerline, y0, delta_phi, extent[1]);
        let y_len = chord_limit(centerline, y0, l_max, extent[1]);
        let y1 = y_turn.min(y_len);
        segments.push(PathSegment::from_endpoints(
            segments.len() + 1,
            centerline.point_at(y0),
            centerline.point_at(y1),
        ));
        y0 = y1;
    }
    Ok(PathSegmentation { segments, warnings })
}

/// First `y > y0` where the tangent heading differs from the heading at `y0`
/// by `delta_phi`, or `y_end` when it never does.
fn next_turn(c: &CenterlineSpec, y0: f64, delta_phi: f64, y_end: f64) -> f64 {
    let psi0 = c.tangent_angle(y0);
    let excess = |y: f64| (c.tangent_angle(y) - psi0).abs() - delta_phi;
    let mut a = y0;
    while a < y_end {
        let b = (a + SCAN_STEP).min(y_end);
        if excess(b) >= 0.0 {
            return bisect(excess, a, b);
        }
        a = b;
    }
    y_end
}

/// Largest `y <= y_end` whose chord from `y0` is at most `l_max` long.
fn chord_limit(c: &CenterlineSpec, y0: f64, l_max: f64, y_end: f64) -> f64 {
    let p0 = c.point_at(y0);
    let excess = |y: f64| (c.point_at(y) - p0).norm() - l_max;
    if excess(y_end) <= 0.0 {
        return y_end;
    }
    // chord length grows at least as fast as the longitudinal distance
    bisect(excess, y0, (y0 + l_max).min(y_end))
}

/// Bisection for a sign change of `f` on `[a, b]` with `f(a) < 0 <= f(b)`,
/// run down to adjacent floats; returns the left end of the final bracket so
/// the constraint holds there.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    loop {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) >= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    a
}
