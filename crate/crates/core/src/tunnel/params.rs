use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{CrossSectionSpec, TunnelError};

/// Default cap on path segment length, meters.
pub const DEFAULT_MAX_SEGMENT_LENGTH: f64 = 100.0;
/// Default cap on the number of roof sectors the optimizer may ask for.
pub const DEFAULT_SECTOR_CAP: usize = 1000;

const THETA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    pub sector_count: usize,
    /// Sector angle bound the segmentation was sized against, radians. The
    /// chords actually built use `roof_arc / sector_count`, which never
    /// exceeds this.
    pub sector_angle: f64,
    /// Maximum heading change between adjacent dividing points, radians.
    pub tangent_threshold: f64,
    pub max_segment_length: f64,
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<(), TunnelError> {
        if self.sector_count == 0
            || !(self.sector_angle > 0.0)
            || !(self.tangent_threshold > 0.0)
            || !(self.max_segment_length > 0.0)
        {
            return Err(TunnelError::InvalidParameter(format!(
                "invalid segmentation parameters {self:?}"
            )));
        }
        Ok(())
    }
}

/// Worst-case localization error introduced by the two segmentations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub cross_section_bound: f64,
    pub path_bound: f64,
}

impl ErrorBudget {
    pub fn total(&self) -> f64 {
        self.cross_section_bound + self.path_bound
    }
}

/// `E_c = 2 R (sin(theta/2) + sin^2(theta/2))`.
pub fn cross_section_error_bound(radius: f64, sector_angle: f64) -> f64 {
    let s = (0.5 * sector_angle).sin();
    2.0 * radius * (s + s * s)
}

/// `E_p = L_max tan(delta_phi)`.
pub fn path_error_bound(max_segment_length: f64, tangent_threshold: f64) -> f64 {
    max_segment_length * tangent_threshold.tan()
}

pub fn segmentation_error_bounds(spec: &CrossSectionSpec, params: &SegmentationParams) -> ErrorBudget {
    ErrorBudget {
        cross_section_bound: cross_section_error_bound(spec.radius, params.sector_angle),
        path_bound: path_error_bound(params.max_segment_length, params.tangent_threshold),
    }
}

/// Coarsest segmentation whose error bounds stay within `resolution_limit`.
///
/// The sector angle is the largest `theta` with `E_c(theta) <= limit`, found
/// by bisection since `E_c` is increasing but has no closed-form inverse; the
/// tangent threshold inverts `E_p` directly.
pub fn optimize_segmentation_params(
    spec: &CrossSectionSpec,
    resolution_limit: f64,
    max_segment_length: f64,
    sector_cap: usize,
) -> Result<SegmentationParams, TunnelError> {
    spec.validate()?;
    if !(resolution_limit > 0.0) || !(max_segment_length > 0.0) {
        return Err(TunnelError::InvalidParameter(
            "resolution limit and maximum segment length must be positive".into(),
        ));
    }
    let arc = spec.roof_arc_angle();
    // E_c increases on (0, pi); a sector can never exceed the roof arc.
    let upper = arc.min(PI);
    let theta = if cross_section_error_bound(spec.radius, upper) <= resolution_limit {
        upper
    } else {
        let (mut lo, mut hi) = (0.0, upper);
        while hi - lo > THETA_TOL {
            let mid = 0.5 * (lo + hi);
            if cross_section_error_bound(spec.radius, mid) <= resolution_limit {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let needed = (arc / theta).ceil();
    if !needed.is_finite() || needed > sector_cap as f64 {
        return Err(TunnelError::TooManySectors {
            needed: if needed.is_finite() { needed as usize } else { usize::MAX },
            cap: sector_cap,
        });
    }
    Ok(SegmentationParams {
        sector_count: needed as usize,
        sector_angle: theta,
        tangent_threshold: (resolution_limit / max_segment_length).atan(),
        max_segment_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> CrossSectionSpec {
        CrossSectionSpec {
            radius: 5.5,
            center_height: 1.6,
            road_width: 4.0,
        }
    }

    #[test]
    fn zero_angles_give_zero_error() {
        assert_eq!(cross_section_error_bound(5.5, 0.0), 0.0);
        assert_eq!(path_error_bound(100.0, 0.0), 0.0);
    }

    #[test]
    fn bounds_increase_with_angle() {
        let mut prev = (0.0, 0.0);
        for k in 1..157 {
            let a = k as f64 * 0.01;
            let cur = (cross_section_error_bound(5.5, a), path_error_bound(100.0, a));
            assert!(cur.0 > prev.0 && cur.1 > prev.1);
            prev = cur;
        }
    }

    #[test]
    fn optimized_round_trip() {
        let p = optimize_segmentation_params(&spec(), 2.0, 100.0, DEFAULT_SECTOR_CAP).unwrap();
        let b = segmentation_error_bounds(&spec(), &p);
        assert!(b.cross_section_bound <= 2.0 && 2.0 - b.cross_section_bound < 1e-6);
        assert!(b.path_bound <= 2.0 + 1e-12 && (2.0 - b.path_bound).abs() < 1e-6);
        assert_eq!(p.sector_count, 12);
    }

    #[test]
    fn tiny_limit_hits_cap() {
        let err = optimize_segmentation_params(&spec(), 1e-4, 100.0, 50).unwrap_err();
        assert!(matches!(err, TunnelError::TooManySectors { cap: 50, .. }));
    }

    #[test]
    fn shrinking_limit_shrinks_angles() {
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for limit in [2.0, 1.0, 0.5, 0.1, 0.001] {
            let p = optimize_segmentation_params(&spec(), limit, 100.0, 1_000_000).unwrap();
            assert!(p.sector_angle < prev.0 && p.tangent_threshold < prev.1);
            prev = (p.sector_angle, p.tangent_threshold);
        }
        assert!(prev.0 < 1e-3 && prev.1 < 1e-3);
    }
}
