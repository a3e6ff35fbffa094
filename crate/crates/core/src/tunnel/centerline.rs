use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::TunnelError;
use crate::geometry::Vec2;

/// Tunnel centerline as a polynomial giving the lateral coordinate as a
/// function of the longitudinal one: `x = a0 + a1*y + ... + an*y^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterlineSpec {
    /// `a0..an`, lowest order first.
    pub coefficients: Vec<f64>,
    /// Longitudinal range the polynomial was fitted over, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_range: Option<[f64; 2]>,
}

impl CenterlineSpec {
    pub fn new(coefficients: Vec<f64>) -> Result<Self, TunnelError> {
        let c = Self {
            coefficients,
            valid_range: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn straight() -> Self {
        Self {
            coefficients: vec![0.0, 0.0],
            valid_range: None,
        }
    }

    pub fn validate(&self) -> Result<(), TunnelError> {
        if self.coefficients.len() < 2 {
            return Err(TunnelError::InvalidParameter(
                "centerline degree must be at least 1".into(),
            ));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(TunnelError::InvalidParameter(
                "centerline coefficients must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Lateral coordinate at longitudinal position `y`.
    pub fn lateral_at(&self, y: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    /// `dx/dy` at `y`.
    pub fn slope_at(&self, y: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * y + k as f64 * c)
    }

    /// `d2x/dy2` at `y`.
    pub fn curvature_term_at(&self, y: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(2)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * y + (k * (k - 1)) as f64 * c)
    }

    /// Heading of the centerline tangent, measured from the `+y` axis.
    pub fn tangent_angle(&self, y: f64) -> f64 {
        self.slope_at(y).atan()
    }

    pub fn point_at(&self, y: f64) -> Vec2 {
        Vec2::new(self.lateral_at(y), y)
    }

    /// Unit tangent pointing towards increasing `y`.
    pub fn tangent_at(&self, y: f64) -> Vec2 {
        Vec2::new(self.slope_at(y), 1.0).normalize()
    }

    /// Unit normal pointing to the right of the tangent.
    pub fn right_normal_at(&self, y: f64) -> Vec2 {
        let t = self.tangent_at(y);
        Vec2::new(t.y, -t.x)
    }

    pub fn is_straight(&self) -> bool {
        self.coefficients.iter().skip(2).all(|c| *c == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterlineFit {
    pub centerline: CenterlineSpec,
    pub residual_rms: f64,
}

/// Least-squares polynomial fit of top-view samples `(x, y)` as `x(y)`.
///
/// The fit is solved in a centered, scaled longitudinal variable and mapped
/// back to the monomial basis, which keeps cubic fits over hundreds of
/// meters well conditioned.
pub fn fit_centerline(samples: &[Vec2], degree: usize) -> Result<CenterlineFit, TunnelError> {
    if degree == 0 {
        return Err(TunnelError::InvalidParameter(
            "centerline degree must be at least 1".into(),
        ));
    }
    if let Some(index) = samples
        .iter()
        .position(|p| !p.x.is_finite() || !p.y.is_finite())
    {
        return Err(TunnelError::NonFiniteSample { index });
    }
    let mut ys: Vec<f64> = samples.iter().map(|p| p.y).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    if ys.len() < degree + 1 {
        return Err(TunnelError::Underdetermined {
            distinct: ys.len(),
            degree,
        });
    }
    let (lo, hi) = (ys[0], ys[ys.len() - 1]);
    let center = 0.5 * (lo + hi);
    let scale = 0.5 * (hi - lo);

    let n = samples.len();
    let vander = DMatrix::from_fn(n, degree + 1, |r, c| {
        ((samples[r].y - center) / scale).powi(c as i32)
    });
    let rhs = DVector::from_iterator(n, samples.iter().map(|p| p.x));
    let scaled = vander
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| TunnelError::Geometry(format!("least-squares solve failed: {e}")))?;

    let residual = &vander * &scaled - &rhs;
    let residual_rms = (residual.norm_squared() / n as f64).sqrt();

    let coefficients = unscale(scaled.as_slice(), center, scale);
    Ok(CenterlineFit {
        centerline: CenterlineSpec {
            coefficients,
            valid_range: Some([lo, hi]),
        },
        residual_rms,
    })
}

/// Expands `sum c_k ((y - center)/scale)^k` into monomials of `y`.
fn unscale(scaled: &[f64], center: f64, scale: f64) -> Vec<f64> {
    let deg = scaled.len() - 1;
    let mut out = vec![0.0; deg + 1];
    for (k, ck) in scaled.iter().enumerate() {
        let factor = ck / scale.powi(k as i32);
        // (y - center)^k = sum_j C(k, j) y^j (-center)^(k-j)
        let mut binom = 1.0;
        for j in 0..=k {
            out[j] += factor * binom * (-center).powi((k - j) as i32);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    out
}
