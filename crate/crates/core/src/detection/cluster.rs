use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::par;
use crate::point::RadarPoint;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("cluster weights must be finite and non-negative, got {0:?}")]
    Weights([f64; 3]),
    #[error("cluster radius must be positive, got {0}")]
    Radius(f64),
    #[error("minimum cluster size must be at least 1")]
    MinSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    /// Weights on squared lateral, longitudinal and Doppler differences.
    pub weights: [f64; 3],
    /// Neighborhood radius in weighted meters.
    pub radius: f64,
    /// Neighbors (self included) a point needs to seed a cluster.
    pub min_size: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            weights: [1.0, 0.5, 4.0],
            radius: 4.0,
            min_size: 1,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(ClusterError::Weights(self.weights));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(ClusterError::Radius(self.radius));
        }
        if self.min_size == 0 {
            return Err(ClusterError::MinSize);
        }
        Ok(())
    }
}

pub fn weighted_point_distance(a: &RadarPoint, b: &RadarPoint, cfg: &ClusterConfig) -> f64 {
    let [w1, w2, w3] = cfg.weights;
    let (dx, dy, dv) = (a.x - b.x, a.y - b.y, a.v_d - b.v_d);
    (w1 * dx * dx + w2 * dy * dy + w3 * dv * dv).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub centroid: Vec2,
    pub doppler: f64,
    /// Input indices, ascending.
    pub members: Vec<usize>,
}

impl Cluster {
    fn from_members(points: &[RadarPoint], mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        let n = members.len() as f64;
        let (mut c, mut v) = (Vec2::zeros(), 0.0);
        for &k in &members {
            c += points[k].position();
            v += points[k].v_d;
        }
        Self {
            centroid: c / n,
            doppler: v / n,
            members,
        }
    }
}

/// Neighbor lists under the weighted distance, each including the point
/// itself.
pub fn neighborhoods(points: &[RadarPoint], cfg: &ClusterConfig) -> Vec<Vec<usize>> {
    par::map_range(points.len(), |i| {
        (0..points.len())
            .filter(|&j| weighted_point_distance(&points[i], &points[j], cfg) <= cfg.radius)
            .collect()
    })
}

/// DBSCAN under [`weighted_point_distance`]. Clusters are ordered by their
/// lowest member index; noise points are left out.
pub fn cluster_frame(points: &[RadarPoint], cfg: &ClusterConfig) -> Vec<Cluster> {
    let nb = neighborhoods(points, cfg);
    let core: Vec<bool> = nb.iter().map(|n| n.len() >= cfg.min_size).collect();
    let mut label: Vec<Option<usize>> = vec![None; points.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for seed in 0..points.len() {
        if label[seed].is_some() || !core[seed] {
            continue;
        }
        let id = groups.len();
        let mut members = vec![seed];
        label[seed] = Some(id);
        let mut stack = vec![seed];
        while let Some(p) = stack.pop() {
            for &q in &nb[p] {
                if label[q].is_some() {
                    continue;
                }
                label[q] = Some(id);
                members.push(q);
                if core[q] {
                    stack.push(q);
                }
            }
        }
        groups.push(members);
    }
    groups
        .into_iter()
        .map(|m| Cluster::from_members(points, m))
        .collect()
}
