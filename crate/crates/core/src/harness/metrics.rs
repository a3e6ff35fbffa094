use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::detection::hungarian;
use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchConfig {
    /// Largest |Δx| of a true positive, meters.
    pub lateral: f64,
    /// Largest |Δy| of a true positive, meters.
    pub longitudinal: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            lateral: 1.5,
            longitudinal: 5.0,
        }
    }
}

impl MatchConfig {
    pub fn accepts(&self, detection: &Vec2, truth: &Vec2) -> bool {
        (detection.x - truth.x).abs() <= self.lateral && (detection.y - truth.y).abs() <= self.longitudinal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn add(&mut self, o: &Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

impl std::iter::Sum for Counts {
    fn sum<I: Iterator<Item = Counts>>(iter: I) -> Self {
        let mut c = Counts::default();
        for x in iter {
            c.add(&x);
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameMatch {
    pub counts: Counts,
    /// `(detection, truth)` index pairs counted as true positives.
    pub pairs: Vec<(usize, usize)>,
}

/// Optimal one-to-one assignment by Euclidean distance, then per-axis
/// thresholds. A pair failing a threshold is one false positive and one
/// false negative.
pub fn match_frame(detections: &[Vec2], truth: &[Vec2], cfg: &MatchConfig) -> FrameMatch {
    let costs: Vec<Vec<f64>> = detections
        .iter()
        .map(|d| truth.iter().map(|t| (d - t).norm()).collect())
        .collect();
    let assignment = if truth.is_empty() {
        vec![None; detections.len()]
    } else {
        hungarian(&costs)
    };
    let mut out = FrameMatch::default();
    let mut truth_hit = vec![false; truth.len()];
    for (d, a) in assignment.into_iter().enumerate() {
        match a {
            Some(t) if cfg.accepts(&detections[d], &truth[t]) => {
                truth_hit[t] = true;
                out.counts.tp += 1;
                out.pairs.push((d, t));
            }
            _ => out.counts.fp += 1,
        }
    }
    out.counts.fn_ = truth_hit.iter().filter(|h| !**h).count();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rates {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1, each 0 when its denominator is.
pub fn compute_metrics(c: &Counts) -> Rates {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Rates {
        precision,
        recall,
        f1,
    }
}

/// Longitudinal distance between where a vehicle's track was confirmed and
/// the boundary of `region` it entered through, given its direction of
/// travel along `y`.
pub fn spatial_lag(confirmed_y: f64, travel_sign: f64, region: [f64; 2]) -> f64 {
    let entry = if travel_sign >= 0.0 { region[0] } else { region[1] };
    (confirmed_y - entry).abs()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LagStats {
    pub per_vehicle: BTreeMap<u32, f64>,
    /// Vehicles that crossed the region without ever being confirmed.
    pub unconfirmed: usize,
    pub mean: Option<f64>,
}

impl LagStats {
    pub fn new(per_vehicle: BTreeMap<u32, f64>, unconfirmed: usize) -> Self {
        let mean = (!per_vehicle.is_empty())
            .then(|| per_vehicle.values().sum::<f64>() / per_vehicle.len() as f64);
        Self {
            per_vehicle,
            unconfirmed,
            mean,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn match_examples() {
        let c = MatchConfig::default();
        let m = match_frame(&[v(0.0, 100.0)], &[v(0.0, 100.0)], &c);
        assert_eq!(m.counts, Counts { tp: 1, fp: 0, fn_: 0 });
        let m = match_frame(&[v(2.0, 100.0)], &[v(0.0, 100.0)], &c);
        assert_eq!(m.counts, Counts { tp: 0, fp: 1, fn_: 1 });
        let m = match_frame(&[v(0.0, 104.0)], &[v(0.0, 100.0)], &c);
        assert_eq!(m.counts.tp, 1);
        let m = match_frame(&[], &[v(0.0, 1.0), v(0.0, 2.0)], &c);
        assert_eq!(m.counts, Counts { tp: 0, fp: 0, fn_: 2 });
        let m = match_frame(&[v(0.0, 1.0)], &[], &c);
        assert_eq!(m.counts, Counts { tp: 0, fp: 1, fn_: 0 });
    }

    #[test]
    fn metric_examples() {
        let r = compute_metrics(&Counts { tp: 9, fp: 1, fn_: 2 });
        assert!((r.precision - 0.9).abs() < 1e-12);
        assert!((r.recall - 9.0 / 11.0).abs() < 1e-12);
        assert!((r.f1 - 0.857).abs() < 1e-3);
        assert_eq!(compute_metrics(&Counts::default()), Rates::default());
        let r = compute_metrics(&Counts { tp: 5, fp: 0, fn_: 0 });
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn lag_examples() {
        assert_eq!(spatial_lag(60.0, 1.0, [50.0, 350.0]), 10.0);
        assert_eq!(spatial_lag(50.0, 1.0, [50.0, 350.0]), 0.0);
        assert_eq!(spatial_lag(320.0, -1.0, [50.0, 350.0]), 30.0);
        let s = LagStats::new(BTreeMap::from([(1, 10.0), (2, 20.0)]), 1);
        assert_eq!(s.mean, Some(15.0));
        assert_eq!(LagStats::new(BTreeMap::new(), 2).mean, None);
    }

    fn pts(n: usize) -> impl Strategy<Value = Vec<Vec2>> {
        prop::collection::vec((-3.0..3.0f64, 50.0..80.0f64).prop_map(|(x, y)| v(x, y)), 0..n)
    }

    proptest! {
        #[test]
        fn permutation_invariant(d in pts(8), t in pts(8), rot_d in 0usize..8, rot_t in 0usize..8) {
            let c = MatchConfig::default();
            let base = match_frame(&d, &t, &c).counts;
            let mut d2 = d.clone();
            let mut t2 = t.clone();
            if !d2.is_empty() { let k = rot_d % d2.len(); d2.rotate_left(k); d2.reverse(); }
            if !t2.is_empty() { let k = rot_t % t2.len(); t2.rotate_left(k); }
            let m = match_frame(&d2, &t2, &c).counts;
            // continuous coordinates make the optimum unique
            prop_assert_eq!(m, base);
        }

        #[test]
        fn rates_bounded(tp in 0usize..100, fp in 0usize..100, fn_ in 0usize..100) {
            let r = compute_metrics(&Counts { tp, fp, fn_ });
            for x in [r.precision, r.recall, r.f1] { prop_assert!((0.0..=1.0).contains(&x)); }
            if r.precision + r.recall > 0.0 {
                prop_assert!((r.f1 - 2.0 * r.precision * r.recall / (r.precision + r.recall)).abs() < 1e-12);
            }
        }
    }
}
