use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, match_frame, spatial_lag, Counts, LagStats, MatchConfig, Rates};
use crate::correction::{
    correct_frame, ghost_outcomes, remove_ghosts, CorrectionConfig, CorrectionModel, FrameOptions,
    GhostOutcome, PointStatus, SelectionStrategy, UncorrectablePolicy,
};
use crate::detection::{cluster_frame, ClusterConfig, TrackReport, Tracker, TrackerConfig};
use crate::geometry::Vec2;
use crate::sim::{prepare_scenario, simulate_with_model, RadarConfig, ScenarioConfig, SimError, SimOutput};
use crate::tunnel::SegmentedTunnelModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineVariant {
    RawPoints,
    GhostRemoval,
    LeastDistance,
    LeastPathLoss,
    CurveModel,
    Full,
}

impl PipelineVariant {
    pub const ALL: [PipelineVariant; 6] = [
        PipelineVariant::RawPoints,
        PipelineVariant::GhostRemoval,
        PipelineVariant::LeastDistance,
        PipelineVariant::LeastPathLoss,
        PipelineVariant::CurveModel,
        PipelineVariant::Full,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PipelineVariant::RawPoints => "raw_points",
            PipelineVariant::GhostRemoval => "ghost_removal",
            PipelineVariant::LeastDistance => "least_distance",
            PipelineVariant::LeastPathLoss => "least_path_loss",
            PipelineVariant::CurveModel => "curve_model",
            PipelineVariant::Full => "full",
        }
    }

    /// Correction settings, or `None` for the variants that do not correct.
    pub fn correction(self) -> Option<(SelectionStrategy, CorrectionModel)> {
        use CorrectionModel::*;
        use SelectionStrategy::*;
        match self {
            PipelineVariant::RawPoints | PipelineVariant::GhostRemoval => None,
            PipelineVariant::LeastDistance => Some((SpatialDistance, Segmented)),
            PipelineVariant::LeastPathLoss => Some((PathLoss, Segmented)),
            PipelineVariant::CurveModel => Some((Fused, Curved)),
            PipelineVariant::Full => Some((Fused, Segmented)),
        }
    }
}

impl fmt::Display for PipelineVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PipelineVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub correction: CorrectionConfig,
    pub cluster: ClusterConfig,
    pub tracker: TrackerConfig,
    pub matching: MatchConfig,
    /// Keep every ghost's candidate set in the run output.
    pub keep_candidates: bool,
}

/// Corrected ghosts that landed inside the footprint of the vehicle that
/// produced them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Relocation {
    pub corrected_ghosts: usize,
    pub inside_footprint: usize,
}

impl Relocation {
    pub fn fraction(&self) -> f64 {
        if self.corrected_ghosts == 0 {
            0.0
        } else {
            self.inside_footprint as f64 / self.corrected_ghosts as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub frames: usize,
    pub points: usize,
    pub correction_s: f64,
    pub clustering_s: f64,
    pub tracking_s: f64,
}

impl Timing {
    pub fn total_s(&self) -> f64 {
        self.correction_s + self.clustering_s + self.tracking_s
    }

    pub fn fps(&self) -> f64 {
        let t = self.total_s();
        if t > 0.0 {
            self.frames as f64 / t
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub variant: PipelineVariant,
    pub counts: Counts,
    pub rates: Rates,
    /// Per-frame counts, in frame order.
    pub per_frame: Vec<Counts>,
    /// TP and FN per ground-truth vehicle (FP is not attributable).
    pub per_vehicle: BTreeMap<u32, Counts>,
    pub lag: LagStats,
    pub relocation: Relocation,
}

impl MetricsReport {
    pub fn vehicle_recall(&self, id: u32) -> f64 {
        self.per_vehicle
            .get(&id)
            .map_or(0.0, |c| compute_metrics(c).recall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub frame: usize,
    pub source_index: usize,
    /// Vehicle and segment the simulator recorded for this point, if any.
    pub provenance: Option<crate::sim::Provenance>,
    pub outcome: GhostOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub metrics: MetricsReport,
    pub tracks: Vec<TrackReport>,
    pub candidates: Vec<CandidateRecord>,
    pub timing: Timing,
}

/// Simulates `scenario` and evaluates one variant on it.
pub fn run_pipeline(
    scenario: &ScenarioConfig,
    variant: PipelineVariant,
    config: &PipelineConfig,
) -> Result<RunOutput, SimError> {
    let model = prepare_scenario(scenario)?;
    let sim = simulate_with_model(scenario, &model);
    Ok(evaluate(scenario, &model, &sim, variant, config))
}

/// Runs every variant on the same simulated frames.
pub fn run_variants(
    scenario: &ScenarioConfig,
    variants: &[PipelineVariant],
    config: &PipelineConfig,
) -> Result<Vec<RunOutput>, SimError> {
    let model = prepare_scenario(scenario)?;
    let sim = simulate_with_model(scenario, &model);
    Ok(variants
        .iter()
        .map(|v| evaluate(scenario, &model, &sim, *v, config))
        .collect())
}

/// Points after the variant's ghost handling, with the corrected frame when
/// correction ran.
fn process_points(
    model: &SegmentedTunnelModel,
    cfg: &CorrectionConfig,
    points: &[crate::point::RadarPoint],
    previous: &[Vec2],
    variant: PipelineVariant,
) -> (Vec<crate::point::RadarPoint>, Option<crate::correction::CorrectedFrame>) {
    match variant.correction() {
        None if variant == PipelineVariant::RawPoints => (points.to_vec(), None),
        None => (remove_ghosts(model, points), None),
        Some((strategy, surface)) => {
            let opts = FrameOptions {
                strategy,
                surface,
                uncorrectable: UncorrectablePolicy::Drop,
            };
            let frame = correct_frame(model, cfg, points, previous, &opts);
            (frame.radar_points(), Some(frame))
        }
    }
}

/// Ghost handling, clustering and tracking over recorded frames, without
/// ground truth. Returns the tracker output of every frame in order.
pub fn detect_frames(
    model: &SegmentedTunnelModel,
    radar: &RadarConfig,
    frames: &[Vec<crate::point::RadarPoint>],
    variant: PipelineVariant,
    config: &PipelineConfig,
) -> Vec<TrackReport> {
    let mut corr = config.correction;
    corr.radar_position = radar.position;
    let mut tracker = Tracker::new(TrackerConfig {
        dt: radar.frame_interval(),
        ..config.tracker
    });
    let mut previous: Vec<Vec2> = Vec::new();
    let mut out = Vec::new();
    for points in frames {
        let (kept, _) = process_points(model, &corr, points, &previous, variant);
        let centroids: Vec<Vec2> = cluster_frame(&kept, &config.cluster)
            .iter()
            .map(|c| c.centroid)
            .collect();
        out.extend(tracker.step(&centroids));
        previous = tracker.predicted_positions();
    }
    out
}

/// Evaluates one variant on already simulated frames.
pub fn evaluate(
    scenario: &ScenarioConfig,
    model: &SegmentedTunnelModel,
    sim: &SimOutput,
    variant: PipelineVariant,
    config: &PipelineConfig,
) -> RunOutput {
    let radar = &scenario.radar;
    let mut corr = config.correction;
    corr.radar_position = radar.position;
    let tracker_cfg = TrackerConfig {
        dt: radar.frame_interval(),
        ..config.tracker
    };
    let mut tracker = Tracker::new(tracker_cfg);
    let region = [
        radar.position[1] + radar.range_gate[0],
        radar.position[1] + radar.range_gate[1],
    ];

    let mut timing = Timing::default();
    let mut per_frame = Vec::with_capacity(sim.frames.len());
    let mut per_vehicle: BTreeMap<u32, Counts> = BTreeMap::new();
    let mut first_match: BTreeMap<u32, u64> = BTreeMap::new();
    let mut seen: BTreeSet<u32> = BTreeSet::new();
    let mut relocation = Relocation::default();
    let mut tracks_out = Vec::new();
    let mut candidates = Vec::new();
    let mut previous: Vec<Vec2> = Vec::new();

    for (frame, truth) in sim.frames.iter().zip(&sim.truth) {
        let points = frame.radar_points();
        timing.frames += 1;
        timing.points += points.len();

        let t0 = Instant::now();
        let (kept, corrected) = process_points(model, &corr, &points, &previous, variant);
        timing.correction_s += t0.elapsed().as_secs_f64();

        if config.keep_candidates {
            if let Some((strategy, surface)) = variant.correction() {
                let opts = FrameOptions {
                    strategy,
                    surface,
                    uncorrectable: UncorrectablePolicy::KeepFlagged,
                };
                for (k, outcome) in ghost_outcomes(model, &corr, &points, &previous, &opts) {
                    candidates.push(CandidateRecord {
                        frame: frame.index,
                        source_index: k,
                        provenance: Some(frame.points[k].provenance),
                        outcome,
                    });
                }
            }
        }

        if let Some(c) = &corrected {
            for p in &c.points {
                if !matches!(p.status, PointStatus::Corrected { .. }) {
                    continue;
                }
                let prov = frame.points[p.source_index].provenance;
                if !prov.is_ghost() {
                    continue;
                }
                relocation.corrected_ghosts += 1;
                let inside = truth
                    .vehicles
                    .iter()
                    .find(|v| v.id == prov.vehicle_id)
                    .is_some_and(|v| v.footprint_contains(&p.point.position()));
                if inside {
                    relocation.inside_footprint += 1;
                }
            }
        }

        let t1 = Instant::now();
        let clusters = cluster_frame(&kept, &config.cluster);
        timing.clustering_s += t1.elapsed().as_secs_f64();

        let t2 = Instant::now();
        let centroids: Vec<Vec2> = clusters.iter().map(|c| c.centroid).collect();
        let reports = tracker.step(&centroids);
        previous = tracker.predicted_positions();
        timing.tracking_s += t2.elapsed().as_secs_f64();

        let in_region = |y: f64| y >= region[0] && y <= region[1];
        let dets: Vec<&TrackReport> = reports.iter().filter(|r| in_region(r.position.y)).collect();
        let vehicles: Vec<_> = truth.vehicles.iter().filter(|v| in_region(v.position.y)).collect();
        let det_pos: Vec<Vec2> = dets.iter().map(|r| r.position).collect();
        let truth_pos: Vec<Vec2> = vehicles.iter().map(|v| v.position).collect();
        let m = match_frame(&det_pos, &truth_pos, &config.matching);
        per_frame.push(m.counts);
        let mut hit = vec![false; vehicles.len()];
        for &(d, t) in &m.pairs {
            hit[t] = true;
            first_match.entry(vehicles[t].id).or_insert(dets[d].id);
        }
        for (v, h) in vehicles.iter().zip(hit) {
            seen.insert(v.id);
            let c = per_vehicle.entry(v.id).or_default();
            if h {
                c.tp += 1;
            } else {
                c.fn_ += 1;
            }
        }
        tracks_out.extend(reports);
    }

    let all_tracks = tracker.all_tracks();
    let mut lags = BTreeMap::new();
    // Lag only means something for vehicles that enter across a boundary.
    let mut travel: BTreeMap<u32, f64> = BTreeMap::new();
    let mut entered: BTreeSet<u32> = BTreeSet::new();
    for t in &sim.truth {
        for v in &t.vehicles {
            if !travel.contains_key(&v.id) {
                travel.insert(v.id, v.velocity.y);
                if !(v.position.y >= region[0] && v.position.y <= region[1]) {
                    entered.insert(v.id);
                }
            }
        }
    }
    for (&vid, &tid) in first_match.iter().filter(|(v, _)| entered.contains(v)) {
        let confirmed = all_tracks
            .iter()
            .find(|t| t.id == tid)
            .and_then(|t| t.confirmed_at);
        if let Some((_, pos)) = confirmed {
            let sign = travel.get(&vid).copied().unwrap_or(1.0).signum();
            lags.insert(vid, spatial_lag(pos.y, sign, region));
        }
    }
    let unconfirmed = seen
        .iter()
        .filter(|id| entered.contains(id) && !lags.contains_key(id))
        .count();

    let counts: Counts = per_frame.iter().copied().sum();
    RunOutput {
        metrics: MetricsReport {
            scenario: scenario.name.clone(),
            variant,
            counts,
            rates: compute_metrics(&counts),
            per_frame,
            per_vehicle,
            lag: LagStats::new(lags, unconfirmed),
            relocation,
        },
        tracks: tracks_out,
        candidates,
        timing,
    }
}

/// Sums the counts and relocation tallies of several reports.
pub fn aggregate(reports: &[&MetricsReport]) -> (Counts, Rates, Relocation) {
    let counts: Counts = reports.iter().map(|r| r.counts).sum();
    let mut reloc = Relocation::default();
    for r in reports {
        reloc.corrected_ghosts += r.relocation.corrected_ghosts;
        reloc.inside_footprint += r.relocation.inside_footprint;
    }
    (counts, compute_metrics(&counts), reloc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{NoiseModel, VehicleKind, VehicleScript};

    #[test]
    fn detect_frames_matches_evaluate() {
        let s = single_car();
        let model = prepare_scenario(&s).unwrap();
        let sim = simulate_with_model(&s, &model);
        let cfg = PipelineConfig::default();
        let frames: Vec<_> = sim.frames.iter().map(|f| f.radar_points()).collect();
        let tracks = detect_frames(&model, &s.radar, &frames, PipelineVariant::Full, &cfg);
        assert_eq!(tracks, evaluate(&s, &model, &sim, PipelineVariant::Full, &cfg).tracks);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in PipelineVariant::ALL {
            assert_eq!(v.name().parse::<PipelineVariant>().unwrap(), v);
            let json = serde_json::to_string(&v).unwrap();
            assert_eq!(json, format!("\"{}\"", v.name()));
        }
        assert!("fused".parse::<PipelineVariant>().is_err());
    }

    fn single_car() -> ScenarioConfig {
        let mut s = super::super::scenarios::straight(9);
        s.vehicles = vec![VehicleScript::lane(1, VehicleKind::Car, 1.0, 45.0, 300.0, 20.0)];
        s.radar.noise = NoiseModel::none();
        s.radar.facets = vec![0.0];
        s.duration = 12.0;
        s
    }

    #[test]
    fn noiseless_single_car_is_perfect_after_birth() {
        let s = single_car();
        let out = run_pipeline(&s, PipelineVariant::Full, &PipelineConfig::default()).unwrap();
        let c = out.metrics.counts;
        assert_eq!(c.fp, 0, "{c:?}");
        // The track needs three frames to be born after the car enters.
        assert!(c.fn_ <= 3, "{c:?}");
        assert!(out.metrics.rates.f1 > 0.98);
    }

    #[test]
    fn ghost_removal_equals_dropping_ghosts() {
        let s = super::super::scenarios::straight(2);
        let model = prepare_scenario(&s).unwrap();
        let sim = simulate_with_model(&s, &model);
        for f in sim.frames.iter().take(40) {
            let pts = f.radar_points();
            let (kept, _) = process_points(&model, &CorrectionConfig::default(), &pts, &[], PipelineVariant::GhostRemoval);
            let expected: Vec<_> = pts
                .iter()
                .filter(|p| model.in_lanes(&p.position()))
                .copied()
                .collect();
            assert_eq!(kept, expected);
        }
    }

    #[test]
    fn reruns_are_identical() {
        let s = super::super::scenarios::congestion(4);
        let cfg = PipelineConfig::default();
        let a = run_pipeline(&s, PipelineVariant::Full, &cfg).unwrap();
        let b = run_pipeline(&s, PipelineVariant::Full, &cfg).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.tracks, b.tracks);
    }
}
