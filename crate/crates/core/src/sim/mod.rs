//! Forward radar simulator: direct returns, single-bounce roof ghosts,
//! occlusion between vehicles, Doppler, noise and dropout.

mod emit;
mod surface;
mod vehicle;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use emit::{facet_points, ghost_paths, occluded, simulate_frame};
pub use surface::{planar_ghost_paths, GhostPath, TubeSurface};
pub use vehicle::{VehicleKind, VehicleScript, VehicleState};

use crate::correction::ReflectionSegment;
use crate::geometry::Vec3;
use crate::par;
use crate::point::RadarPoint;
use crate::tunnel::{SegmentedTunnelModel, TunnelConfig, TunnelError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("vehicle {id}: {msg}")]
    Script { id: u32, msg: String },
    #[error("scenario config: {0}")]
    Config(String),
    #[error(transparent)]
    Tunnel(#[from] TunnelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Range noise, meters.
    pub sigma_range: f64,
    /// Azimuth noise, degrees.
    pub sigma_azimuth_deg: f64,
    /// Probability that any single return is missed.
    pub dropout: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma_range: 0.3,
            sigma_azimuth_deg: 0.2,
            dropout: 0.2,
        }
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            sigma_range: 0.0,
            sigma_azimuth_deg: 0.0,
            dropout: 0.0,
        }
    }
}

/// How a ghost's 3D image becomes a top-view detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Projection {
    /// Drop the height.
    Orthographic,
    /// Keep the slant range along the measured azimuth.
    SlantRange,
}

/// Which wall the simulated signals bounce off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceMode {
    Segmented,
    Curved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadarConfig {
    pub position: [f64; 3],
    /// Longitudinal distance window kept, meters from the radar.
    pub range_gate: [f64; 2],
    /// Nominal range resolution, meters. Informational.
    pub range_resolution: f64,
    pub frame_rate: f64,
    pub noise: NoiseModel,
    pub projection: Projection,
    pub surface: SurfaceMode,
    pub emit_ghosts: bool,
    /// Scattering points as fractions of vehicle length ahead of its center.
    pub facets: Vec<f64>,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            position: [0.0, 0.0, 5.1],
            range_gate: [50.0, 350.0],
            range_resolution: 2.0,
            frame_rate: 10.0,
            noise: NoiseModel::default(),
            projection: Projection::Orthographic,
            surface: SurfaceMode::Segmented,
            emit_ghosts: true,
            facets: vec![0.4, 0.0, -0.4],
        }
    }
}

impl RadarConfig {
    pub fn position(&self) -> Vec3 {
        Vec3::from(self.position)
    }

    pub fn in_gate(&self, y: f64) -> bool {
        let d = y - self.position[1];
        d >= self.range_gate[0] && d <= self.range_gate[1]
    }

    pub fn frame_interval(&self) -> f64 {
        1.0 / self.frame_rate
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let [g0, g1] = self.range_gate;
        let n = &self.noise;
        let ok = g0 >= 0.0
            && g1 > g0
            && self.frame_rate > 0.0
            && self.range_resolution > 0.0
            && n.sigma_range >= 0.0
            && n.sigma_azimuth_deg >= 0.0
            && (0.0..=1.0).contains(&n.dropout)
            && self.position.iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(SimError::Config(format!("invalid radar config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PathKind {
    Direct,
    Ghost { segment: ReflectionSegment },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub vehicle_id: u32,
    pub facet: u8,
    pub path: PathKind,
}

impl Provenance {
    pub fn is_ghost(&self) -> bool {
        matches!(self.path, PathKind::Ghost { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimPoint {
    #[serde(flatten)]
    pub point: RadarPoint,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimFrame {
    pub index: usize,
    pub timestamp: f64,
    pub points: Vec<SimPoint>,
}

impl SimFrame {
    pub fn radar_points(&self) -> Vec<RadarPoint> {
        self.points.iter().map(|p| p.point).collect()
    }
}

/// Vehicles present at one frame time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFrame {
    pub index: usize,
    pub timestamp: f64,
    pub vehicles: Vec<VehicleState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub tunnel: TunnelConfig,
    #[serde(default)]
    pub radar: RadarConfig,
    #[serde(default)]
    pub vehicles: Vec<VehicleScript>,
    /// Seconds.
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, SimError> {
        toml::from_str(s).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String, SimError> {
        toml::to_string_pretty(self).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn frame_count(&self) -> usize {
        (self.duration * self.radar.frame_rate).floor() as usize
    }
}

/// Frames and ground truth of a simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutput {
    pub frames: Vec<SimFrame>,
    pub truth: Vec<TruthFrame>,
}

/// Checks a scenario and builds its tunnel model.
pub fn prepare_scenario(scenario: &ScenarioConfig) -> Result<SegmentedTunnelModel, SimError> {
    if !(scenario.duration >= 0.0 && scenario.duration.is_finite()) {
        return Err(SimError::Config("duration must be finite and non-negative".into()));
    }
    scenario.radar.validate()?;
    let model = scenario.tunnel.build()?;
    let mut ids: Vec<u32> = scenario.vehicles.iter().map(|v| v.id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(SimError::Config("vehicle ids must be unique".into()));
    }
    for v in &scenario.vehicles {
        v.validate(&model)?;
    }
    Ok(model)
}

/// Vehicles present at time `t`, sorted by id.
pub fn vehicles_at(scripts: &[VehicleScript], model: &SegmentedTunnelModel, t: f64) -> Vec<VehicleState> {
    let mut v: Vec<VehicleState> = scripts.iter().filter_map(|s| s.state_at(t, model)).collect();
    v.sort_by_key(|v| v.id);
    v
}

/// Random stream for one frame: the scenario seed picks the key, the frame
/// index the stream, so frames can be generated in any order.
pub fn frame_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn run_frame(scenario: &ScenarioConfig, model: &SegmentedTunnelModel, index: usize) -> (SimFrame, TruthFrame) {
    let t = index as f64 * scenario.radar.frame_interval();
    let vehicles = vehicles_at(&scenario.vehicles, model, t);
    let mut rng = frame_rng(scenario.seed, index);
    let points = simulate_frame(model, &scenario.radar, &vehicles, &mut rng);
    (
        SimFrame {
            index,
            timestamp: t,
            points,
        },
        TruthFrame {
            index,
            timestamp: t,
            vehicles,
        },
    )
}

/// Simulates every frame of a scenario; frames run in parallel when the
/// `parallel` feature is on.
pub fn simulate_scenario(scenario: &ScenarioConfig) -> Result<SimOutput, SimError> {
    let model = prepare_scenario(scenario)?;
    Ok(simulate_with_model(scenario, &model))
}

/// [`simulate_scenario`] with an already built model.
pub fn simulate_with_model(scenario: &ScenarioConfig, model: &SegmentedTunnelModel) -> SimOutput {
    let (frames, truth) = par::map_range(scenario.frame_count(), |k| run_frame(scenario, model, k))
        .into_iter()
        .unzip();
    SimOutput { frames, truth }
}

/// Sequential [`simulate_with_model`].
pub fn simulate_with_model_sequential(scenario: &ScenarioConfig, model: &SegmentedTunnelModel) -> SimOutput {
    let (frames, truth) = par::seq::map_range(scenario.frame_count(), |k| run_frame(scenario, model, k))
        .into_iter()
        .unzip();
    SimOutput { frames, truth }
}
