use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::assign::gated_assignment;
use super::kalman::{KalmanState, MotionModel};
use crate::geometry::Vec2;

#[derive(Debug, Error, PartialEq)]
#[error("invalid tracker config: {0}")]
pub struct TrackerConfigError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// White-acceleration intensity (m²/s³).
    pub process_noise: f64,
    pub sigma_lateral: f64,
    pub sigma_longitudinal: f64,
    /// Largest prediction-to-detection distance that may associate (m).
    pub gate: f64,
    pub dt: f64,
    pub confirm_hits: u32,
    pub max_misses: u32,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            process_noise: 1.0,
            sigma_lateral: 0.5,
            sigma_longitudinal: 1.0,
            gate: 5.0,
            dt: 0.1,
            confirm_hits: 3,
            max_misses: 5,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), TrackerConfigError> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let ok = pos(self.process_noise)
            && pos(self.sigma_lateral)
            && pos(self.sigma_longitudinal)
            && pos(self.gate)
            && pos(self.dt);
        if !ok {
            return Err(TrackerConfigError("noises, gate and dt must be positive".into()));
        }
        if self.confirm_hits == 0 || self.max_misses == 0 {
            return Err(TrackerConfigError("confirm_hits and max_misses must be at least 1".into()));
        }
        Ok(())
    }

    fn motion(&self) -> MotionModel {
        MotionModel::new(self.dt, self.process_noise, self.sigma_lateral, self.sigma_longitudinal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Dead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: u64,
    pub state: KalmanState,
    pub hit_streak: u32,
    pub miss_streak: u32,
    pub status: TrackStatus,
    /// `(frame, filtered position)` for every frame the track was alive.
    pub history: Vec<(usize, Vec2)>,
    /// Frame and position at which the track was first confirmed.
    pub confirmed_at: Option<(usize, Vec2)>,
}

/// One line of tracker output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    pub frame: usize,
    pub id: u64,
    pub position: Vec2,
    pub velocity: Vec2,
    pub status: TrackStatus,
    /// No detection associated this frame.
    pub coasting: bool,
}

/// Kalman prediction, gated Hungarian association and the birth/death
/// rules. Ids are handed out in increasing order and never reused.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    motion: MotionModel,
    tracks: Vec<Track>,
    finished: Vec<Track>,
    next_id: u64,
    frame: usize,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Self {
        Self {
            motion: config.motion(),
            config,
            tracks: Vec::new(),
            finished: Vec::new(),
            next_id: 1,
            frame: 0,
        }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Live tracks, tentative and confirmed.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Every track ever started, dead ones first, ordered by id.
    pub fn all_tracks(&self) -> Vec<Track> {
        let mut all: Vec<Track> = self.finished.iter().chain(&self.tracks).cloned().collect();
        all.sort_by_key(|t| t.id);
        all
    }

    /// Where the confirmed tracks are expected in the next frame.
    pub fn predicted_positions(&self) -> Vec<Vec2> {
        self.tracks
            .iter()
            .filter(|t| t.status == TrackStatus::Confirmed)
            .map(|t| t.state.predicted_position(&self.motion))
            .collect()
    }

    /// Advances one frame with the given detections and returns the
    /// confirmed tracks, including those coasting through a miss.
    pub fn step(&mut self, detections: &[Vec2]) -> Vec<TrackReport> {
        let frame = self.frame;
        self.frame += 1;
        for t in &mut self.tracks {
            t.state.predict(&self.motion);
        }
        let costs: Vec<Vec<f64>> = self
            .tracks
            .iter()
            .map(|t| {
                let p = t.state.position();
                detections.iter().map(|d| (d - p).norm()).collect()
            })
            .collect();
        let pairs = if detections.is_empty() {
            Vec::new()
        } else {
            gated_assignment(&costs, self.config.gate)
        };
        let mut matched_track = vec![None; self.tracks.len()];
        let mut used = vec![false; detections.len()];
        for (t, d) in pairs {
            matched_track[t] = Some(d);
            used[d] = true;
        }

        let mut reports = Vec::new();
        for (t, m) in self.tracks.iter_mut().zip(matched_track) {
            match m {
                Some(d) => {
                    t.state.update(detections[d], &self.motion, frame);
                    t.hit_streak += 1;
                    t.miss_streak = 0;
                    if t.status == TrackStatus::Tentative && t.hit_streak >= self.config.confirm_hits {
                        t.status = TrackStatus::Confirmed;
                        t.confirmed_at = Some((frame, t.state.position()));
                    }
                }
                None => {
                    t.hit_streak = 0;
                    t.miss_streak += 1;
                    if t.miss_streak >= self.config.max_misses {
                        t.status = TrackStatus::Dead;
                    }
                }
            }
            if t.status != TrackStatus::Dead {
                t.history.push((frame, t.state.position()));
            }
            if t.status == TrackStatus::Confirmed {
                reports.push(TrackReport {
                    frame,
                    id: t.id,
                    position: t.state.position(),
                    velocity: t.state.velocity(),
                    status: t.status,
                    coasting: m.is_none(),
                });
            }
        }
        let (alive, dead): (Vec<Track>, Vec<Track>) = std::mem::take(&mut self.tracks)
            .into_iter()
            .partition(|t| t.status != TrackStatus::Dead);
        self.tracks = alive;
        self.finished.extend(dead);

        for (d, _) in used.iter().enumerate().filter(|(_, u)| !**u) {
            let id = self.next_id;
            self.next_id += 1;
            let mut t = Track {
                id,
                state: KalmanState::new(detections[d], &self.motion, frame),
                hit_streak: 1,
                miss_streak: 0,
                status: TrackStatus::Tentative,
                history: vec![(frame, detections[d])],
                confirmed_at: None,
            };
            if self.config.confirm_hits <= 1 {
                t.status = TrackStatus::Confirmed;
                t.confirmed_at = Some((frame, detections[d]));
                reports.push(TrackReport {
                    frame,
                    id,
                    position: detections[d],
                    velocity: Vec2::zeros(),
                    status: t.status,
                    coasting: false,
                });
            }
            self.tracks.push(t);
        }
        reports
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(k: usize) -> Vec2 {
        Vec2::new(0.5, 60.0 + 2.0 * k as f64)
    }

    #[test]
    fn confirmed_exactly_at_third_hit() {
        let mut tr = Tracker::new(TrackerConfig::default());
        assert!(tr.step(&[at(0)]).is_empty());
        assert!(tr.step(&[at(1)]).is_empty());
        let out = tr.step(&[at(2)]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, 1);
        assert_eq!(tr.tracks()[0].confirmed_at.unwrap().0, 2);
    }

    #[test]
    fn dies_after_exactly_five_misses() {
        let mut tr = Tracker::new(TrackerConfig::default());
        for k in 0..10 {
            tr.step(&[at(k)]);
        }
        for miss in 1..=5 {
            let out = tr.step(&[]);
            if miss < 5 {
                assert_eq!(out.len(), 1, "miss {miss}");
                assert!(out[0].coasting);
                assert_eq!(tr.tracks()[0].miss_streak, miss);
            } else {
                assert!(out.is_empty());
                assert!(tr.tracks().is_empty());
            }
        }
        let all = tr.all_tracks();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].status, TrackStatus::Dead);
    }

    #[test]
    fn ids_never_reused() {
        let mut tr = Tracker::new(TrackerConfig::default());
        for _ in 0..3 {
            tr.step(&[at(0)]);
            for _ in 0..5 {
                tr.step(&[]);
            }
        }
        tr.step(&[at(0)]);
        let ids: Vec<u64> = tr.all_tracks().iter().map(|t| t.id).collect();
        assert_eq!(ids, vec![1, 2, 3, 4]);
    }

    #[test]
    fn a_miss_resets_the_birth_streak() {
        let mut tr = Tracker::new(TrackerConfig::default());
        tr.step(&[at(0)]);
        tr.step(&[at(1)]);
        tr.step(&[]);
        assert!(tr.step(&[at(3)]).is_empty());
        assert!(tr.step(&[at(4)]).is_empty());
        assert_eq!(tr.step(&[at(5)]).len(), 1);
    }

    #[test]
    fn two_vehicles_keep_their_ids() {
        let mut tr = Tracker::new(TrackerConfig::default());
        let mut last = Vec::new();
        for k in 0..20 {
            let a = at(k);
            let b = Vec2::new(-1.0, 300.0 - 1.5 * k as f64);
            last = tr.step(&[b, a]);
        }
        assert_eq!(last.len(), 2);
        let mut ids: Vec<u64> = last.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        assert_eq!(ids, vec![1, 2]);
        let down = last.iter().find(|r| r.id == 1).unwrap();
        assert!(down.velocity.y < -1.0);
    }

    #[test]
    fn far_detection_starts_new_track() {
        let mut tr = Tracker::new(TrackerConfig::default());
        tr.step(&[at(0)]);
        tr.step(&[at(0) + Vec2::new(0.0, 20.0)]);
        assert_eq!(tr.tracks().len(), 2);
    }

    #[test]
    fn config_validation() {
        assert!(TrackerConfig::default().validate().is_ok());
        assert!(TrackerConfig { gate: 0.0, ..TrackerConfig::default() }.validate().is_err());
        assert!(TrackerConfig { max_misses: 0, ..TrackerConfig::default() }.validate().is_err());
    }
}
