//! From corrected points to vehicles: Doppler-weighted DBSCAN, then
//! constant-velocity Kalman tracks associated by optimal assignment.

pub mod assign;
pub mod cluster;
pub mod kalman;
pub mod tracker;

pub use assign::{gated_assignment, hungarian};
pub use cluster::{cluster_frame, weighted_point_distance, Cluster, ClusterConfig, ClusterError};
pub use kalman::{KalmanState, MotionModel};
pub use tracker::{Track, TrackReport, TrackStatus, Tracker, TrackerConfig, TrackerConfigError};
