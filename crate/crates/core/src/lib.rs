//! Ghost-point correction and vehicle detection for a single mmWave radar
//! mounted in a road tunnel.

pub mod correction;
pub mod curved;
pub mod detection;
pub mod geometry;
pub mod harness;
pub mod par;
pub mod point;
pub mod sim;
pub mod tunnel;

pub use point::{RadarPoint, Side};
