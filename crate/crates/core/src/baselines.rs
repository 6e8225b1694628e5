//! Two-dimensional time-to-collision baseline.
//!
//! Both bounding boxes are advanced at their current velocities in fixed
//! steps until they intersect. The result is step-quantized.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::VehicleState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TtcOptions {
    pub dt: f64,
    pub horizon: f64,
}

impl Default for TtcOptions {
    fn default() -> Self {
        Self { dt: 0.01, horizon: 30.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TtcResult {
    pub ttc: Option<f64>,
    /// `1 / ttc`, zero when no collision is predicted and infinite when the
    /// boxes already intersect.
    pub ttci: f64,
}

impl TtcResult {
    const NONE: TtcResult = TtcResult { ttc: None, ttci: 0.0 };
}

fn boxes_intersect(dx: f64, dy: f64, half_length_sum: f64, half_width_sum: f64) -> bool {
    dx.abs() < half_length_sum && dy.abs() < half_width_sum
}

pub fn ttc_2d(ego: &VehicleState, other: &VehicleState, options: TtcOptions) -> Result<TtcResult> {
    if ego.frame != other.frame {
        return Err(Error::FrameMismatch(ego.frame, other.frame));
    }
    if !(options.dt > 0.0) {
        return Err(Error::invalid("dt", format!("{} must be positive", options.dt)));
    }
    let half_l = 0.5 * (ego.length + other.length);
    let half_w = 0.5 * (ego.width + other.width);
    let (dx0, dy0) = (other.x - ego.x, other.y - ego.y);
    let (dvx, dvy) = (other.vx - ego.vx, other.vy - ego.vy);
    let steps = (options.horizon / options.dt).floor() as u64;
    for k in 0..=steps {
        let t = k as f64 * options.dt;
        if boxes_intersect(dx0 + dvx * t, dy0 + dvy * t, half_l, half_w) {
            return Ok(TtcResult { ttc: Some(t), ttci: 1.0 / t });
        }
    }
    Ok(TtcResult::NONE)
}

/// Per-frame TTCi between two tracks over the frames both share.
pub fn ttci_timeline(
    ego_track: &[VehicleState],
    other_track: &[VehicleState],
    options: TtcOptions,
) -> Result<Vec<(i64, f64)>> {
    let others: BTreeMap<i64, &VehicleState> = other_track.iter().map(|s| (s.frame, s)).collect();
    ego_track
        .iter()
        .filter_map(|ego| others.get(&ego.frame).map(|other| (ego, *other)))
        .map(|(ego, other)| Ok((ego.frame, ttc_2d(ego, other, options)?.ttci)))
        .collect()
}

/// Reads an externally computed risk series (`frame,value` CSV with header)
/// for overlay against the field timelines.
pub fn read_external_series(path: &Path) -> Result<BTreeMap<i64, f64>> {
    #[derive(Deserialize)]
    struct Row {
        frame: i64,
        value: f64,
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut series = BTreeMap::new();
    for row in reader.deserialize() {
        let row: Row = row?;
        series.insert(row.frame, row.value);
    }
    Ok(series)
}
