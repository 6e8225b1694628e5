//! Deterministic synthetic recordings in the highD schema.
//!
//! Each vehicle is driven by a scripted acceleration profile and integrated
//! with constant acceleration per frame, so stored positions, velocities
//! and accelerations are mutually consistent:
//! `x[k+1] - x[k] = (vx[k] + vx[k+1]) / 2 * dt`.
//!
//! Every maneuver instance is placed in its own 3 km stretch of road so
//! instances never perceive each other.
//!
//! ```json
//! {
//!   "recording_id": 1,
//!   "frame_rate": 25.0,
//!   "duration_s": 40.0,
//!   "noise": 0.0,
//!   "lanes": { "count": 3, "width": 3.75, "origin_y": 12.0 },
//!   "maneuvers": [
//!     { "type": "stop_and_go", "cycle_starts": [5.0, 22.0] },
//!     { "type": "lane_change_abort" },
//!     { "type": "lateral_drift_pass" },
//!     { "type": "traffic", "speeds": [15, 20, 25, 30] }
//!   ]
//! }
//! ```
//!
//! `noise` is the standard deviation (m/s²) of per-frame longitudinal
//! acceleration jitter; lateral jitter uses 5% of it. Omitted maneuver
//! fields take the defaults of the corresponding struct.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, RecordingMeta};
use crate::error::{Error, Result};
use crate::trajectory::{DrivingDirection, LaneGeometry, VehicleState};

const GROUP_SPACING: f64 = 3000.0;
const CAR_LENGTH: f64 = 4.5;
const CAR_WIDTH: f64 = 2.0;
const MANEUVER_NAMES: [&str; 4] = ["stop_and_go", "lane_change_abort", "lateral_drift_pass", "traffic"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LanesSpec {
    pub count: i64,
    pub width: f64,
    /// Lateral position of the leftmost road boundary.
    pub origin_y: f64,
}

impl Default for LanesSpec {
    fn default() -> Self {
        Self { count: 3, width: 3.75, origin_y: 12.0 }
    }
}

impl LanesSpec {
    pub fn center(&self, lane: i64) -> f64 {
        self.origin_y + (lane as f64 - 0.5) * self.width
    }

    pub fn lane_at(&self, y: f64) -> i64 {
        (((y - self.origin_y) / self.width).floor() as i64 + 1).clamp(1, self.count.max(1))
    }

    pub fn geometry(&self) -> LaneGeometry {
        let lines: Vec<f64> = (0..=self.count).map(|k| self.origin_y + k as f64 * self.width).collect();
        LaneGeometry::from_lines(&lines)
    }
}

/// Leader/follower pair in stop-and-go traffic. The follower repeats the
/// leader's acceleration profile after `reaction_s`, so it closes in on the
/// leader from each cycle start until it has matched the leader's speed
/// again; those intervals are the approach phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopAndGo {
    pub count: usize,
    pub lane: i64,
    pub cruise_speed: f64,
    /// Follower's initial speed; defaults to `cruise_speed`.
    pub follower_speed: Option<f64>,
    pub low_speed: f64,
    pub brake_decel: f64,
    pub accel: f64,
    pub hold_s: f64,
    pub reaction_s: f64,
    /// Initial edge-to-edge gap (m).
    pub initial_gap: f64,
    pub cycle_starts: Vec<f64>,
}

impl Default for StopAndGo {
    fn default() -> Self {
        Self {
            count: 1,
            lane: 2,
            cruise_speed: 15.0,
            follower_speed: None,
            low_speed: 2.0,
            brake_decel: 3.0,
            accel: 1.5,
            hold_s: 3.0,
            reaction_s: 1.5,
            initial_gap: 30.0,
            cycle_starts: vec![5.0, 22.0],
        }
    }
}

impl StopAndGo {
    fn brake_s(&self) -> f64 {
        (self.cruise_speed - self.low_speed) / self.brake_decel
    }

    fn leader_accel(&self, t: f64) -> f64 {
        let brake = self.brake_s();
        let launch = (self.cruise_speed - self.low_speed) / self.accel;
        for &start in &self.cycle_starts {
            let dt = t - start;
            if (0.0..brake).contains(&dt) {
                return -self.brake_decel;
            }
            if (brake + self.hold_s..brake + self.hold_s + launch).contains(&dt) {
                return self.accel;
            }
        }
        0.0
    }

    /// Scripted intervals during which the follower closes in on the leader.
    pub fn approach_phases(&self) -> Vec<(f64, f64)> {
        self.cycle_starts.iter().map(|&s| (s, s + self.brake_s() + self.reaction_s)).collect()
    }
}

/// An ego starts a lane change to the left toward a slower vehicle in the
/// target lane, then returns to its lane center. The largest lateral
/// excursion is `lateral_accel * ramp_s * (ramp_s + hold_s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaneChangeAbort {
    pub count: usize,
    pub ego_lane: i64,
    pub ego_speed: f64,
    pub target_speed: f64,
    /// Initial edge-to-edge gap to the vehicle in the target lane (m).
    pub target_gap: f64,
    pub start_s: f64,
    pub lateral_accel: f64,
    pub ramp_s: f64,
    pub hold_s: f64,
}

impl Default for LaneChangeAbort {
    fn default() -> Self {
        Self {
            count: 1,
            ego_lane: 2,
            ego_speed: 25.0,
            target_speed: 20.0,
            target_gap: 12.0,
            start_s: 3.0,
            lateral_accel: 1.0,
            ramp_s: 1.0,
            hold_s: 0.5,
        }
    }
}

impl LaneChangeAbort {
    fn ego_lateral_accel(&self, t: f64) -> f64 {
        let (a, r, h) = (self.lateral_accel, self.ramp_s, self.hold_s);
        let dt = t - self.start_s;
        if (0.0..r).contains(&dt) {
            -a
        } else if (r + h..3.0 * r + h).contains(&dt) {
            a
        } else if (3.0 * r + 2.0 * h..4.0 * r + 2.0 * h).contains(&dt) {
            -a
        } else {
            0.0
        }
    }
}

/// An ego overtakes a slower vehicle in the right adjacent lane that drives
/// off-center toward the ego; the ego shifts left within its lane in
/// response. No trajectory ever heads toward a collision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LateralDriftPass {
    pub count: usize,
    pub ego_lane: i64,
    pub ego_speed: f64,
    pub other_speed: f64,
    /// How far the neighbor sits from its lane center toward the ego (m).
    pub other_offset: f64,
    /// Initial center-to-center longitudinal distance, neighbor ahead (m).
    pub start_gap: f64,
    pub react_s: f64,
    pub shift: f64,
    pub shift_s: f64,
}

impl Default for LateralDriftPass {
    fn default() -> Self {
        Self {
            count: 1,
            ego_lane: 2,
            ego_speed: 30.0,
            other_speed: 25.0,
            other_offset: 1.1,
            start_gap: 40.0,
            react_s: 5.0,
            shift: 0.5,
            shift_s: 2.0,
        }
    }
}

/// Blocks of vehicles filling every lane at a common speed, with random
/// gaps and lateral positions. Feeds calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Traffic {
    pub speeds: Vec<f64>,
    pub vehicles_per_lane: usize,
    /// Median edge gap is `gap_per_speed * v + gap_offset`.
    pub gap_per_speed: f64,
    pub gap_offset: f64,
    /// Log-normal sigma of the gaps.
    pub gap_spread: f64,
    pub lateral_sd: f64,
    pub truck_share: f64,
}

impl Default for Traffic {
    fn default() -> Self {
        Self {
            speeds: vec![15.0, 20.0, 25.0, 30.0],
            vehicles_per_lane: 6,
            gap_per_speed: 1.0,
            gap_offset: 5.0,
            gap_spread: 0.5,
            lateral_sd: 0.3,
            truck_share: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Maneuver {
    StopAndGo(StopAndGo),
    LaneChangeAbort(LaneChangeAbort),
    LateralDriftPass(LateralDriftPass),
    Traffic(Traffic),
}

fn default_recording_id() -> i64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    #[serde(default = "default_recording_id")]
    pub recording_id: i64,
    pub frame_rate: f64,
    pub duration_s: f64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub lanes: LanesSpec,
    pub maneuvers: Vec<Maneuver>,
}

impl FixtureSpec {
    /// Parses a fixture document, reporting unknown maneuver types by name.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        if let Some(list) = raw.get("maneuvers").and_then(|m| m.as_array()) {
            for m in list {
                let name = m.get("type").and_then(|t| t.as_str()).unwrap_or("");
                if !MANEUVER_NAMES.contains(&name) {
                    return Err(Error::UnknownManeuver(name.to_string()));
                }
            }
        }
        Ok(serde_json::from_value(raw)?)
    }

    pub fn frame_count(&self) -> i64 {
        (self.duration_s * self.frame_rate).round() as i64
    }
}

struct Integrator<'a> {
    spec: &'a FixtureSpec,
    rng: ChaCha8Rng,
    next_id: i64,
}

struct Start {
    x: f64,
    y: f64,
    vx: f64,
    length: f64,
    width: f64,
}

impl Integrator<'_> {
    fn drive(&mut self, start: Start, accel: impl Fn(f64) -> (f64, f64)) -> Vec<VehicleState> {
        let spec = self.spec;
        let dt = 1.0 / spec.frame_rate;
        let id = self.next_id;
        self.next_id += 1;
        let jitter_x = Normal::new(0.0, spec.noise.max(0.0)).expect("finite sd");
        let jitter_y = Normal::new(0.0, 0.05 * spec.noise.max(0.0)).expect("finite sd");
        let (mut x, mut y, mut vx, mut vy) = (start.x, start.y, start.vx, 0.0);
        let mut out = Vec::with_capacity(spec.frame_count() as usize);
        for frame in 0..spec.frame_count() {
            let t = frame as f64 * dt;
            let (mut ax, mut ay) = accel(t);
            if spec.noise > 0.0 {
                ax += jitter_x.sample(&mut self.rng);
                ay += jitter_y.sample(&mut self.rng);
            }
            // never reverse
            if vx + ax * dt < 0.0 {
                ax = -vx / dt;
            }
            out.push(VehicleState {
                vehicle_id: id,
                frame,
                t,
                x,
                y,
                vx,
                vy,
                ax,
                ay,
                length: start.length,
                width: start.width,
                lane_id: spec.lanes.lane_at(y),
            });
            x += vx * dt + 0.5 * ax * dt * dt;
            y += vy * dt + 0.5 * ay * dt * dt;
            vx += ax * dt;
            vy += ay * dt;
        }
        out
    }

    fn car(x: f64, y: f64, vx: f64) -> Start {
        Start { x, y, vx, length: CAR_LENGTH, width: CAR_WIDTH }
    }
}

/// Generates a recording from `spec`; identical for identical `seed`.
pub fn synthesize_fixture(spec: &FixtureSpec, seed: u64) -> Result<Dataset> {
    if !(spec.frame_rate > 0.0) {
        return Err(Error::invalid("frame_rate", format!("{} must be positive", spec.frame_rate)));
    }
    if !(spec.duration_s >= 0.0) || !spec.noise.is_finite() {
        return Err(Error::invalid("duration_s", "must be non-negative with finite noise"));
    }
    let geometry = spec.lanes.geometry();
    let meta = RecordingMeta {
        recording_id: spec.recording_id,
        frame_rate: spec.frame_rate,
        forward_lanes: geometry.clone(),
        reverse_lanes: geometry,
        segment_length: super::DEFAULT_SEGMENT_LENGTH,
    };
    let mut dataset = Dataset::empty(meta);
    let mut gen = Integrator { spec, rng: ChaCha8Rng::seed_from_u64(seed), next_id: 1 };
    let lanes = &spec.lanes;
    let mut group = 0usize;
    let mut next_origin = || {
        group += 1;
        group as f64 * GROUP_SPACING
    };

    for maneuver in &spec.maneuvers {
        match maneuver {
            Maneuver::StopAndGo(m) => {
                for _ in 0..m.count {
                    let x0 = next_origin();
                    let y = lanes.center(m.lane);
                    let v_follow = m.follower_speed.unwrap_or(m.cruise_speed);
                    let leader = gen.drive(Integrator::car(x0 + CAR_LENGTH + m.initial_gap, y, m.cruise_speed), |t| {
                        (m.leader_accel(t), 0.0)
                    });
                    let follower =
                        gen.drive(Integrator::car(x0, y, v_follow), |t| (m.leader_accel(t - m.reaction_s), 0.0));
                    dataset.insert_track(DrivingDirection::Forward, leader);
                    dataset.insert_track(DrivingDirection::Forward, follower);
                }
            }
            Maneuver::LaneChangeAbort(m) => {
                for _ in 0..m.count {
                    let x0 = next_origin();
                    let ego = gen.drive(Integrator::car(x0, lanes.center(m.ego_lane), m.ego_speed), |t| {
                        (0.0, m.ego_lateral_accel(t))
                    });
                    let target = gen.drive(
                        Integrator::car(x0 + CAR_LENGTH + m.target_gap, lanes.center(m.ego_lane - 1), m.target_speed),
                        |_| (0.0, 0.0),
                    );
                    dataset.insert_track(DrivingDirection::Forward, ego);
                    dataset.insert_track(DrivingDirection::Forward, target);
                }
            }
            Maneuver::LateralDriftPass(m) => {
                for _ in 0..m.count {
                    let x0 = next_origin();
                    let half = 0.5 * m.shift_s;
                    let lat = 4.0 * m.shift / (m.shift_s * m.shift_s);
                    let ego = gen.drive(Integrator::car(x0, lanes.center(m.ego_lane), m.ego_speed), |t| {
                        let dt = t - m.react_s;
                        let ay = if (0.0..half).contains(&dt) {
                            -lat
                        } else if (half..m.shift_s).contains(&dt) {
                            lat
                        } else {
                            0.0
                        };
                        (0.0, ay)
                    });
                    let other_y = lanes.center(m.ego_lane + 1) - m.other_offset;
                    let other =
                        gen.drive(Integrator::car(x0 + m.start_gap, other_y, m.other_speed), |_| (0.0, 0.0));
                    dataset.insert_track(DrivingDirection::Forward, ego);
                    dataset.insert_track(DrivingDirection::Forward, other);
                }
            }
            Maneuver::Traffic(m) => {
                for &speed in &m.speeds {
                    let x0 = next_origin();
                    let median = m.gap_per_speed * speed + m.gap_offset;
                    let gap_dist = Normal::new(median.ln(), m.gap_spread.max(0.0))
                        .map_err(|e| Error::invalid("gap_spread", e.to_string()))?;
                    let lateral = Normal::new(0.0, m.lateral_sd.max(0.0))
                        .map_err(|e| Error::invalid("lateral_sd", e.to_string()))?;
                    for lane in 1..=lanes.count {
                        // stagger lanes so blocks do not line up laterally
                        let mut x = x0 + gen.rng.random_range(0.0..median);
                        for _ in 0..m.vehicles_per_lane {
                            let truck = gen.rng.random_bool(m.truck_share.clamp(0.0, 1.0));
                            let (length, width) = if truck { (12.0, 2.5) } else { (CAR_LENGTH, CAR_WIDTH) };
                            let y = lanes.center(lane) + lateral.sample(&mut gen.rng).clamp(-0.6, 0.6);
                            let start = Start { x: x + 0.5 * length, y, vx: speed, length, width };
                            let track = gen.drive(start, |_| (0.0, 0.0));
                            dataset.insert_track(DrivingDirection::Forward, track);
                            x += length + gap_dist.sample(&mut gen.rng);
                        }
                    }
                }
            }
        }
    }
    Ok(dataset)
}
