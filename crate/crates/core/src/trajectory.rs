//! Trajectory data model: vehicle states, lane geometry, scenes, and
//! inter-vehicle geometry.
//!
//! All positions refer to the bounding-box center. After normalization every
//! track travels along +x and +y points to the driver's right.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// One vehicle at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub vehicle_id: i64,
    pub frame: i64,
    /// Seconds.
    pub t: f64,
    /// Longitudinal center position (m).
    pub x: f64,
    /// Lateral center position (m).
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub ax: f64,
    pub ay: f64,
    /// Longitudinal extent (m).
    pub length: f64,
    /// Lateral extent (m).
    pub width: f64,
    pub lane_id: i64,
}

impl VehicleState {
    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    fn mirrored(&self) -> Self {
        Self {
            x: -self.x,
            y: -self.y,
            vx: -self.vx,
            vy: -self.vy,
            ax: -self.ax,
            ay: -self.ay,
            ..*self
        }
    }
}

/// Direction of travel of a raw track relative to the canonical +x axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrivingDirection {
    /// Already travels along +x with +y to the driver's right.
    Forward,
    /// Travels along -x (the upper carriageway in highD image coordinates).
    Reverse,
}

impl DrivingDirection {
    /// Direction implied by the sign of the summed longitudinal velocity.
    pub fn infer(states: &[VehicleState]) -> Self {
        let sum: f64 = states.iter().map(|s| s.vx).sum();
        if sum < 0.0 {
            DrivingDirection::Reverse
        } else {
            DrivingDirection::Forward
        }
    }
}

/// Rotates a reverse-direction track by 180 degrees so it travels along +x.
///
/// The rotation keeps the frame right-handed with respect to the driver:
/// a reverse track's right-hand side (-y in source coordinates) becomes +y.
pub fn normalize_track(
    states: &[VehicleState],
    direction: DrivingDirection,
) -> Result<Vec<VehicleState>> {
    let first = states.first().ok_or(Error::EmptyTrack)?;
    for pair in states.windows(2) {
        if pair[1].vehicle_id != first.vehicle_id {
            return Err(Error::MixedVehicleIds(first.vehicle_id, pair[1].vehicle_id));
        }
        if pair[1].frame <= pair[0].frame {
            return Err(Error::NonMonotoneFrames {
                vehicle_id: first.vehicle_id,
                prev: pair[0].frame,
                next: pair[1].frame,
            });
        }
    }
    Ok(match direction {
        DrivingDirection::Forward => states.to_vec(),
        DrivingDirection::Reverse => states.iter().map(VehicleState::mirrored).collect(),
    })
}

/// Lateral positions of lane markers and road boundaries for one carriageway.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LaneGeometry {
    /// Interior lane markers, ascending.
    pub marker_ys: Vec<f64>,
    /// The two road boundaries, ascending.
    pub boundary_ys: Vec<f64>,
}

impl LaneGeometry {
    /// Builds geometry from the full list of painted lines of one carriageway;
    /// the outermost lines are the road boundaries.
    pub fn from_lines(lines: &[f64]) -> Self {
        let mut sorted = lines.to_vec();
        sorted.sort_by(f64::total_cmp);
        match sorted.len() {
            0 => Self::default(),
            1 => Self { marker_ys: Vec::new(), boundary_ys: sorted },
            n => Self {
                marker_ys: sorted[1..n - 1].to_vec(),
                boundary_ys: vec![sorted[0], sorted[n - 1]],
            },
        }
    }

    /// Geometry seen from the canonical frame of a reverse-direction track.
    pub fn mirrored(&self) -> Self {
        let flip = |ys: &[f64]| {
            let mut out: Vec<f64> = ys.iter().map(|y| -y).collect();
            out.sort_by(f64::total_cmp);
            out
        };
        Self { marker_ys: flip(&self.marker_ys), boundary_ys: flip(&self.boundary_ys) }
    }

    /// Nearest lane marker on the left (smaller y) and right (larger y) of `y`.
    pub fn nearest_markers(&self, y: f64) -> (Option<f64>, Option<f64>) {
        let left = self.marker_ys.iter().copied().filter(|&m| m <= y).last();
        let right = self.marker_ys.iter().copied().find(|&m| m > y);
        (left, right)
    }

    /// The closer of the two road boundaries.
    pub fn nearest_boundary(&self, y: f64) -> Option<f64> {
        self.boundary_ys
            .iter()
            .copied()
            .min_by(|a, b| (a - y).abs().total_cmp(&(b - y).abs()))
    }
}

/// Signed edge-to-edge clearance between two axis-aligned boxes.
///
/// `dx > 0` when the other vehicle is ahead, `dy > 0` when it is to the
/// ego's right. A component is exactly zero when the extents overlap on
/// that axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapVector {
    pub dx: f64,
    pub dy: f64,
}

fn edge_gap(center_delta: f64, half_extent_sum: f64) -> f64 {
    let clearance = (center_delta.abs() - half_extent_sum).max(0.0);
    if clearance == 0.0 {
        0.0
    } else {
        clearance.copysign(center_delta)
    }
}

fn check_same_frame(a: &VehicleState, b: &VehicleState) -> Result<()> {
    if a.frame == b.frame {
        Ok(())
    } else {
        Err(Error::FrameMismatch(a.frame, b.frame))
    }
}

pub fn gap_vector(ego: &VehicleState, other: &VehicleState) -> Result<GapVector> {
    check_same_frame(ego, other)?;
    Ok(GapVector {
        dx: edge_gap(other.x - ego.x, 0.5 * (ego.length + other.length)),
        dy: edge_gap(other.y - ego.y, 0.5 * (ego.width + other.width)),
    })
}

/// Center-to-center position and velocity differences, other minus ego.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeMotion {
    pub dx: f64,
    pub dy: f64,
    pub dvx: f64,
    pub dvy: f64,
}

impl RelativeMotion {
    pub fn distance(&self) -> (f64, f64) {
        (self.dx, self.dy)
    }

    pub fn velocity(&self) -> (f64, f64) {
        (self.dvx, self.dvy)
    }
}

pub fn center_vector(ego: &VehicleState, other: &VehicleState) -> Result<RelativeMotion> {
    check_same_frame(ego, other)?;
    let motion = RelativeMotion {
        dx: other.x - ego.x,
        dy: other.y - ego.y,
        dvx: other.vx - ego.vx,
        dvy: other.vy - ego.vy,
    };
    for (v, what) in [
        (motion.dx, "dx"),
        (motion.dy, "dy"),
        (motion.dvx, "dvx"),
        (motion.dvy, "dvy"),
    ] {
        ensure_finite(v, what)?;
    }
    Ok(motion)
}

/// Which vehicles an ego perceives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perception {
    /// Maximum |center longitudinal distance| (m).
    pub window: f64,
    /// Maximum |lane id offset|.
    pub lane_span: i64,
}

impl Default for Perception {
    fn default() -> Self {
        Self { window: 100.0, lane_span: 1 }
    }
}

/// An ego vehicle with its perceived neighbors and lane geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFrame {
    pub ego: VehicleState,
    /// Sorted by vehicle id.
    pub neighbors: Vec<VehicleState>,
    pub lanes: LaneGeometry,
}

pub fn select_neighbors(
    frame_states: &[VehicleState],
    ego_id: i64,
    perception: Perception,
    lanes: &LaneGeometry,
) -> Result<SceneFrame> {
    let ego = *frame_states
        .iter()
        .find(|s| s.vehicle_id == ego_id)
        .ok_or(Error::UnknownVehicle(ego_id))?;
    let mut neighbors: Vec<VehicleState> = frame_states
        .iter()
        .filter(|s| {
            s.vehicle_id != ego_id
                && (s.x - ego.x).abs() <= perception.window
                && (s.lane_id - ego.lane_id).abs() <= perception.lane_span
        })
        .copied()
        .collect();
    neighbors.sort_by_key(|s| s.vehicle_id);
    Ok(SceneFrame { ego, neighbors, lanes: lanes.clone() })
}

#[cfg(test)]
pub(crate) fn state(vehicle_id: i64, x: f64, y: f64, vx: f64) -> VehicleState {
    VehicleState {
        vehicle_id,
        frame: 0,
        t: 0.0,
        x,
        y,
        vx,
        vy: 0.0,
        ax: 0.0,
        ay: 0.0,
        length: 4.0,
        width: 2.0,
        lane_id: 2,
    }
}
