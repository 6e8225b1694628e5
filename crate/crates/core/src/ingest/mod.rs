//! Recordings in the canonical trajectory model, read from highD-format CSV
//! files or generated synthetically.

mod fixture;
mod highd;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{select_neighbors, DrivingDirection, LaneGeometry, Perception, SceneFrame, VehicleState};

pub use fixture::{
    synthesize_fixture, FixtureSpec, LaneChangeAbort, LanesSpec, LateralDriftPass, Maneuver, StopAndGo, Traffic,
};
pub use highd::{load_directory, parse_recording, write_recording, RecordingFiles};

/// Default highD segment length (m).
pub const DEFAULT_SEGMENT_LENGTH: f64 = 420.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub recording_id: i64,
    /// Hz.
    pub frame_rate: f64,
    /// Lines of the carriageway travelled along +x in source coordinates.
    pub forward_lanes: LaneGeometry,
    /// Lines of the opposite carriageway, already in the canonical frame.
    pub reverse_lanes: LaneGeometry,
    pub segment_length: f64,
}

impl RecordingMeta {
    pub fn lanes(&self, direction: DrivingDirection) -> &LaneGeometry {
        match direction {
            DrivingDirection::Forward => &self.forward_lanes,
            DrivingDirection::Reverse => &self.reverse_lanes,
        }
    }

    pub fn frame_period(&self) -> f64 {
        1.0 / self.frame_rate
    }
}

/// One recording with every track normalized to the canonical direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub meta: RecordingMeta,
    pub tracks: BTreeMap<i64, Vec<VehicleState>>,
    /// Source direction of each track.
    pub directions: BTreeMap<i64, DrivingDirection>,
    /// True iff the lane id changes within the track.
    pub lane_changes: BTreeMap<i64, bool>,
}

impl Dataset {
    pub fn empty(meta: RecordingMeta) -> Self {
        Self { meta, tracks: BTreeMap::new(), directions: BTreeMap::new(), lane_changes: BTreeMap::new() }
    }

    /// Adds a track that is already in the canonical frame.
    pub fn insert_track(&mut self, direction: DrivingDirection, track: Vec<VehicleState>) {
        let Some(first) = track.first() else { return };
        let id = first.vehicle_id;
        let changes = track.iter().any(|s| s.lane_id != first.lane_id);
        self.lane_changes.insert(id, changes);
        self.directions.insert(id, direction);
        self.tracks.insert(id, track);
    }

    pub fn track(&self, vehicle_id: i64) -> Result<&[VehicleState]> {
        self.tracks.get(&vehicle_id).map(Vec::as_slice).ok_or(Error::UnknownVehicle(vehicle_id))
    }

    pub fn direction(&self, vehicle_id: i64) -> DrivingDirection {
        self.directions.get(&vehicle_id).copied().unwrap_or(DrivingDirection::Forward)
    }

    pub fn is_lane_changer(&self, vehicle_id: i64) -> bool {
        self.lane_changes.get(&vehicle_id).copied().unwrap_or(false)
    }

    pub fn frame_index(&self) -> FrameIndex<'_> {
        let mut by_frame: HashMap<(DrivingDirection, i64), Vec<VehicleState>> = HashMap::new();
        for (id, track) in &self.tracks {
            let direction = self.direction(*id);
            for s in track {
                by_frame.entry((direction, s.frame)).or_default().push(*s);
            }
        }
        FrameIndex { dataset: self, by_frame }
    }
}

/// All states grouped by carriageway and frame, for scene construction.
pub struct FrameIndex<'a> {
    dataset: &'a Dataset,
    by_frame: HashMap<(DrivingDirection, i64), Vec<VehicleState>>,
}

impl FrameIndex<'_> {
    /// States sharing `frame` on the carriageway of `vehicle_id`.
    pub fn frame_states(&self, vehicle_id: i64, frame: i64) -> &[VehicleState] {
        let direction = self.dataset.direction(vehicle_id);
        self.by_frame.get(&(direction, frame)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn scene(&self, vehicle_id: i64, frame: i64, perception: Perception) -> Result<SceneFrame> {
        let direction = self.dataset.direction(vehicle_id);
        select_neighbors(
            self.frame_states(vehicle_id, frame),
            vehicle_id,
            perception,
            self.dataset.meta.lanes(direction),
        )
    }
}
