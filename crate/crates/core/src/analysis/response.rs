use serde::{Deserialize, Serialize};

use super::{detect_events, timeline_with_index, RiskKind, ThresholdEvent, TimelineOptions};
use crate::error::{Error, Result};
use crate::ingest::{Dataset, FrameIndex};
use crate::ofield::OFieldParams;
use crate::sfield::SFieldParams;
use crate::trajectory::{Perception, VehicleState};

/// Which sources an analysis follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseDirection {
    /// The nearest same-lane vehicle ahead; response is the ego's
    /// longitudinal acceleration.
    Longitudinal,
    /// Vehicles in other lanes on the ego's left (smaller y).
    LateralLeft,
    /// Vehicles in other lanes on the ego's right (larger y).
    LateralRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseQuantity {
    LongitudinalAcceleration,
    LateralAcceleration,
    LateralVelocity,
}

impl ResponseQuantity {
    /// Lateral responses to O-risk are read as accelerations, to S-risk as
    /// velocities.
    pub fn for_study(kind: RiskKind, direction: ResponseDirection) -> Self {
        match (direction, kind) {
            (ResponseDirection::Longitudinal, _) => ResponseQuantity::LongitudinalAcceleration,
            (_, RiskKind::O) => ResponseQuantity::LateralAcceleration,
            (_, RiskKind::S) => ResponseQuantity::LateralVelocity,
        }
    }

    fn of(self, s: &VehicleState) -> f64 {
        match self {
            ResponseQuantity::LongitudinalAcceleration => s.ax,
            ResponseQuantity::LateralAcceleration => s.ay,
            ResponseQuantity::LateralVelocity => s.vy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseOptions {
    /// Ascending, each in (0, 1).
    pub thresholds: Vec<f64>,
    /// Seconds after onset.
    pub lag: f64,
    pub exclude_lane_changers: bool,
    pub perception: Perception,
}

impl Default for ResponseOptions {
    fn default() -> Self {
        Self {
            thresholds: vec![super::DEFAULT_THRESHOLD],
            lag: 1.0,
            exclude_lane_changers: true,
            perception: Perception::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseSample {
    pub vehicle_id: i64,
    pub source_id: i64,
    pub onset_t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseDistribution {
    pub threshold: f64,
    pub lag: f64,
    pub quantity: ResponseQuantity,
    pub values: Vec<f64>,
    pub samples: Vec<ResponseSample>,
    pub excluded_lane_changers: usize,
}

impl ResponseDistribution {
    pub fn mean(&self) -> Option<f64> {
        (!self.values.is_empty()).then(|| self.values.iter().sum::<f64>() / self.values.len() as f64)
    }
}

fn source_matches(
    index: &FrameIndex<'_>,
    event: &ThresholdEvent,
    direction: ResponseDirection,
) -> bool {
    let states = index.frame_states(event.vehicle_id, event.onset_frame);
    let find = |id| states.iter().find(|s| s.vehicle_id == id);
    let (Some(ego), Some(source)) = (find(event.vehicle_id), find(event.source_id)) else {
        return false;
    };
    match direction {
        ResponseDirection::Longitudinal => {
            let lead = states
                .iter()
                .filter(|s| s.vehicle_id != ego.vehicle_id && s.lane_id == ego.lane_id && s.x > ego.x)
                .min_by(|a, b| a.x.total_cmp(&b.x));
            lead.is_some_and(|l| l.vehicle_id == source.vehicle_id)
        }
        ResponseDirection::LateralLeft => source.lane_id != ego.lane_id && source.y < ego.y,
        ResponseDirection::LateralRight => source.lane_id != ego.lane_id && source.y > ego.y,
    }
}

/// Signed value of largest magnitude within `(onset, onset + lag]`.
fn extremal_response(track: &[VehicleState], onset: f64, lag: f64, quantity: ResponseQuantity) -> Option<f64> {
    const EPS: f64 = 1e-9;
    track
        .iter()
        .filter(|s| s.t > onset + EPS && s.t <= onset + lag + EPS)
        .map(|s| quantity.of(s))
        .fold(None, |best: Option<f64>, v| match best {
            Some(b) if b.abs() >= v.abs() => Some(b),
            _ => Some(v),
        })
}

/// Ego responses after risk exceedances, one distribution per threshold.
///
/// Events are detected once at the lowest threshold; an event enters the
/// distribution of a higher threshold when its peak reaches it, with the
/// onset moved to the first frame at or above that threshold. Source
/// direction is judged at the lowest-threshold onset, so each population is
/// a subset of the one below it.
pub fn behavior_response(
    dataset: &Dataset,
    kind: RiskKind,
    direction: ResponseDirection,
    s_params: &SFieldParams,
    o_params: &OFieldParams,
    options: &ResponseOptions,
) -> Result<Vec<ResponseDistribution>> {
    let thresholds = &options.thresholds;
    if thresholds.is_empty() || thresholds.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("thresholds", "need a strictly ascending, non-empty list"));
    }
    if !(options.lag > 0.0) {
        return Err(Error::invalid("lag", format!("{} must be positive", options.lag)));
    }
    let quantity = ResponseQuantity::for_study(kind, direction);
    let mut out: Vec<ResponseDistribution> = thresholds
        .iter()
        .map(|&threshold| ResponseDistribution {
            threshold,
            lag: options.lag,
            quantity,
            values: Vec::new(),
            samples: Vec::new(),
            excluded_lane_changers: 0,
        })
        .collect();

    let index = dataset.frame_index();
    let timeline_options = TimelineOptions { perception: options.perception, ttc: None };
    for (&id, track) in &dataset.tracks {
        let timeline = timeline_with_index(dataset, &index, id, s_params, o_params, timeline_options)?;
        let lane_changer = dataset.is_lane_changer(id);
        for event in detect_events(&timeline, kind, thresholds[0], 0.0)? {
            if !source_matches(&index, &event, direction) {
                continue;
            }
            for dist in out.iter_mut().filter(|d| event.peak >= d.threshold) {
                if lane_changer && options.exclude_lane_changers {
                    dist.excluded_lane_changers += 1;
                    continue;
                }
                let Some(&(_, onset_t, _)) = event.series.iter().find(|p| p.2 >= dist.threshold) else {
                    continue;
                };
                if let Some(value) = extremal_response(track, onset_t, options.lag, quantity) {
                    dist.values.push(value);
                    dist.samples.push(ResponseSample { vehicle_id: id, source_id: event.source_id, onset_t, value });
                }
            }
        }
    }
    Ok(out)
}
