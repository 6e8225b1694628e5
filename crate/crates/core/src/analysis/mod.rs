//! Per-vehicle risk timelines and the analyses built on them.

mod events;
mod raster;
mod response;

use serde::{Deserialize, Serialize};

use crate::baselines::{ttc_2d, TtcOptions};
use crate::error::Result;
use crate::ingest::{Dataset, FrameIndex};
use crate::ofield::{aggregate_objective, pair_objective, OFieldParams};
use crate::sfield::{aggregate_subjective, SFieldParams};
use crate::trajectory::Perception;

pub use events::{detect_events, ThresholdEvent};
pub use raster::{rasterize_field, FieldGrid};
pub use response::{
    behavior_response, ResponseDirection, ResponseDistribution, ResponseOptions, ResponseQuantity, ResponseSample,
};

/// `e^-1`, the default risk threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.367_879_441_171_442_33;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskKind {
    S,
    O,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRisk {
    pub neighbor_id: i64,
    pub r_s: f64,
    pub r_o: f64,
    pub t_m: f64,
    pub d_m: f64,
    /// Zero when TTC is not evaluated.
    pub ttci: f64,
}

impl PairRisk {
    pub fn risk(&self, kind: RiskKind) -> f64 {
        match kind {
            RiskKind::S => self.r_s,
            RiskKind::O => self.r_o,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineFrame {
    pub frame: i64,
    pub t: f64,
    pub s_risk: f64,
    pub o_risk: f64,
    /// Largest pairwise TTCi.
    pub ttci: f64,
    /// Sorted by neighbor id.
    pub pairs: Vec<PairRisk>,
}

impl TimelineFrame {
    pub fn risk(&self, kind: RiskKind) -> f64 {
        match kind {
            RiskKind::S => self.s_risk,
            RiskKind::O => self.o_risk,
        }
    }

    /// The pair with the largest `max(r_s, r_o)`; ties go to the lower id.
    pub fn top_pair(&self) -> Option<&PairRisk> {
        self.pairs.iter().fold(None, |best: Option<&PairRisk>, p| match best {
            Some(b) if b.r_s.max(b.r_o) >= p.r_s.max(p.r_o) => Some(b),
            _ => Some(p),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTimeline {
    pub vehicle_id: i64,
    /// Seconds between frames.
    pub frame_period: f64,
    pub frames: Vec<TimelineFrame>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineOptions {
    pub perception: Perception,
    /// `None` skips the TTC baseline.
    pub ttc: Option<TtcOptions>,
}

impl Default for TimelineOptions {
    fn default() -> Self {
        Self { perception: Perception::default(), ttc: Some(TtcOptions::default()) }
    }
}

pub fn risk_timeline(
    dataset: &Dataset,
    vehicle_id: i64,
    s_params: &SFieldParams,
    o_params: &OFieldParams,
    options: TimelineOptions,
) -> Result<RiskTimeline> {
    timeline_with_index(dataset, &dataset.frame_index(), vehicle_id, s_params, o_params, options)
}

pub(crate) fn timeline_with_index(
    dataset: &Dataset,
    index: &FrameIndex<'_>,
    vehicle_id: i64,
    s_params: &SFieldParams,
    o_params: &OFieldParams,
    options: TimelineOptions,
) -> Result<RiskTimeline> {
    s_params.validate()?;
    o_params.validate()?;
    let track = dataset.track(vehicle_id)?;
    let mut frames = Vec::with_capacity(track.len());
    for state in track {
        let scene = index.scene(vehicle_id, state.frame, options.perception)?;
        let s = aggregate_subjective(&scene, s_params)?;
        let mut pairs = Vec::with_capacity(scene.neighbors.len());
        for (other, &(_, r_s)) in scene.neighbors.iter().zip(&s.per_vehicle) {
            let o = pair_objective(&scene.ego, other, o_params)?;
            let ttci = match options.ttc {
                Some(opts) => ttc_2d(&scene.ego, other, opts)?.ttci,
                None => 0.0,
            };
            pairs.push(PairRisk { neighbor_id: other.vehicle_id, r_s, r_o: o.risk, t_m: o.cpa.t_m, d_m: o.cpa.d_m, ttci });
        }
        let o_risk = aggregate_objective(&pairs.iter().map(|p| p.r_o).collect::<Vec<_>>())?;
        let ttci = pairs.iter().map(|p| p.ttci).fold(0.0, f64::max);
        frames.push(TimelineFrame { frame: state.frame, t: state.t, s_risk: s.aggregated, o_risk, ttci, pairs });
    }
    Ok(RiskTimeline { vehicle_id, frame_period: dataset.meta.frame_period(), frames })
}
