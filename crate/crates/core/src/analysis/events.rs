use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{RiskKind, RiskTimeline};
use crate::error::{Error, Result};

/// A maximal run of consecutive frames in which one neighbor's pairwise
/// risk stays at or above the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEvent {
    pub vehicle_id: i64,
    pub source_id: i64,
    pub kind: RiskKind,
    pub onset_frame: i64,
    pub onset_t: f64,
    pub peak: f64,
    pub peak_t: f64,
    /// Number of frames times the frame period.
    pub duration: f64,
    /// Per-frame `(frame, t, risk)` over the run.
    pub series: Vec<(i64, f64, f64)>,
}

/// Events per source, ordered by source id then onset. Runs shorter than
/// `min_duration` are dropped.
pub fn detect_events(
    timeline: &RiskTimeline,
    kind: RiskKind,
    threshold: f64,
    min_duration: f64,
) -> Result<Vec<ThresholdEvent>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid("threshold", format!("{threshold} must lie in (0, 1)")));
    }
    let mut series: BTreeMap<i64, Vec<(i64, f64, f64)>> = BTreeMap::new();
    for f in &timeline.frames {
        for p in &f.pairs {
            series.entry(p.neighbor_id).or_default().push((f.frame, f.t, p.risk(kind)));
        }
    }
    let mut events = Vec::new();
    for (source_id, points) in series {
        let mut run: Vec<(i64, f64, f64)> = Vec::new();
        let mut flush = |run: &mut Vec<(i64, f64, f64)>| {
            if run.is_empty() {
                return;
            }
            let duration = run.len() as f64 * timeline.frame_period;
            if duration >= min_duration {
                let peak = run.iter().copied().fold(run[0], |best, p| if p.2 > best.2 { p } else { best });
                events.push(ThresholdEvent {
                    vehicle_id: timeline.vehicle_id,
                    source_id,
                    kind,
                    onset_frame: run[0].0,
                    onset_t: run[0].1,
                    peak: peak.2,
                    peak_t: peak.1,
                    duration,
                    series: std::mem::take(run),
                });
            }
            run.clear();
        };
        for p in points {
            let contiguous = run.last().is_none_or(|last| last.0 + 1 == p.0);
            if p.2 >= threshold && contiguous {
                run.push(p);
            } else {
                flush(&mut run);
                if p.2 >= threshold {
                    run.push(p);
                }
            }
        }
        flush(&mut run);
    }
    Ok(events)
}
