//! Maximum-likelihood calibration of the subjective field from observed
//! spacings.
//!
//! Every observed spacing is read as a situation the driver tolerated, so
//! the likelihood of a sample is `1 - r`. Shape parameters maximize the
//! joint log-likelihood; scale parameters minimize its second derivative
//! with respect to the scale.

mod bootstrap;
mod fit;
mod infer;
mod optimize;
mod pipeline;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Result};
use crate::ingest::Dataset;
use crate::sfield::{kernel_exponent, VehicleShape};
use crate::trajectory::{gap_vector, Perception};

pub use bootstrap::{bin_by_velocity, bootstrap_bin, BinCriteria, BinResult, BootstrapConfig, CalibrationBin};
pub use fit::{fit_polynomial, fit_velocity_polynomials, VelocityFit};
pub use infer::{
    infer_beta, infer_gamma, infer_line_beta, infer_line_gamma, infer_line_params, infer_params, Axis,
    InferenceOutcome, LineOutcome, LineShape, BETA_RANGE, GAMMA_RANGE,
};
pub use pipeline::{calibrate, BinReport, BinStatus, CalibrationConfig, CalibrationReport};

/// Lower bound on `1 - r` before taking the log.
pub const TOLERANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Vehicle,
    LaneMarker,
    Boundary,
}

/// One observed spacing. For vehicle samples `dx`, `dy` are edge gaps; for
/// lines `dx` is zero and `dy` runs from the ego center to the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacingSample {
    pub dx: f64,
    pub dy: f64,
    pub kind: SampleKind,
    pub ego_velocity: f64,
    /// The ego's id.
    pub vehicle_id: i64,
}

/// Gathers spacing samples from every frame whose number is a multiple of
/// `stride`.
pub fn collect_spacings(dataset: &Dataset, perception: Perception, stride: i64) -> Result<Vec<SpacingSample>> {
    let stride = stride.max(1);
    let index = dataset.frame_index();
    let mut out = Vec::new();
    for (&id, track) in &dataset.tracks {
        for state in track.iter().filter(|s| s.frame % stride == 0) {
            let scene = index.scene(id, state.frame, perception)?;
            let ego = scene.ego;
            let v = ego.speed();
            let sample = |dx, dy, kind| SpacingSample { dx, dy, kind, ego_velocity: v, vehicle_id: id };
            for other in &scene.neighbors {
                let gap = gap_vector(&ego, other)?;
                out.push(sample(gap.dx, gap.dy, SampleKind::Vehicle));
            }
            let (left, right) = scene.lanes.nearest_markers(ego.y);
            for m in [left, right].into_iter().flatten() {
                out.push(sample(0.0, m - ego.y, SampleKind::LaneMarker));
            }
            if let Some(b) = scene.lanes.nearest_boundary(ego.y) {
                out.push(sample(0.0, b - ego.y, SampleKind::Boundary));
            }
        }
    }
    Ok(out)
}

/// `ln(1 - exp(-z))`, floored. Evaluated through `expm1` so that samples
/// near contact keep their precision.
#[inline]
pub(crate) fn log_tolerance(z: f64) -> f64 {
    (-(-z).exp_m1()).max(TOLERANCE_FLOOR).ln()
}

/// Joint log-likelihood of the vehicle samples under `shape`. Samples of
/// other kinds are ignored.
pub fn log_likelihood(samples: &[SpacingSample], shape: &VehicleShape) -> Result<f64> {
    shape.validate()?;
    let mut sum = 0.0;
    for s in samples.iter().filter(|s| s.kind == SampleKind::Vehicle) {
        ensure_finite(s.dx, "dx")?;
        ensure_finite(s.dy, "dy")?;
        let z = kernel_exponent(s.dx, shape.gamma_x, shape.beta_x) + kernel_exponent(s.dy, shape.gamma_y, shape.beta_y);
        sum += log_tolerance(z);
    }
    Ok(sum)
}

/// Joint log-likelihood of the samples of one line kind.
pub fn line_log_likelihood(samples: &[SpacingSample], kind: SampleKind, line: LineShape) -> Result<f64> {
    line.validate()?;
    let mut sum = 0.0;
    for s in samples.iter().filter(|s| s.kind == kind) {
        ensure_finite(s.dy, "dy")?;
        sum += log_tolerance(kernel_exponent(s.dy, line.gamma, line.beta));
    }
    Ok(sum)
}
