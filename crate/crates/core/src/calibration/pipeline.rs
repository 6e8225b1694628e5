use serde::{Deserialize, Serialize};

use super::bootstrap::{bin_by_velocity, bootstrap_bin, BinCriteria, BinResult, BootstrapConfig};
use super::fit::{fit_velocity_polynomials, VelocityFit};
use super::infer::{infer_line_params, LineOutcome};
use super::{collect_spacings, SampleKind, SpacingSample};
use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::sfield::SFieldParams;
use crate::trajectory::Perception;

/// Vehicle ids of pooled recordings become `recording_id * ID_STRIDE + id`.
const ID_STRIDE: i64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub perception: Perception,
    /// Use every `stride`-th frame.
    pub stride: i64,
    pub criteria: BinCriteria,
    pub bootstrap: BootstrapConfig,
    pub degree: usize,
    /// Lane-term weights copied into the output.
    pub kappa_l: f64,
    pub kappa_b: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        let base = SFieldParams::default();
        Self {
            perception: Perception::default(),
            stride: 1,
            criteria: BinCriteria::default(),
            bootstrap: BootstrapConfig::default(),
            degree: 3,
            kappa_l: base.kappa_l,
            kappa_b: base.kappa_b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinStatus {
    Fitted,
    /// At least one bootstrap iteration hit the sweep limit.
    NotConverged,
    TooFewSamples,
    TooFewVehicles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinReport {
    pub velocity: i64,
    pub n_samples: usize,
    pub n_vehicles: usize,
    pub status: BinStatus,
    pub result: Option<BinResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub params: SFieldParams,
    pub fit: VelocityFit,
    pub bins: Vec<BinReport>,
    pub lane_marker: LineOutcome,
    pub boundary: LineOutcome,
    pub n_samples: usize,
}

/// Pools spacing samples from all recordings and runs the full protocol:
/// velocity bins, bootstrap per sufficient bin, polynomial fit, and line
/// kernels from the pooled line samples.
///
/// Bins whose iterations did not all converge still enter the fit; their
/// status records it.
pub fn calibrate(datasets: &[Dataset], config: &CalibrationConfig) -> Result<CalibrationReport> {
    let mut samples: Vec<SpacingSample> = Vec::new();
    for ds in datasets {
        let offset = ds.meta.recording_id * ID_STRIDE;
        samples.extend(
            collect_spacings(ds, config.perception, config.stride)?
                .into_iter()
                .map(|s| SpacingSample { vehicle_id: offset + s.vehicle_id, ..s }),
        );
    }
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }

    let mut bins = Vec::new();
    let mut results = Vec::new();
    for bin in bin_by_velocity(&samples, config.criteria) {
        let mut report =
            BinReport { velocity: bin.velocity, n_samples: bin.samples.len(), n_vehicles: bin.n_vehicles, status: BinStatus::Fitted, result: None };
        if bin.samples.len() < config.criteria.min_samples {
            report.status = BinStatus::TooFewSamples;
        } else if bin.n_vehicles < config.criteria.min_vehicles {
            report.status = BinStatus::TooFewVehicles;
        } else {
            let r = bootstrap_bin(&bin, config.bootstrap)?;
            if r.converged_iterations < r.n_iterations {
                report.status = BinStatus::NotConverged;
            }
            results.push(r.clone());
            report.result = Some(r);
        }
        bins.push(report);
    }

    let fit = fit_velocity_polynomials(&results, config.degree)?;
    let lane_marker = infer_line_params(&samples, SampleKind::LaneMarker)?;
    let boundary = infer_line_params(&samples, SampleKind::Boundary)?;
    let params = SFieldParams {
        gamma_x_poly: VelocityFit::cubic(&fit.gamma_x_poly)?,
        beta_x_poly: VelocityFit::cubic(&fit.beta_x_poly)?,
        gamma_y: fit.gamma_y,
        beta_y: fit.beta_y,
        gamma_l: lane_marker.shape.gamma,
        beta_l: lane_marker.shape.beta,
        gamma_b: boundary.shape.gamma,
        beta_b: boundary.shape.beta,
        kappa_l: config.kappa_l,
        kappa_b: config.kappa_b,
    };
    Ok(CalibrationReport { params, fit, bins, lane_marker, boundary, n_samples: samples.len() })
}
