//! Subjective proximity field.
//!
//! Every entity (vehicle, lane marker, road boundary) contributes a
//! generalized-Gaussian kernel `exp(-|d / gamma|^beta)` scaled to `[0, 1]`.
//! The longitudinal vehicle pair `(gamma_x, beta_x)` depends on the ego's
//! speed through cubic polynomials; everything else is constant.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::trajectory::{gap_vector, GapVector, SceneFrame};

/// Lower clamp on the evaluated longitudinal scale (m).
pub const GAMMA_X_FLOOR: f64 = 0.05;
/// Smallest admissible shape factor.
pub const BETA_FLOOR: f64 = 2.0;

/// Subjective-field parameters. Polynomials are stored lowest power first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SFieldParams {
    pub gamma_x_poly: [f64; 4],
    pub beta_x_poly: [f64; 4],
    pub gamma_y: f64,
    pub beta_y: f64,
    pub gamma_l: f64,
    pub beta_l: f64,
    pub gamma_b: f64,
    pub beta_b: f64,
    pub kappa_l: f64,
    pub kappa_b: f64,
}

impl Default for SFieldParams {
    /// Values calibrated on the full highD dataset.
    fn default() -> Self {
        Self {
            gamma_x_poly: [1.2925, 1.0621, -3.7051e-2, 5.1053e-4],
            beta_x_poly: [3.2589, 9.6673e-3, -1.4834e-3, 2.2214e-5],
            gamma_y: 1.4310,
            beta_y: 4.9956,
            gamma_l: 1.18,
            beta_l: 2.46,
            gamma_b: 1.64,
            beta_b: 5.17,
            kappa_l: 0.25,
            kappa_b: 0.25,
        }
    }
}

impl SFieldParams {
    /// Same parameters with lane-marker and boundary terms switched off.
    pub fn without_lane_terms(&self) -> Self {
        Self { kappa_l: 0.0, kappa_b: 0.0, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, gamma) in [("gamma_y", self.gamma_y), ("gamma_l", self.gamma_l), ("gamma_b", self.gamma_b)] {
            check_scale(name, gamma)?;
        }
        for (name, beta) in [("beta_y", self.beta_y), ("beta_l", self.beta_l), ("beta_b", self.beta_b)] {
            check_shape(name, beta)?;
        }
        for (name, kappa) in [("kappa_l", self.kappa_l), ("kappa_b", self.kappa_b)] {
            if !(0.0..=1.0).contains(&kappa) {
                return Err(Error::invalid(name, format!("{kappa} outside [0, 1]")));
            }
        }
        if self.gamma_x_poly.iter().chain(&self.beta_x_poly).any(|c| !c.is_finite()) {
            return Err(Error::invalid("polynomial", "non-finite coefficient"));
        }
        Ok(())
    }
}

/// Scale and shape factors of the two-dimensional vehicle kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleShape {
    pub gamma_x: f64,
    pub beta_x: f64,
    pub gamma_y: f64,
    pub beta_y: f64,
}

impl VehicleShape {
    pub fn validate(&self) -> Result<()> {
        check_scale("gamma_x", self.gamma_x)?;
        check_scale("gamma_y", self.gamma_y)?;
        check_shape("beta_x", self.beta_x)?;
        check_shape("beta_y", self.beta_y)
    }
}

fn check_scale(name: &'static str, gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("scale {gamma} must be positive")))
    }
}

fn check_shape(name: &'static str, beta: f64) -> Result<()> {
    if beta >= BETA_FLOOR && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("shape {beta} must be >= 2")))
    }
}

/// Horner evaluation, coefficients lowest power first.
pub fn eval_poly(coeffs: &[f64], v: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * v + c)
}

pub fn params_at_velocity(params: &SFieldParams, v: f64) -> Result<VehicleShape> {
    ensure_finite(v, "velocity")?;
    if v < 0.0 {
        return Err(Error::invalid("velocity", format!("{v} is negative")));
    }
    Ok(VehicleShape {
        gamma_x: eval_poly(&params.gamma_x_poly, v).max(GAMMA_X_FLOOR),
        beta_x: eval_poly(&params.beta_x_poly, v).max(BETA_FLOOR),
        gamma_y: params.gamma_y,
        beta_y: params.beta_y,
    })
}

/// `|d / gamma|^beta`, the exponent of one kernel axis.
#[inline]
pub fn kernel_exponent(d: f64, gamma: f64, beta: f64) -> f64 {
    (d.abs() / gamma).powf(beta)
}

pub fn vehicle_proximity_risk(gap: GapVector, shape: &VehicleShape) -> Result<f64> {
    ensure_finite(gap.dx, "dx")?;
    ensure_finite(gap.dy, "dy")?;
    shape.validate()?;
    Ok((-kernel_exponent(gap.dx, shape.gamma_x, shape.beta_x)
        - kernel_exponent(gap.dy, shape.gamma_y, shape.beta_y))
    .exp())
}

fn line_risk(dy: f64, gamma: f64, beta: f64) -> Result<f64> {
    ensure_finite(dy, "dy")?;
    check_scale("gamma", gamma)?;
    check_shape("beta", beta)?;
    Ok((-kernel_exponent(dy, gamma, beta)).exp())
}

/// Risk from a lane marker at lateral distance `dy` from the vehicle center.
pub fn lane_marker_risk(dy: f64, gamma_l: f64, beta_l: f64) -> Result<f64> {
    line_risk(dy, gamma_l, beta_l)
}

/// Risk from a road boundary at lateral distance `dy` from the vehicle center.
pub fn boundary_risk(dy: f64, gamma_b: f64, beta_b: f64) -> Result<f64> {
    line_risk(dy, gamma_b, beta_b)
}

/// `1 - prod(1 - r)`.
pub fn complement_product(risks: impl IntoIterator<Item = f64>) -> f64 {
    1.0 - risks.into_iter().map(|r| 1.0 - r).product::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SFieldRisk {
    pub per_vehicle: Vec<(i64, f64)>,
    pub per_marker: Vec<f64>,
    pub per_boundary: Vec<f64>,
    pub aggregated: f64,
}

/// Aggregated subjective risk of the scene's ego.
///
/// Only the nearest marker on each side of the ego center and the nearest
/// boundary contribute.
pub fn aggregate_subjective(scene: &SceneFrame, params: &SFieldParams) -> Result<SFieldRisk> {
    params.validate()?;
    let ego = &scene.ego;
    let shape = params_at_velocity(params, ego.speed())?;
    let per_vehicle = scene
        .neighbors
        .iter()
        .map(|other| {
            let r = vehicle_proximity_risk(gap_vector(ego, other)?, &shape)?;
            Ok((other.vehicle_id, r))
        })
        .collect::<Result<Vec<_>>>()?;

    let (left, right) = scene.lanes.nearest_markers(ego.y);
    let per_marker = [left, right]
        .into_iter()
        .flatten()
        .map(|m| lane_marker_risk(m - ego.y, params.gamma_l, params.beta_l))
        .collect::<Result<Vec<_>>>()?;
    let per_boundary = scene
        .lanes
        .nearest_boundary(ego.y)
        .map(|b| boundary_risk(b - ego.y, params.gamma_b, params.beta_b))
        .transpose()?
        .into_iter()
        .collect::<Vec<_>>();

    let aggregated = complement_product(
        per_vehicle
            .iter()
            .map(|&(_, r)| r)
            .chain(per_marker.iter().map(|r| params.kappa_l * r))
            .chain(per_boundary.iter().map(|r| params.kappa_b * r)),
    );
    Ok(SFieldRisk { per_vehicle, per_marker, per_boundary, aggregated })
}
