use serde::{Deserialize, Serialize};

use super::RiskKind;
use crate::error::{Error, Result};
use crate::ofield::{pair_objective_risk, OFieldParams};
use crate::sfield::{params_at_velocity, vehicle_proximity_risk, SFieldParams};
use crate::trajectory::{GapVector, VehicleState};

/// Risk sampled on a regular grid centered on the ego.
///
/// `xs` and `ys` are offsets from the ego center, symmetric about zero.
/// `values` is row-major: `values[i * xs.len() + j]` belongs to
/// `(xs[j], ys[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

impl FieldGrid {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.xs.len() + col]
    }
}

fn axis(extent: f64, resolution: f64) -> Vec<f64> {
    let n = (0.5 * extent / resolution + 1e-9).floor() as i64;
    (-n..=n).map(|k| k as f64 * resolution).collect()
}

/// Rasterizes one field around `ego` over `extent = (length, width)` meters.
///
/// The S-field grid holds the risk the ego perceives from a point at each
/// cell, with gaps measured from the ego's box. The O-field grid holds the
/// risk `other` imposes on a copy of the ego moved to each cell.
pub fn rasterize_field(
    ego: &VehicleState,
    field: RiskKind,
    s_params: &SFieldParams,
    o_params: &OFieldParams,
    other: Option<&VehicleState>,
    extent: (f64, f64),
    resolution: f64,
) -> Result<FieldGrid> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::invalid("resolution", format!("{resolution} must be positive")));
    }
    if !(extent.0 >= resolution && extent.1 >= resolution && extent.0.is_finite() && extent.1.is_finite()) {
        return Err(Error::DegenerateExtent(extent.0, extent.1));
    }
    let xs = axis(extent.0, resolution);
    let ys = axis(extent.1, resolution);
    let mut values = Vec::with_capacity(xs.len() * ys.len());
    match field {
        RiskKind::S => {
            let shape = params_at_velocity(s_params, ego.speed())?;
            let (hl, hw) = (0.5 * ego.length, 0.5 * ego.width);
            for &y in &ys {
                for &x in &xs {
                    let gap = GapVector { dx: (x.abs() - hl).max(0.0), dy: (y.abs() - hw).max(0.0) };
                    values.push(vehicle_proximity_risk(gap, &shape)?);
                }
            }
        }
        RiskKind::O => {
            let other = other.ok_or_else(|| Error::invalid("other", "the O-field needs an influencing vehicle"))?;
            o_params.validate()?;
            let other = VehicleState { frame: ego.frame, ..*other };
            for &y in &ys {
                for &x in &xs {
                    let probe = VehicleState { x: ego.x + x, y: ego.y + y, ..*ego };
                    values.push(pair_objective_risk(&probe, &other, o_params)?);
                }
            }
        }
    }
    Ok(FieldGrid { xs, ys, values })
}
