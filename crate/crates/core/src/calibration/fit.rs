use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::BinResult;
use crate::error::{Error, Result};

/// Ordinary least-squares polynomial, coefficients lowest power first.
///
/// Abscissae are scaled by their largest magnitude before the solve to keep
/// the Vandermonde matrix well conditioned.
pub fn fit_polynomial(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("ys", format!("{} values for {} abscissae", ys.len(), xs.len())));
    }
    if xs.len() < degree + 1 {
        return Err(Error::TooFewBins { needed: degree + 1, got: xs.len(), degree });
    }
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let a = DMatrix::from_fn(xs.len(), degree + 1, |i, j| (xs[i] / scale).powi(j as i32));
    let b = DVector::from_column_slice(ys);
    let coeffs = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::invalid("xs", format!("least squares failed: {e}")))?;
    Ok(coeffs.iter().enumerate().map(|(k, c)| c / scale.powi(k as i32)).collect())
}

/// Velocity dependence of the vehicle kernel fitted across bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityFit {
    pub gamma_x_poly: Vec<f64>,
    pub beta_x_poly: Vec<f64>,
    /// Unweighted mean across bins.
    pub gamma_y: f64,
    /// Unweighted mean across bins.
    pub beta_y: f64,
}

impl VelocityFit {
    /// Coefficients padded to the cubic layout of the parameter file.
    pub fn cubic(poly: &[f64]) -> Result<[f64; 4]> {
        if poly.len() > 4 {
            return Err(Error::invalid("degree", format!("{} exceeds 3", poly.len() - 1)));
        }
        let mut out = [0.0; 4];
        out[..poly.len()].copy_from_slice(poly);
        Ok(out)
    }
}

pub fn fit_velocity_polynomials(results: &[BinResult], degree: usize) -> Result<VelocityFit> {
    if results.len() < degree + 1 {
        return Err(Error::TooFewBins { needed: degree + 1, got: results.len(), degree });
    }
    let v: Vec<f64> = results.iter().map(|r| r.velocity as f64).collect();
    let col = |f: fn(&BinResult) -> f64| results.iter().map(f).collect::<Vec<f64>>();
    let n = results.len() as f64;
    Ok(VelocityFit {
        gamma_x_poly: fit_polynomial(&v, &col(|r| r.gamma_x), degree)?,
        beta_x_poly: fit_polynomial(&v, &col(|r| r.beta_x), degree)?,
        gamma_y: col(|r| r.gamma_y).iter().sum::<f64>() / n,
        beta_y: col(|r| r.beta_y).iter().sum::<f64>() / n,
    })
}
