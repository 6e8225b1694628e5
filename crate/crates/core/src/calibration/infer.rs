use serde::{Deserialize, Serialize};

use super::optimize::{linear_grid, log_grid, minimize};
use super::{log_tolerance, SampleKind, SpacingSample};
use crate::error::{Error, Result};
use crate::sfield::{kernel_exponent, VehicleShape, BETA_FLOOR};

/// Search interval for shape parameters.
pub const BETA_RANGE: (f64, f64) = (2.0, 20.0);
/// Search interval for scale parameters (m).
pub const GAMMA_RANGE: (f64, f64) = (0.05, 200.0);

const BETA_GRID_STEP: f64 = 0.25;
const GAMMA_GRID_POINTS: usize = 400;
const SEARCH_TOL: f64 = 1e-5;
const MAX_SWEEPS: usize = 20;
const REL_CHANGE: f64 = 1e-3;
/// Samples whose fixed exponent exceeds this carry `r < e^-40`.
const NEGLIGIBLE_EXPONENT: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Longitudinal,
    Lateral,
}

/// Scale and shape of a one-dimensional line kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineShape {
    pub gamma: f64,
    pub beta: f64,
}

impl LineShape {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("scale {} must be positive", self.gamma)));
        }
        if !(self.beta >= BETA_FLOOR && self.beta.is_finite()) {
            return Err(Error::invalid("beta", format!("shape {} must be >= 2", self.beta)));
        }
        Ok(())
    }
}

/// The per-axis view of a sample set: log distances along the free axis,
/// the fixed exponent contributed by the other axis, and a weight.
///
/// Samples at zero distance contribute a constant and are dropped, as are
/// samples whose risk is negligible whatever the free parameters.
struct AxisObjective {
    ln_d: Vec<f64>,
    offset: Vec<f64>,
    w: Vec<f64>,
}

impl AxisObjective {
    fn new(items: impl Iterator<Item = (f64, f64, f64)>) -> Self {
        let mut obj = AxisObjective { ln_d: Vec::new(), offset: Vec::new(), w: Vec::new() };
        for (d, offset, w) in items {
            if d != 0.0 && offset <= NEGLIGIBLE_EXPONENT {
                obj.ln_d.push(d.abs().ln());
                obj.offset.push(offset);
                obj.w.push(w);
            }
        }
        obj
    }

    fn vehicle(samples: &[(SpacingSample, f64)], shape: &VehicleShape, axis: Axis) -> Self {
        Self::new(samples.iter().map(|(s, w)| match axis {
            Axis::Longitudinal => (s.dx, kernel_exponent(s.dy, shape.gamma_y, shape.beta_y), *w),
            Axis::Lateral => (s.dy, kernel_exponent(s.dx, shape.gamma_x, shape.beta_x), *w),
        }))
    }

    fn line(samples: &[(SpacingSample, f64)]) -> Self {
        Self::new(samples.iter().map(|(s, w)| (s.dy, 0.0, *w)))
    }

    fn log_likelihood(&self, gamma: f64, beta: f64) -> f64 {
        let ln_gamma = gamma.ln();
        let mut sum = 0.0;
        for i in 0..self.ln_d.len() {
            let z = (beta * (self.ln_d[i] - ln_gamma)).exp() + self.offset[i];
            sum += self.w[i] * log_tolerance(z);
        }
        sum
    }

    fn curvature(&self, gamma: f64, beta: f64) -> f64 {
        let h = fd_step(gamma);
        (self.log_likelihood(gamma + h, beta) - 2.0 * self.log_likelihood(gamma, beta)
            + self.log_likelihood(gamma - h, beta))
            / (h * h)
    }

    fn best_beta(&self, gamma: f64) -> f64 {
        let grid = linear_grid(BETA_RANGE.0, BETA_RANGE.1, BETA_GRID_STEP);
        minimize(&grid, SEARCH_TOL, |beta| -self.log_likelihood(gamma, beta))
    }

    fn best_gamma(&self, beta: f64) -> f64 {
        let grid = log_grid(GAMMA_RANGE.0, GAMMA_RANGE.1, GAMMA_GRID_POINTS);
        minimize(&grid, SEARCH_TOL, |gamma| self.curvature(gamma, beta))
    }
}

/// Central-difference step for the second derivative in the scale.
pub(crate) fn fd_step(gamma: f64) -> f64 {
    (0.01 * gamma).max(0.01)
}

fn vehicle_samples(samples: &[SpacingSample]) -> Result<Vec<(SpacingSample, f64)>> {
    let out: Vec<_> = samples.iter().filter(|s| s.kind == SampleKind::Vehicle).map(|s| (*s, 1.0)).collect();
    if out.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(out)
}

fn line_samples(samples: &[SpacingSample], kind: SampleKind) -> Result<Vec<(SpacingSample, f64)>> {
    let out: Vec<_> = samples.iter().filter(|s| s.kind == kind).map(|s| (*s, 1.0)).collect();
    if out.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(out)
}

fn gamma_of(shape: &VehicleShape, axis: Axis) -> f64 {
    match axis {
        Axis::Longitudinal => shape.gamma_x,
        Axis::Lateral => shape.gamma_y,
    }
}

fn beta_of(shape: &VehicleShape, axis: Axis) -> f64 {
    match axis {
        Axis::Longitudinal => shape.beta_x,
        Axis::Lateral => shape.beta_y,
    }
}

/// Shape on `axis` maximizing the vehicle log-likelihood, every other
/// parameter held at `shape`. Returns a value in [`BETA_RANGE`]; a flat
/// objective gives the lower end.
pub fn infer_beta(samples: &[SpacingSample], shape: &VehicleShape, axis: Axis) -> Result<f64> {
    shape.validate()?;
    let pool = vehicle_samples(samples)?;
    Ok(AxisObjective::vehicle(&pool, shape, axis).best_beta(gamma_of(shape, axis)))
}

/// Scale on `axis` minimizing the second derivative of the vehicle
/// log-likelihood with respect to that scale. Returns a value in
/// [`GAMMA_RANGE`].
pub fn infer_gamma(samples: &[SpacingSample], shape: &VehicleShape, axis: Axis) -> Result<f64> {
    shape.validate()?;
    let pool = vehicle_samples(samples)?;
    Ok(AxisObjective::vehicle(&pool, shape, axis).best_gamma(beta_of(shape, axis)))
}

pub fn infer_line_beta(samples: &[SpacingSample], kind: SampleKind, gamma: f64) -> Result<f64> {
    LineShape { gamma, beta: BETA_FLOOR }.validate()?;
    Ok(AxisObjective::line(&line_samples(samples, kind)?).best_beta(gamma))
}

pub fn infer_line_gamma(samples: &[SpacingSample], kind: SampleKind, beta: f64) -> Result<f64> {
    LineShape { gamma: 1.0, beta }.validate()?;
    Ok(AxisObjective::line(&line_samples(samples, kind)?).best_gamma(beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceOutcome {
    pub shape: VehicleShape,
    pub sweeps: usize,
    pub converged: bool,
    /// Every sample had zero lateral gap; the lateral pair stays at its
    /// lower bounds.
    pub lateral_degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineOutcome {
    pub shape: LineShape,
    pub sweeps: usize,
    pub converged: bool,
}

/// Lower weighted median of `|d|`, clamped into [`GAMMA_RANGE`].
fn start_gamma(values: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut v: Vec<(f64, f64)> = values.map(|(d, w)| (d.abs(), w)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = v.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    let mut median = 0.0;
    for (d, w) in v {
        acc += w;
        if acc >= 0.5 * total {
            median = d;
            break;
        }
    }
    median.clamp(GAMMA_RANGE.0, GAMMA_RANGE.1)
}

fn settled(old: f64, new: f64) -> bool {
    (new - old).abs() <= REL_CHANGE * old.abs()
}

/// Alternating inference of the vehicle kernel, sweeping
/// `gamma_x, beta_x, gamma_y, beta_y`. Only vehicle samples are used.
pub fn infer_params(samples: &[SpacingSample]) -> Result<InferenceOutcome> {
    infer_weighted(&vehicle_samples(samples)?)
}

pub(crate) fn infer_weighted(pool: &[(SpacingSample, f64)]) -> Result<InferenceOutcome> {
    if pool.is_empty() {
        return Err(Error::EmptySamples);
    }
    let lateral_degenerate = pool.iter().all(|(s, _)| s.dy == 0.0);
    let mut shape = VehicleShape {
        gamma_x: start_gamma(pool.iter().map(|(s, w)| (s.dx, *w))),
        beta_x: BETA_RANGE.0,
        gamma_y: if lateral_degenerate { GAMMA_RANGE.0 } else { start_gamma(pool.iter().map(|(s, w)| (s.dy, *w))) },
        beta_y: BETA_RANGE.0,
    };
    for sweep in 1..=MAX_SWEEPS {
        let prev = shape;
        shape.gamma_x = AxisObjective::vehicle(pool, &shape, Axis::Longitudinal).best_gamma(shape.beta_x);
        shape.beta_x = AxisObjective::vehicle(pool, &shape, Axis::Longitudinal).best_beta(shape.gamma_x);
        if !lateral_degenerate {
            shape.gamma_y = AxisObjective::vehicle(pool, &shape, Axis::Lateral).best_gamma(shape.beta_y);
            shape.beta_y = AxisObjective::vehicle(pool, &shape, Axis::Lateral).best_beta(shape.gamma_y);
        }
        let done = settled(prev.gamma_x, shape.gamma_x)
            && settled(prev.beta_x, shape.beta_x)
            && settled(prev.gamma_y, shape.gamma_y)
            && settled(prev.beta_y, shape.beta_y);
        if done {
            return Ok(InferenceOutcome { shape, sweeps: sweep, converged: true, lateral_degenerate });
        }
    }
    Ok(InferenceOutcome { shape, sweeps: MAX_SWEEPS, converged: false, lateral_degenerate })
}

/// Alternating inference of one line kernel from all samples of `kind`.
pub fn infer_line_params(samples: &[SpacingSample], kind: SampleKind) -> Result<LineOutcome> {
    let pool = line_samples(samples, kind)?;
    let objective = AxisObjective::line(&pool);
    let mut shape = LineShape { gamma: start_gamma(pool.iter().map(|(s, w)| (s.dy, *w))), beta: BETA_RANGE.0 };
    for sweep in 1..=MAX_SWEEPS {
        let prev = shape;
        shape.gamma = objective.best_gamma(shape.beta);
        shape.beta = objective.best_beta(shape.gamma);
        if settled(prev.gamma, shape.gamma) && settled(prev.beta, shape.beta) {
            return Ok(LineOutcome { shape, sweeps: sweep, converged: true });
        }
    }
    Ok(LineOutcome { shape, sweeps: MAX_SWEEPS, converged: false })
}
