//! Objective collision field.
//!
//! Under constant relative velocity the future center distance is
//! `|D + V t|`. The closest point of approach gives a predicted minimum
//! distance `d_m` and the time `t_m` at which it is reached; pair risk is
//! `exp(-(d_m / d*)^beta_p) * exp(-(t_m / t*)^beta_t)`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::sfield::complement_product;
use crate::trajectory::{center_vector, VehicleState};

/// How the collision distance threshold `d*` is chosen for a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionDistance {
    /// Half the sum of both vehicle widths.
    HalfWidthSum,
    /// A fixed threshold in meters.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OFieldParams {
    #[serde(alias = "beta_d")]
    pub beta_p: f64,
    pub beta_t: f64,
    #[serde(alias = "gamma_t")]
    pub t_star: f64,
    #[serde(alias = "gamma_d", alias = "d_star_rule")]
    pub d_star: CollisionDistance,
}

impl Default for OFieldParams {
    fn default() -> Self {
        Self { beta_p: 10.0, beta_t: 2.0, t_star: 7.5, d_star: CollisionDistance::HalfWidthSum }
    }
}

impl OFieldParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_p >= 1.0) {
            return Err(Error::invalid("beta_p", format!("{} must be >= 1", self.beta_p)));
        }
        if !(self.beta_t >= 1.0) {
            return Err(Error::invalid("beta_t", format!("{} must be >= 1", self.beta_t)));
        }
        if !(self.t_star > 0.0 && self.t_star.is_finite()) {
            return Err(Error::invalid("t_star", format!("{} must be positive", self.t_star)));
        }
        if let CollisionDistance::Fixed(d) = self.d_star {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::invalid("d_star", format!("{d} must be positive")));
            }
        }
        Ok(())
    }

    pub fn collision_distance(&self, ego: &VehicleState, other: &VehicleState) -> f64 {
        match self.d_star {
            CollisionDistance::HalfWidthSum => 0.5 * (ego.width + other.width),
            CollisionDistance::Fixed(d) => d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpaRegime {
    /// Centers coincide now.
    Overlap,
    Approaching,
    /// Distance is not decreasing; never reaches a closest point ahead.
    Receding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpaResult {
    pub t_m: f64,
    pub d_m: f64,
    pub regime: CpaRegime,
}

/// Closest point of approach for relative position `d` and velocity `v`.
pub fn cpa(d: (f64, f64), v: (f64, f64)) -> Result<CpaResult> {
    for (value, what) in [(d.0, "dx"), (d.1, "dy"), (v.0, "dvx"), (v.1, "dvy")] {
        ensure_finite(value, what)?;
    }
    if d.0 == 0.0 && d.1 == 0.0 {
        return Ok(CpaResult { t_m: 0.0, d_m: 0.0, regime: CpaRegime::Overlap });
    }
    let dot = d.0 * v.0 + d.1 * v.1;
    if dot < 0.0 {
        let speed_sq = v.0 * v.0 + v.1 * v.1;
        let cross = d.0 * v.1 - d.1 * v.0;
        Ok(CpaResult {
            t_m: -dot / speed_sq,
            d_m: cross.abs() / speed_sq.sqrt(),
            regime: CpaRegime::Approaching,
        })
    } else {
        Ok(CpaResult { t_m: f64::INFINITY, d_m: f64::INFINITY, regime: CpaRegime::Receding })
    }
}

pub fn spatial_factor(d_m: f64, d_star: f64, beta_p: f64) -> f64 {
    (-(d_m / d_star).powf(beta_p)).exp()
}

pub fn temporal_factor(t_m: f64, t_star: f64, beta_t: f64) -> f64 {
    (-(t_m / t_star).powf(beta_t)).exp()
}

/// Pair risk together with the closest-point quantities behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairObjective {
    pub risk: f64,
    pub cpa: CpaResult,
    pub d_star: f64,
}

pub fn pair_objective(
    ego: &VehicleState,
    other: &VehicleState,
    params: &OFieldParams,
) -> Result<PairObjective> {
    let motion = center_vector(ego, other)?;
    let cpa = cpa(motion.distance(), motion.velocity())?;
    let d_star = params.collision_distance(ego, other);
    let risk = match cpa.regime {
        CpaRegime::Overlap => 1.0,
        CpaRegime::Receding => 0.0,
        CpaRegime::Approaching => {
            spatial_factor(cpa.d_m, d_star, params.beta_p)
                * temporal_factor(cpa.t_m, params.t_star, params.beta_t)
        }
    };
    Ok(PairObjective { risk, cpa, d_star })
}

pub fn pair_objective_risk(
    ego: &VehicleState,
    other: &VehicleState,
    params: &OFieldParams,
) -> Result<f64> {
    Ok(pair_objective(ego, other, params)?.risk)
}

/// Probability of colliding with any neighbor, `1 - prod(1 - r)`.
pub fn aggregate_objective(pair_risks: &[f64]) -> Result<f64> {
    if let Some(&bad) = pair_risks.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::RiskOutOfRange(bad));
    }
    Ok(complement_product(pair_risks.iter().copied()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::state;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const E_INV: f64 = 0.36787944117144233;

    #[test]
    fn cpa_examples() {
        let head_on = cpa((20.0, 0.0), (-5.0, 0.0)).unwrap();
        assert_eq!((head_on.t_m, head_on.d_m, head_on.regime), (4.0, 0.0, CpaRegime::Approaching));

        let offset = cpa((10.0, 5.0), (-5.0, 0.0)).unwrap();
        assert_abs_diff_eq!(offset.t_m, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(offset.d_m, 5.0, epsilon = 1e-12);

        let away = cpa((10.0, 0.0), (2.0, 0.0)).unwrap();
        assert_eq!(away.regime, CpaRegime::Receding);
        assert!(away.t_m.is_infinite() && away.d_m.is_infinite());

        let still = cpa((10.0, 0.0), (0.0, 0.0)).unwrap();
        assert_eq!(still.regime, CpaRegime::Receding);

        let same = cpa((0.0, 0.0), (3.0, 1.0)).unwrap();
        assert_eq!((same.t_m, same.d_m, same.regime), (0.0, 0.0, CpaRegime::Overlap));

        assert!(cpa((f64::NAN, 0.0), (1.0, 0.0)).is_err());
    }

    #[test]
    fn factor_limits() {
        assert_eq!(spatial_factor(0.0, 2.0, 10.0), 1.0);
        assert_abs_diff_eq!(spatial_factor(2.0, 2.0, 10.0), E_INV, epsilon = 1e-15);
        assert_eq!(spatial_factor(f64::INFINITY, 2.0, 10.0), 0.0);
        assert_eq!(temporal_factor(0.0, 7.5, 2.0), 1.0);
        assert_abs_diff_eq!(temporal_factor(7.5, 7.5, 2.0), E_INV, epsilon = 1e-15);
        assert_eq!(temporal_factor(f64::INFINITY, 7.5, 2.0), 0.0);
    }

    #[test]
    fn pair_risk_examples() {
        let p = OFieldParams::default();
        let ego = state(1, 100.0, 0.0, 30.0);
        assert_eq!(pair_objective_risk(&ego, &ego, &p).unwrap(), 1.0);
        assert_eq!(pair_objective_risk(&ego, &state(2, 120.0, 0.0, 35.0), &p).unwrap(), 0.0);
        // exp(-(4/7.5)^2) at 50 digits
        let r = pair_objective_risk(&ego, &state(2, 120.0, 0.0, 25.0), &p).unwrap();
        assert_abs_diff_eq!(r, 0.7524321560893032, epsilon = 1e-12);

        let fixed = OFieldParams { d_star: CollisionDistance::Fixed(3.0), ..p };
        let o = pair_objective(&ego, &state(2, 120.0, 3.0, 25.0), &fixed).unwrap();
        assert_eq!(o.d_star, 3.0);
        assert_abs_diff_eq!(o.risk, E_INV * 0.7524321560893032, epsilon = 1e-12);
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate_objective(&[]).unwrap(), 0.0);
        assert_eq!(aggregate_objective(&[0.3, 1.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(aggregate_objective(&[0.5, 0.5]).unwrap(), 0.75, epsilon = 1e-15);
        assert!(matches!(aggregate_objective(&[1.2]), Err(Error::RiskOutOfRange(_))));
    }

    #[test]
    fn params_accept_both_symbol_sets() {
        let a: OFieldParams =
            serde_json::from_str(r#"{"beta_d":10,"beta_t":2,"gamma_t":7.5,"gamma_d":"half_width_sum"}"#)
                .unwrap();
        assert_eq!(a, OFieldParams::default());
        let b: OFieldParams =
            serde_json::from_str(r#"{"beta_p":8,"beta_t":2,"t_star":5,"d_star":{"fixed":2.5}}"#).unwrap();
        assert_eq!(b.d_star, CollisionDistance::Fixed(2.5));
        assert!(OFieldParams { t_star: 0.0, ..b }.validate().is_err());
    }

    proptest! {
        #[test]
        fn pair_risk_symmetric(
            x in -80.0..80.0f64, y in -8.0..8.0f64, vx in 0.0..40.0f64, vy in -2.0..2.0f64,
        ) {
            let p = OFieldParams::default();
            let ego = state(1, 0.0, 0.0, 25.0);
            let other = crate::trajectory::VehicleState { vy, ..state(2, x, y, vx) };
            let ab = pair_objective(&ego, &other, &p).unwrap();
            let ba = pair_objective(&other, &ego, &p).unwrap();
            prop_assert_eq!(ab.cpa.regime, ba.cpa.regime);
            prop_assert!((ab.risk - ba.risk).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab.risk));
        }
    }
}
