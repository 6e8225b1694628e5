//! The JSON parameter file shared by both fields.
//!
//! ```json
//! {
//!   "s_field": {
//!     "gamma_x_poly": [1.2925, 1.0621, -0.037051, 0.00051053],
//!     "beta_x_poly": [3.2589, 0.0096673, -0.0014834, 0.000022214],
//!     "gamma_y": 1.431, "beta_y": 4.9956,
//!     "gamma_l": 1.18, "beta_l": 2.46,
//!     "gamma_b": 1.64, "beta_b": 5.17,
//!     "kappa_l": 0.25, "kappa_b": 0.25
//!   },
//!   "o_field": { "beta_p": 10.0, "beta_t": 2.0, "t_star": 7.5, "d_star": "half_width_sum" }
//! }
//! ```
//!
//! Polynomial coefficients are listed lowest power first. The objective
//! block also accepts `beta_d`, `gamma_t` and `gamma_d` for `beta_p`,
//! `t_star` and `d_star`; a fixed threshold is written `{"fixed": 2.0}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ofield::OFieldParams;
use crate::sfield::SFieldParams;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamsFile {
    #[serde(default)]
    pub s_field: SFieldParams,
    #[serde(default)]
    pub o_field: OFieldParams,
}

impl ParamsFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let params: Self = serde_json::from_str(text)?;
        params.s_field.validate()?;
        params.o_field.validate()?;
        Ok(params)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }
}
