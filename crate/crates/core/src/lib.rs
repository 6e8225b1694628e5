//! Composite safety potential field for highway driving-risk assessment.
//!
//! * [`sfield`]: subjective proximity risk from vehicles, lane markers and
//!   road boundaries.
//! * [`ofield`]: objective collision risk from the closest point of approach.
//! * [`calibration`]: inference of subjective-field parameters from spacing
//!   data.
//! * [`baselines`]: two-dimensional TTC / TTCi.
//! * [`analysis`]: risk timelines, threshold events, behavior responses and
//!   field rasters.

pub mod analysis;
pub mod baselines;
pub mod calibration;
pub mod error;
pub mod ingest;
pub mod ofield;
pub mod params;
pub mod sfield;
pub mod trajectory;

pub use error::{Error, Result};
