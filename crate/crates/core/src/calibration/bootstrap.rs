use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::infer::infer_weighted;
use super::{SampleKind, SpacingSample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinCriteria {
    pub min_samples: usize,
    pub min_vehicles: usize,
}

impl Default for BinCriteria {
    fn default() -> Self {
        Self { min_samples: 500, min_vehicles: 10 }
    }
}

/// Vehicle samples whose ego velocity rounds to `velocity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub velocity: i64,
    pub samples: Vec<SpacingSample>,
    pub n_vehicles: usize,
    pub sufficient: bool,
}

/// Groups vehicle samples by `floor(ego_velocity + 0.5)`, ascending.
pub fn bin_by_velocity(samples: &[SpacingSample], criteria: BinCriteria) -> Vec<CalibrationBin> {
    let mut groups: BTreeMap<i64, Vec<SpacingSample>> = BTreeMap::new();
    for s in samples.iter().filter(|s| s.kind == SampleKind::Vehicle && s.ego_velocity.is_finite()) {
        groups.entry((s.ego_velocity + 0.5).floor() as i64).or_default().push(*s);
    }
    groups
        .into_iter()
        .map(|(velocity, samples)| {
            let n_vehicles = samples.iter().map(|s| s.vehicle_id).collect::<BTreeSet<_>>().len();
            let sufficient = samples.len() >= criteria.min_samples && n_vehicles >= criteria.min_vehicles;
            CalibrationBin { velocity, samples, n_vehicles, sufficient }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_iter: usize,
    pub frac: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { n_iter: 20, frac: 0.85, seed: 0 }
    }
}

impl BootstrapConfig {
    pub fn draws(&self, n_vehicles: usize) -> usize {
        (self.frac * n_vehicles as f64).ceil() as usize
    }

    /// Generator of one iteration: keyed by the seed, with the bin velocity
    /// and iteration index selecting the stream.
    fn rng(&self, velocity: i64, iteration: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((velocity as u64) << 32) ^ iteration as u64);
        rng
    }
}

/// Means and sample standard deviations of the bootstrap estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinResult {
    pub velocity: i64,
    pub gamma_x: f64,
    pub beta_x: f64,
    pub gamma_y: f64,
    pub beta_y: f64,
    pub std_gamma_x: f64,
    pub std_beta_x: f64,
    pub std_gamma_y: f64,
    pub std_beta_y: f64,
    pub n_iterations: usize,
    pub draws_per_iteration: usize,
    pub n_samples: usize,
    pub n_vehicles: usize,
    pub converged_iterations: usize,
    pub lateral_degenerate_iterations: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Resamples vehicles with replacement and reruns the inference on each
/// draw. A vehicle drawn `k` times enters the likelihood with weight `k`.
pub fn bootstrap_bin(bin: &CalibrationBin, config: BootstrapConfig) -> Result<BinResult> {
    if !bin.sufficient || bin.samples.is_empty() {
        return Err(Error::InsufficientBin {
            velocity: bin.velocity,
            samples: bin.samples.len(),
            vehicles: bin.n_vehicles,
        });
    }
    if config.n_iter == 0 || !(config.frac > 0.0) {
        return Err(Error::invalid("bootstrap", "needs n_iter > 0 and frac > 0"));
    }
    let mut by_vehicle: BTreeMap<i64, Vec<SpacingSample>> = BTreeMap::new();
    for s in &bin.samples {
        by_vehicle.entry(s.vehicle_id).or_default().push(*s);
    }
    let ids: Vec<i64> = by_vehicle.keys().copied().collect();
    let draws = config.draws(ids.len());

    let mut estimates: [Vec<f64>; 4] = Default::default();
    let (mut converged, mut degenerate) = (0, 0);
    for iteration in 0..config.n_iter {
        let mut rng = config.rng(bin.velocity, iteration);
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for _ in 0..draws {
            *counts.entry(ids[rng.random_range(0..ids.len())]).or_default() += 1;
        }
        let pool: Vec<(SpacingSample, f64)> = counts
            .iter()
            .flat_map(|(id, &k)| by_vehicle[id].iter().map(move |s| (*s, k as f64)))
            .collect();
        let out = infer_weighted(&pool)?;
        converged += usize::from(out.converged);
        degenerate += usize::from(out.lateral_degenerate);
        for (slot, v) in estimates.iter_mut().zip([out.shape.gamma_x, out.shape.beta_x, out.shape.gamma_y, out.shape.beta_y]) {
            slot.push(v);
        }
    }
    let [(gamma_x, std_gamma_x), (beta_x, std_beta_x), (gamma_y, std_gamma_y), (beta_y, std_beta_y)] =
        estimates.map(|v| mean_std(&v));
    Ok(BinResult {
        velocity: bin.velocity,
        gamma_x,
        beta_x,
        gamma_y,
        beta_y,
        std_gamma_x,
        std_beta_x,
        std_gamma_y,
        std_beta_y,
        n_iterations: config.n_iter,
        draws_per_iteration: draws,
        n_samples: bin.samples.len(),
        n_vehicles: bin.n_vehicles,
        converged_iterations: converged,
        lateral_degenerate_iterations: degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(v: f64, id: i64, dx: f64) -> SpacingSample {
        SpacingSample { dx, dy: 0.0, kind: SampleKind::Vehicle, ego_velocity: v, vehicle_id: id }
    }

    #[test]
    fn binning_rounds_half_up() {
        let s = [sample(19.6, 1, 5.0), sample(20.5, 1, 5.0), sample(19.49, 2, 5.0), sample(20.49, 3, 5.0)];
        let bins = bin_by_velocity(&s, BinCriteria::default());
        let layout: Vec<(i64, usize, usize)> = bins.iter().map(|b| (b.velocity, b.samples.len(), b.n_vehicles)).collect();
        assert_eq!(layout, vec![(19, 1, 1), (20, 2, 2), (21, 1, 1)]);
        assert!(bins.iter().all(|b| !b.sufficient));
    }

    #[test]
    fn small_bins_are_insufficient() {
        let s: Vec<_> = (0..300).map(|i| sample(20.0, i % 30, 5.0 + i as f64 * 0.1)).collect();
        let bins = bin_by_velocity(&s, BinCriteria::default());
        assert!(!bins[0].sufficient);
        assert!(matches!(bootstrap_bin(&bins[0], BootstrapConfig::default()), Err(Error::InsufficientBin { .. })));
        let few_vehicles: Vec<_> = (0..600).map(|i| sample(20.0, i % 5, 5.0)).collect();
        assert!(!bin_by_velocity(&few_vehicles, BinCriteria::default())[0].sufficient);
        let lines = [SpacingSample { kind: SampleKind::LaneMarker, ..sample(20.0, 1, 0.0) }];
        assert!(bin_by_velocity(&lines, BinCriteria::default()).is_empty());
    }

    #[test]
    fn draw_count_is_ceiling() {
        let c = BootstrapConfig::default();
        assert_eq!(c.draws(100), 85);
        assert_eq!(c.draws(10), 9);
        assert_eq!(c.draws(41), 35);
    }

    #[test]
    fn identical_vehicles_give_zero_spread() {
        // every vehicle carries the same samples, so every draw is the same
        // data up to a common weight
        let s: Vec<_> = (0..12)
            .flat_map(|id| (0..50).map(move |k| sample(20.2, id, 4.0 + k as f64 * 0.5)))
            .collect();
        let bin = &bin_by_velocity(&s, BinCriteria { min_samples: 500, min_vehicles: 10 })[0];
        let r = bootstrap_bin(bin, BootstrapConfig { n_iter: 3, ..Default::default() }).unwrap();
        assert_eq!(r.n_iterations, 3);
        assert_eq!(r.draws_per_iteration, 11);
        assert!(r.std_gamma_x < 1e-9 && r.std_beta_x < 1e-9, "{r:?}");
        assert_eq!(r.lateral_degenerate_iterations, 3);
    }
}
