#![allow(dead_code)]

use std::path::PathBuf;

use cspf_core::calibration::{SampleKind, SpacingSample};
use cspf_core::ingest::{load_directory, synthesize_fixture, write_recording, Dataset, FixtureSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A path relative to the repository root.
pub fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn fixture_path(name: &str) -> PathBuf {
    repo_path("fixtures").join(name)
}

pub fn fixture_spec(name: &str) -> FixtureSpec {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    FixtureSpec::from_json(&text).unwrap()
}

/// Synthesizes a bundled fixture, writes it as highD CSV and reads it back.
pub fn fixture_dataset(name: &str, seed: u64) -> Dataset {
    let ds = synthesize_fixture(&fixture_spec(name), seed).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_recording(&ds, dir.path()).unwrap();
    load_directory(dir.path()).unwrap().remove(0)
}

/// Spacing samples whose presence density is a product of one GGD
/// tolerance per axis (`gamma 12, beta 3` along x, `gamma 1.4, beta 5`
/// across). Half the samples sit in the ego lane with `dy = 0`.
pub fn product_spacings(n: usize, seed: u64) -> Vec<SpacingSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let same_lane = rng.random_bool(0.5);
        let dx: f64 = if same_lane { rng.random_range(0.0..80.0) } else { rng.random_range(-60.0..60.0) };
        let dy: f64 = if same_lane { 0.0 } else { (1.75 + 0.5 * rng.sample::<f64, _>(StandardNormal)).max(0.0) };
        let px = 1.0 - (-(dx.abs() / 12.0).powf(3.0)).exp();
        let py = if same_lane { 1.0 } else { 1.0 - (-(dy / 1.4).powf(5.0)).exp() };
        if rng.random::<f64>() < px * py {
            out.push(SpacingSample {
                dx,
                dy,
                kind: SampleKind::Vehicle,
                ego_velocity: 20.0,
                vehicle_id: (out.len() % 100) as i64,
            });
        }
    }
    out
}
