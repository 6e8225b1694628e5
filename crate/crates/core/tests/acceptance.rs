//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use cspf_core::analysis::{
    behavior_response, detect_events, risk_timeline, ResponseDirection, ResponseOptions, RiskKind, TimelineOptions,
    DEFAULT_THRESHOLD,
};
use cspf_core::baselines::{ttc_2d, TtcOptions};
use cspf_core::calibration::{
    calibrate, infer_beta, infer_gamma, infer_params, log_likelihood, Axis, BinStatus, BootstrapConfig,
    CalibrationConfig, SpacingSample,
};
use cspf_core::ingest::Maneuver;
use cspf_core::ofield::{aggregate_objective, cpa, pair_objective, CpaRegime, OFieldParams};
use cspf_core::params::ParamsFile;
use cspf_core::sfield::{
    boundary_risk, complement_product, lane_marker_risk, params_at_velocity, vehicle_proximity_risk, SFieldParams,
    VehicleShape,
};
use cspf_core::trajectory::{GapVector, VehicleState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const E_INV: f64 = 0.367_879_441_171_442_33;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn within_time(outcome: Outcome, elapsed: Duration, limit: Duration) -> Outcome {
    if elapsed <= limit {
        outcome
    } else {
        Outcome::new(false, format!("{}; took {elapsed:.1?}, limit {limit:?}", outcome.detail))
    }
}

fn car(id: i64, x: f64, y: f64, vx: f64, vy: f64) -> VehicleState {
    VehicleState {
        vehicle_id: id,
        frame: 0,
        t: 0.0,
        x,
        y,
        vx,
        vy,
        ax: 0.0,
        ay: 0.0,
        length: 4.5,
        width: 1.8,
        lane_id: 2,
    }
}

fn ggd_boundary() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let gamma = rng.random_range(0.1..=50.0);
        let beta = rng.random_range(2.0..=10.0);
        let (g2, b2) = (rng.random_range(0.1..=50.0), rng.random_range(2.0..=10.0));
        let along = VehicleShape { gamma_x: gamma, beta_x: beta, gamma_y: g2, beta_y: b2 };
        let across = VehicleShape { gamma_x: g2, beta_x: b2, gamma_y: gamma, beta_y: beta };
        let values = [
            vehicle_proximity_risk(GapVector { dx: gamma, dy: 0.0 }, &along).unwrap(),
            vehicle_proximity_risk(GapVector { dx: -gamma, dy: 0.0 }, &along).unwrap(),
            vehicle_proximity_risk(GapVector { dx: 0.0, dy: gamma }, &across).unwrap(),
            vehicle_proximity_risk(GapVector { dx: 0.0, dy: -gamma }, &across).unwrap(),
            lane_marker_risk(gamma, gamma, beta).unwrap(),
            lane_marker_risk(-gamma, gamma, beta).unwrap(),
            boundary_risk(gamma, gamma, beta).unwrap(),
            boundary_risk(-gamma, gamma, beta).unwrap(),
        ];
        for v in values {
            worst = worst.max((v - E_INV).abs());
        }
    }
    let out = Outcome::new(worst <= 1e-12, format!("max |r(gamma) - e^-1| = {worst:.2e} over 1000 draws, 8 kernels each"));
    within_time(out, start.elapsed(), Duration::from_secs(1))
}

/// Random relative position and velocity with `D . V < 0`.
fn approaching(rng: &mut ChaCha8Rng) -> ((f64, f64), (f64, f64)) {
    loop {
        let (rd, ad) = (200.0 * rng.random::<f64>().sqrt(), rng.random_range(0.0..std::f64::consts::TAU));
        let (rv, av) = (rng.random_range(0.5..=50.0), rng.random_range(0.0..std::f64::consts::TAU));
        let d = (rd * ad.cos(), rd * ad.sin());
        let v = (rv * av.cos(), rv * av.sin());
        if d.0 * v.0 + d.1 * v.1 < 0.0 {
            return (d, v);
        }
    }
}

/// Minimizes `|D + V t|` by stepping `t`: a 1e-2 s scan over `[0, |D|/|V|]`,
/// then a 1e-4 s scan around its best point. The distance is convex in `t`,
/// so the two-stage scan finds the same minimum as a single fine scan.
fn numeric_cpa(d: (f64, f64), v: (f64, f64)) -> (f64, f64) {
    let dist = |t: f64| (d.0 + v.0 * t).hypot(d.1 + v.1 * t);
    let horizon = d.0.hypot(d.1) / v.0.hypot(v.1);
    let scan = |from: f64, to: f64, step: f64| {
        let n = ((to - from) / step).ceil() as usize;
        (0..=n).map(|k| from + k as f64 * step).fold((from, dist(from)), |best, t| {
            let dt = dist(t);
            if dt < best.1 {
                (t, dt)
            } else {
                best
            }
        })
    };
    let (coarse, _) = scan(0.0, horizon + 0.01, 1e-2);
    scan((coarse - 0.02).max(0.0), coarse + 0.02, 1e-4)
}

fn cpa_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_t, mut worst_d) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let (d, v) = approaching(&mut rng);
        let closed = cpa(d, v).unwrap();
        let (t_num, d_num) = numeric_cpa(d, v);
        worst_t = worst_t.max((closed.t_m - t_num).abs());
        worst_d = worst_d.max((closed.d_m - d_num).abs());
    }
    let out = Outcome::new(
        worst_t <= 1e-2 && worst_d <= 1e-2,
        format!("max |dt_m| = {worst_t:.2e} s, max |dd_m| = {worst_d:.2e} m over 10000 pairs"),
    );
    within_time(out, start.elapsed(), Duration::from_secs(30))
}

fn speed_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_d, mut worst_t) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (d, v) = approaching(&mut rng);
        let base = cpa(d, v).unwrap();
        for c in [0.1, 2.0, 10.0] {
            let scaled = cpa(d, (c * v.0, c * v.1)).unwrap();
            worst_d = worst_d.max((scaled.d_m - base.d_m).abs());
            worst_t = worst_t.max((scaled.t_m - base.t_m / c).abs());
        }
    }
    Outcome::new(
        worst_d <= 1e-9 && worst_t <= 1e-9,
        format!("max |dd_m| = {worst_d:.2e}, max |t_m - t_m/c| = {worst_t:.2e} over 1000 pairs x 3 factors"),
    )
}

fn published_parameters() -> Outcome {
    // the published cubics evaluated at 20 m/s in exact decimal arithmetic
    const GAMMA_X_20: f64 = 11.79834;
    const BETA_X_20: f64 = 3.036598;
    let shape = params_at_velocity(&SFieldParams::default(), 20.0).unwrap();
    let dg = (shape.gamma_x - GAMMA_X_20).abs();
    let db = (shape.beta_x - BETA_X_20).abs();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("params.json");
    ParamsFile::default().save(&path).unwrap();
    let back = ParamsFile::load(&path).unwrap().s_field;
    let exact = [
        (back.gamma_y, 1.4310f64),
        (back.beta_y, 4.9956),
        (back.gamma_l, 1.18),
        (back.beta_l, 2.46),
        (back.gamma_b, 1.64),
        (back.beta_b, 5.17),
    ]
    .iter()
    .all(|(a, b)| a.to_bits() == b.to_bits());
    let polys = back.gamma_x_poly == SFieldParams::default().gamma_x_poly
        && back.beta_x_poly == SFieldParams::default().beta_x_poly;
    Outcome::new(
        dg <= 1e-3 && db <= 1e-3 && exact && polys,
        format!(
            "gamma_x(20) = {:.6}, beta_x(20) = {:.6}; constants round-trip bit-exact: {}",
            shape.gamma_x,
            shape.beta_x,
            exact && polys
        ),
    )
}

fn with_axis(shape: &VehicleShape, axis: Axis, gamma: Option<f64>, beta: Option<f64>) -> VehicleShape {
    let mut s = *shape;
    match axis {
        Axis::Longitudinal => {
            s.gamma_x = gamma.unwrap_or(s.gamma_x);
            s.beta_x = beta.unwrap_or(s.beta_x);
        }
        Axis::Lateral => {
            s.gamma_y = gamma.unwrap_or(s.gamma_y);
            s.beta_y = beta.unwrap_or(s.beta_y);
        }
    }
    s
}

/// Exhaustive `argmax` of the log-likelihood over shapes `2, 2.001, ..., 20`.
fn oracle_beta(samples: &[SpacingSample], shape: &VehicleShape, axis: Axis) -> f64 {
    (0..=18_000)
        .map(|k| 2.0 + k as f64 * 1e-3)
        .map(|b| (b, log_likelihood(samples, &with_axis(shape, axis, None, Some(b))).unwrap()))
        .fold((f64::NAN, f64::NEG_INFINITY), |best, p| if p.1 > best.1 { p } else { best })
        .0
}

fn curvature(samples: &[SpacingSample], shape: &VehicleShape, axis: Axis, gamma: f64) -> f64 {
    let h = (0.01 * gamma).max(0.01);
    let ll = |g: f64| log_likelihood(samples, &with_axis(shape, axis, Some(g), None)).unwrap();
    (ll(gamma + h) - 2.0 * ll(gamma) + ll(gamma - h)) / (h * h)
}

/// `argmin` of the second derivative in the scale: a 2000-point log scan
/// of `[0.05, 200]`, then every 1e-3 step within two scan cells of its best
/// point.
fn oracle_gamma(samples: &[SpacingSample], shape: &VehicleShape, axis: Axis) -> f64 {
    let argmin = |grid: Vec<f64>| {
        grid.into_iter()
            .map(|g| (g, curvature(samples, shape, axis, g)))
            .fold((f64::NAN, f64::INFINITY), |best, p| if p.1 < best.1 { p } else { best })
            .0
    };
    let ratio = (200.0f64 / 0.05).powf(1.0 / 1999.0);
    let coarse = argmin((0..2000).map(|k| 0.05 * ratio.powi(k)).collect());
    let (lo, hi) = ((coarse / ratio.powi(2)).max(0.05), (coarse * ratio.powi(2)).min(200.0));
    let k0 = ((lo - 0.05) / 1e-3).floor() as i64;
    let k1 = ((hi - 0.05) / 1e-3).ceil() as i64;
    argmin((k0..=k1).map(|k| 0.05 + k as f64 * 1e-3).collect())
}

fn calibration_oracle() -> Outcome {
    let start = Instant::now();
    let samples = common::product_spacings(10_000, 5);
    let shape = VehicleShape { gamma_x: 12.0, beta_x: 3.0, gamma_y: 1.4, beta_y: 5.0 };
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (axis, name) in [(Axis::Longitudinal, "x"), (Axis::Lateral, "y")] {
        let b = infer_beta(&samples, &shape, axis).unwrap();
        let b_ref = oracle_beta(&samples, &shape, axis);
        let g = infer_gamma(&samples, &shape, axis).unwrap();
        let g_ref = oracle_gamma(&samples, &shape, axis);
        worst = worst.max((b - b_ref).abs()).max((g - g_ref).abs());
        parts.push(format!("beta_{name} {b:.4}/{b_ref:.3}, gamma_{name} {g:.4}/{g_ref:.3}"));
    }
    let out = Outcome::new(worst <= 1e-3, format!("{} (inferred/grid); max diff {worst:.1e}", parts.join(", ")));
    within_time(out, start.elapsed(), Duration::from_secs(120))
}

fn scale_equivariance() -> Outcome {
    let samples = common::product_spacings(10_000, 5);
    let doubled: Vec<SpacingSample> =
        samples.iter().map(|s| SpacingSample { dx: 2.0 * s.dx, dy: 2.0 * s.dy, ..*s }).collect();
    let a = infer_params(&samples).unwrap();
    let b = infer_params(&doubled).unwrap();
    let rx = b.shape.gamma_x / a.shape.gamma_x;
    let ry = b.shape.gamma_y / a.shape.gamma_y;
    Outcome::new(
        (rx - 2.0).abs() <= 0.04 && (ry - 2.0).abs() <= 0.04,
        format!(
            "gamma_x {:.4} -> {:.4} (x{rx:.4}), gamma_y {:.4} -> {:.4} (x{ry:.4}); converged {} / {}",
            a.shape.gamma_x, b.shape.gamma_x, a.shape.gamma_y, b.shape.gamma_y, a.converged, b.converged
        ),
    )
}

fn bootstrap_protocol() -> Outcome {
    let ds = common::fixture_dataset("calibration.json", 0);
    let config = CalibrationConfig { bootstrap: BootstrapConfig { seed: 42, ..Default::default() }, ..Default::default() };
    let first = calibrate(std::slice::from_ref(&ds), &config).unwrap();
    let second = calibrate(std::slice::from_ref(&ds), &config).unwrap();
    let identical = serde_json::to_string(&first).unwrap() == serde_json::to_string(&second).unwrap();

    let mut fitted = 0;
    let mut protocol = true;
    for bin in &first.bins {
        if let Some(r) = &bin.result {
            fitted += 1;
            let expected = (0.85 * bin.n_vehicles as f64).ceil() as usize;
            protocol &= r.n_iterations == 20 && r.draws_per_iteration == expected;
        } else {
            protocol &= matches!(bin.status, BinStatus::TooFewSamples | BinStatus::TooFewVehicles);
        }
    }
    let draws: Vec<String> = first
        .bins
        .iter()
        .filter_map(|b| b.result.as_ref().map(|r| format!("{}:{}/{}", b.velocity, r.draws_per_iteration, b.n_vehicles)))
        .collect();
    Outcome::new(
        identical && protocol && fitted > 0,
        format!(
            "reruns bit-identical: {identical}; {fitted} bins x 20 iterations, draws/vehicles per bin [{}]",
            draws.join(" ")
        ),
    )
}

fn aggregation_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut monotone = true;
    let mut saturates = true;
    for _ in 0..1000 {
        let n = rng.random_range(1..=20);
        let mut risks: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut survive = 1.0;
        for r in &risks {
            survive *= 1.0 - r;
        }
        let agg = aggregate_objective(&risks).unwrap();
        worst = worst.max((agg - (1.0 - survive)).abs());
        worst = worst.max((complement_product(risks.iter().copied()) - (1.0 - survive)).abs());

        risks.push(rng.random::<f64>());
        monotone &= aggregate_objective(&risks).unwrap() >= agg;

        let k = rng.random_range(0..risks.len());
        risks[k] = 1.0;
        saturates &= aggregate_objective(&risks).unwrap() == 1.0;
    }
    Outcome::new(
        worst <= 1e-12 && monotone && saturates,
        format!("max error {worst:.2e}; monotone {monotone}; saturates at 1 {saturates}; 1000 sets"),
    )
}

fn ttc_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    let mut positive = true;
    let mut min_risk = f64::INFINITY;
    for _ in 0..100 {
        let g = rng.random_range(0.5..=100.0);
        let s = rng.random_range((g / 25.0f64).max(0.5)..=30.0);
        let ego = car(1, 0.0, 0.0, 20.0 + s, 0.0);
        let lead = car(2, 4.5 + g, 0.0, 20.0, 0.0);
        let ttc = ttc_2d(&ego, &lead, TtcOptions::default()).unwrap();
        let Some(t) = ttc.ttc else {
            worst = f64::INFINITY;
            continue;
        };
        worst = worst.max((t - g / s).abs());
        let o = pair_objective(&ego, &lead, &OFieldParams::default()).unwrap();
        positive &= o.cpa.regime == CpaRegime::Approaching && o.cpa.d_m == 0.0 && o.risk > 0.0;
        min_risk = min_risk.min(o.risk);
    }
    Outcome::new(
        worst <= 0.01 && positive,
        format!("max |ttc - g/s| = {worst:.4} s; O-risk > 0 on all 100 (min {min_risk:.2e})"),
    )
}

fn fixture_pipeline() -> Outcome {
    let start = Instant::now();
    let s_params = SFieldParams::default().without_lane_terms();
    let o_params = OFieldParams::default();

    let spec = common::fixture_spec("stop_and_go.json");
    let Some(Maneuver::StopAndGo(sg)) = spec.maneuvers.first() else {
        return Outcome::new(false, "stop_and_go.json holds no stop-and-go maneuver");
    };
    let phases = sg.approach_phases();
    let ds = common::fixture_dataset("stop_and_go.json", 0);
    let options = TimelineOptions { ttc: None, ..Default::default() };
    let follower = risk_timeline(&ds, 2, &s_params, &o_params, options).unwrap();
    let peaks: Vec<f64> = detect_events(&follower, RiskKind::O, DEFAULT_THRESHOLD, 0.0)
        .unwrap()
        .iter()
        .filter(|e| e.source_id == 1)
        .map(|e| e.peak_t)
        .collect();
    let in_phase = |t: f64, (a, b): (f64, f64)| t >= a - 0.5 && t <= b + 0.5;
    let aligned = !peaks.is_empty()
        && phases.iter().all(|&p| peaks.iter().any(|&t| in_phase(t, p)))
        && peaks.iter().all(|&t| phases.iter().any(|&p| in_phase(t, p)));

    let response = ResponseOptions { thresholds: vec![0.3, 0.5, 0.7], ..Default::default() };
    let braking = behavior_response(&ds, RiskKind::O, ResponseDirection::Longitudinal, &s_params, &o_params, &response)
        .unwrap();
    let means: Vec<Option<f64>> = braking.iter().map(|d| d.mean()).collect();
    let braking_ok = means.iter().all(|m| m.is_some_and(|m| m < 0.0));

    let drift = common::fixture_dataset("lateral_drift.json", 0);
    let ego = risk_timeline(&drift, 1, &s_params, &o_params, TimelineOptions::default()).unwrap();
    let max_s = ego.frames.iter().map(|f| f.s_risk).fold(0.0, f64::max);
    let max_o = ego.frames.iter().map(|f| f.o_risk).fold(0.0, f64::max);
    let max_ttci = ego.frames.iter().map(|f| f.ttci).fold(0.0, f64::max);
    let separated = max_s > E_INV && max_o < 0.01 && max_ttci == 0.0;

    let fmt_means: Vec<String> =
        means.iter().map(|m| m.map_or("none".to_string(), |m| format!("{m:.2}"))).collect();
    let out = Outcome::new(
        aligned && braking_ok && separated,
        format!(
            "O peaks at {peaks:.2?} s vs approach phases {phases:.2?}; braking means [{}] m/s^2 at 0.3/0.5/0.7; \
             drift max S {max_s:.3}, max O {max_o:.1e}, max TTCi {max_ttci}",
            fmt_means.join(", ")
        ),
    );
    within_time(out, start.elapsed(), Duration::from_secs(60))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("GGD boundary identities", ggd_boundary),
        ("CPA oracle equivalence", cpa_oracle),
        ("speed-magnitude invariance", speed_invariance),
        ("published parameter reproduction", published_parameters),
        ("calibration oracle equivalence", calibration_oracle),
        ("calibration scale equivariance", scale_equivariance),
        ("bootstrap determinism and protocol", bootstrap_protocol),
        ("aggregation algebra", aggregation_algebra),
        ("TTC baseline consistency", ttc_consistency),
        ("pipeline behavior on fixtures", fixture_pipeline),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                Outcome::new(false, format!("panicked: {}", msg.unwrap_or_default()))
            });
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {name}: {} [{:.1?}]", k + 1, outcome.detail, start.elapsed());
        failed += usize::from(!outcome.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
