//! `cspf`: calibrate the subjective field, assess vehicles, run the
//! behavior-response studies and export field rasters.

use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cspf_core::analysis::{
    behavior_response, rasterize_field, risk_timeline, ResponseDirection, ResponseOptions,
    ResponseQuantity, RiskKind, TimelineOptions,
};
use cspf_core::baselines::read_external_series;
use cspf_core::calibration::{calibrate, BinCriteria, BinReport, BootstrapConfig, CalibrationConfig};
use cspf_core::ingest::{load_directory, synthesize_fixture, write_recording, Dataset, FixtureSpec};
use cspf_core::params::ParamsFile;
use cspf_core::trajectory::VehicleState;

#[derive(Parser, Debug)]
#[command(name = "cspf", version, about = "Composite safety potential field for highway trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the subjective field to the spacing data of every recording in a directory
    Calibrate(CalibrateArgs),
    /// Per-frame risk timeline of one vehicle
    Assess(AssessArgs),
    /// Ego responses after risk exceedances, as histograms
    Analyze(AnalyzeArgs),
    /// Sample one field on a grid around an ego
    RenderField(RenderArgs),
    /// Generate a synthetic recording from a fixture spec
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// Directory holding NN_tracks.csv / NN_recordingMeta.csv pairs
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Per-bin report; defaults to <out stem>_bins.csv next to --out
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    min_samples: usize,
    #[arg(long, default_value_t = 10)]
    min_vehicles: usize,
    /// Use every n-th frame
    #[arg(long, default_value_t = 1)]
    stride: i64,
    #[arg(long, default_value_t = 20)]
    iterations: usize,
    /// Share of a bin's vehicles drawn per bootstrap iteration
    #[arg(long, default_value_t = 0.85)]
    fraction: f64,
    /// Objective-field block and lane-term weights are copied from here
    #[arg(long)]
    base_params: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FieldArgs {
    /// Parameter file; the published constants when omitted
    #[arg(long)]
    params: Option<PathBuf>,
    /// Switch off lane-marker and boundary terms
    #[arg(long)]
    no_lane_terms: bool,
}

impl FieldArgs {
    fn load(&self) -> Result<ParamsFile> {
        let mut params = match &self.params {
            Some(path) => ParamsFile::load(path).with_context(|| format!("reading {}", path.display()))?,
            None => ParamsFile::default(),
        };
        if self.no_lane_terms {
            params.s_field = params.s_field.without_lane_terms();
        }
        Ok(params)
    }
}

#[derive(Args, Debug)]
struct AssessArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long)]
    vehicle: i64,
    /// Needed when several recordings contain the vehicle id
    #[arg(long)]
    recording: Option<i64>,
    #[arg(long)]
    out: PathBuf,
    /// External `frame,value` series appended as a `baseline` column
    #[arg(long)]
    baseline: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Study {
    Braking,
    LateralO,
    LateralS,
}

impl Study {
    fn kind(self) -> RiskKind {
        match self {
            Study::Braking | Study::LateralO => RiskKind::O,
            Study::LateralS => RiskKind::S,
        }
    }

    fn directions(self) -> &'static [ResponseDirection] {
        match self {
            Study::Braking => &[ResponseDirection::Longitudinal],
            _ => &[ResponseDirection::LateralLeft, ResponseDirection::LateralRight],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Study::Braking => "braking",
            Study::LateralO => "lateral-o",
            Study::LateralS => "lateral-s",
        }
    }
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, value_enum)]
    study: Study,
    /// Ascending, each in (0, 1)
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7")]
    thresholds: Vec<f64>,
    /// Seconds after onset
    #[arg(long, default_value_t = 1.0)]
    lag: f64,
    #[arg(long, default_value_t = 0.25)]
    bin_width: f64,
    #[arg(long)]
    keep_lane_changers: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Field {
    S,
    O,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long, value_enum)]
    field: Field,
    /// Ego speed along +x (m/s)
    #[arg(long)]
    velocity: f64,
    /// Influencing vehicle as x,y,vx,vy,w relative to the ego center
    #[arg(long, value_parser = parse_other, allow_hyphen_values = true)]
    other: Option<[f64; 5]>,
    /// Longitudinal x lateral size in meters
    #[arg(long, value_parser = parse_extent, default_value = "100x20")]
    extent: (f64, f64),
    #[arg(long, default_value_t = 0.25)]
    res: f64,
    #[arg(long, default_value_t = 4.5)]
    length: f64,
    #[arg(long, default_value_t = 1.8)]
    width: f64,
    #[command(flatten)]
    field_params: FieldArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory, created if missing
    #[arg(long)]
    out: PathBuf,
}

fn parse_other(s: &str) -> Result<[f64; 5], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|p: Vec<f64>| format!("expected x,y,vx,vy,w, got {} values", p.len()))
}

fn parse_extent(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected LENGTHxWIDTH, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn load_input(dir: &Path) -> Result<Vec<Dataset>> {
    let datasets = load_directory(dir).with_context(|| format!("loading recordings from {}", dir.display()))?;
    ensure!(!datasets.is_empty(), "no *_tracks.csv files in {}", dir.display());
    Ok(datasets)
}

fn default_report_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("params");
    out.with_file_name(format!("{stem}_bins.csv"))
}

#[derive(Serialize)]
struct BinRow {
    velocity: i64,
    status: String,
    n_samples: usize,
    n_vehicles: usize,
    gamma_x: Option<f64>,
    beta_x: Option<f64>,
    gamma_y: Option<f64>,
    beta_y: Option<f64>,
    std_gamma_x: Option<f64>,
    std_beta_x: Option<f64>,
    std_gamma_y: Option<f64>,
    std_beta_y: Option<f64>,
    n_iterations: Option<usize>,
    draws_per_iteration: Option<usize>,
    converged_iterations: Option<usize>,
}

impl From<&BinReport> for BinRow {
    fn from(b: &BinReport) -> Self {
        let r = b.result.as_ref();
        BinRow {
            velocity: b.velocity,
            status: serde_json::to_value(b.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            n_samples: b.n_samples,
            n_vehicles: b.n_vehicles,
            gamma_x: r.map(|r| r.gamma_x),
            beta_x: r.map(|r| r.beta_x),
            gamma_y: r.map(|r| r.gamma_y),
            beta_y: r.map(|r| r.beta_y),
            std_gamma_x: r.map(|r| r.std_gamma_x),
            std_beta_x: r.map(|r| r.std_beta_x),
            std_gamma_y: r.map(|r| r.std_gamma_y),
            std_beta_y: r.map(|r| r.std_beta_y),
            n_iterations: r.map(|r| r.n_iterations),
            draws_per_iteration: r.map(|r| r.draws_per_iteration),
            converged_iterations: r.map(|r| r.converged_iterations),
        }
    }
}

fn run_calibrate(args: CalibrateArgs) -> Result<()> {
    let datasets = load_input(&args.input)?;
    let base = match &args.base_params {
        Some(path) => ParamsFile::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => ParamsFile::default(),
    };
    let config = CalibrationConfig {
        stride: args.stride,
        criteria: BinCriteria { min_samples: args.min_samples, min_vehicles: args.min_vehicles },
        bootstrap: BootstrapConfig { n_iter: args.iterations, frac: args.fraction, seed: args.seed },
        kappa_l: base.s_field.kappa_l,
        kappa_b: base.s_field.kappa_b,
        ..Default::default()
    };
    let report = calibrate(&datasets, &config).context("calibration failed")?;

    let params = ParamsFile { s_field: report.params.clone(), o_field: base.o_field };
    params.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let report_path = args.report.unwrap_or_else(|| default_report_path(&args.out));
    let mut w = csv::Writer::from_path(&report_path).with_context(|| format!("writing {}", report_path.display()))?;
    for bin in &report.bins {
        w.serialize(BinRow::from(bin))?;
    }
    w.flush()?;

    let fitted = report.bins.iter().filter(|b| b.result.is_some()).count();
    eprintln!(
        "{} samples from {} recordings, {fitted}/{} bins fitted; wrote {} and {}",
        report.n_samples,
        datasets.len(),
        report.bins.len(),
        args.out.display(),
        report_path.display()
    );
    Ok(())
}

fn pick_recording(datasets: &[Dataset], vehicle: i64, recording: Option<i64>) -> Result<&Dataset> {
    if let Some(id) = recording {
        return datasets
            .iter()
            .find(|d| d.meta.recording_id == id)
            .with_context(|| format!("recording {id} not found"));
    }
    let holders: Vec<&Dataset> = datasets.iter().filter(|d| d.tracks.contains_key(&vehicle)).collect();
    match holders.as_slice() {
        [one] => Ok(one),
        [] => bail!("vehicle {vehicle} not found in any recording"),
        many => bail!(
            "vehicle {vehicle} appears in recordings {:?}; pass --recording",
            many.iter().map(|d| d.meta.recording_id).collect::<Vec<_>>()
        ),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn run_assess(args: AssessArgs) -> Result<()> {
    let params = args.field.load()?;
    let datasets = load_input(&args.input)?;
    let dataset = pick_recording(&datasets, args.vehicle, args.recording)?;
    let timeline = risk_timeline(dataset, args.vehicle, &params.s_field, &params.o_field, TimelineOptions::default())?;
    let baseline = match &args.baseline {
        Some(path) => Some(read_external_series(path).with_context(|| format!("reading {}", path.display()))?),
        None => None,
    };

    let mut w = csv::Writer::from_path(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let mut header = vec!["frame", "t", "s_risk", "o_risk", "ttci", "top_pair_id", "pair_s", "pair_o", "t_m", "d_m"];
    if baseline.is_some() {
        header.push("baseline");
    }
    w.write_record(&header)?;
    for f in &timeline.frames {
        let top = f.top_pair();
        let mut row = vec![
            f.frame.to_string(),
            f.t.to_string(),
            f.s_risk.to_string(),
            f.o_risk.to_string(),
            f.ttci.to_string(),
            top.map(|p| p.neighbor_id.to_string()).unwrap_or_default(),
            opt(top.map(|p| p.r_s)),
            opt(top.map(|p| p.r_o)),
            opt(top.map(|p| p.t_m)),
            opt(top.map(|p| p.d_m)),
        ];
        if let Some(series) = &baseline {
            row.push(opt(series.get(&f.frame).copied()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    eprintln!("{} frames of vehicle {} written to {}", timeline.frames.len(), args.vehicle, args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct HistBin {
    lo: f64,
    hi: f64,
    count: usize,
}

#[derive(Serialize)]
struct SampleRow {
    recording_id: i64,
    vehicle_id: i64,
    source_id: i64,
    onset_t: f64,
    value: f64,
}

#[derive(Serialize)]
struct HistEntry {
    direction: ResponseDirection,
    threshold: f64,
    n: usize,
    mean: Option<f64>,
    excluded_lane_changers: usize,
    bins: Vec<HistBin>,
    values: Vec<f64>,
    samples: Vec<SampleRow>,
}

impl HistEntry {
    fn empty(direction: ResponseDirection, threshold: f64) -> Self {
        Self {
            direction,
            threshold,
            n: 0,
            mean: None,
            excluded_lane_changers: 0,
            bins: Vec::new(),
            values: Vec::new(),
            samples: Vec::new(),
        }
    }
}

#[derive(Serialize)]
struct HistFile {
    study: &'static str,
    risk: RiskKind,
    quantity: ResponseQuantity,
    lag: f64,
    bin_width: f64,
    distributions: Vec<HistEntry>,
}

/// Counts per `[k w, (k + 1) w)` over the occupied range.
fn histogram(values: &[f64], width: f64) -> Vec<HistBin> {
    let index = |v: f64| (v / width).floor() as i64;
    let (Some(lo), Some(hi)) = (values.iter().map(|&v| index(v)).min(), values.iter().map(|&v| index(v)).max()) else {
        return Vec::new();
    };
    let mut bins: Vec<HistBin> =
        (lo..=hi).map(|k| HistBin { lo: k as f64 * width, hi: (k + 1) as f64 * width, count: 0 }).collect();
    for &v in values {
        bins[(index(v) - lo) as usize].count += 1;
    }
    bins
}

fn run_analyze(args: AnalyzeArgs) -> Result<()> {
    ensure!(args.bin_width > 0.0, "--bin-width must be positive");
    let params = args.field.load()?;
    let datasets = load_input(&args.input)?;
    let options = ResponseOptions {
        thresholds: args.thresholds.clone(),
        lag: args.lag,
        exclude_lane_changers: !args.keep_lane_changers,
        ..Default::default()
    };
    let kind = args.study.kind();
    let mut distributions = Vec::new();
    let mut quantity = None;
    for &direction in args.study.directions() {
        let mut merged: Vec<HistEntry> = Vec::new();
        for ds in &datasets {
            let dists = behavior_response(ds, kind, direction, &params.s_field, &params.o_field, &options)?;
            if merged.is_empty() {
                merged = dists.iter().map(|d| HistEntry::empty(direction, d.threshold)).collect();
            }
            for (entry, d) in merged.iter_mut().zip(dists) {
                quantity = Some(d.quantity);
                entry.excluded_lane_changers += d.excluded_lane_changers;
                entry.values.extend(&d.values);
                entry.samples.extend(d.samples.iter().map(|s| SampleRow {
                    recording_id: ds.meta.recording_id,
                    vehicle_id: s.vehicle_id,
                    source_id: s.source_id,
                    onset_t: s.onset_t,
                    value: s.value,
                }));
            }
        }
        for mut entry in merged {
            entry.n = entry.values.len();
            entry.mean = (entry.n > 0).then(|| entry.values.iter().sum::<f64>() / entry.n as f64);
            entry.bins = histogram(&entry.values, args.bin_width);
            distributions.push(entry);
        }
    }
    let hist = HistFile {
        study: args.study.name(),
        risk: kind,
        quantity: quantity.context("no distributions produced")?,
        lag: args.lag,
        bin_width: args.bin_width,
        distributions,
    };
    let file = File::create(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    serde_json::to_writer_pretty(file, &hist)?;
    for d in &hist.distributions {
        eprintln!(
            "{:?} threshold {}: {} responses, mean {}, {} lane-changer events excluded",
            d.direction,
            d.threshold,
            d.n,
            d.mean.map_or("n/a".to_string(), |m| format!("{m:.3}")),
            d.excluded_lane_changers
        );
    }
    Ok(())
}

fn probe_vehicle(id: i64, x: f64, y: f64, vx: f64, vy: f64, length: f64, width: f64) -> VehicleState {
    VehicleState { vehicle_id: id, frame: 0, t: 0.0, x, y, vx, vy, ax: 0.0, ay: 0.0, length, width, lane_id: 0 }
}

fn run_render(args: RenderArgs) -> Result<()> {
    let params = args.field_params.load()?;
    let ego = probe_vehicle(0, 0.0, 0.0, args.velocity, 0.0, args.length, args.width);
    let other = args.other.map(|[x, y, vx, vy, w]| probe_vehicle(1, x, y, vx, vy, args.length, w));
    let kind = match args.field {
        Field::S => RiskKind::S,
        Field::O => RiskKind::O,
    };
    if kind == RiskKind::O && other.is_none() {
        bail!("--field o needs --other x,y,vx,vy,w");
    }
    let grid = rasterize_field(&ego, kind, &params.s_field, &params.o_field, other.as_ref(), args.extent, args.res)?;
    let mut w = csv::Writer::from_path(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    w.write_record(["x", "y", "risk"])?;
    for (i, y) in grid.ys.iter().enumerate() {
        for (j, x) in grid.xs.iter().enumerate() {
            w.write_record([x.to_string(), y.to_string(), grid.at(i, j).to_string()])?;
        }
    }
    w.flush()?;
    eprintln!("{} x {} grid written to {}", grid.xs.len(), grid.ys.len(), args.out.display());
    Ok(())
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.spec).with_context(|| format!("reading {}", args.spec.display()))?;
    let spec = FixtureSpec::from_json(&text)?;
    let dataset = synthesize_fixture(&spec, args.seed)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let files = write_recording(&dataset, &args.out)?;
    eprintln!("{} vehicles written to {}", dataset.tracks.len(), files.tracks.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Calibrate(args) => run_calibrate(args),
        Command::Assess(args) => run_assess(args),
        Command::Analyze(args) => run_analyze(args),
        Command::RenderField(args) => run_render(args),
        Command::Synth(args) => run_synth(args),
    }
}
