//! highD tracks / recording-meta CSV adapter.
//!
//! Source positions are the upper-left corner of the bounding box in image
//! coordinates (y grows downward); `width` is the longitudinal extent and
//! `height` the lateral one. The lower carriageway travels along +x and is
//! already canonical; the upper one is rotated by 180 degrees.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use csv::StringRecord;

use super::{Dataset, RecordingMeta, DEFAULT_SEGMENT_LENGTH};
use crate::error::{Error, Result};
use crate::trajectory::{normalize_track, DrivingDirection, LaneGeometry, VehicleState};

const TRACK_COLUMNS: [&str; 11] = [
    "frame",
    "id",
    "x",
    "y",
    "width",
    "height",
    "xVelocity",
    "yVelocity",
    "xAcceleration",
    "yAcceleration",
    "laneId",
];

struct Columns {
    index: Vec<usize>,
}

impl Columns {
    fn locate(headers: &StringRecord, names: &[&str]) -> Result<Self> {
        let index = names
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h.trim() == *name)
                    .ok_or_else(|| Error::MissingColumn((*name).to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { index })
    }
}

fn field<'r>(record: &'r StringRecord, column: usize) -> &'r str {
    record.get(column).unwrap_or("").trim()
}

fn parse_f64(path: &Path, line: u64, name: &str, raw: &str) -> Result<f64> {
    let value: f64 = raw.parse().map_err(|_| Error::Data {
        path: path.to_path_buf(),
        line,
        reason: format!("{name}: cannot parse {raw:?}"),
    })?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Data { path: path.to_path_buf(), line, reason: format!("{name} is not finite") })
    }
}

fn parse_i64(path: &Path, line: u64, name: &str, raw: &str) -> Result<i64> {
    // some exports write integral columns as floats
    let value = parse_f64(path, line, name, raw)?;
    if value.fract() == 0.0 {
        Ok(value as i64)
    } else {
        Err(Error::Data { path: path.to_path_buf(), line, reason: format!("{name}: {raw:?} is not an integer") })
    }
}

fn parse_lines(path: &Path, line: u64, raw: &str) -> Result<Vec<f64>> {
    raw.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(path, line, "lane markings", s))
        .collect()
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn read_meta(path: &Path) -> Result<(i64, f64, Vec<f64>, Vec<f64>, f64)> {
    let mut reader = open(path)?;
    let headers = reader.headers()?.clone();
    let cols = Columns::locate(&headers, &["id", "frameRate", "upperLaneMarkings", "lowerLaneMarkings"])?;
    let segment_col = headers.iter().position(|h| h == "segmentLength");
    let record = reader.records().next().ok_or_else(|| Error::Data {
        path: path.to_path_buf(),
        line: 2,
        reason: "recording meta has no data row".into(),
    })??;
    let line = record.position().map_or(2, |p| p.line());
    let id = parse_i64(path, line, "id", field(&record, cols.index[0]))?;
    let frame_rate = parse_f64(path, line, "frameRate", field(&record, cols.index[1]))?;
    if frame_rate <= 0.0 {
        return Err(Error::Data { path: path.to_path_buf(), line, reason: "frameRate must be positive".into() });
    }
    let upper = parse_lines(path, line, field(&record, cols.index[2]))?;
    let lower = parse_lines(path, line, field(&record, cols.index[3]))?;
    let segment_length = match segment_col {
        Some(c) => parse_f64(path, line, "segmentLength", field(&record, c))?,
        None => DEFAULT_SEGMENT_LENGTH,
    };
    Ok((id, frame_rate, upper, lower, segment_length))
}

/// Parses one recording into a normalized [`Dataset`].
pub fn parse_recording(tracks_path: &Path, meta_path: &Path) -> Result<Dataset> {
    let (recording_id, frame_rate, upper, lower, segment_length) = read_meta(meta_path)?;
    let meta = RecordingMeta {
        recording_id,
        frame_rate,
        forward_lanes: LaneGeometry::from_lines(&lower),
        reverse_lanes: LaneGeometry::from_lines(&upper).mirrored(),
        segment_length,
    };

    let mut reader = open(tracks_path)?;
    let headers = reader.headers()?.clone();
    let cols = Columns::locate(&headers, &TRACK_COLUMNS)?;
    let mut raw_tracks: BTreeMap<i64, Vec<VehicleState>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let f = |i: usize| parse_f64(tracks_path, line, TRACK_COLUMNS[i], field(&record, cols.index[i]));
        let frame = parse_i64(tracks_path, line, "frame", field(&record, cols.index[0]))?;
        let vehicle_id = parse_i64(tracks_path, line, "id", field(&record, cols.index[1]))?;
        let (length, width) = (f(4)?, f(5)?);
        if length <= 0.0 || width <= 0.0 {
            return Err(Error::Data {
                path: tracks_path.to_path_buf(),
                line,
                reason: "vehicle dimensions must be positive".into(),
            });
        }
        let state = VehicleState {
            vehicle_id,
            frame,
            t: frame as f64 / frame_rate,
            x: f(2)? + 0.5 * length,
            y: f(3)? + 0.5 * width,
            vx: f(6)?,
            vy: f(7)?,
            ax: f(8)?,
            ay: f(9)?,
            length,
            width,
            lane_id: parse_i64(tracks_path, line, "laneId", field(&record, cols.index[10]))?,
        };
        let track = raw_tracks.entry(vehicle_id).or_default();
        if let Some(prev) = track.last() {
            if frame <= prev.frame {
                return Err(Error::Data {
                    path: tracks_path.to_path_buf(),
                    line,
                    reason: format!("frames not increasing for vehicle {vehicle_id}: {} then {frame}", prev.frame),
                });
            }
        }
        track.push(state);
    }

    let mut dataset = Dataset::empty(meta);
    for track in raw_tracks.into_values() {
        let direction = DrivingDirection::infer(&track);
        dataset.insert_track(direction, normalize_track(&track, direction)?);
    }
    Ok(dataset)
}

fn format_lines(geometry: &LaneGeometry) -> String {
    let mut lines: Vec<f64> = geometry.boundary_ys.iter().chain(&geometry.marker_ys).copied().collect();
    lines.sort_by(f64::total_cmp);
    lines.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

/// Paths of one recording's files inside a directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordingFiles {
    pub tracks: PathBuf,
    pub meta: PathBuf,
}

impl RecordingFiles {
    pub fn in_dir(dir: &Path, recording_id: i64) -> Self {
        Self {
            tracks: dir.join(format!("{recording_id:02}_tracks.csv")),
            meta: dir.join(format!("{recording_id:02}_recordingMeta.csv")),
        }
    }
}

/// Writes a dataset back to the highD schema (source coordinates).
pub fn write_recording(dataset: &Dataset, dir: &Path) -> Result<RecordingFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = RecordingFiles::in_dir(dir, dataset.meta.recording_id);
    let meta = &dataset.meta;

    let mut w = csv::Writer::from_path(&files.meta)?;
    w.write_record(["id", "frameRate", "upperLaneMarkings", "lowerLaneMarkings", "segmentLength"])?;
    w.write_record([
        meta.recording_id.to_string(),
        meta.frame_rate.to_string(),
        format_lines(&meta.reverse_lanes.mirrored()),
        format_lines(&meta.forward_lanes),
        meta.segment_length.to_string(),
    ])?;
    w.flush().map_err(|e| Error::io(&files.meta, e))?;

    let mut w = csv::Writer::from_path(&files.tracks)?;
    w.write_record(TRACK_COLUMNS)?;
    for (id, track) in &dataset.tracks {
        let source = normalize_track(track, dataset.direction(*id))?;
        for s in source {
            w.write_record([
                s.frame.to_string(),
                s.vehicle_id.to_string(),
                (s.x - 0.5 * s.length).to_string(),
                (s.y - 0.5 * s.width).to_string(),
                s.length.to_string(),
                s.width.to_string(),
                s.vx.to_string(),
                s.vy.to_string(),
                s.ax.to_string(),
                s.ay.to_string(),
                s.lane_id.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(&files.tracks, e))?;
    Ok(files)
}

/// Loads every `NN_tracks.csv` / `NN_recordingMeta.csv` pair in `dir`,
/// ordered by file name.
pub fn load_directory(dir: &Path) -> Result<Vec<Dataset>> {
    let mut tracks: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with("_tracks.csv")))
        .collect();
    tracks.sort();
    tracks
        .into_iter()
        .map(|tracks_path| {
            let name = tracks_path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            let prefix = name.trim_end_matches("_tracks.csv");
            let meta_path = dir.join(format!("{prefix}_recordingMeta.csv"));
            parse_recording(&tracks_path, &meta_path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const META: &str = "id,frameRate,locationId,upperLaneMarkings,lowerLaneMarkings\n\
                        1,25,2,8.5;12.2;16.0,20.5;24.3;28.0\n";

    fn write(dir: &Path, tracks: &str) -> (PathBuf, PathBuf) {
        let t = dir.join("01_tracks.csv");
        let m = dir.join("01_recordingMeta.csv");
        std::fs::write(&t, tracks).unwrap();
        std::fs::write(&m, META).unwrap();
        (t, m)
    }

    const HEADER: &str = "frame,id,x,y,width,height,xVelocity,yVelocity,xAcceleration,yAcceleration,frontSightDistance,laneId\n";

    #[test]
    fn minimal_track() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{HEADER}1,5,100.0,21.0,4.0,2.0,30.0,0.1,0.0,0.0,200,5\n2,5,101.2,21.004,4.0,2.0,30.0,0.1,0.0,0.0,200,5\n");
        let (t, m) = write(dir.path(), &body);
        let ds = parse_recording(&t, &m).unwrap();
        let track = ds.track(5).unwrap();
        assert_eq!(track.len(), 2);
        assert_eq!(track[0].x, 102.0);
        assert_eq!(track[0].y, 22.0);
        assert_eq!(track[0].t, 0.04);
        assert_eq!(ds.meta.forward_lanes.marker_ys, vec![24.3]);
        assert!(!ds.is_lane_changer(5));
    }

    #[test]
    fn leftward_track_is_normalized() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{HEADER}1,7,300.0,10.0,4.0,2.0,-30.0,-0.2,0.5,0.0,200,2\n2,7,298.8,9.992,4.0,2.0,-30.0,-0.2,0.5,0.0,200,3\n");
        let (t, m) = write(dir.path(), &body);
        let ds = parse_recording(&t, &m).unwrap();
        let s = ds.track(7).unwrap()[0];
        assert_eq!(ds.direction(7), DrivingDirection::Reverse);
        assert_eq!(s.vx, 30.0);
        assert_eq!(s.vy, 0.2);
        assert_eq!(s.ax, -0.5);
        assert_eq!((s.x, s.y), (-302.0, -11.0));
        assert_eq!(ds.meta.reverse_lanes.boundary_ys, vec![-16.0, -8.5]);
        assert!(ds.is_lane_changer(7));
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let body = "frame,id,x,y,width,height,yVelocity,xAcceleration,yAcceleration,laneId\n";
        let (t, m) = write(dir.path(), body);
        match parse_recording(&t, &m) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "xVelocity"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn backwards_frames_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{HEADER}2,5,100,21,4,2,30,0,0,0,200,5\n1,5,101,21,4,2,30,0,0,0,200,5\n");
        let (t, m) = write(dir.path(), &body);
        assert!(matches!(parse_recording(&t, &m), Err(Error::Data { .. })));
    }

    #[test]
    fn non_finite_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{HEADER}1,5,100,21,4,2,NaN,0,0,0,200,5\n");
        let (t, m) = write(dir.path(), &body);
        assert!(matches!(parse_recording(&t, &m), Err(Error::Data { .. })));
    }

    #[test]
    fn round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!(
            "{HEADER}1,5,100.25,21.5,4.4,1.9,30.5,0.1,0.2,-0.1,0,5\n2,5,101.47,21.504,4.4,1.9,30.51,0.1,0.2,-0.1,0,5\n\
             1,6,300.0,10.0,12.0,2.5,-25.0,0.0,0.0,0.0,0,2\n"
        );
        let (t, m) = write(dir.path(), &body);
        let ds = parse_recording(&t, &m).unwrap();
        let out = tempfile::tempdir().unwrap();
        let files = write_recording(&ds, out.path()).unwrap();
        let back = parse_recording(&files.tracks, &files.meta).unwrap();
        assert_eq!(back.meta.forward_lanes, ds.meta.forward_lanes);
        assert_eq!(back.meta.reverse_lanes, ds.meta.reverse_lanes);
        for (id, track) in &ds.tracks {
            for (a, b) in track.iter().zip(back.track(*id).unwrap()) {
                for (u, v) in [(a.x, b.x), (a.y, b.y), (a.vx, b.vx), (a.vy, b.vy), (a.ax, b.ax), (a.ay, b.ay)] {
                    assert!((u - v).abs() < 1e-9);
                }
            }
        }
        assert_eq!(load_directory(out.path()).unwrap().len(), 1);
    }
}
