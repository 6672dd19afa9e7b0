//! Per-step traces and their CSV / JSON export.
//!
//! CSV traces use the header
//! `t,north,east,heading,ux,s,e,ax,steer,scale,stop_scale,unobservable_count,count_bin,detected,p_crossing,belief_entropy`;
//! the belief columns are empty for policies without a belief.

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::belief::PolicyKind;
use crate::path::NorthEast;
use crate::world::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub north: f64,
    pub east: f64,
    pub heading: f64,
    pub ux: f64,
    pub s: f64,
    pub e: f64,
    pub ax: f64,
    pub steer: f64,
    /// Scale chosen by the policy.
    pub scale: f64,
    /// Limit imposed by a perceived stop constraint (1 when none).
    pub stop_scale: f64,
    pub unobservable_count: usize,
    pub count_bin: usize,
    pub detected: bool,
    pub p_crossing: Option<f64>,
    pub belief_entropy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Ran for the configured duration.
    Duration,
    /// Reached or left the end of the path.
    PathEnd,
    /// Stood still too long without a reason to stop.
    Stuck,
    /// Came too close to the occluding vehicle to maneuver.
    Proximity,
    /// A dynamics or filter error cut the run short.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub name: String,
    pub policy: PolicyKind,
    pub seed: u64,
    pub desired_speed: f64,
    pub control_period: f64,
    pub decision_period: f64,
    pub duration: f64,
    /// Path distance of the crosswalk stop line, m.
    pub crosswalk_line: f64,
    pub termination: Termination,
    pub belief_resets: usize,
    pub scene: Scene,
    pub path: Vec<NorthEast>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub meta: TraceMeta,
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Csv,
    Json,
}

impl std::str::FromStr for TraceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(TraceFormat::Csv),
            "json" => Ok(TraceFormat::Json),
            other => Err(format!("unknown trace format {other:?}")),
        }
    }
}

fn io_err(path: &FsPath) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &FsPath) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Serializes rows as CSV text (header only when empty).
pub fn rows_to_csv(rows: &[TraceRow]) -> Result<String, HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record([
        "t",
        "north",
        "east",
        "heading",
        "ux",
        "s",
        "e",
        "ax",
        "steer",
        "scale",
        "stop_scale",
        "unobservable_count",
        "count_bin",
        "detected",
        "p_crossing",
        "belief_entropy",
    ])
    .map_err(csv_err(FsPath::new("<memory>")))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(FsPath::new("<memory>")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Csv {
            path: "<memory>".into(),
            message: e.to_string(),
        })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<TraceRow>, HarnessError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .collect::<Result<Vec<TraceRow>, _>>()
        .map_err(csv_err(FsPath::new("<memory>")))
}

pub fn trace_to_json(trace: &Trace) -> Result<String, HarnessError> {
    serde_json::to_string_pretty(trace).map_err(|e| HarnessError::Json(e.to_string()))
}

pub fn trace_from_json(text: &str) -> Result<Trace, HarnessError> {
    serde_json::from_str(text).map_err(|e| HarnessError::Json(e.to_string()))
}

fn write_simple_csv(path: &FsPath, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(&r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes the trace plus plot-ready companions into `dir`:
///
/// - `<stem>.csv` (rows) and `<stem>_meta.json`, or `<stem>.json` (both)
/// - `<stem>_overhead.csv`: `kind,id,north,east` for the path, the driven
///   trajectory, obstacle outlines and the pedestrian
/// - `<stem>_speed.csv`: `t,ux,scale,stop_scale`
/// - `<stem>_unobservable.csv`: `t,unobservable_count,count_bin`
///
/// Returns the files written.
pub fn export_trace(
    trace: &Trace,
    format: TraceFormat,
    dir: &FsPath,
    stem: &str,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    match format {
        TraceFormat::Csv => {
            let p = dir.join(format!("{stem}.csv"));
            fs::write(&p, rows_to_csv(&trace.rows)?).map_err(io_err(&p))?;
            written.push(p);
            let p = dir.join(format!("{stem}_meta.json"));
            let meta = serde_json::to_string_pretty(&trace.meta).map_err(|e| HarnessError::Json(e.to_string()))?;
            fs::write(&p, meta).map_err(io_err(&p))?;
            written.push(p);
        }
        TraceFormat::Json => {
            let p = dir.join(format!("{stem}.json"));
            fs::write(&p, trace_to_json(trace)?).map_err(io_err(&p))?;
            written.push(p);
        }
    }

    let p = dir.join(format!("{stem}_overhead.csv"));
    let mut overhead: Vec<Vec<String>> = Vec::new();
    for pt in &trace.meta.path {
        overhead.push(vec!["path".into(), "0".into(), pt.north.to_string(), pt.east.to_string()]);
    }
    for r in &trace.rows {
        overhead.push(vec!["trajectory".into(), "0".into(), r.north.to_string(), r.east.to_string()]);
    }
    for (i, o) in trace.meta.scene.obstacles.iter().enumerate() {
        let corners = o.corners();
        for &(x, y) in corners.iter().chain(corners.first()) {
            overhead.push(vec!["obstacle".into(), i.to_string(), x.to_string(), (-y).to_string()]);
        }
    }
    let cw = trace.meta.scene.crosswalk;
    let road = trace.meta.scene.road;
    for (x, y) in [
        (cw.start, road.right),
        (cw.start, road.left),
        (cw.start + cw.width, road.left),
        (cw.start + cw.width, road.right),
        (cw.start, road.right),
    ] {
        overhead.push(vec!["crosswalk".into(), "0".into(), x.to_string(), (-y).to_string()]);
    }
    if let Some(ped) = trace.meta.scene.pedestrian {
        overhead.push(vec!["pedestrian".into(), "0".into(), ped.x.to_string(), (-ped.y).to_string()]);
    }
    write_simple_csv(&p, &["kind", "id", "north", "east"], overhead.into_iter())?;
    written.push(p);

    let p = dir.join(format!("{stem}_speed.csv"));
    write_simple_csv(
        &p,
        &["t", "ux", "scale", "stop_scale"],
        trace.rows.iter().map(|r| {
            vec![r.t.to_string(), r.ux.to_string(), r.scale.to_string(), r.stop_scale.to_string()]
        }),
    )?;
    written.push(p);

    let p = dir.join(format!("{stem}_unobservable.csv"));
    write_simple_csv(
        &p,
        &["t", "unobservable_count", "count_bin"],
        trace.rows.iter().map(|r| {
            vec![r.t.to_string(), r.unobservable_count.to_string(), r.count_bin.to_string()]
        }),
    )?;
    written.push(p);
    Ok(written)
}
