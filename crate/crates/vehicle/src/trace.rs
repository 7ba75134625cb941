//! Sensor trace and driver action files.
//!
//! Both are comma-separated with a fixed header, LF line endings and `.` as
//! decimal separator. An absent sensor reading is an empty field.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::actuator::{Action, Actuator};
use crate::VehicleError;

pub const SENSOR_HEADER: [&str; 5] = ["tick", "eyesState", "facePosition", "hbpm", "hosw"];
pub const ACTION_HEADER: [&str; 3] = ["tick", "actuator", "action"];

/// Raw readings of one vehicle tick; `None` is a lost sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorTraceRow {
    pub tick: u64,
    pub eyes_state: Option<f64>,
    pub face_position: Option<f64>,
    pub hbpm: Option<f64>,
    pub hosw: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverAction {
    pub tick: u64,
    pub actuator: Actuator,
    pub action: Action,
}

impl DriverAction {
    pub fn new(tick: u64, actuator: Actuator, action: Action) -> Result<Self, VehicleError> {
        if action == Action::TurnOn && actuator != Actuator::LaneKeeping {
            return Err(VehicleError::InvalidAction { actuator, action });
        }
        Ok(Self { tick, actuator, action })
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sensor_trace<W: Write>(rows: &[SensorTraceRow], w: W) -> Result<(), VehicleError> {
    let mut out = writer(w);
    out.write_record(SENSOR_HEADER)?;
    for r in rows {
        out.write_record([r.tick.to_string(), opt(r.eyes_state), opt(r.face_position), opt(r.hbpm), opt(r.hosw)])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a trace, checking the header and that ticks run 0, 1, 2, ...
pub fn read_sensor_trace<R: Read>(r: R, file: &str) -> Result<Vec<SensorTraceRow>, VehicleError> {
    let err = |line: usize, reason: String| VehicleError::Format {
        file: file.to_string(),
        line,
        reason,
    };
    let mut rows = Vec::new();
    for (i, record) in reader(r).records().enumerate() {
        let record = record?;
        let line = i + 1;
        if i == 0 {
            if record.iter().ne(SENSOR_HEADER) {
                return Err(err(line, format!("header must be `{}`", SENSOR_HEADER.join(","))));
            }
            continue;
        }
        if record.len() != SENSOR_HEADER.len() {
            return Err(err(line, format!("expected 5 fields, found {}", record.len())));
        }
        let tick: u64 = record[0].parse().map_err(|_| err(line, format!("bad tick `{}`", &record[0])))?;
        if tick != rows.len() as u64 {
            return Err(err(line, format!("tick {tick} breaks the sequence; expected {}", rows.len())));
        }
        let field = |k: usize| -> Result<Option<f64>, VehicleError> {
            let s = &record[k];
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| err(line, format!("bad {} value `{s}`", SENSOR_HEADER[k])))
        };
        rows.push(SensorTraceRow {
            tick,
            eyes_state: field(1)?,
            face_position: field(2)?,
            hbpm: field(3)?,
            hosw: field(4)?,
        });
    }
    if rows.is_empty() {
        return Err(err(1, "trace has no rows".into()));
    }
    Ok(rows)
}

pub fn write_actions<W: Write>(actions: &[DriverAction], w: W) -> Result<(), VehicleError> {
    let mut out = writer(w);
    out.write_record(ACTION_HEADER)?;
    for a in actions {
        out.write_record([a.tick.to_string(), a.actuator.to_string(), a.action.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads driver actions; ticks must not decrease.
pub fn read_actions<R: Read>(r: R, file: &str) -> Result<Vec<DriverAction>, VehicleError> {
    let err = |line: usize, reason: String| VehicleError::Format {
        file: file.to_string(),
        line,
        reason,
    };
    let mut actions: Vec<DriverAction> = Vec::new();
    for (i, record) in reader(r).records().enumerate() {
        let record = record?;
        let line = i + 1;
        if i == 0 {
            if record.iter().ne(ACTION_HEADER) {
                return Err(err(line, format!("header must be `{}`", ACTION_HEADER.join(","))));
            }
            continue;
        }
        if record.len() != 3 {
            return Err(err(line, format!("expected 3 fields, found {}", record.len())));
        }
        let tick: u64 = record[0].parse().map_err(|_| err(line, format!("bad tick `{}`", &record[0])))?;
        if actions.last().is_some_and(|a| a.tick > tick) {
            return Err(err(line, "ticks must not decrease".into()));
        }
        let actuator: Actuator = record[1].parse().map_err(|e| err(line, e))?;
        let action: Action = record[2].parse().map_err(|e| err(line, e))?;
        let a = DriverAction::new(tick, actuator, action).map_err(|e| err(line, e.to_string()))?;
        actions.push(a);
    }
    Ok(actions)
}

pub fn write_sensor_file(rows: &[SensorTraceRow], path: &Path) -> Result<(), VehicleError> {
    write_sensor_trace(rows, File::create(path)?)
}

pub fn read_sensor_file(path: &Path) -> Result<Vec<SensorTraceRow>, VehicleError> {
    read_sensor_trace(File::open(path)?, &path.display().to_string())
}

pub fn write_actions_file(actions: &[DriverAction], path: &Path) -> Result<(), VehicleError> {
    write_actions(actions, File::create(path)?)
}

pub fn read_actions_file(path: &Path) -> Result<Vec<DriverAction>, VehicleError> {
    read_actions(File::open(path)?, &path.display().to_string())
}
