//! NGSIM-style trajectory CSV files.

use levelk_core::ingest::{TrajectoryRecord, FEET_TO_METERS};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Header names of the five columns the pipeline reads.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub vehicle_id: String,
    pub frame: String,
    pub local_y: String,
    pub velocity: String,
    pub lane: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            vehicle_id: "Vehicle_ID".into(),
            frame: "Frame_ID".into(),
            local_y: "Local_Y".into(),
            velocity: "v_Vel".into(),
            lane: "Lane_ID".into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("file is empty")]
    Empty,
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Parsed {
    pub records: Vec<TrajectoryRecord>,
    /// Rows with a missing or unparseable field.
    pub skipped_rows: usize,
}

fn int(s: &str) -> Option<i64> {
    s.parse::<i64>().ok().or_else(|| {
        let f: f64 = s.parse().ok()?;
        (f.fract() == 0.0 && f.is_finite()).then_some(f as i64)
    })
}

fn float(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Read trajectory rows; with `feet` set, positions and speeds are
/// converted to meters.
pub fn parse_trajectories<R: Read>(input: R, map: &ColumnMap, feet: bool) -> Result<Parsed, ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(ParseError::Empty);
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ParseError::MissingColumn(name.to_string()))
    };
    let cols = [
        column(&map.vehicle_id)?,
        column(&map.frame)?,
        column(&map.local_y)?,
        column(&map.velocity)?,
        column(&map.lane)?,
    ];
    let scale = if feet { FEET_TO_METERS } else { 1.0 };
    let mut out = Parsed::default();
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => {
                out.skipped_rows += 1;
                continue;
            }
        };
        let field = |i: usize| row.get(cols[i]).unwrap_or("");
        let parsed = (|| {
            let id = int(field(0)).filter(|&v| v >= 0)?;
            let lane = int(field(4))?;
            Some(TrajectoryRecord {
                vehicle_id: id as u64,
                frame: int(field(1))?,
                local_y: float(field(2))? * scale,
                lane: i32::try_from(lane).ok()?,
                v: float(field(3))? * scale,
            })
        })();
        match parsed {
            Some(r) => out.records.push(r),
            None => out.skipped_rows += 1,
        }
    }
    if out.records.is_empty() && out.skipped_rows == 0 {
        return Err(ParseError::Empty);
    }
    Ok(out)
}

/// Write records with the mapped header, converting to feet if asked.
pub fn write_trajectories<W: Write>(
    out: W,
    records: &[TrajectoryRecord],
    map: &ColumnMap,
    feet: bool,
) -> Result<(), csv::Error> {
    let scale = if feet { 1.0 / FEET_TO_METERS } else { 1.0 };
    let mut w = csv::Writer::from_writer(out);
    w.write_record([&map.vehicle_id, &map.frame, &map.local_y, &map.velocity, &map.lane])?;
    for r in records {
        w.write_record([
            r.vehicle_id.to_string(),
            r.frame.to_string(),
            (r.local_y * scale).to_string(),
            (r.v * scale).to_string(),
            r.lane.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
