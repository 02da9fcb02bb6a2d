//! Trajectory CSV (`t,x,y,v,heading`) and small file helpers.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Trajectory, TrajectoryPoint};

pub const TRAJECTORY_HEADER: [&str; 5] = ["t", "x", "y", "v", "heading"];

pub(crate) fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub(crate) fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    parse_error(path, line, err.to_string())
}

/// Checks that the CSV header equals `expected` exactly.
pub(crate) fn expect_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str], path: &Path) -> Result<()> {
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(parse_error(
            path,
            1,
            format!(
                "expected header `{}`, got `{}`",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(())
}

pub fn read_trajectory(reader: impl Read, source: &Path) -> Result<Trajectory> {
    let mut rdr = csv::Reader::from_reader(reader);
    expect_header(&mut rdr, &TRAJECTORY_HEADER, source)?;
    let mut points: Vec<TrajectoryPoint> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(source, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != TRAJECTORY_HEADER.len() {
            return Err(parse_error(source, line, format!("expected 5 fields, got {}", record.len())));
        }
        let mut values = [0.0; 5];
        for (slot, (field, name)) in values.iter_mut().zip(record.iter().zip(TRAJECTORY_HEADER)) {
            *slot = field
                .trim()
                .parse::<f64>()
                .map_err(|e| parse_error(source, line, format!("column `{name}`: {e} (`{field}`)")))?;
            if !slot.is_finite() {
                return Err(parse_error(source, line, format!("column `{name}` is not finite")));
            }
        }
        let [t, x, y, v, heading] = values;
        if v < 0.0 {
            return Err(parse_error(source, line, format!("negative speed {v}")));
        }
        if let Some(last) = points.last() {
            if t <= last.t {
                return Err(parse_error(source, line, format!("time {t} does not increase (previous {})", last.t)));
            }
        }
        points.push(TrajectoryPoint::new(t, x, y, v, heading));
    }
    Trajectory::new(points).map_err(|e| parse_error(source, 0, e.to_string()))
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trajectory(BufReader::new(file), path)
}

pub fn write_trajectory(writer: impl Write, traj: &Trajectory) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{}", TRAJECTORY_HEADER.join(","))?;
    for p in traj.points() {
        writeln!(w, "{},{},{},{},{}", p.t, p.x, p.y, p.v, p.heading)?;
    }
    w.flush()
}

pub fn save_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trajectory(file, traj).map_err(|e| Error::io(path, e))
}

/// Creates `path` and hands a buffered writer to `body`.
pub fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
