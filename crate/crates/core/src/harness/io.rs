//! CSV ingestion and emission.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stream::{Batch, DiffStream, Domain, Event, Point};

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => parse_err(path, line, format!("{kind:?}")),
    }
}

/// Reads `t,x,y[,w]` rows over the unit square. See [`read_events_csv_in`].
pub fn read_events_csv(path: impl AsRef<Path>) -> Result<DiffStream> {
    read_events_csv_in(path, &Domain::unit(2))
}

/// Reads an event file with header `t,x,y` and an optional `w` column
/// (weight ±1, default +1). Rows are grouped into batches by `t`; the stream
/// is checked for domain membership and prefix-positivity.
pub fn read_events_csv_in(path: impl AsRef<Path>, domain: &Domain) -> Result<DiffStream> {
    let path = path.as_ref();
    if domain.dim() != 2 {
        return Err(Error::InvalidParameter("event files hold 2-D points".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ti), Some(xi), Some(yi)) = (column("t"), column("x"), column("y")) else {
        return Err(parse_err(path, 1, format!("header must contain t,x,y, got {:?}", headers)));
    };
    let wi = column("w");

    let mut by_time: BTreeMap<u64, Vec<Event>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| {
            record
                .get(i)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| parse_err(path, line, format!("missing {name}")))
        };
        let t: u64 = field(ti, "t")?
            .parse()
            .map_err(|_| parse_err(path, line, "t must be a positive integer"))?;
        if t == 0 {
            return Err(parse_err(path, line, "t must be a positive integer"));
        }
        let num = |i, name| -> Result<f64> {
            field(i, name)?
                .parse::<f64>()
                .map_err(|_| parse_err(path, line, format!("{name} is not a number")))
        };
        let point = Point::xy(num(xi, "x")?, num(yi, "y")?);
        if !domain.contains(&point) {
            return Err(parse_err(path, line, format!("point {:?} outside the domain", point.coords())));
        }
        let w = match wi.and_then(|i| record.get(i)).filter(|s| !s.is_empty()) {
            None => 1,
            Some(s) => s
                .parse::<i64>()
                .map_err(|_| parse_err(path, line, "w must be 1 or -1"))?,
        };
        let event = Event::new(point, w).map_err(|_| parse_err(path, line, "w must be 1 or -1"))?;
        by_time.entry(t).or_default().push(event);
    }
    let batches = by_time.into_iter().map(|(t, events)| Batch::new(t, events)).collect();
    let stream = DiffStream::new(domain.clone(), batches)?;
    stream.validate_prefix_positivity()?;
    Ok(stream)
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

/// Writes `t,x,y,w` rows; floats use shortest round-trip formatting.
pub fn write_events_csv(path: impl AsRef<Path>, stream: &DiffStream) -> Result<()> {
    let path = path.as_ref();
    let mut out = csv::Writer::from_writer(create(path)?);
    let wrap = |e: csv::Error| csv_err(path, e);
    out.write_record(["t", "x", "y", "w"]).map_err(wrap)?;
    for b in stream.batches() {
        for e in &b.events {
            out.serialize((b.time, e.point[0], e.point[1], e.weight())).map_err(wrap)?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Writes `x,y` rows.
pub fn write_points_csv(path: impl AsRef<Path>, points: &[Point]) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(create(path)?);
    let io = |e| Error::io(path, e);
    writeln!(out, "x,y").map_err(io)?;
    for p in points {
        writeln!(out, "{},{}", p[0], p[1]).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_points_csv(path: impl AsRef<Path>) -> Result<Vec<Point>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut points = Vec::new();
    for record in reader.deserialize::<(f64, f64)>() {
        let (x, y) = record.map_err(|e| csv_err(path, e))?;
        points.push(Point::xy(x, y));
    }
    Ok(points)
}
