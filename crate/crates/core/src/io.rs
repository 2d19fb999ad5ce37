//! File formats: weight maps in, patterns and tables out.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::modulated::{Rect, WeightMap};
use crate::pattern::SampledPattern;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternFormat {
    Csv,
    Json,
}

impl PatternFormat {
    /// `.json` is JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match extension(path).as_deref() {
            Some("json") => PatternFormat::Json,
            _ => PatternFormat::Csv,
        }
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase)
}

fn check_path(path: &Path) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(domain("empty path"));
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    check_path(path)?;
    Ok(BufWriter::new(File::create(path)?))
}

/// Weight map from an 8-bit PGM (`.pgm`) or a numeric CSV grid (anything
/// else). The first row of either file is the top of the field of view.
/// Values are divided by the largest entry.
pub fn load_weight_map(path: &Path) -> Result<WeightMap> {
    check_path(path)?;
    let (rows, cols, values) = match extension(path).as_deref() {
        Some("pgm") => read_pgm(path)?,
        _ => read_csv_grid(path)?,
    };
    grid_to_weight_map(rows, cols, values)
}

fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let mut reader = ImageReader::open(path)?;
    reader.set_format(ImageFormat::Pnm);
    let img = reader
        .decode()
        .map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
    let DynamicImage::ImageLuma8(gray) = img else {
        return Err(Error::Ingest(format!(
            "{}: expected an 8-bit grayscale PGM, got {:?}",
            path.display(),
            img.color()
        )));
    };
    let (w, h) = gray.dimensions();
    Ok((
        h as usize,
        w as usize,
        gray.into_raw().into_iter().map(f64::from).collect(),
    ))
}

fn read_csv_grid(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::Ingest(format!(
                    "{}: row {} has {} values, expected {c}",
                    path.display(),
                    r + 1,
                    record.len()
                )))
            }
            _ => {}
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Ingest(format!(
                    "{}: row {}, column {}: not a number: {field:?}",
                    path.display(),
                    r + 1,
                    c + 1
                ))
            })?;
            values.push(v);
        }
        rows += 1;
    }
    Ok((rows, cols.unwrap_or(0), values))
}

/// Row-major grid with row 0 at the top, scaled to a maximum of 1.
pub fn grid_to_weight_map(rows: usize, cols: usize, values: Vec<f64>) -> Result<WeightMap> {
    if rows == 0 || cols == 0 {
        return Err(Error::Ingest("weight map is empty".into()));
    }
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Ingest(format!(
            "weights must be finite and nonnegative (found {bad})"
        )));
    }
    let max = values.iter().fold(0.0f64, |a, &b| a.max(b));
    if max <= 0.0 {
        return Err(Error::Ingest("weight map has no positive entry".into()));
    }
    let m = rows;
    let mut w = vec![0.0; m * m];
    for (i, v) in values.into_iter().enumerate() {
        let (row, col) = (i / m, i % m);
        w[(m - 1 - row) * m + col] = v / max;
    }
    WeightMap::new(m, w)
}

/// Rectangle list stored as a JSON array of `{x0, x1, y0, y1}`.
pub fn load_rects(path: &Path) -> Result<Vec<Rect>> {
    let rects: Vec<Rect> = read_json(path)?;
    rects.iter().map(|r| Rect::new(r.x0, r.x1, r.y0, r.y1)).collect()
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    check_path(path)?;
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// One CSV row per item, header from the field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_pattern(pattern: &SampledPattern, path: &Path, format: PatternFormat) -> Result<()> {
    pattern.validate()?;
    match format {
        PatternFormat::Json => write_json(path, pattern),
        PatternFormat::Csv => {
            let mut w = csv::Writer::from_writer(create(path)?);
            w.write_record(["t", "x", "y"])?;
            for i in 0..pattern.len() {
                // shortest representation that parses back to the same f64
                w.write_record([pattern.t[i], pattern.x[i], pattern.y[i]].map(|v| v.to_string()))?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

/// Reads a pattern written by [`export_pattern`]. CSV carries no frame
/// metadata, so a CSV import is one frame spanning the sampled time.
pub fn import_pattern(path: &Path, format: PatternFormat) -> Result<SampledPattern> {
    match format {
        PatternFormat::Json => {
            let p: SampledPattern = read_json(path)?;
            p.validate()?;
            Ok(p)
        }
        PatternFormat::Csv => {
            check_path(path)?;
            #[derive(Deserialize)]
            struct Row {
                t: f64,
                x: f64,
                y: f64,
            }
            let mut r = csv::Reader::from_path(path)?;
            let (mut t, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
            for row in r.deserialize() {
                let row: Row = row?;
                t.push(row.t);
                x.push(row.x);
                y.push(row.y);
            }
            if t.len() < 2 {
                return Err(Error::Ingest(format!("{}: need at least 2 samples", path.display())));
            }
            let span = (t[t.len() - 1] - t[0]) * t.len() as f64 / (t.len() - 1) as f64;
            let frame_len = span.round().max(1.0) as u32;
            SampledPattern::new(t, x, y, frame_len, 1)
        }
    }
}
