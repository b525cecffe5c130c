//! CSV and binary PGM export of spectrograms.
//!
//! CSV rows are `frame,center,bin,magnitude` after a header line. PGM images
//! are `P5` with maxval 255: one column per frame, one row per bin with bin
//! 0 on the bottom row. Pixel values are `255·(v − min)/(max − min)` with
//! `v = log10(|F| + 1e-6)`; frames with fewer bins leave the top of their
//! column at 0.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::stft::Spectrogram;

pub const CSV_HEADER: &str = "frame,center,bin,magnitude";

const LOG_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Pgm,
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid("path", format!("{} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn spectrogram_csv(spec: &Spectrogram) -> String {
    let mut out = String::with_capacity(32 * spec.bin_counts().iter().sum::<usize>());
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, (frame, center)) in spec.frames().iter().zip(spec.centers()).enumerate() {
        for (k, c) in frame.iter().enumerate() {
            let _ = writeln!(out, "{i},{center},{k},{}", c.norm());
        }
    }
    out
}

/// Magnitude columns to render, one per frame.
fn magnitude_columns(spec: &Spectrogram) -> Vec<Vec<f64>> {
    (0..spec.len()).map(|i| spec.magnitudes(i)).collect()
}

pub fn pgm_from_magnitudes(columns: &[Vec<f64>]) -> Result<Vec<u8>> {
    let width = columns.len();
    let height = columns.iter().map(Vec::len).max().unwrap_or(0);
    if width == 0 || height == 0 {
        return Err(Error::Degenerate("cannot render an empty spectrogram".into()));
    }
    let logs: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| c.iter().map(|m| (m + LOG_FLOOR).log10()).collect())
        .collect();
    let (lo, hi) = logs
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;

    let header = format!("P5\n{width} {height}\n255\n");
    let mut out = Vec::with_capacity(header.len() + width * height);
    out.extend_from_slice(header.as_bytes());
    for row in 0..height {
        let bin = height - 1 - row;
        for col in &logs {
            let px = match col.get(bin) {
                Some(&v) if range > 0.0 => (255.0 * (v - lo) / range).round() as u8,
                _ => 0,
            };
            out.push(px);
        }
    }
    Ok(out)
}

pub fn spectrogram_pgm(spec: &Spectrogram) -> Result<Vec<u8>> {
    pgm_from_magnitudes(&magnitude_columns(spec))
}

pub fn export_spectrogram(spec: &Spectrogram, path: impl AsRef<Path>, format: ExportFormat) -> Result<()> {
    if spec.is_empty() {
        return Err(Error::Degenerate("cannot export an empty spectrogram".into()));
    }
    let bytes = match format {
        ExportFormat::Csv => spectrogram_csv(spec).into_bytes(),
        ExportFormat::Pgm => spectrogram_pgm(spec)?,
    };
    write_atomic(path.as_ref(), &bytes)
}

/// Parses the CSV export back into a magnitude-only spectrogram. Errors
/// carry the 1-based line number.
pub fn parse_spectrogram_csv(text: &str) -> Result<Spectrogram> {
    let mut frames: Vec<Vec<Complex64>> = Vec::new();
    let mut centers: Vec<f64> = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        Some((line, h)) => {
            return Err(Error::Csv {
                line,
                reason: format!("expected header `{CSV_HEADER}`, found `{h}`"),
            })
        }
        None => {
            return Err(Error::Csv {
                line: 1,
                reason: "empty file".into(),
            })
        }
    }
    for (line, row) in lines {
        if row.is_empty() {
            continue;
        }
        let err = |reason: String| Error::Csv { line, reason };
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        }
        let frame: usize = fields[0].parse().map_err(|_| err(format!("bad frame index `{}`", fields[0])))?;
        let center: f64 = fields[1].parse().map_err(|_| err(format!("bad center `{}`", fields[1])))?;
        let bin: usize = fields[2].parse().map_err(|_| err(format!("bad bin `{}`", fields[2])))?;
        let mag: f64 = fields[3].parse().map_err(|_| err(format!("bad magnitude `{}`", fields[3])))?;
        if !(mag >= 0.0 && mag.is_finite()) {
            return Err(err(format!("magnitude must be finite and non-negative, got {mag}")));
        }
        if frame == frames.len() {
            if bin != 0 {
                return Err(err(format!("frame {frame} must start at bin 0")));
            }
            frames.push(Vec::new());
            centers.push(center);
        } else if frame + 1 != frames.len() {
            return Err(err(format!("frame index {frame} out of sequence")));
        } else if bin != frames[frame].len() {
            return Err(err(format!("bin {bin} out of sequence in frame {frame}")));
        } else if center != centers[frame] {
            return Err(err(format!("center changes within frame {frame}")));
        }
        frames[frame].push(Complex64::new(mag, 0.0));
    }
    if frames.is_empty() {
        return Err(Error::Csv {
            line: 2,
            reason: "no data rows".into(),
        });
    }
    Spectrogram::new(frames, centers)
}

/// Renders a CSV export to PGM bytes.
pub fn render_csv(text: &str) -> Result<Vec<u8>> {
    spectrogram_pgm(&parse_spectrogram_csv(text)?)
}
