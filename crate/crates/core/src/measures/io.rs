//! Text measure files, image ingestion (PGM and CSV grids) and dataset directories.
//!
//! A measure file starts with `n m` and is followed by `m` lines `w x₁ … xₙ`.
//! A dataset directory holds one file per measure (`*.measure`, `*.pgm` or
//! `*.csv`), read in lexicographic filename order, plus an optional
//! `labels.csv` with rows `index,label` where `index` is the 0-based position
//! in that order.

use std::fs;
use std::path::{Path, PathBuf};

use super::{measure_from_grid_image, DiscreteMeasure, GridImage, MeasureDataset};
use crate::error::{Error, Result};

pub const LABELS_FILE: &str = "labels.csv";

pub fn parse_measure(text: &str) -> Result<DiscreteMeasure> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty measure file".into()))?;
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Format(format!("bad header `{header}`")))
        })
        .collect::<Result<_>>()?;
    let [n, m] = head[..] else {
        return Err(Error::Format(format!(
            "header must be `n m`, got `{header}`"
        )));
    };
    let mut points = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for k in 0..m {
        let line = lines
            .next()
            .ok_or_else(|| Error::Format(format!("expected {m} atoms, found {k}")))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Format(format!("bad number `{t}`")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != n + 1 {
            return Err(Error::Format(format!(
                "atom line has {} fields, expected {}",
                vals.len(),
                n + 1
            )));
        }
        weights.push(vals[0]);
        points.push(vals[1..].to_vec());
    }
    if lines.next().is_some() {
        return Err(Error::Format("trailing data after atoms".into()));
    }
    DiscreteMeasure::new(points, weights)
}

pub fn format_measure(measure: &DiscreteMeasure) -> String {
    let mut out = format!("{} {}\n", measure.dim(), measure.len());
    for (w, p) in measure.weights().iter().zip(measure.points()) {
        out.push_str(&w.to_string());
        for x in p {
            out.push(' ');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn read_measure(path: &Path) -> Result<DiscreteMeasure> {
    parse_measure(&fs::read_to_string(path)?)
}

pub fn write_measure(measure: &DiscreteMeasure, path: &Path) -> Result<()> {
    fs::write(path, format_measure(measure))?;
    Ok(())
}

/// Reads a plain (P2) or raw (P5) PGM image.
pub fn parse_pgm(bytes: &[u8]) -> Result<GridImage> {
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token(bytes)?;
    let num = |s: String| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Format(format!("bad PGM header field `{s}`")))
    };
    let width = num(token(bytes)?)?;
    let height = num(token(bytes)?)?;
    let maxval = num(token(bytes)?)?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("bad PGM maxval {maxval}")));
    }
    let count = width * height;
    let values = match magic.as_str() {
        "P2" => (0..count)
            .map(|_| token(bytes).and_then(num).map(|v| v as f64))
            .collect::<Result<Vec<_>>>()?,
        "P5" => {
            // exactly one whitespace byte separates the header from the raster
            let raster = &bytes[(pos + 1).min(bytes.len())..];
            let width_bytes = if maxval < 256 { 1 } else { 2 };
            if raster.len() < count * width_bytes {
                return Err(Error::Format("truncated PGM raster".into()));
            }
            if width_bytes == 1 {
                raster[..count].iter().map(|&b| b as f64).collect()
            } else {
                raster[..2 * count]
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
                    .collect()
            }
        }
        other => return Err(Error::Format(format!("unsupported PGM magic `{other}`"))),
    };
    GridImage::new(height, width, values)
}

/// Reads a grid of comma-separated intensities, one image row per line.
pub fn parse_csv_grid(text: &str) -> Result<GridImage> {
    let rows = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Format(format!("bad pixel `{t}`")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    GridImage::from_rows(&rows)
}

fn is_measure_file(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    if name == LABELS_FILE {
        return false;
    }
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("measure" | "pgm" | "csv")
    )
}

fn read_any(path: &Path, threshold: f64) -> Result<DiscreteMeasure> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => measure_from_grid_image(&parse_pgm(&fs::read(path)?)?, threshold),
        Some("csv") => {
            measure_from_grid_image(&parse_csv_grid(&fs::read_to_string(path)?)?, threshold)
        }
        _ => read_measure(path),
    }
}

pub fn parse_labels(text: &str, n: usize) -> Result<Vec<i64>> {
    let mut labels = vec![None; n];
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if line.starts_with("index") {
            continue;
        }
        let (i, l) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("bad label row `{line}`")))?;
        let i: usize = i
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad label index `{i}`")))?;
        let l: i64 = l
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad label `{l}`")))?;
        if i >= n {
            return Err(Error::Format(format!("label index {i} >= {n}")));
        }
        labels[i] = Some(l);
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::Format(format!("missing label for index {i}"))))
        .collect()
}

pub fn format_labels(labels: &[i64]) -> String {
    let mut out = String::from("index,label\n");
    for (i, l) in labels.iter().enumerate() {
        out.push_str(&format!("{i},{l}\n"));
    }
    out
}

pub fn load_dataset_dir(dir: &Path, threshold: f64) -> Result<MeasureDataset> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.is_file() && is_measure_file(p));
    files.sort();
    let measures = files
        .iter()
        .map(|p| read_any(p, threshold))
        .collect::<Result<Vec<_>>>()?;
    let labels_path = dir.join(LABELS_FILE);
    let labels = if labels_path.exists() {
        Some(parse_labels(
            &fs::read_to_string(labels_path)?,
            measures.len(),
        )?)
    } else {
        None
    };
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("dataset")
        .to_string();
    MeasureDataset::new(name, measures, labels)
}

pub fn save_dataset_dir(data: &MeasureDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, m) in data.measures().iter().enumerate() {
        write_measure(m, &dir.join(format!("{i:06}.measure")))?;
    }
    if let Some(labels) = data.labels() {
        fs::write(dir.join(LABELS_FILE), format_labels(labels))?;
    }
    Ok(())
}
