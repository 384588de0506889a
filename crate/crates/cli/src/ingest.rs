//! Reading `(x1, x2, y)` tables.

use std::path::Path;

use filament::Point;
use serde::{Deserialize, Serialize};

use crate::config::DataConfig;
use crate::error::{CliError, Result};

/// Per-coordinate affine map from the observed range onto [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Transform {
    pub fn identity() -> Self {
        Self {
            lo: [0.0, 0.0],
            hi: [1.0, 1.0],
        }
    }

    /// Original coordinates to the unit square.
    pub fn forward(&self, p: Point) -> Point {
        [0, 1].map(|k| ((p[k] - self.lo[k]) / (self.hi[k] - self.lo[k])).clamp(0.0, 1.0))
    }

    /// Unit square back to original coordinates.
    pub fn inverse(&self, u: Point) -> Point {
        [0, 1].map(|k| self.lo[k] + u[k] * (self.hi[k] - self.lo[k]))
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    /// Design points in unit-square coordinates.
    pub xs: Vec<Point>,
    pub ys: Vec<f64>,
    /// Present when the coordinates were rescaled.
    pub transform: Option<Transform>,
}

fn column_index(path: &Path, headers: Option<&csv::StringRecord>, name: &str) -> Result<usize> {
    match headers {
        Some(h) => h
            .iter()
            .position(|c| c.trim() == name)
            .ok_or_else(|| CliError::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            }),
        None => name.parse().map_err(|_| CliError::Config(format!("column position {name:?} is not an integer"))),
    }
}

/// Reads three numeric columns from a CSV file. With `cfg.rescale`, each
/// coordinate's observed `[min, max]` is mapped affinely onto [0, 1]; `y`
/// is passed through untouched.
pub fn ingest_csv(path: &Path, cfg: &DataConfig) -> Result<Ingested> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(cfg.has_header)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |e: csv::Error| CliError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let headers = if cfg.has_header {
        Some(reader.headers().map_err(csv_err)?.clone())
    } else {
        None
    };
    let mut idx = [0; 3];
    for (k, slot) in idx.iter_mut().enumerate() {
        *slot = column_index(path, headers.as_ref(), &cfg.columns[k])?;
    }

    let mut raw: Vec<[f64; 3]> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        // 1-based line number of the record in the file.
        let row = i + 1 + usize::from(cfg.has_header);
        let mut vals = [0.0; 3];
        for k in 0..3 {
            let cell = rec.get(idx[k]).ok_or_else(|| CliError::MissingColumn {
                path: path.to_path_buf(),
                column: cfg.columns[k].clone(),
            })?;
            vals[k] = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Parse {
                    path: path.to_path_buf(),
                    row,
                    column: cfg.columns[k].clone(),
                    value: cell.to_string(),
                })?;
        }
        raw.push(vals);
    }
    if raw.is_empty() {
        return Err(CliError::EmptyData {
            path: path.to_path_buf(),
        });
    }

    let ys = raw.iter().map(|r| r[2]).collect();
    let pts: Vec<Point> = raw.iter().map(|r| [r[0], r[1]]).collect();
    if !cfg.rescale {
        return Ok(Ingested {
            xs: pts,
            ys,
            transform: None,
        });
    }
    let mut t = Transform {
        lo: [f64::INFINITY; 2],
        hi: [f64::NEG_INFINITY; 2],
    };
    for p in &pts {
        for k in 0..2 {
            t.lo[k] = t.lo[k].min(p[k]);
            t.hi[k] = t.hi[k].max(p[k]);
        }
    }
    for k in 0..2 {
        if !(t.hi[k] > t.lo[k]) {
            return Err(CliError::DegenerateExtent {
                column: cfg.columns[k].clone(),
                value: t.lo[k],
            });
        }
    }
    Ok(Ingested {
        xs: pts.iter().map(|&p| t.forward(p)).collect(),
        ys,
        transform: Some(t),
    })
}
