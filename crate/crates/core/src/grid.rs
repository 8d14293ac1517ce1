//! Plot-ready scalar field of a two-dimensional estimator.

use std::io::Write;

use rayon::prelude::*;

use crate::christoffel::ChristoffelEstimator;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
    pub rows: usize,
    pub cols: usize,
}

impl GridSpec {
    pub fn new(bounds: [f64; 4], rows: usize, cols: usize) -> Result<Self> {
        let [a, b, c, d] = bounds;
        if !(a <= b) || !(c <= d) || bounds.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "grid bounds {bounds:?} must be finite and ordered (x1min, x1max, x2min, x2max)"
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(
                "grid needs at least one row and column".into(),
            ));
        }
        Ok(GridSpec {
            x1: (a, b),
            x2: (c, d),
            rows,
            cols,
        })
    }

    fn coord(range: (f64, f64), count: usize, i: usize) -> f64 {
        if count == 1 {
            range.0
        } else {
            range.0 + (range.1 - range.0) * i as f64 / (count - 1) as f64
        }
    }

    /// Point at `(row, col)`; rows step through `x2`, columns through `x1`.
    pub fn point(&self, row: usize, col: usize) -> [f64; 2] {
        [
            Self::coord(self.x1, self.cols, col),
            Self::coord(self.x2, self.rows, row),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRecord {
    pub x1: f64,
    pub x2: f64,
    pub value: f64,
    pub inside: bool,
}

/// `C` and membership at every grid node, row-major.
pub fn evaluate_grid(est: &ChristoffelEstimator, spec: &GridSpec) -> Result<Vec<GridRecord>> {
    if est.dim() != 2 {
        return Err(Error::InvalidArgument(format!(
            "grid export needs a 2-dimensional estimator, this one has n = {}",
            est.dim()
        )));
    }
    let alpha = est.alpha();
    (0..spec.rows * spec.cols)
        .into_par_iter()
        .map(|i| {
            let [x1, x2] = spec.point(i / spec.cols, i % spec.cols);
            let value = est.evaluate(&[x1, x2])?;
            Ok(GridRecord {
                x1,
                x2,
                value,
                inside: value <= alpha,
            })
        })
        .collect()
}

pub fn write_grid_csv<W: Write>(records: &[GridRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::InvalidArgument(e.to_string());
    w.write_record(["x1", "x2", "C", "inside"]).map_err(err)?;
    for r in records {
        w.write_record([
            r.x1.to_string(),
            r.x2.to_string(),
            r.value.to_string(),
            u8::from(r.inside).to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("<grid>", e))?;
    Ok(())
}
