//! Monte Carlo sampling of final states `x(t1)` for a reachability problem.
//!
//! Trajectory `i` draws its initial state and disturbance from its own
//! ChaCha8 stream, keyed by `(seed, i)`. Clouds are therefore identical for
//! any thread count, and the first `N` points of a larger run equal an
//! `N`-point run with the same seed.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::systems::{simulate, IntegratorConfig, SystemSpec};

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Interval {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::InvalidArgument(format!(
                "interval component {i}: lower {} exceeds upper {}",
                lower[i], upper[i]
            )));
        }
        Ok(Interval { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

/// Independent random stream for trajectory `index` under `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One uniform draw from the box; zero-width components return the bound.
pub fn draw_uniform<R: Rng + ?Sized>(interval: &Interval, rng: &mut R) -> Vec<f64> {
    interval
        .lower
        .iter()
        .zip(&interval.upper)
        .map(|(&lo, &hi)| {
            let u: f64 = rng.random();
            if hi > lo {
                lo + (hi - lo) * u
            } else {
                lo
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachabilityProblem {
    pub system: SystemSpec,
    pub integrator: IntegratorConfig,
    pub t0: f64,
    pub t1: f64,
    pub initial: Interval,
    pub disturbance: Option<Interval>,
    /// Zero-based state components kept in the cloud; `None` keeps all.
    pub projection: Option<Vec<usize>>,
}

impl ReachabilityProblem {
    pub fn new(
        system: SystemSpec,
        integrator: IntegratorConfig,
        (t0, t1): (f64, f64),
        initial: Interval,
        disturbance: Option<Interval>,
        projection: Option<Vec<usize>>,
    ) -> Result<Self> {
        if !(t1 >= t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time range [{t0}, {t1}] is not ordered"
            )));
        }
        if initial.dim() != system.state_dim() {
            return Err(Error::DimensionMismatch {
                expected: system.state_dim(),
                got: initial.dim(),
            });
        }
        let w = system.disturbance_dim();
        match (&disturbance, w) {
            (None, 0) => {}
            (Some(d), w) if d.dim() == w => {}
            (Some(d), _) => {
                return Err(Error::DimensionMismatch {
                    expected: w,
                    got: d.dim(),
                })
            }
            (None, _) => {
                return Err(Error::InvalidArgument(format!(
                    "system `{}` needs a {w}-dimensional disturbance interval",
                    system.id()
                )))
            }
        }
        if let Some(p) = &projection {
            check_projection(p, system.state_dim())?;
        }
        Ok(ReachabilityProblem {
            system,
            integrator,
            t0,
            t1,
            initial,
            disturbance,
            projection,
        })
    }

    /// Dimension of the stored cloud points.
    pub fn effective_dim(&self) -> usize {
        self.projection
            .as_ref()
            .map_or(self.system.state_dim(), Vec::len)
    }

    /// Hex digest of the problem definition.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("problem serializes");
        let hash = Sha256::digest(&canonical);
        hash[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn labels(&self) -> Vec<String> {
        match &self.projection {
            Some(p) => p.iter().map(|i| format!("x{}", i + 1)).collect(),
            None => (1..=self.system.state_dim())
                .map(|i| format!("x{i}"))
                .collect(),
        }
    }

    /// Final state for trajectory `index`, after projection.
    pub fn sample_point(&self, seed: u64, index: u64) -> Result<Vec<f64>> {
        let mut rng = stream_rng(seed, index);
        let x0 = draw_uniform(&self.initial, &mut rng);
        let d = self
            .disturbance
            .as_ref()
            .map(|iv| draw_uniform(iv, &mut rng))
            .unwrap_or_default();
        let x = simulate(&self.system, &self.integrator, self.t0, self.t1, &x0, &d).map_err(
            |e| match e {
                Error::NonFinite { time, .. } => Error::NonFinite {
                    time,
                    index: Some(index as usize),
                },
                other => other,
            },
        )?;
        Ok(match &self.projection {
            Some(p) => p.iter().map(|&i| x[i]).collect(),
            None => x,
        })
    }
}

fn check_projection(indices: &[usize], dim: usize) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("projection is empty".into()));
    }
    for (pos, &i) in indices.iter().enumerate() {
        if i >= dim {
            return Err(Error::IndexOutOfRange { index: i, dim });
        }
        if indices[..pos].contains(&i) {
            return Err(Error::InvalidArgument(format!(
                "projection repeats component {i}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub digest: Option<String>,
}

/// `N` points of common dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud {
    dim: usize,
    data: Vec<f64>,
    labels: Vec<String>,
    pub provenance: Provenance,
}

impl SampleCloud {
    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            data.extend_from_slice(p);
        }
        Self::from_flat(dim, data)
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} values do not form points of dimension {dim}",
                data.len()
            )));
        }
        if data.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "cloud contains non-finite values".into(),
            ));
        }
        Ok(SampleCloud {
            dim,
            data,
            labels: (1..=dim).map(|i| format!("x{i}")).collect(),
            provenance: Provenance::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Keeps the listed (zero-based) coordinates, in the given order.
    pub fn project(&self, indices: &[usize]) -> Result<SampleCloud> {
        check_projection(indices, self.dim)?;
        let data = self
            .points()
            .flat_map(|p| indices.iter().map(move |&i| p[i]))
            .collect();
        Ok(SampleCloud {
            dim: indices.len(),
            data,
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
            provenance: self.provenance.clone(),
        })
    }

    /// Cloud as delimited text: a `#` provenance line, a header row, then one
    /// row per point with round-trip precision.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = std::io::BufWriter::new(out);
        let io = |e| Error::io("<cloud>", e);
        let seed = self
            .provenance
            .seed
            .map_or("none".to_string(), |s| s.to_string());
        let digest = self.provenance.digest.as_deref().unwrap_or("none");
        writeln!(out, "# seed={seed} n={} digest={digest}", self.len()).map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::InvalidArgument(e.to_string());
        w.write_record(&self.labels).map_err(csv_err)?;
        for p in self.points() {
            w.write_record(p.iter().map(|v| v.to_string()))
                .map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R, path: &Path) -> Result<SampleCloud> {
        let bad = |message: String| Error::Document {
            path: path.to_path_buf(),
            message,
        };
        let mut first = String::new();
        input
            .read_line(&mut first)
            .map_err(|e| Error::io(path, e))?;
        let provenance =
            parse_provenance(&first).ok_or_else(|| bad("missing provenance line".into()))?;
        let mut reader = csv::Reader::from_reader(input);
        let labels: Vec<String> = reader
            .headers()
            .map_err(|e| bad(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut data = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| bad(e.to_string()))?;
            for field in record.iter() {
                data.push(field.parse::<f64>().map_err(|e| bad(e.to_string()))?);
            }
        }
        let mut cloud = SampleCloud::from_flat(labels.len(), data)?;
        cloud.labels = labels;
        cloud.provenance = provenance;
        Ok(cloud)
    }
}

fn parse_provenance(line: &str) -> Option<Provenance> {
    let rest = line.trim().strip_prefix('#')?;
    let mut prov = Provenance::default();
    for kv in rest.split_whitespace() {
        let (key, value) = kv.split_once('=')?;
        match (key, value) {
            (_, "none") => {}
            ("seed", v) => prov.seed = Some(v.parse().ok()?),
            ("digest", v) => prov.digest = Some(v.to_string()),
            _ => {}
        }
    }
    Some(prov)
}

/// Simulates `count` trajectories of `problem` in parallel.
pub fn generate_cloud(
    problem: &ReachabilityProblem,
    count: usize,
    seed: u64,
) -> Result<SampleCloud> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    let dim = problem.effective_dim();
    let rows: Vec<Result<Vec<f64>>> = (0..count as u64)
        .into_par_iter()
        .map(|i| problem.sample_point(seed, i))
        .collect();
    let mut data = Vec::with_capacity(count * dim);
    for row in rows {
        data.extend(row?);
    }
    let mut cloud = SampleCloud::from_flat(dim, data)?;
    cloud.labels = problem.labels();
    cloud.provenance = Provenance {
        seed: Some(seed),
        digest: Some(problem.digest()),
    };
    Ok(cloud)
}
