//! JSON persistence of fitted estimators, plus atomic file writes.
//!
//! Floats are written in their shortest round-trip form and parsed back
//! exactly, so a reloaded estimator evaluates bit-for-bit like the original.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::MonomialBasis;
use crate::christoffel::{ChristoffelEstimator, FitMeta, NormalizationMap};
use crate::error::{Error, Result};
use crate::linalg::LowerPacked;

pub const FORMAT_VERSION: u32 = 1;
pub const ORDERING_TAG: &str = "grlex";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorDocument {
    pub format_version: u32,
    pub n: usize,
    pub k: usize,
    pub ordering: String,
    pub exponents: Vec<Vec<u16>>,
    pub normalization: NormalizationMap,
    /// Rows of the lower Cholesky factor; row `i` has `i + 1` entries.
    pub cholesky_lower: Vec<Vec<f64>>,
    pub alpha: f64,
    pub meta: DocumentMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentMeta {
    pub samples: usize,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub jitter: f64,
    pub normalized: bool,
    pub system_digest: Option<String>,
}

impl EstimatorDocument {
    pub fn from_estimator(
        est: &ChristoffelEstimator,
        epsilon: Option<f64>,
        delta: Option<f64>,
    ) -> Self {
        let meta = est.meta();
        EstimatorDocument {
            format_version: FORMAT_VERSION,
            n: est.dim(),
            k: est.degree(),
            ordering: ORDERING_TAG.to_string(),
            exponents: est.basis().indices().iter().map(|m| m.0.clone()).collect(),
            normalization: est.normalization().clone(),
            cholesky_lower: est.factor().rows(),
            alpha: est.alpha(),
            meta: DocumentMeta {
                samples: meta.samples,
                epsilon,
                delta,
                seed: meta.seed,
                jitter: meta.jitter,
                normalized: meta.normalized,
                system_digest: meta.digest.clone(),
            },
        }
    }

    pub fn to_estimator(&self) -> Result<ChristoffelEstimator> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported estimator format version {}",
                self.format_version
            )));
        }
        if self.ordering != ORDERING_TAG {
            return Err(Error::InvalidArgument(format!(
                "unsupported monomial ordering `{}`",
                self.ordering
            )));
        }
        let basis = MonomialBasis::from_exponents(self.n, self.k, self.exponents.clone())?;
        let factor = LowerPacked::from_rows(&self.cholesky_lower)
            .ok_or_else(|| Error::InvalidArgument("factor rows are not lower triangular".into()))?;
        let normalization = NormalizationMap::new(
            self.normalization.offset.clone(),
            self.normalization.scale.clone(),
        )?;
        ChristoffelEstimator::from_parts(
            basis,
            factor,
            self.alpha,
            normalization,
            FitMeta {
                samples: self.meta.samples,
                seed: self.meta.seed,
                jitter: self.meta.jitter,
                normalized: self.meta.normalized,
                digest: self.meta.system_digest.clone(),
            },
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Document {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
