//! A-posteriori accuracy check of a fitted estimator on fresh samples.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::christoffel::ChristoffelEstimator;
use crate::error::{Error, Result};
use crate::pac::{accuracy_lower_bound, chernoff_sample_size, ChernoffParams};
use crate::sampler::{generate_cloud, ReachabilityProblem, SampleCloud};

/// Validation seeds are XORed with this key before deriving sample streams,
/// so a validation run never replays the training trajectories.
pub const VALIDATION_STREAM_KEY: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub n_ap: usize,
    pub n_out: usize,
    pub empirical_accuracy: f64,
    pub chernoff: ChernoffParams,
    pub certified_lower_bound: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub misclassified: Option<Vec<Vec<f64>>>,
}

impl AccuracyReport {
    fn new(n_ap: usize, n_out: usize, chernoff: ChernoffParams, seed: u64) -> Self {
        let empirical_accuracy = 1.0 - n_out as f64 / n_ap as f64;
        AccuracyReport {
            n_ap,
            n_out,
            empirical_accuracy,
            chernoff,
            certified_lower_bound: accuracy_lower_bound(empirical_accuracy, chernoff.margin),
            seed,
            misclassified: None,
        }
    }

    pub fn n_inside(&self) -> usize {
        self.n_ap - self.n_out
    }

    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        format!(
            "n_ap = {}\nn_out = {}\nempirical_accuracy = {}\nmargin = {}\nconfidence = {}\ncertified_lower_bound = {}\nseed = {}\n",
            self.n_ap,
            self.n_out,
            self.empirical_accuracy,
            self.chernoff.margin,
            self.chernoff.confidence,
            self.certified_lower_bound,
            self.seed
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValidateOptions {
    pub keep_misclassified: bool,
}

/// Counts the points of `cloud` outside the estimate.
pub fn validate_cloud(
    est: &ChristoffelEstimator,
    cloud: &SampleCloud,
    chernoff: ChernoffParams,
    seed: u64,
    options: ValidateOptions,
) -> Result<AccuracyReport> {
    if cloud.dim() != est.dim() {
        return Err(Error::DimensionMismatch {
            expected: est.dim(),
            got: cloud.dim(),
        });
    }
    if cloud.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let outside: Vec<bool> = cloud
        .as_flat()
        .par_chunks(cloud.dim())
        .map(|p| est.contains(p).map(|inside| !inside))
        .collect::<Result<_>>()?;
    let n_out = outside.iter().filter(|&&o| o).count();
    let mut report = AccuracyReport::new(cloud.len(), n_out, chernoff, seed);
    if options.keep_misclassified {
        report.misclassified = Some(
            cloud
                .points()
                .zip(&outside)
                .filter(|(_, &o)| o)
                .map(|(p, _)| p.to_vec())
                .collect(),
        );
    }
    Ok(report)
}

/// Draws `chernoff_sample_size(chernoff)` fresh final states and counts those
/// the estimate misses.
pub fn validate(
    est: &ChristoffelEstimator,
    problem: &ReachabilityProblem,
    chernoff: ChernoffParams,
    seed: u64,
    options: ValidateOptions,
) -> Result<AccuracyReport> {
    if problem.effective_dim() != est.dim() {
        return Err(Error::DimensionMismatch {
            expected: est.dim(),
            got: problem.effective_dim(),
        });
    }
    let n_ap = chernoff_sample_size(&chernoff);
    let cloud = generate_cloud(problem, n_ap, seed ^ VALIDATION_STREAM_KEY)?;
    validate_cloud(est, &cloud, chernoff, seed, options)
}
