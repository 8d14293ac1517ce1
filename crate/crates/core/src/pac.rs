//! Sample sizes behind the probabilistic guarantees.
//!
//! The a-priori count makes the sublevel-set estimate `ε`-accurate with
//! confidence `1 - δ`:
//!
//! `N = ⌈(5/ε) (ln(4/δ) + binom(n+2k, n) ln(40/ε))⌉`
//!
//! where `binom(n+2k, n)` is the VC dimension of sublevel sets of degree-`2k`
//! polynomials in `n` variables. The a-posteriori count is the one-sided
//! Hoeffding bound `⌈ln(1/(1-confidence)) / (2 margin²)⌉`.

use serde::{Deserialize, Serialize};

use crate::basis::binomial;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacParams {
    pub epsilon: f64,
    pub delta: f64,
    pub n: usize,
    pub k: usize,
}

impl PacParams {
    pub fn new(epsilon: f64, delta: f64, n: usize, k: usize) -> Result<Self> {
        open_unit("epsilon", epsilon)?;
        open_unit("delta", delta)?;
        if n == 0 {
            return Err(Error::InvalidArgument(
                "state dimension must be at least 1".into(),
            ));
        }
        Ok(PacParams {
            epsilon,
            delta,
            n,
            k,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffParams {
    pub margin: f64,
    pub confidence: f64,
}

impl ChernoffParams {
    pub fn new(margin: f64, confidence: f64) -> Result<Self> {
        open_unit("margin", margin)?;
        open_unit("confidence", confidence)?;
        Ok(ChernoffParams { margin, confidence })
    }
}

fn open_unit(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must lie in (0, 1), got {value}"
        )))
    }
}

/// VC dimension of the class of sublevel sets `{x : C(x) <= α}`.
pub fn vc_dimension(n: usize, k: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "state dimension must be at least 1".into(),
        ));
    }
    let top = k
        .checked_mul(2)
        .and_then(|d| d.checked_add(n))
        .ok_or(Error::Overflow("VC dimension"))?;
    binomial(top, n)
}

pub fn pac_sample_size(p: &PacParams) -> Result<usize> {
    let vc = vc_dimension(p.n, p.k)? as f64;
    let bound = (5.0 / p.epsilon) * ((4.0 / p.delta).ln() + vc * (40.0 / p.epsilon).ln());
    let n = bound.ceil();
    if !n.is_finite() || n >= usize::MAX as f64 {
        return Err(Error::Overflow("PAC sample size"));
    }
    Ok(n as usize)
}

pub fn chernoff_sample_size(c: &ChernoffParams) -> usize {
    let n = ((1.0 / (1.0 - c.confidence)).ln() / (2.0 * c.margin * c.margin)).ceil();
    (n as usize).max(1)
}

/// `empirical_accuracy - margin`, clamped to `[0, 1]`.
pub fn accuracy_lower_bound(empirical_accuracy: f64, margin: f64) -> f64 {
    (empirical_accuracy - margin).clamp(0.0, 1.0)
}
