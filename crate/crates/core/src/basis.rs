//! Monomial feature vectors `z_k(x)` in graded lexicographic order.
//!
//! Monomials of total degree `0..=k` in `n` variables are listed by ascending
//! degree; within one degree the exponent vectors appear in decreasing
//! lexicographic order, so for two variables and `k = 2` the basis is
//! `[1, x1, x2, x1², x1·x2, x2²]`.
//!
//! Every non-constant monomial records a predecessor (an earlier monomial of
//! one lower degree) and the variable that lifts it, so evaluation is a single
//! pass of multiplications.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector of one monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u16>);

impl MultiIndex {
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| u32::from(e)).sum()
    }

    pub fn exponents(&self) -> &[u16] {
        &self.0
    }
}

/// `binomial(top, bottom)` with overflow detection.
pub fn binomial(top: usize, bottom: usize) -> Result<usize> {
    if bottom > top {
        return Ok(0);
    }
    let bottom = bottom.min(top - bottom);
    let mut acc: u128 = 1;
    for i in 0..bottom {
        // acc = C(top, i) here, and C(top, i) * (top - i) is divisible by i + 1.
        acc = acc
            .checked_mul((top - i) as u128)
            .ok_or(Error::Overflow("binomial coefficient"))?
            / (i as u128 + 1);
    }
    usize::try_from(acc).map_err(|_| Error::Overflow("binomial coefficient"))
}

/// Number of monomials of degree at most `k` in `n` variables.
pub fn basis_size(n: usize, k: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "basis needs at least one variable".into(),
        ));
    }
    let top = n.checked_add(k).ok_or(Error::Overflow("basis size"))?;
    binomial(top, n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis {
    n: usize,
    k: usize,
    indices: Vec<MultiIndex>,
    // (predecessor slot, variable) for each slot > 0
    steps: Vec<(usize, usize)>,
}

impl MonomialBasis {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        let size = basis_size(n, k)?;
        if k > usize::from(u16::MAX) {
            return Err(Error::InvalidArgument(format!("degree {k} too large")));
        }
        let mut indices = Vec::with_capacity(size);
        let mut current = vec![0u16; n];
        for degree in 0..=k {
            push_compositions(&mut indices, &mut current, 0, degree);
        }
        debug_assert_eq!(indices.len(), size);
        Self::from_indices(n, k, indices)
    }

    /// Rebuilds a basis from an explicit exponent list, checking that it is
    /// exactly the graded order produced by [`MonomialBasis::new`].
    pub fn from_exponents(n: usize, k: usize, exponents: Vec<Vec<u16>>) -> Result<Self> {
        let expected = Self::new(n, k)?;
        let given: Vec<MultiIndex> = exponents.into_iter().map(MultiIndex).collect();
        if given != expected.indices {
            return Err(Error::InvalidArgument(format!(
                "exponent list is not the graded lexicographic basis for n = {n}, k = {k}"
            )));
        }
        Ok(expected)
    }

    fn from_indices(n: usize, k: usize, indices: Vec<MultiIndex>) -> Result<Self> {
        let mut steps = Vec::with_capacity(indices.len().saturating_sub(1));
        let slot_of: std::collections::HashMap<&MultiIndex, usize> =
            indices.iter().enumerate().map(|(i, m)| (m, i)).collect();
        for index in indices.iter().skip(1) {
            let var = index
                .0
                .iter()
                .position(|&e| e > 0)
                .expect("non-constant monomial has a positive exponent");
            let mut lower = index.clone();
            lower.0[var] -= 1;
            steps.push((slot_of[&lower], var));
        }
        Ok(MonomialBasis {
            n,
            k,
            indices,
            steps,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    /// Writes `z_k(x)` into `out`, which must hold `self.len()` values.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        if out.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: out.len(),
            });
        }
        out[0] = 1.0;
        for (slot, &(pred, var)) in self.steps.iter().enumerate() {
            out[slot + 1] = out[pred] * x[var];
        }
        Ok(())
    }
}

// Appends all exponent vectors with entries from position `pos` on summing to
// `remaining`, first entry largest first.
fn push_compositions(out: &mut Vec<MultiIndex>, current: &mut [u16], pos: usize, remaining: usize) {
    if pos + 1 == current.len() {
        current[pos] = remaining as u16;
        out.push(MultiIndex(current.to_vec()));
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e as u16;
        push_compositions(out, current, pos + 1, remaining - e);
    }
    current[pos] = 0;
}
