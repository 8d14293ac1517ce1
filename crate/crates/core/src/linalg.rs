//! Dense symmetric storage, Cholesky factorization and triangular solves for
//! the small matrices used by the Christoffel estimator.

/// Lower triangle of a square matrix, packed row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerPacked {
    dim: usize,
    data: Vec<f64>,
}

#[inline]
fn offset(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

impl LowerPacked {
    pub fn zeros(dim: usize) -> Self {
        LowerPacked {
            dim,
            data: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    /// Builds from explicit rows, row `i` holding `i + 1` entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * (dim + 1) / 2);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != i + 1 {
                return None;
            }
            data.extend_from_slice(row);
        }
        Some(LowerPacked { dim, data })
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| self.data[offset(i, 0)..=offset(i, i)].to_vec())
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `(i, j)` read as a symmetric matrix.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.data[offset(i, j)]
        } else {
            self.data[offset(j, i)]
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[offset(i, i)]).sum()
    }

    /// `self += z zᵀ`, touching only the stored triangle.
    pub fn add_outer(&mut self, z: &[f64]) {
        debug_assert_eq!(z.len(), self.dim);
        let mut pos = 0;
        for (i, &zi) in z.iter().enumerate() {
            let row = &mut self.data[pos..pos + i + 1];
            for (a, &zj) in row.iter_mut().zip(&z[..=i]) {
                *a += zi * zj;
            }
            pos += i + 1;
        }
    }

    pub fn add_assign(&mut self, other: &LowerPacked) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn divide(&mut self, divisor: f64) {
        for a in &mut self.data {
            *a /= divisor;
        }
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for i in 0..self.dim {
            self.data[offset(i, i)] += shift;
        }
    }

    /// Cholesky factor `L` with `L Lᵀ = self`, or `None` when a pivot is not
    /// strictly positive and finite.
    pub fn cholesky(&self) -> Option<LowerPacked> {
        let m = self.dim;
        let mut l = LowerPacked::zeros(m);
        for i in 0..m {
            for j in 0..=i {
                let (ri, rj) = (offset(i, 0), offset(j, 0));
                let dot: f64 = l.data[ri..ri + j]
                    .iter()
                    .zip(&l.data[rj..rj + j])
                    .map(|(a, b)| a * b)
                    .sum();
                let s = self.data[offset(i, j)] - dot;
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    l.data[offset(i, i)] = s.sqrt();
                } else {
                    l.data[offset(i, j)] = s / l.data[offset(j, j)];
                }
            }
        }
        Some(l)
    }

    /// Solves `L v = b` in place, treating `self` as lower triangular.
    pub fn forward_substitute(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.dim);
        for i in 0..self.dim {
            let row = &self.data[offset(i, 0)..=offset(i, i)];
            let dot: f64 = row[..i].iter().zip(&b[..i]).map(|(a, v)| a * v).sum();
            b[i] = (b[i] - dot) / row[i];
        }
    }

    /// `L Lᵀ` as a symmetric packed matrix.
    pub fn gram(&self) -> LowerPacked {
        let mut out = LowerPacked::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..=i {
                let (ri, rj) = (offset(i, 0), offset(j, 0));
                out.data[offset(i, j)] = self.data[ri..=ri + j]
                    .iter()
                    .zip(&self.data[rj..=rj + j])
                    .map(|(a, b)| a * b)
                    .sum();
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &LowerPacked) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_factor() {
        let a = LowerPacked::from_rows(&[vec![4.0], vec![12.0, 37.0], vec![-16.0, -43.0, 98.0]])
            .unwrap();
        let l = a.cholesky().unwrap();
        assert_eq!(
            l.rows(),
            vec![vec![2.0], vec![6.0, 1.0], vec![-8.0, 5.0, 3.0]]
        );
        assert_eq!(l.gram(), a);
    }

    #[test]
    fn rejects_indefinite_and_singular() {
        let indefinite = LowerPacked::from_rows(&[vec![1.0], vec![2.0, 1.0]]).unwrap();
        assert!(indefinite.cholesky().is_none());
        let singular = LowerPacked::from_rows(&[vec![1.0], vec![1.0, 1.0]]).unwrap();
        assert!(singular.cholesky().is_none());
    }

    #[test]
    fn forward_substitution() {
        let l = LowerPacked::from_rows(&[vec![2.0], vec![6.0, 1.0], vec![-8.0, 5.0, 3.0]]).unwrap();
        let mut b = vec![2.0, 7.0, 0.0];
        l.forward_substitute(&mut b);
        // 2 v0 = 2, 6 v0 + v1 = 7, -8 v0 + 5 v1 + 3 v2 = 0
        assert_eq!(b, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn outer_products_accumulate() {
        let mut m = LowerPacked::zeros(2);
        m.add_outer(&[1.0, 2.0]);
        m.add_outer(&[1.0, -1.0]);
        assert_eq!(m.rows(), vec![vec![2.0], vec![1.0, 5.0]]);
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.trace(), 7.0);
    }
}
