//! Empirical inverse Christoffel function and its sublevel-set estimate.
//!
//! For a cloud `x_1..x_N` and monomial vector `z = z_k(x)`, the moment matrix
//! is `M = (1/N) Σ z(x_i) z(x_i)ᵀ` and the estimator is
//! `C(x) = z(x)ᵀ M⁻¹ z(x)`, with level `α = max_i C(x_i)`. The reachable set
//! estimate is `{x : C(x) <= α}`.
//!
//! Points are first mapped affinely so the cloud's bounding box becomes
//! `[-1, 1]^n`. `C` is unchanged by affine coordinate changes, and the
//! mapping keeps high-degree moments representable.
//!
//! `M` is stored as its Cholesky factor `L`; `C(x) = |L⁻¹ z(x)|²`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::MonomialBasis;
use crate::error::{Error, Result};
use crate::linalg::LowerPacked;
use crate::sampler::SampleCloud;

/// Points per accumulation chunk. Chunk partial sums are combined pairwise in
/// index order, so the moment matrix does not depend on the thread count.
pub const CHUNK_SIZE: usize = 4096;

/// First jitter tried, relative to `trace(M) / m`.
pub const JITTER_START: f64 = 1e-12;
/// Largest jitter tried before reporting a singular moment matrix.
pub const JITTER_MAX: f64 = 1e-6;

/// Affine map `x' = (x - offset) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationMap {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl NormalizationMap {
    pub fn new(offset: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        if offset.len() != scale.len() {
            return Err(Error::DimensionMismatch {
                expected: offset.len(),
                got: scale.len(),
            });
        }
        if scale.iter().any(|s| !(*s > 0.0) || !s.is_finite())
            || offset.iter().any(|o| !o.is_finite())
        {
            return Err(Error::InvalidArgument(
                "normalization scales must be positive and finite".into(),
            ));
        }
        Ok(NormalizationMap { offset, scale })
    }

    pub fn identity(n: usize) -> Self {
        NormalizationMap {
            offset: vec![0.0; n],
            scale: vec![1.0; n],
        }
    }

    /// Maps the cloud's bounding box onto `[-1, 1]^n`. A coordinate with zero
    /// width keeps scale 1 and is shifted to 0.
    pub fn from_bounding_box(cloud: &SampleCloud) -> Self {
        let n = cloud.dim();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in cloud.points() {
            for i in 0..n {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let mut offset = Vec::with_capacity(n);
        let mut scale = Vec::with_capacity(n);
        for i in 0..n {
            let half = 0.5 * (hi[i] - lo[i]);
            if half > 0.0 && half.is_finite() {
                offset.push(lo[i] + half);
                scale.push(half);
            } else {
                offset.push(lo[i]);
                scale.push(1.0);
            }
        }
        NormalizationMap { offset, scale }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (((o, xi), off), s) in out.iter_mut().zip(x).zip(&self.offset).zip(&self.scale) {
            *o = (xi - off) / s;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Map the cloud's bounding box to `[-1, 1]^n` before building moments.
    /// Turning this off evaluates monomials in raw coordinates.
    pub normalize: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { normalize: true }
    }
}

/// Where a fitted estimator came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub samples: usize,
    pub seed: Option<u64>,
    /// Absolute diagonal shift added to the moment matrix (0 if none).
    pub jitter: f64,
    pub normalized: bool,
    pub digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelEstimator {
    basis: MonomialBasis,
    factor: LowerPacked,
    alpha: f64,
    normalization: NormalizationMap,
    meta: FitMeta,
}

/// Moment matrix of the cloud after `norm`, accumulated in fixed chunks.
pub fn moment_matrix(
    basis: &MonomialBasis,
    norm: &NormalizationMap,
    cloud: &SampleCloud,
) -> Result<LowerPacked> {
    if cloud.dim() != basis.n() {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            got: cloud.dim(),
        });
    }
    if cloud.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let m = basis.len();
    let n = basis.n();
    let mut partials: Vec<LowerPacked> = cloud
        .as_flat()
        .par_chunks(CHUNK_SIZE * n)
        .map(|chunk| {
            let mut acc = LowerPacked::zeros(m);
            let mut x = vec![0.0; n];
            let mut z = vec![0.0; m];
            for p in chunk.chunks_exact(n) {
                norm.apply(p, &mut x);
                basis.eval_into(&x, &mut z).expect("dimensions checked");
                acc.add_outer(&z);
            }
            acc
        })
        .collect();
    while partials.len() > 1 {
        let mut next = Vec::with_capacity(partials.len().div_ceil(2));
        let mut iter = partials.into_iter();
        while let Some(mut a) = iter.next() {
            if let Some(b) = iter.next() {
                a.add_assign(&b);
            }
            next.push(a);
        }
        partials = next;
    }
    let mut moments = partials.pop().expect("at least one chunk");
    moments.divide(cloud.len() as f64);
    Ok(moments)
}

/// Cholesky factor of `moments`, adding escalating diagonal jitter when the
/// plain factorization fails. Returns the factor and the jitter used.
pub fn factorize(moments: &LowerPacked) -> Result<(LowerPacked, f64)> {
    if let Some(l) = moments.cholesky() {
        return Ok((l, 0.0));
    }
    let unit = moments.trace() / moments.dim() as f64;
    let mut rel = JITTER_START;
    while rel <= JITTER_MAX * (1.0 + 1e-9) {
        let lambda = rel * unit;
        let mut shifted = moments.clone();
        shifted.add_diagonal(lambda);
        if let Some(l) = shifted.cholesky() {
            return Ok((l, lambda));
        }
        rel *= 10.0;
    }
    Err(Error::SingularMoment {
        max_jitter: JITTER_MAX * unit,
    })
}

pub fn fit(cloud: &SampleCloud, k: usize) -> Result<ChristoffelEstimator> {
    fit_with(cloud, k, FitOptions::default())
}

pub fn fit_with(
    cloud: &SampleCloud,
    k: usize,
    options: FitOptions,
) -> Result<ChristoffelEstimator> {
    let basis = MonomialBasis::new(cloud.dim(), k)?;
    if cloud.len() < basis.len() {
        return Err(Error::InsufficientSamples {
            needed: basis.len(),
            got: cloud.len(),
        });
    }
    let normalization = if options.normalize {
        NormalizationMap::from_bounding_box(cloud)
    } else {
        NormalizationMap::identity(cloud.dim())
    };
    let moments = moment_matrix(&basis, &normalization, cloud)?;
    let (factor, jitter) = factorize(&moments)?;
    let mut est = ChristoffelEstimator {
        basis,
        factor,
        alpha: f64::NAN,
        normalization,
        meta: FitMeta {
            samples: cloud.len(),
            seed: cloud.provenance.seed,
            jitter,
            normalized: options.normalize,
            digest: cloud.provenance.digest.clone(),
        },
    };
    est.alpha = level_from_points(&est, cloud)?;
    Ok(est)
}

/// Maximum of `C` over the cloud. The estimator's own level is ignored.
pub fn level_from_points(est: &ChristoffelEstimator, cloud: &SampleCloud) -> Result<f64> {
    if cloud.dim() != est.dim() {
        return Err(Error::DimensionMismatch {
            expected: est.dim(),
            got: cloud.dim(),
        });
    }
    if cloud.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let values: Vec<f64> = cloud
        .as_flat()
        .par_chunks(est.dim())
        .map(|p| est.evaluate_unchecked(p))
        .collect();
    Ok(values.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

impl ChristoffelEstimator {
    /// Reassembles an estimator from stored parts.
    pub fn from_parts(
        basis: MonomialBasis,
        factor: LowerPacked,
        alpha: f64,
        normalization: NormalizationMap,
        meta: FitMeta,
    ) -> Result<Self> {
        if factor.dim() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: factor.dim(),
            });
        }
        if normalization.dim() != basis.n() {
            return Err(Error::DimensionMismatch {
                expected: basis.n(),
                got: normalization.dim(),
            });
        }
        if (0..factor.dim()).any(|i| !(factor.get(i, i) > 0.0)) {
            return Err(Error::InvalidArgument(
                "factor diagonal must be strictly positive".into(),
            ));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "level must be positive, got {alpha}"
            )));
        }
        Ok(ChristoffelEstimator {
            basis,
            factor,
            alpha,
            normalization,
            meta,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.n()
    }

    pub fn degree(&self) -> usize {
        self.basis.k()
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn factor(&self) -> &LowerPacked {
        &self.factor
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn normalization(&self) -> &NormalizationMap {
        &self.normalization
    }

    pub fn meta(&self) -> &FitMeta {
        &self.meta
    }

    /// Same function, new level.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    /// Sets the level to the maximum of `C` over `cloud`.
    pub fn relevel(&self, cloud: &SampleCloud) -> Result<Self> {
        let alpha = level_from_points(self, cloud)?;
        Ok(self.clone().with_alpha(alpha))
    }

    /// `C(x)` for a point in raw coordinates.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    /// Whether `C(x) <= α`.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.evaluate(x)? <= self.alpha)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        let mut xn = vec![0.0; self.dim()];
        self.normalization.apply(x, &mut xn);
        let mut v = vec![0.0; self.basis.len()];
        self.basis
            .eval_into(&xn, &mut v)
            .expect("dimension checked");
        self.factor.forward_substitute(&mut v);
        v.iter().map(|a| a * a).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, count: usize, seed: u64) -> SampleCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..count)
            .map(|_| (0..n).map(|_| rng.random_range(-3.0..5.0)).collect())
            .collect();
        SampleCloud::from_points(n, &pts).unwrap()
    }

    #[test]
    fn constant_basis() {
        let cloud = random_cloud(3, 10, 1);
        let est = fit(&cloud, 0).unwrap();
        assert_eq!(est.basis().len(), 1);
        assert_eq!(est.factor().rows(), vec![vec![1.0]]);
        assert_eq!(est.alpha(), 1.0);
        for x in [[0.0, 0.0, 0.0], [1e3, -7.0, 2.0]] {
            assert_eq!(est.evaluate(&x).unwrap(), 1.0);
            assert!(est.contains(&x).unwrap());
        }
    }

    #[test]
    fn two_point_line() {
        let cloud = SampleCloud::from_points(1, &[vec![-1.0], vec![1.0]]).unwrap();
        let est = fit(&cloud, 1).unwrap();
        let norm = est.normalization();
        assert_eq!((norm.offset[0], norm.scale[0]), (0.0, 1.0));
        let moments = moment_matrix(est.basis(), norm, &cloud).unwrap();
        assert_eq!(moments.rows(), vec![vec![1.0], vec![0.0, 1.0]]);
        assert_eq!(est.alpha(), 2.0);
        assert_eq!(est.evaluate(&[0.0]).unwrap(), 1.0);
        assert_eq!(est.evaluate(&[2.0]).unwrap(), 5.0);
        assert!(!est.contains(&[3.0]).unwrap());
        assert_eq!(level_from_points(&est, &cloud).unwrap(), 2.0);
        assert!(est.contains(&[-1.0]).unwrap() && est.contains(&[1.0]).unwrap());
    }

    #[test]
    fn shifted_two_point_line_normalizes() {
        // same geometry as above, moved and stretched
        let cloud = SampleCloud::from_points(1, &[vec![4.0], vec![10.0]]).unwrap();
        let est = fit(&cloud, 1).unwrap();
        assert_eq!(est.alpha(), 2.0);
        assert_eq!(est.evaluate(&[7.0]).unwrap(), 1.0);
        assert_eq!(est.evaluate(&[13.0]).unwrap(), 5.0);
    }

    #[test]
    fn trace_identity_small() {
        let cloud = random_cloud(2, 500, 9);
        let est = fit(&cloud, 3).unwrap();
        let mean: f64 = cloud
            .points()
            .map(|p| est.evaluate(p).unwrap())
            .sum::<f64>()
            / 500.0;
        assert!((mean - 10.0).abs() <= 1e-6 * 10.0, "mean {mean}");
        assert!(est.alpha() >= 10.0 * (1.0 - 1e-6));
    }

    #[test]
    fn insufficient_samples() {
        let cloud = random_cloud(2, 5, 2);
        assert!(matches!(
            fit(&cloud, 2),
            Err(Error::InsufficientSamples { needed: 6, got: 5 })
        ));
        let single = SampleCloud::from_points(2, &[vec![0.5, 0.5]]).unwrap();
        assert!(matches!(
            fit(&single, 1),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn points_on_a_line_need_jitter_or_fail() {
        // every point satisfies x2 = x1, so x1 - x2 is in the kernel
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, i as f64]).collect();
        let cloud = SampleCloud::from_points(2, &pts).unwrap();
        match fit(&cloud, 1) {
            Ok(est) => assert!(est.meta().jitter > 0.0),
            Err(e) => assert!(matches!(e, Error::SingularMoment { .. })),
        }
    }

    #[test]
    fn constant_coordinate_gets_unit_scale() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 3.0]).collect();
        let cloud = SampleCloud::from_points(2, &pts).unwrap();
        let norm = NormalizationMap::from_bounding_box(&cloud);
        assert_eq!(norm.scale, vec![4.5, 1.0]);
        assert_eq!(norm.offset, vec![4.5, 3.0]);
    }

    #[test]
    fn factorization_reproduces_moments() {
        let cloud = random_cloud(3, 400, 4);
        let est = fit(&cloud, 3).unwrap();
        let mut moments = moment_matrix(est.basis(), est.normalization(), &cloud).unwrap();
        assert_eq!(moments.get(0, 0), 1.0);
        moments.add_diagonal(est.meta().jitter);
        let tol = 1e-10 * moments.trace() / moments.dim() as f64;
        assert!(est.factor().gram().max_abs_diff(&moments) <= tol);
    }

    #[test]
    fn accumulation_independent_of_threads() {
        let cloud = random_cloud(2, 3 * CHUNK_SIZE + 17, 5);
        let basis = MonomialBasis::new(2, 4).unwrap();
        let norm = NormalizationMap::from_bounding_box(&cloud);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let a = one.install(|| moment_matrix(&basis, &norm, &cloud).unwrap());
        let b = many.install(|| moment_matrix(&basis, &norm, &cloud).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn relevel_with_superset_never_lowers_alpha() {
        let cloud = random_cloud(2, 200, 6);
        let est = fit(&cloud, 2).unwrap();
        let extra = random_cloud(2, 50, 7);
        let mut all: Vec<Vec<f64>> = cloud.points().map(<[f64]>::to_vec).collect();
        all.extend(extra.points().map(<[f64]>::to_vec));
        let bigger = est
            .relevel(&SampleCloud::from_points(2, &all).unwrap())
            .unwrap();
        assert!(bigger.alpha() >= est.alpha());
        assert!(matches!(
            est.evaluate(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn raw_coordinates_when_normalization_is_off() {
        let cloud = SampleCloud::from_points(1, &[vec![4.0], vec![10.0]]).unwrap();
        let est = fit_with(&cloud, 1, FitOptions { normalize: false }).unwrap();
        assert!(!est.meta().normalized);
        assert_eq!(est.normalization(), &NormalizationMap::identity(1));
        // mean 7, second moment 58: C(7) = 1
        assert!((est.evaluate(&[7.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((est.alpha() - 2.0).abs() < 1e-12);
    }
}
