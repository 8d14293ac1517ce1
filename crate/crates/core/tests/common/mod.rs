//! Independent oracles for the integration tests. Nothing here calls into
//! the code paths it is used to check.

#![allow(dead_code)]

use christoffel_reach::sampler::{draw_uniform, stream_rng};
use christoffel_reach::{ChristoffelEstimator, Interval, SampleCloud};

/// Adaptive Dormand–Prince 5(4) integration of `f` from `t0` to `t1`.
pub fn dopri_reference<F>(f: F, t0: f64, t1: f64, y0: &[f64], tol: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = ((t1 - t0) / 100.0).min(1e-3);
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        for s in 0..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                for i in 0..n {
                    ys[i] += h * A[s][j] * kj[i];
                }
            }
            k.push(f(t + C[s] * h, &ys));
        }
        let mut y5 = y.clone();
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for s in 0..7 {
                hi += B5[s] * k[s][i];
                lo += B4[s] * k[s][i];
            }
            y5[i] += h * hi;
            let scale = tol * (1.0 + y[i].abs().max(y5[i].abs()));
            err = err.max((h * (hi - lo)).abs() / scale);
        }
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    y
}

pub fn duffing_rhs(t: f64, y: &[f64]) -> Vec<f64> {
    let (alpha, gamma, omega) = (0.05, 0.4, 1.3);
    vec![
        y[1],
        -alpha * y[1] + y[0] - y[0].powi(3) + gamma * (omega * t).cos(),
    ]
}

/// All exponent tuples of total degree `<= k`, by brute-force enumeration.
pub fn brute_force_exponents(n: usize, k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let total = (k + 1).pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let e: Vec<u32> = (0..n)
            .map(|_| {
                let d = (c % (k + 1)) as u32;
                c /= k + 1;
                d
            })
            .collect();
        if e.iter().sum::<u32>() as usize <= k {
            out.push(e);
        }
    }
    out
}

/// Pascal-triangle binomial.
pub fn pascal(top: usize, bottom: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..top {
        let mut next = vec![1u64; row.len() + 1];
        for j in 1..row.len() {
            next[j] = row[j - 1] + row[j];
        }
        row = next;
    }
    row[bottom]
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let m = a.len();
    let mut inv: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..m {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..m {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..m {
                        a[i][j] -= f * a[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    inv
}

/// Inverse Christoffel function built the slow way: bounding-box scaling,
/// monomials by `powi`, full moment matrix and its explicit inverse.
pub struct DirectChristoffel {
    exps: Vec<Vec<u32>>,
    center: Vec<f64>,
    half: Vec<f64>,
    inverse: Vec<Vec<f64>>,
}

impl DirectChristoffel {
    pub fn fit(points: &[Vec<f64>], k: usize) -> Self {
        let n = points[0].len();
        let exps = brute_force_exponents(n, k);
        let mut center = vec![0.0; n];
        let mut half = vec![0.0; n];
        for i in 0..n {
            let lo = points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
            let hi = points
                .iter()
                .map(|p| p[i])
                .fold(f64::NEG_INFINITY, f64::max);
            center[i] = 0.5 * (lo + hi);
            half[i] = 0.5 * (hi - lo);
        }
        let mut this = DirectChristoffel {
            exps,
            center,
            half,
            inverse: Vec::new(),
        };
        let m = this.exps.len();
        let mut moments = vec![vec![0.0; m]; m];
        for p in points {
            let z = this.features(p);
            for i in 0..m {
                for j in 0..m {
                    moments[i][j] += z[i] * z[j];
                }
            }
        }
        for row in &mut moments {
            for v in row.iter_mut() {
                *v /= points.len() as f64;
            }
        }
        this.inverse = invert(moments);
        this
    }

    fn features(&self, x: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = x
            .iter()
            .zip(&self.center)
            .zip(&self.half)
            .map(|((v, c), h)| (v - c) / h)
            .collect();
        self.exps
            .iter()
            .map(|e| e.iter().zip(&y).map(|(&p, v)| v.powi(p as i32)).product())
            .collect()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let z = self.features(x);
        let mut acc = 0.0;
        for (i, zi) in z.iter().enumerate() {
            for (j, zj) in z.iter().enumerate() {
                acc += zi * self.inverse[i][j] * zj;
            }
        }
        acc
    }
}

pub fn cloud_points(cloud: &SampleCloud) -> Vec<Vec<f64>> {
    cloud.points().map(<[f64]>::to_vec).collect()
}

/// Every training point satisfies `C(x) <= α (1 + 1e-9)`.
pub fn training_contained(est: &ChristoffelEstimator, cloud: &SampleCloud) -> bool {
    let bound = est.alpha() * (1.0 + 1e-9);
    cloud.points().all(|p| est.evaluate(p).unwrap() <= bound)
}

/// Convex hull (Andrew's monotone chain), counter-clockwise.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Strictly inside a counter-clockwise convex polygon.
pub fn inside_convex(hull: &[[f64; 2]], p: [f64; 2]) -> bool {
    (0..hull.len()).all(|i| {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) > 0.0
    })
}

/// Number of excluded grid cells that cannot be reached from the grid border
/// through other excluded cells (4-neighbour flood fill).
pub fn enclosed_excluded_cells(inside: &[bool], rows: usize, cols: usize) -> usize {
    let mut reached = vec![false; rows * cols];
    let mut stack = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if (r == 0 || c == 0 || r + 1 == rows || c + 1 == cols) && !inside[r * cols + c] {
                reached[r * cols + c] = true;
                stack.push((r, c));
            }
        }
    }
    while let Some((r, c)) = stack.pop() {
        let mut visit = |rr: usize, cc: usize| {
            let i = rr * cols + cc;
            if !inside[i] && !reached[i] {
                reached[i] = true;
                stack.push((rr, cc));
            }
        };
        if r > 0 {
            visit(r - 1, c);
        }
        if r + 1 < rows {
            visit(r + 1, c);
        }
        if c > 0 {
            visit(r, c - 1);
        }
        if c + 1 < cols {
            visit(r, c + 1);
        }
    }
    (0..rows * cols)
        .filter(|&i| !inside[i] && !reached[i])
        .count()
}

/// Skewed cloud: uniform draws pushed through a cubic so the moments are not trivial.
pub fn skewed_cloud(n: usize, count: usize, seed: u64) -> SampleCloud {
    let unit = Interval::new(vec![-1.0; n], vec![1.0; n]).unwrap();
    let points: Vec<Vec<f64>> = (0..count as u64)
        .map(|i| {
            let u = draw_uniform(&unit, &mut stream_rng(seed, i));
            u.iter()
                .enumerate()
                .map(|(j, v)| 3.0 * v + v.powi(3) + j as f64)
                .collect()
        })
        .collect();
    SampleCloud::from_points(n, &points).unwrap()
}
