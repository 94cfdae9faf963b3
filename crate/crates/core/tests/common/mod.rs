//! Independent reference computations for the integration tests. Nothing
//! here calls the library's transforms or factorizations.
#![allow(dead_code)]

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;

pub type Dense = Vec<Vec<C64>>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Ascending wavenumbers `-N/2 .. N/2-1`.
pub fn wavenumbers(n: usize) -> Vec<i64> {
    (0..n as i64).map(|i| i - n as i64 / 2).collect()
}

pub fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// `c_k = (1/N) Σ_j u_j e^{-i k x_j}`, ascending `k`, by direct summation.
pub fn dft(values: &[C64]) -> Vec<C64> {
    let n = values.len();
    let x = nodes(n);
    wavenumbers(n)
        .iter()
        .map(|&k| {
            values
                .iter()
                .zip(&x)
                .map(|(u, &xj)| u * C64::from_polar(1.0, -(k as f64) * xj))
                .sum::<C64>()
                / n as f64
        })
        .collect()
}

pub fn idft(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len();
    let ks = wavenumbers(n);
    nodes(n)
        .iter()
        .map(|&xj| {
            coeffs
                .iter()
                .zip(&ks)
                .map(|(c, &k)| c * C64::from_polar(1.0, k as f64 * xj))
                .sum()
        })
        .collect()
}

/// Column `k` is the transform of `χ · e^{ikx}`.
pub fn multiplication_by_columns(chi: &[f64]) -> Dense {
    let n = chi.len();
    let x = nodes(n);
    let ks = wavenumbers(n);
    let cols: Vec<Vec<C64>> = ks
        .iter()
        .map(|&k| {
            let prod: Vec<C64> = x
                .iter()
                .zip(chi)
                .map(|(&xj, &cj)| C64::from_polar(cj, k as f64 * xj))
                .collect();
            dft(&prod)
        })
        .collect();
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

pub fn from_mat(m: &Mat<C64>) -> Dense {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn max_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = b[0].len();
    (0..n)
        .map(|i| (0..m).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn apply(a: &Dense, x: &[C64]) -> Vec<C64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn adjoint(a: &Dense) -> Dense {
    let n = a.len();
    let m = a[0].len();
    (0..m).map(|j| (0..n).map(|i| a[i][j].conj()).collect()).collect()
}

/// Gauss-Jordan with partial pivoting; `None` if a pivot vanishes.
pub fn inverse(a: &Dense) -> Option<Dense> {
    let n = a.len();
    let mut m: Dense = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { c(1.0) } else { c(0.0) }));
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))?;
        if m[p][col].norm() == 0.0 {
            return None;
        }
        m.swap(p, col);
        let pivot = m[col][col];
        m[col].iter_mut().for_each(|v| *v /= pivot);
        let row = m[col].clone();
        for (i, r) in m.iter_mut().enumerate() {
            if i != col {
                let f = r[col];
                r.iter_mut().zip(&row).for_each(|(v, w)| *v -= f * w);
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Largest singular value by power iteration on `A*A`.
pub fn spectral_norm(a: &Dense) -> f64 {
    let ah = adjoint(a);
    let n = a[0].len();
    let mut x: Vec<C64> = (0..n).map(|i| C64::new(1.0 + (i as f64).sin(), (i as f64).cos())).collect();
    let mut estimate = 0.0;
    for _ in 0..20_000 {
        let y = apply(&ah, &apply(a, &x));
        let norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        x = y.iter().map(|v| v / norm).collect();
        if (norm - estimate).abs() <= 1e-15 * norm {
            estimate = norm;
            break;
        }
        estimate = norm;
    }
    estimate.sqrt()
}

/// `P(λ) = diag(|k|^α - λ²) - iλM`.
pub fn quadratic(alpha: f64, m: &Dense, lambda: C64) -> Dense {
    let ks = wavenumbers(m.len());
    m.iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(|(j, mij)| {
                    let diag = if i == j { c((ks[i].abs() as f64).powf(alpha)) - lambda * lambda } else { c(0.0) };
                    diag - C64::i() * lambda * mij
                })
                .collect()
        })
        .collect()
}

/// Roots of `det P(λ)` reached by Newton's method from a grid of starting
/// points, using `(log det)' = tr(P⁻¹ P')`.
pub fn determinant_roots(alpha: f64, m: &Dense, starts: &[C64]) -> Vec<C64> {
    let n = m.len();
    let mut roots: Vec<C64> = Vec::new();
    for &start in starts {
        let mut lambda = start;
        let mut converged = false;
        for _ in 0..80 {
            let Some(inv) = inverse(&quadratic(alpha, m, lambda)) else {
                converged = true;
                break;
            };
            let mut trace = c(0.0);
            for i in 0..n {
                for k in 0..n {
                    let dp = -C64::i() * m[k][i] - if k == i { 2.0 * lambda } else { c(0.0) };
                    trace += inv[i][k] * dp;
                }
            }
            let step = 1.0 / trace;
            lambda -= step;
            if step.norm() < 1e-13 * lambda.norm().max(1.0) {
                converged = true;
                break;
            }
        }
        if converged && lambda.norm() > 1e-6 && roots.iter().all(|r| (r - lambda).norm() > 1e-7) {
            roots.push(lambda);
        }
    }
    roots
}

pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Deterministic pseudo-random numbers in `[-1, 1)`.
pub fn noise(seed: u64, len: usize) -> Vec<f64> {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..len)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        })
        .collect()
}
