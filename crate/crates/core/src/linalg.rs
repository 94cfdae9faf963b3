//! Dense and matrix-free helpers on top of `faer`.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Above this size the smallest singular value is found by inverse Lanczos
/// on an LU factorization rather than a full SVD.
pub const DENSE_SVD_LIMIT: usize = 512;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn matvec(a: &Mat<C64>, x: &[C64]) -> Vec<C64> {
    let mut y = vec![ZERO; a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == ZERO {
            continue;
        }
        let col = a.col(j);
        for (yi, aij) in y.iter_mut().zip(col.iter()) {
            *yi += aij * xj;
        }
    }
    y
}

pub fn max_abs_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius(a: &Mat<C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn column(a: &Mat<C64>, j: usize) -> Vec<C64> {
    a.col(j).iter().copied().collect()
}

pub fn to_column(x: &[C64]) -> Mat<C64> {
    Mat::from_fn(x.len(), 1, |i, _| x[i])
}

pub fn singular_values(a: &Mat<C64>) -> Result<Vec<f64>> {
    a.singular_values()
        .map_err(|e| Error::Backend(format!("svd: {e:?}")))
}

/// Smallest singular value of a square matrix with its right singular vector.
#[derive(Clone, Debug)]
pub struct SmallestSingular {
    pub sigma: f64,
    /// Unit vector (Euclidean) attaining `‖A v‖ = σ_min`.
    pub vector: Vec<C64>,
    /// The matrix is singular to working precision.
    pub singular: bool,
}

pub fn smallest_singular(a: &Mat<C64>) -> Result<SmallestSingular> {
    if a.nrows() <= DENSE_SVD_LIMIT {
        smallest_singular_dense(a)
    } else {
        smallest_singular_lanczos(a)
    }
}

pub fn smallest_singular_dense(a: &Mat<C64>) -> Result<SmallestSingular> {
    let n = a.nrows();
    let svd = a.svd().map_err(|e| Error::Backend(format!("svd: {e:?}")))?;
    let s = svd.S().column_vector();
    let sigma = s[n - 1].re;
    let sigma_max = s[0].re;
    let vector = svd.V().col(n - 1).iter().copied().collect();
    Ok(SmallestSingular {
        sigma,
        vector,
        singular: sigma <= n as f64 * f64::EPSILON * sigma_max,
    })
}

/// Inverse Lanczos: the largest eigenvalue of `(A^*A)^{-1}` is `σ_min^{-2}`.
pub fn smallest_singular_lanczos(a: &Mat<C64>) -> Result<SmallestSingular> {
    let n = a.nrows();
    let lu: PartialPivLu<C64> = a.partial_piv_lu();
    let pivots_ok = (0..n).all(|i| lu.U()[(i, i)] != ZERO);
    let singular = SmallestSingular {
        sigma: 0.0,
        vector: vec![ZERO; n],
        singular: true,
    };
    if !pivots_ok {
        return Ok(singular);
    }
    let apply = |x: &[C64]| -> Vec<C64> {
        let mut col = to_column(x);
        lu.solve_adjoint_in_place(&mut col);
        lu.solve_in_place(&mut col);
        col.col(0).iter().copied().collect()
    };
    let (theta, vector) = lanczos_largest(n, apply, 1e-13, 200)?;
    if !theta.is_finite() || theta <= 0.0 {
        return Ok(singular);
    }
    let sigma = theta.sqrt().recip();
    let scale = frobenius(a);
    Ok(SmallestSingular {
        sigma,
        vector,
        singular: sigma <= n as f64 * f64::EPSILON * scale,
    })
}

/// Largest eigenvalue and eigenvector of a Hermitian positive semidefinite
/// operator given by its action, via Lanczos with full reorthogonalization.
pub fn lanczos_largest(
    n: usize,
    mut apply: impl FnMut(&[C64]) -> Vec<C64>,
    tol: f64,
    max_steps: usize,
) -> Result<(f64, Vec<C64>)> {
    let steps = max_steps.min(n);
    let mut q = start_vector(n);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(steps);
    let mut alphas = Vec::with_capacity(steps);
    let mut betas: Vec<f64> = Vec::with_capacity(steps);
    let mut best = (0.0, Vec::new());

    for j in 0..steps {
        let mut w = apply(&q);
        let a = dot(&q, &w).re;
        basis.push(q);
        alphas.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let beta = norm2(&w);

        let converged_check = j + 1 == steps || beta <= 1e-300 || (j >= 4 && j % 2 == 0);
        if converged_check {
            let (theta, y) = tridiagonal_top(&alphas, &betas)?;
            let estimate = beta * y.last().copied().unwrap_or(0.0).abs();
            best = (theta, y);
            if estimate <= tol * theta.abs() || beta <= 1e-300 || j + 1 == steps {
                break;
            }
        }
        betas.push(beta);
        q = w.into_iter().map(|x| x / beta).collect();
    }

    let (theta, y) = best;
    let mut v = vec![ZERO; n];
    for (b, &yi) in basis.iter().zip(&y) {
        v.iter_mut().zip(b).for_each(|(vi, bi)| *vi += bi * yi);
    }
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    Ok((theta, v))
}

fn tridiagonal_top(alphas: &[f64], betas: &[f64]) -> Result<(f64, Vec<f64>)> {
    let m = alphas.len();
    let t = Mat::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = t
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Backend(format!("tridiagonal eigen: {e:?}")))?;
    let theta = eig.S().column_vector()[m - 1];
    let y = eig.U().col(m - 1).iter().copied().collect();
    Ok((theta, y))
}

/// Deterministic, generic starting vector.
fn start_vector(n: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n)
        .map(|i| {
            let t = i as f64 + 1.0;
            C64::new((0.7548776662 * t).fract() + 0.5, (0.5698402910 * t).fract() - 0.5)
        })
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Largest singular value of an operator given by its action and adjoint.
pub fn largest_singular_matrix_free(
    n: usize,
    apply: impl Fn(&[C64]) -> Vec<C64>,
    apply_adjoint: impl Fn(&[C64]) -> Vec<C64>,
    tol: f64,
) -> Result<f64> {
    let (theta, _) = lanczos_largest(n, |x| apply_adjoint(&apply(x)), tol, 300)?;
    Ok(theta.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize, shift: f64) -> Mat<C64> {
        Mat::from_fn(n, n, |i, j| {
            let t = (i * 31 + j * 17) as f64;
            let base = C64::new((0.37 * t).sin(), (0.11 * t).cos()) / n as f64;
            if i == j {
                base + C64::new(shift + i as f64 / n as f64, 0.0)
            } else {
                base
            }
        })
    }

    #[test]
    fn lanczos_agrees_with_svd() {
        let a = test_matrix(120, 0.05);
        let dense = smallest_singular_dense(&a).unwrap();
        let lz = smallest_singular_lanczos(&a).unwrap();
        assert!((dense.sigma - lz.sigma).abs() <= 1e-10 * dense.sigma, "{} vs {}", dense.sigma, lz.sigma);
        let av = matvec(&a, &lz.vector);
        assert!((norm2(&av) - lz.sigma).abs() <= 1e-9 * lz.sigma);
    }

    #[test]
    fn exactly_singular_diagonal() {
        let a = Mat::from_fn(600, 600, |i, j| {
            if i == j {
                C64::new(i as f64 - 300.0, 0.0)
            } else {
                ZERO
            }
        });
        assert!(smallest_singular(&a).unwrap().singular);
        let b = Mat::from_fn(20, 20, |i, j| if i == j && i != 3 { C64::new(1.0, 0.0) } else { ZERO });
        assert!(smallest_singular(&b).unwrap().singular);
    }

    #[test]
    fn largest_singular_of_diagonal() {
        let d: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let apply = |x: &[C64]| x.iter().zip(&d).map(|(a, b)| a * b).collect::<Vec<_>>();
        let s = largest_singular_matrix_free(50, apply, apply, 1e-12).unwrap();
        let expect = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((s - expect).abs() < 1e-10);
    }
}
