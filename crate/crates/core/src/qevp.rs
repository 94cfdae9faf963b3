//! Quadratic eigenvalue problem `P(λ)v = 0` through the first-order
//! generator `A = [[0, I], [-|D|^α, -M_χ]]` acting on `(u, ∂_t u)`.
//!
//! Eigenvalues `μ` of `A` map to `λ = iμ`; with `u(t) = e^{-iλt}v` decay
//! means `Im λ < 0`.

use std::f64::consts::PI;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::spectral::{fractional_multiplier, Basis, DenseOperator, FourierGrid, SpectralField};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Residual above which an eigenpair from the dense solver is polished.
pub const REFINE_THRESHOLD: f64 = 1e-8;

/// Eigenvalues with modulus at most this are treated as the constant mode.
pub const ZERO_MODE_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    alpha: f64,
    multiplier: Vec<f64>,
    damping: DenseOperator,
}

pub fn assemble_generator(
    alpha: f64,
    chi: &DenseOperator,
    grid: &FourierGrid,
) -> Result<GeneratorMatrix> {
    let multiplier = fractional_multiplier(alpha, grid)?;
    if chi.basis != Basis::Fourier || chi.dim() != grid.n_modes() {
        return Err(Error::LengthMismatch {
            expected: grid.n_modes(),
            found: chi.dim(),
        });
    }
    Ok(GeneratorMatrix {
        alpha,
        multiplier,
        damping: chi.clone(),
    })
}

impl GeneratorMatrix {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of Fourier modes `N`; the generator itself is `2N × 2N`.
    pub fn n_modes(&self) -> usize {
        self.multiplier.len()
    }

    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    pub fn damping(&self) -> &DenseOperator {
        &self.damping
    }

    fn entry(&self, i: usize, j: usize) -> C64 {
        let n = self.n_modes();
        match (i < n, j < n) {
            (true, true) => ZERO,
            (true, false) => {
                if j - n == i {
                    C64::new(1.0, 0.0)
                } else {
                    ZERO
                }
            }
            (false, true) => {
                if i - n == j {
                    C64::new(-self.multiplier[j], 0.0)
                } else {
                    ZERO
                }
            }
            (false, false) => -self.damping.matrix[(i - n, j - n)],
        }
    }

    /// The full `2N × 2N` matrix.
    pub fn to_operator(&self) -> DenseOperator {
        let n2 = 2 * self.n_modes();
        DenseOperator {
            matrix: Mat::from_fn(n2, n2, |i, j| self.entry(i, j)),
            basis: Basis::FourierPair,
        }
    }

    /// `P(λ)` assembled from the same blocks.
    pub fn quadratic(&self, lambda: C64) -> Mat<C64> {
        let n = self.n_modes();
        let damp = -I * lambda;
        let shift = lambda * lambda;
        Mat::from_fn(n, n, |i, j| {
            let d = if i == j { self.multiplier[i] - shift } else { ZERO };
            d + damp * self.damping.matrix[(i, j)]
        })
    }

    fn apply_damping(&self, v: &[C64]) -> Vec<C64> {
        crate::linalg::matvec(&self.damping.matrix, v)
    }

    /// `‖P(λ)v‖ / ‖v‖`.
    pub fn residual(&self, lambda: C64, v: &[C64]) -> f64 {
        let mv = self.apply_damping(v);
        quad_residual(&self.multiplier, lambda, v, &mv)
    }

    /// The constant mode decouples when `M_χ` has no entries in its row and
    /// column; then `λ = 0` carries a 2×2 Jordan block.
    fn zero_mode_decoupled(&self) -> bool {
        let n = self.n_modes();
        let z = n / 2;
        (0..n).all(|j| self.damping.matrix[(z, j)] == ZERO && self.damping.matrix[(j, z)] == ZERO)
    }
}

fn quad_residual(multiplier: &[f64], lambda: C64, v: &[C64], mv: &[C64]) -> f64 {
    let shift = lambda * lambda;
    let damp = -I * lambda;
    let r: f64 = v
        .iter()
        .zip(mv)
        .zip(multiplier)
        .map(|((&vi, &mi), &d)| (vi * (d - shift) + damp * mi).norm_sqr())
        .sum();
    r.sqrt() / norm2(v)
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda: C64,
    pub mode: SpectralField,
    pub residual: f64,
}

/// All `2N` eigenpairs of the generator.
pub fn spectrum(a: &GeneratorMatrix) -> Result<Vec<EigenPair>> {
    let n = a.n_modes();
    let decoupled = a.zero_mode_decoupled();
    let keep: Vec<usize> = if decoupled {
        (0..n).filter(|&i| i != n / 2).collect()
    } else {
        (0..n).collect()
    };
    let m = keep.len();
    let mut block = Mat::<C64>::zeros(2 * m, 2 * m);
    for (bj, &j) in keep.iter().enumerate() {
        for (bi, &i) in keep.iter().enumerate() {
            block[(bi + m, bj + m)] = a.entry(i + n, j + n);
        }
        block[(bj, bj + m)] = C64::new(1.0, 0.0);
        block[(bj + m, bj)] = C64::new(-a.multiplier[j], 0.0);
    }

    let (mus, vecs) = if a.damping.is_real() {
        let real = Mat::<f64>::from_fn(2 * m, 2 * m, |i, j| block[(i, j)].re);
        let eig = real
            .eigen()
            .map_err(|e| Error::Backend(format!("eigen: {e:?}")))?;
        (
            eig.S().column_vector().iter().copied().collect::<Vec<C64>>(),
            eig.U().to_owned(),
        )
    } else {
        let eig = block
            .eigen()
            .map_err(|e| Error::Backend(format!("eigen: {e:?}")))?;
        (
            eig.S().column_vector().iter().copied().collect::<Vec<C64>>(),
            eig.U().to_owned(),
        )
    };

    // Candidate modes: the u block and the v block divided by μ. Residuals
    // for all of them come from one product with the damping matrix.
    let lift = |col: &mut dyn FnMut(usize) -> C64| -> Vec<C64> {
        let mut v = vec![ZERO; n];
        for (b, &i) in keep.iter().enumerate() {
            v[i] = col(b);
        }
        v
    };
    let mut top = Mat::<C64>::zeros(n, 2 * m);
    let mut bottom = Mat::<C64>::zeros(n, 2 * m);
    for c in 0..2 * m {
        let mu = mus[c];
        let u = lift(&mut |b| vecs[(b, c)]);
        let w = lift(&mut |b| if mu.norm() > 0.0 { vecs[(b + m, c)] / mu } else { ZERO });
        for i in 0..n {
            top[(i, c)] = u[i];
            bottom[(i, c)] = w[i];
        }
    }
    let m_top = &a.damping.matrix * &top;
    let m_bottom = &a.damping.matrix * &bottom;

    let mut pairs = Vec::with_capacity(2 * n);
    for (c, &mu) in mus.iter().enumerate().take(2 * m) {
        let lambda = I * mu;
        let u: Vec<C64> = top.col(c).iter().copied().collect();
        let mu_: Vec<C64> = m_top.col(c).iter().copied().collect();
        let w: Vec<C64> = bottom.col(c).iter().copied().collect();
        let mw: Vec<C64> = m_bottom.col(c).iter().copied().collect();
        let ru = quad_residual(&a.multiplier, lambda, &u, &mu_);
        let rw = if norm2(&w) > 0.0 {
            quad_residual(&a.multiplier, lambda, &w, &mw)
        } else {
            f64::INFINITY
        };
        let (mut v, mut res) = if ru <= rw { (u, ru) } else { (w, rw) };
        let mut lambda = lambda;
        if !(res <= REFINE_THRESHOLD) {
            let refined = refine(a, lambda, &v, 6)?;
            lambda = refined.0;
            v = refined.1;
            res = refined.2;
            if !(res <= REFINE_THRESHOLD) {
                return Err(Error::NonConvergence {
                    index: c,
                    residual: res,
                });
            }
        }
        pairs.push(make_pair(lambda, v, res));
    }
    if decoupled {
        let mut v = vec![ZERO; n];
        v[n / 2] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            pairs.push(make_pair(ZERO, v.clone(), 0.0));
        }
    }
    Ok(pairs)
}

fn make_pair(lambda: C64, v: Vec<C64>, residual: f64) -> EigenPair {
    EigenPair {
        lambda,
        mode: normalize_mode(v),
        residual,
    }
}

/// Unit `L²` norm (`2π Σ|v̂_k|² = 1`) with the largest entry real positive.
fn normalize_mode(mut v: Vec<C64>) -> SpectralField {
    let big = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(ZERO);
    let phase = if big.norm() > 0.0 {
        big.conj() / big.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let scale = phase / ((2.0 * PI).sqrt() * norm2(&v));
    v.iter_mut().for_each(|x| *x *= scale);
    SpectralField::new(v)
}

/// Roots of `v*P(λ)v = 0`, closest to `near`.
fn rayleigh_lambda(a: &GeneratorMatrix, v: &[C64], near: C64) -> C64 {
    let mv = a.apply_damping(v);
    let dv: Vec<C64> = v.iter().zip(&a.multiplier).map(|(x, d)| x * d).collect();
    // v*P(λ)v = c + bλ + aλ² with a = -v*v, b = -i v*Mv, c = v*Dv
    let qa = -dot(v, v);
    let qb = -I * dot(v, &mv);
    let qc = dot(v, &dv);
    let disc = (qb * qb - 4.0 * qa * qc).sqrt();
    let r1 = (-qb + disc) / (2.0 * qa);
    let r2 = (-qb - disc) / (2.0 * qa);
    if (r1 - near).norm() <= (r2 - near).norm() {
        r1
    } else {
        r2
    }
}

/// Nonlinear Rayleigh quotient iteration from `(λ, v)`.
fn refine(a: &GeneratorMatrix, lambda: C64, v: &[C64], iters: usize) -> Result<(C64, Vec<C64>, f64)> {
    let mut v: Vec<C64> = v.to_vec();
    let nv = norm2(&v);
    if !(nv > 0.0) {
        return Err(Error::NonConvergence {
            index: 0,
            residual: f64::INFINITY,
        });
    }
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = rayleigh_lambda(a, &v, lambda);
    let mut best = (lambda, v.clone(), a.residual(lambda, &v));
    for _ in 0..iters {
        if best.2 <= 1e-12 {
            break;
        }
        let lu: PartialPivLu<C64> = a.quadratic(lambda).partial_piv_lu();
        // right-hand side P'(λ)v = (-iM - 2λ)v
        let mv = a.apply_damping(&v);
        let mut rhs = Mat::from_fn(v.len(), 1, |i, _| -I * mv[i] - 2.0 * lambda * v[i]);
        lu.solve_in_place(&mut rhs);
        let w: Vec<C64> = rhs.col(0).iter().copied().collect();
        let nw = norm2(&w);
        if !nw.is_finite() || nw == 0.0 {
            break;
        }
        v = w.into_iter().map(|x| x / nw).collect();
        lambda = rayleigh_lambda(a, &v, lambda);
        let r = a.residual(lambda, &v);
        if r < best.2 {
            best = (lambda, v.clone(), r);
        }
    }
    Ok(best)
}

/// The eigenpair closest to `target`, skipping the constant mode.
pub fn mode_near(target: C64, pairs: &[EigenPair]) -> Result<EigenPair> {
    pairs
        .iter()
        .filter(|p| p.lambda.norm() > ZERO_MODE_TOL)
        .min_by(|a, b| (a.lambda - target).norm().total_cmp(&(b.lambda - target).norm()))
        .cloned()
        .ok_or_else(|| Error::Invalid("no eigenpairs to choose from".into()))
}

/// `max Im λ` over the nonconstant modes.
pub fn spectral_abscissa(pairs: &[EigenPair]) -> Result<f64> {
    pairs
        .iter()
        .filter(|p| p.lambda.norm() > ZERO_MODE_TOL)
        .map(|p| p.lambda.im)
        .max_by(f64::total_cmp)
        .ok_or_else(|| Error::Invalid("no nonconstant eigenpairs".into()))
}

/// The `count` eigenpairs nearest `target`, by shift-invert Arnoldi on the
/// generator followed by Rayleigh quotient refinement. Only `N × N` systems
/// are factored.
pub fn nearest_eigenpairs(
    a: &GeneratorMatrix,
    target: C64,
    count: usize,
) -> Result<Vec<EigenPair>> {
    let n = a.n_modes();
    if count == 0 || count > n {
        return Err(Error::Invalid(format!("count must be in 1..={n}, got {count}")));
    }
    let sigma = -I * target;
    let lu: PartialPivLu<C64> = a.quadratic(target).partial_piv_lu();
    // (A - σ)^{-1}(y1, y2): solve P(λ_t)u = -(y2 + (M + σ)y1), then (u, y1 + σu).
    let shift_invert = |y: &[C64]| -> Vec<C64> {
        let (y1, y2) = y.split_at(n);
        let my1 = a.apply_damping(y1);
        let mut rhs = Mat::from_fn(n, 1, |i, _| -(y2[i] + my1[i] + sigma * y1[i]));
        lu.solve_in_place(&mut rhs);
        let u: Vec<C64> = rhs.col(0).iter().copied().collect();
        let mut out = u.clone();
        out.extend(y1.iter().zip(&u).map(|(&p, &q)| p + sigma * q));
        out
    };

    let dim = 2 * n;
    let steps = dim.min((4 * count + 30).max(60));
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(steps + 1);
    let mut h = Mat::<C64>::zeros(steps + 1, steps);
    let mut q: Vec<C64> = (0..dim)
        .map(|i| {
            let t = i as f64 + 1.0;
            C64::new((0.7548776662 * t).fract() - 0.5, (0.5698402910 * t).fract() - 0.5)
        })
        .collect();
    let nq = norm2(&q);
    q.iter_mut().for_each(|x| *x /= nq);
    basis.push(q);
    let mut used = steps;
    for j in 0..steps {
        let mut w = shift_invert(&basis[j]);
        for _ in 0..2 {
            for (i, b) in basis.iter().enumerate() {
                let c = dot(b, &w);
                h[(i, j)] += c;
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let beta = norm2(&w);
        h[(j + 1, j)] = C64::new(beta, 0.0);
        if beta <= 1e-14 * h[(j, j)].norm().max(1.0) {
            used = j + 1;
            break;
        }
        basis.push(w.into_iter().map(|x| x / beta).collect());
    }
    let hm = Mat::from_fn(used, used, |i, j| h[(i, j)]);
    let eig = hm
        .eigen()
        .map_err(|e| Error::Backend(format!("arnoldi eigen: {e:?}")))?;
    let thetas: Vec<C64> = eig.S().column_vector().iter().copied().collect();
    let y = eig.U();
    let mut order: Vec<usize> = (0..used).collect();
    order.sort_by(|&p, &q| thetas[q].norm().total_cmp(&thetas[p].norm()));

    let mut pairs: Vec<EigenPair> = Vec::with_capacity(count);
    for &c in order.iter() {
        if pairs.len() == count {
            break;
        }
        let theta = thetas[c];
        if theta.norm() == 0.0 {
            continue;
        }
        let lambda = I * (sigma + theta.inv());
        let mut ritz = vec![ZERO; dim];
        for (k, b) in basis.iter().take(used).enumerate() {
            let yk = y[(k, c)];
            ritz.iter_mut().zip(b).for_each(|(r, bi)| *r += yk * bi);
        }
        let (v1, v2) = ritz.split_at(n);
        let mu = -I * lambda;
        let candidate: Vec<C64> = if norm2(v1) * mu.norm() >= norm2(v2) || mu.norm() == 0.0 {
            v1.to_vec()
        } else {
            v2.iter().map(|x| x / mu).collect()
        };
        let (lam, v, res) = refine(a, lambda, &candidate, 8)?;
        if !(res <= REFINE_THRESHOLD) {
            return Err(Error::NonConvergence {
                index: pairs.len(),
                residual: res,
            });
        }
        let tol = 1e-9 * lam.norm().max(1.0);
        if pairs.iter().any(|p| (p.lambda - lam).norm() <= tol) {
            continue;
        }
        pairs.push(make_pair(lam, v, res));
    }
    pairs.sort_by(|p, q| (p.lambda - target).norm().total_cmp(&(q.lambda - target).norm()));
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::{constant_profile, damping_operator, indicator_profile};
    use crate::spectral::{make_grid, Discretization};

    fn undamped(n: usize) -> (FourierGrid, DenseOperator) {
        let g = make_grid(n).unwrap();
        let m = DenseOperator::new(Mat::zeros(n, n), Basis::Fourier).unwrap();
        (g, m)
    }

    #[test]
    fn undamped_spectrum_is_square_roots() {
        let (g, m) = undamped(32);
        let a = assemble_generator(1.0, &m, &g).unwrap();
        let pairs = spectrum(&a).unwrap();
        assert_eq!(pairs.len(), 64);
        let mut got: Vec<f64> = pairs.iter().map(|p| p.lambda.re).collect();
        got.sort_by(f64::total_cmp);
        let mut expect: Vec<f64> = g
            .frequencies()
            .iter()
            .flat_map(|&k| {
                let s = (k.abs() as f64).sqrt();
                [s, -s]
            })
            .collect();
        expect.sort_by(f64::total_cmp);
        for (x, y) in got.iter().zip(&expect) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
        assert!(pairs.iter().all(|p| p.lambda.im.abs() < 1e-10));
        let four = mode_near(C64::new(4.0, 0.0), &pairs).unwrap();
        assert!((four.lambda - 4.0).norm() < 1e-10);
        assert_eq!(spectral_abscissa(&pairs).unwrap(), 0.0);
        assert_eq!(pairs.iter().filter(|p| p.lambda == ZERO).count(), 2);
    }

    #[test]
    fn constant_damping_closed_form() {
        let g = make_grid(32).unwrap();
        let c = 0.3;
        let m = damping_operator(&constant_profile(c).unwrap(), &g, Discretization::Galerkin).unwrap();
        let a = assemble_generator(1.0, &m, &g).unwrap();
        let pairs = spectrum(&a).unwrap();
        for k in g.frequencies() {
            let disc = C64::new(k.abs() as f64 - c * c / 4.0, 0.0).sqrt();
            for s in [1.0, -1.0] {
                let l = C64::new(0.0, -c / 2.0) + s * disc;
                let d = pairs.iter().map(|p| (p.lambda - l).norm()).fold(f64::INFINITY, f64::min);
                assert!(d < 1e-9, "k={k}: {l}");
            }
        }
        let expect = (1..=16)
            .flat_map(|k| {
                let disc = C64::new(k as f64 - c * c / 4.0, 0.0).sqrt();
                [C64::new(0.0, -c / 2.0) + disc, C64::new(0.0, -c / 2.0) - disc]
            })
            .map(|l| l.im)
            .fold(f64::NEG_INFINITY, f64::max);
        // λ = 0 and λ = -ic from the constant mode; the latter is not the max
        let got = spectral_abscissa(&pairs).unwrap();
        assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
    }

    #[test]
    fn indicator_invariants_and_targeted_solver() {
        let g = make_grid(64).unwrap();
        let m = damping_operator(&indicator_profile(), &g, Discretization::Galerkin).unwrap();
        let a = assemble_generator(1.0, &m, &g).unwrap();
        let pairs = spectrum(&a).unwrap();
        assert_eq!(pairs.len(), 128);
        for p in &pairs {
            assert!(p.residual <= 1e-8);
            assert!(p.lambda.im <= 1e-10);
            let mirror = -p.lambda.conj();
            let d = pairs.iter().map(|q| (q.lambda - mirror).norm()).fold(f64::INFINITY, f64::min);
            assert!(d <= 1e-8);
            let l2 = 2.0 * PI * p.mode.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>();
            assert!((l2 - 1.0).abs() < 1e-12);
        }
        assert!(spectral_abscissa(&pairs).unwrap() < 0.0);

        let target = C64::new(5.0, 0.0);
        let near = nearest_eigenpairs(&a, target, 3).unwrap();
        let mut dense: Vec<C64> = pairs.iter().map(|p| p.lambda).collect();
        dense.sort_by(|p, q| (p - target).norm().total_cmp(&(q - target).norm()));
        for (p, d) in near.iter().zip(&dense) {
            assert!((p.lambda - d).norm() < 1e-8, "{} vs {d}", p.lambda);
        }
    }
}
