//! Commutators `[f, Op_h(a)]` of Hölder multipliers with quantized
//! separable symbols `a(x, ξ) = φ(x) ψ(ξ)`.

use std::fmt;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::damping::{holder_seminorm, DampingProfile};
use crate::error::{Error, Result};
use crate::fit;
use crate::linalg::{largest_singular_matrix_free, singular_values};
use crate::parallel::Workers;
use crate::spectral::{make_grid, multiplication_operator, Basis, DenseOperator, FourierGrid, SampleField};

type Function = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `a(x, ξ) = φ(x) ψ(ξ)` with `ψ` supported in `c₁ ≤ |ξ| ≤ c₂`.
#[derive(Clone)]
pub struct SeparableSymbol {
    xi_part: Function,
    x_part: Option<Function>,
    support: (f64, f64),
    name: String,
}

impl fmt::Debug for SeparableSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeparableSymbol")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("x_part", &self.x_part.is_some())
            .finish()
    }
}

/// `e^{-1/t}` for `t > 0`, else 0.
fn flat(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step rising from 0 at `t = 0` to 1 at `t = 1`.
pub fn smooth_step(t: f64) -> f64 {
    let a = flat(t);
    let b = flat(1.0 - t);
    if a + b == 0.0 {
        if t >= 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        a / (a + b)
    }
}

impl SeparableSymbol {
    pub fn new(
        name: impl Into<String>,
        xi_part: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: (f64, f64),
    ) -> Result<Self> {
        let (c1, c2) = support;
        if !(c1 > 0.0 && c2 > c1 && c2.is_finite()) {
            return Err(Error::Invalid(format!(
                "symbol support needs 0 < c1 < c2, got ({c1}, {c2})"
            )));
        }
        Ok(Self {
            xi_part: Arc::new(xi_part),
            x_part: None,
            support,
            name: name.into(),
        })
    }

    /// Equal to 1 for `1/4 ≤ |ξ| ≤ 4`, supported in `1/8 ≤ |ξ| ≤ 8`, with
    /// `e^{-1/t}` smooth steps on each side.
    pub fn default_bump() -> Self {
        let psi = |xi: f64| {
            let r = xi.abs();
            smooth_step((r - 0.125) / 0.125) * (1.0 - smooth_step((r - 4.0) / 4.0))
        };
        Self::new("bump", psi, (0.125, 8.0)).expect("valid support")
    }

    /// `exp(1 - 1/(1 - t²))` with `t = log₂|ξ| / 3`: a single bump in
    /// `log|ξ|` with the same support as the default.
    pub fn log_bump() -> Self {
        let psi = |xi: f64| {
            let r = xi.abs();
            if r <= 0.0 {
                return 0.0;
            }
            let t = r.log2() / 3.0;
            if t.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - t * t)).exp()
            }
        };
        Self::new("log-bump", psi, (0.125, 8.0)).expect("valid support")
    }

    pub fn with_x_part(mut self, phi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.x_part = Some(Arc::new(phi));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// `ψ(ξ)`, forced to zero outside the declared support.
    pub fn psi(&self, xi: f64) -> f64 {
        let r = xi.abs();
        if r < self.support.0 || r > self.support.1 {
            0.0
        } else {
            (self.xi_part)(xi)
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        self.x_part.as_ref().map_or(1.0, |p| p(x))
    }

    fn check_resolved(&self, h: f64, grid: &FourierGrid) -> Result<()> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::out_of_range("h", h, "(0, ∞)"));
        }
        if (h * (grid.n_modes() / 2) as f64) < self.support.1 {
            return Err(Error::Invalid(format!(
                "grid of {} modes does not resolve |hξ| <= {} at h = {h}",
                grid.n_modes(),
                self.support.1
            )));
        }
        Ok(())
    }
}

/// `M_φ · diag(ψ(hk))`.
pub fn quantize(symbol: &SeparableSymbol, h: f64, grid: &FourierGrid) -> Result<DenseOperator> {
    symbol.check_resolved(h, grid)?;
    let n = grid.n_modes();
    let psi: Vec<f64> = grid.frequencies().iter().map(|&k| symbol.psi(h * k as f64)).collect();
    let matrix = match &symbol.x_part {
        None => Mat::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(psi[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
        Some(phi) => {
            let m = multiplication_operator(&SampleField::from_fn(grid, |x| C64::new(phi(x), 0.0)), grid)?;
            Mat::from_fn(n, n, |i, j| m.matrix[(i, j)] * psi[j])
        }
    };
    DenseOperator::new(matrix, Basis::Fourier)
}

/// Above this size the commutator norm is computed matrix-free.
pub const DENSE_COMMUTATOR_LIMIT: usize = 2048;

/// `‖M_f Op_h(a) - Op_h(a) M_f‖` (largest singular value).
pub fn commutator_norm(
    f: &SampleField,
    symbol: &SeparableSymbol,
    h: f64,
    grid: &FourierGrid,
) -> Result<f64> {
    if f.len() != grid.n_modes() {
        return Err(Error::LengthMismatch {
            expected: grid.n_modes(),
            found: f.len(),
        });
    }
    symbol.check_resolved(h, grid)?;
    if grid.n_modes() <= DENSE_COMMUTATOR_LIMIT {
        let c = commutator_matrix(f, symbol, h, grid)?;
        Ok(singular_values(&c.matrix)?.first().copied().unwrap_or(0.0))
    } else {
        commutator_norm_matrix_free(f, symbol, h, grid)
    }
}

pub fn commutator_matrix(
    f: &SampleField,
    symbol: &SeparableSymbol,
    h: f64,
    grid: &FourierGrid,
) -> Result<DenseOperator> {
    let mf = multiplication_operator(f, grid)?;
    let q = quantize(symbol, h, grid)?;
    let c = &mf.matrix * &q.matrix - &q.matrix * &mf.matrix;
    DenseOperator::new(c, Basis::Fourier)
}

/// Relative tolerance of the matrix-free norm.
pub const MATRIX_FREE_TOL: f64 = 1e-8;

/// Matrix-free version working in FFT storage order; the norm does not
/// depend on the ordering of the basis.
pub fn commutator_norm_matrix_free(
    f: &SampleField,
    symbol: &SeparableSymbol,
    h: f64,
    grid: &FourierGrid,
) -> Result<f64> {
    symbol.check_resolved(h, grid)?;
    let n = grid.n_modes();
    let freq = |i: usize| -> f64 {
        if i < n / 2 {
            i as f64
        } else {
            i as f64 - n as f64
        }
    };
    let psi: Vec<f64> = (0..n).map(|i| symbol.psi(h * freq(i))).collect();
    let fvals = f.values.clone();
    let phi: Option<Vec<f64>> = symbol
        .x_part
        .as_ref()
        .map(|p| grid.points().into_iter().map(|x| p(x)).collect());
    let scale = 1.0 / n as f64;
    // multiplication by sampled g, on FFT-ordered coefficients
    let mult = |g: &[C64], y: &[C64]| -> Vec<C64> {
        let mut buf = y.to_vec();
        grid.inverse_in_place(&mut buf);
        buf.iter_mut().zip(g).for_each(|(b, gv)| *b *= gv * scale);
        grid.forward_in_place(&mut buf);
        buf
    };
    let mult_real = |g: &[f64], y: &[C64]| -> Vec<C64> {
        let gc: Vec<C64> = g.iter().map(|&v| C64::new(v, 0.0)).collect();
        mult(&gc, y)
    };
    let op = |y: &[C64]| -> Vec<C64> {
        let py: Vec<C64> = y.iter().zip(&psi).map(|(a, b)| a * b).collect();
        match &phi {
            None => py,
            Some(p) => mult_real(p, &py),
        }
    };
    let op_adj = |y: &[C64]| -> Vec<C64> {
        let z = match &phi {
            None => y.to_vec(),
            Some(p) => mult_real(p, y),
        };
        z.iter().zip(&psi).map(|(a, b)| a * b).collect()
    };
    let fconj: Vec<C64> = fvals.iter().map(|c| c.conj()).collect();
    let apply = |x: &[C64]| -> Vec<C64> {
        let a = mult(&fvals, &op(x));
        let b = op(&mult(&fvals, x));
        a.iter().zip(&b).map(|(p, q)| p - q).collect()
    };
    let apply_adjoint = |x: &[C64]| -> Vec<C64> {
        let a = op_adj(&mult(&fconj, x));
        let b = mult(&fconj, &op_adj(x));
        a.iter().zip(&b).map(|(p, q)| p - q).collect()
    };
    largest_singular_matrix_free(n, apply, apply_adjoint, MATRIX_FREE_TOL)
}

/// `N(h) = ceil(32 c₂ / h)`, rounded up to even.
pub fn commutator_modes(symbol: &SeparableSymbol, h: f64) -> usize {
    let n = ((32.0 * symbol.support.1 / h).ceil() as usize).max(8);
    n + n % 2
}

/// `2^{-4}, …, 2^{-10}`.
pub fn default_h_grid() -> Vec<f64> {
    (4..=10).map(|k| 2f64.powi(-k)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorRow {
    pub h: f64,
    pub n_used: usize,
    pub norm: f64,
    pub holder_norm_f: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorScan {
    pub rows: Vec<CommutatorRow>,
    pub fitted_slope: f64,
    pub fit_residual: f64,
    pub beta_declared: f64,
}

/// Slope of `log ‖[f, Op_h(a)]‖` against `log h` for `f = √χ`.
pub fn scaling_fit(
    profile: &DampingProfile,
    symbol: &SeparableSymbol,
    h_grid: &[f64],
    modes: impl Fn(f64) -> usize + Sync + Send,
    workers: &Workers,
) -> Result<CommutatorScan> {
    if h_grid.len() < 2 {
        return Err(Error::WindowTooShort {
            found: h_grid.len(),
            needed: 2,
        });
    }
    let beta = profile.declared_beta();
    let rows: Vec<Result<CommutatorRow>> = workers.map(h_grid, |&h| {
        let n = modes(h);
        let grid = make_grid(n)?;
        let f = profile.sqrt_sample(&grid);
        Ok(CommutatorRow {
            h,
            n_used: n,
            norm: commutator_norm(&f, symbol, h, &grid)?,
            holder_norm_f: holder_seminorm(&f, beta, &grid)?,
        })
    });
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.h.total_cmp(&b.h));
    if rows.iter().all(|r| r.norm == 0.0) {
        return Err(Error::Invalid("all commutator norms vanish".into()));
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let ns: Vec<f64> = rows.iter().map(|r| r.norm).collect();
    let line = fit::log_log(&hs, &ns)?;
    Ok(CommutatorScan {
        rows,
        fitted_slope: line.slope,
        fit_residual: line.residual,
        beta_declared: beta,
    })
}

/// Crude envelope `2 sup|f| ‖Op_h(a)‖` for `φ ≡ 1`.
pub fn triangle_bound(f: &SampleField, symbol: &SeparableSymbol, h: f64, grid: &FourierGrid) -> f64 {
    let sup = f.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let psi_max = grid
        .frequencies()
        .iter()
        .fold(0.0f64, |m, &k| m.max(symbol.psi(h * k as f64).abs()));
    let phi_max = grid.points().iter().fold(0.0f64, |m, &x| m.max(symbol.phi(x).abs()));
    2.0 * sup * psi_max * phi_max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::holder_profile;

    #[test]
    fn bump_shape() {
        let s = SeparableSymbol::default_bump();
        assert_eq!(s.psi(0.1), 0.0);
        assert_eq!(s.psi(9.0), 0.0);
        assert_eq!(s.psi(0.0), 0.0);
        for xi in [0.25, 1.0, -2.0, 4.0] {
            assert!((s.psi(xi) - 1.0).abs() < 1e-15, "{xi}");
        }
        assert!(s.psi(0.2) > 0.0 && s.psi(0.2) < 1.0);
        assert!(s.psi(6.0) > 0.0 && s.psi(6.0) < 1.0);
        let l = SeparableSymbol::log_bump();
        assert_eq!(l.psi(1.0), 1.0);
        assert_eq!(l.psi(8.5), 0.0);
    }

    #[test]
    fn quantize_examples() {
        let g = make_grid(128).unwrap();
        let s = SeparableSymbol::default_bump();
        let h = 0.25;
        let q = quantize(&s, h, &g).unwrap();
        for (i, &k) in g.frequencies().iter().enumerate() {
            assert_eq!(q.matrix[(i, i)].re, s.psi(h * k as f64));
            if (h * k as f64).abs() < 0.125 {
                assert_eq!(q.matrix[(i, i)].re, 0.0);
            }
        }
        assert!(quantize(&s, 0.05, &g).is_err());
    }

    #[test]
    fn constant_commutes() {
        let g = make_grid(128).unwrap();
        let f = SampleField::from_real(&[0.7; 128]);
        let s = SeparableSymbol::default_bump();
        assert!(commutator_norm(&f, &s, 0.25, &g).unwrap() < 1e-14);
        let big = make_grid(4096).unwrap();
        let f = SampleField::from_real(&vec![0.7; 4096]);
        assert!(commutator_norm(&f, &s, 0.25, &big).unwrap() < 1e-14);
    }

    #[test]
    fn matrix_free_agrees_with_dense() {
        let g = make_grid(256).unwrap();
        let f = holder_profile(0.5).unwrap().sqrt_sample(&g);
        for s in [
            SeparableSymbol::default_bump(),
            SeparableSymbol::default_bump().with_x_part(|x| 1.0 + 0.5 * x.cos()),
        ] {
            let dense = commutator_norm(&f, &s, 0.125, &g).unwrap();
            let free = commutator_norm_matrix_free(&f, &s, 0.125, &g).unwrap();
            assert!((dense - free).abs() <= 1e-7 * dense, "{dense} vs {free}");
            assert!(dense <= triangle_bound(&f, &s, 0.125, &g));
        }
    }

    #[test]
    fn grid_rule() {
        let s = SeparableSymbol::default_bump();
        assert_eq!(commutator_modes(&s, 1.0 / 16.0), 4096);
        assert_eq!(commutator_modes(&s, 0.3), 854);
    }
}
