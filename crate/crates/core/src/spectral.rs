//! Fourier-spectral discretization of the circle `R / 2πZ`.
//!
//! Fields are stored either as samples on the equispaced grid `x_j = 2πj/N`
//! or as Fourier coefficients indexed by the frequencies `-N/2 ..= N/2 - 1`
//! in ascending order. Coefficients follow
//! `û_k = (1/N) Σ_j u(x_j) e^{-ik x_j}`, so that
//! `‖u‖² = (2π/N) Σ_j |u(x_j)|² = 2π Σ_k |û_k|²`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Equispaced grid on the circle together with its FFT plans.
#[derive(Clone)]
pub struct FourierGrid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for FourierGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierGrid").field("n_modes", &self.n).finish()
    }
}

impl PartialEq for FourierGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

pub fn make_grid(n_modes: usize) -> Result<FourierGrid> {
    if n_modes < 8 || !n_modes.is_multiple_of(2) {
        return Err(Error::InvalidGrid(n_modes));
    }
    let mut planner = FftPlanner::new();
    Ok(FourierGrid {
        n: n_modes,
        forward: planner.plan_fft_forward(n_modes),
        inverse: planner.plan_fft_inverse(n_modes),
    })
}

impl FourierGrid {
    pub fn n_modes(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Frequency of the coefficient stored at position `i`.
    pub fn frequency(&self, i: usize) -> i64 {
        i as i64 - (self.n / 2) as i64
    }

    pub fn frequencies(&self) -> Vec<i64> {
        (0..self.n).map(|i| self.frequency(i)).collect()
    }

    /// Storage position of frequency `k`, reduced modulo `N`.
    pub fn index_of(&self, k: i64) -> usize {
        let n = self.n as i64;
        (k + n / 2).rem_euclid(n) as usize
    }

    fn fft_slot(&self, i: usize) -> usize {
        (i + self.n / 2) % self.n
    }

    /// FFT-ordered buffer -> ascending-frequency coefficients.
    fn ascending(&self, buf: &[C64]) -> Vec<C64> {
        (0..self.n).map(|i| buf[self.fft_slot(i)]).collect()
    }

    fn to_fft_order(&self, coeffs: &[C64]) -> Vec<C64> {
        let mut buf = vec![C64::new(0.0, 0.0); self.n];
        for (i, c) in coeffs.iter().enumerate() {
            buf[self.fft_slot(i)] = *c;
        }
        buf
    }

    pub(crate) fn forward_in_place(&self, buf: &mut [C64]) {
        self.forward.process(buf);
    }

    pub(crate) fn inverse_in_place(&self, buf: &mut [C64]) {
        self.inverse.process(buf);
    }
}

/// Point values at the grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleField {
    pub values: Vec<C64>,
}

impl SampleField {
    pub fn new(values: Vec<C64>) -> Self {
        Self { values }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self {
            values: values.iter().map(|&v| C64::new(v, 0.0)).collect(),
        }
    }

    pub fn from_fn(grid: &FourierGrid, f: impl Fn(f64) -> C64) -> Self {
        Self {
            values: grid.points().into_iter().map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Discrete L² norm `((2π/N) Σ |u_j|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let n = self.values.len() as f64;
        (2.0 * PI / n * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    fn check(&self, grid: &FourierGrid) -> Result<()> {
        check_len(grid.n_modes(), self.values.len())
    }
}

/// Fourier coefficients in ascending-frequency order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    pub coeffs: Vec<C64>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<C64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            coeffs: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// Single Fourier mode `e^{ikx}` with unit coefficient.
    pub fn mode(grid: &FourierGrid, k: i64) -> Self {
        let mut f = Self::zeros(grid.n_modes());
        f.coeffs[grid.index_of(k)] = C64::new(1.0, 0.0);
        f
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn l2_norm(&self) -> f64 {
        (2.0 * PI * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn scale(&mut self, s: C64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    fn check(&self, grid: &FourierGrid) -> Result<()> {
        check_len(grid.n_modes(), self.coeffs.len())
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}

pub fn to_spectral(field: &SampleField, grid: &FourierGrid) -> Result<SpectralField> {
    field.check(grid)?;
    let mut buf = field.values.clone();
    grid.forward_in_place(&mut buf);
    let scale = 1.0 / grid.n_modes() as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    Ok(SpectralField::new(grid.ascending(&buf)))
}

pub fn to_samples(field: &SpectralField, grid: &FourierGrid) -> Result<SampleField> {
    field.check(grid)?;
    let mut buf = grid.to_fft_order(&field.coeffs);
    grid.inverse_in_place(&mut buf);
    Ok(SampleField::new(buf))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::out_of_range("alpha", alpha, "(0, 2)"))
    }
}

/// Symbol `|k|^α` of the fractional Laplacian, in storage order.
pub fn fractional_multiplier(alpha: f64, grid: &FourierGrid) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    Ok(grid
        .frequencies()
        .into_iter()
        .map(|k| (k.unsigned_abs() as f64).powf(alpha))
        .collect())
}

/// Which space a dense operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// Coefficients of a single field, `N × N`.
    Fourier,
    /// Stacked pairs of fields `(u, ∂_t u)`, `2N × 2N`.
    FourierPair,
}

#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub matrix: Mat<C64>,
    pub basis: Basis,
}

impl DenseOperator {
    pub fn new(matrix: Mat<C64>, basis: Basis) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Invalid(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if basis == Basis::FourierPair && !matrix.nrows().is_multiple_of(2) {
            return Err(Error::Invalid("pair operator needs even dimension".into()));
        }
        for j in 0..matrix.ncols() {
            for i in 0..matrix.nrows() {
                let v = matrix[(i, j)];
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::Invalid(format!("non-finite entry at ({i}, {j})")));
                }
            }
        }
        Ok(Self { matrix, basis })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &SpectralField) -> Result<SpectralField> {
        check_len(self.dim(), x.len())?;
        Ok(SpectralField::new(crate::linalg::matvec(&self.matrix, &x.coeffs)))
    }

    /// Largest absolute deviation between two operators of equal size.
    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        crate::linalg::max_abs_diff(&self.matrix, &other.matrix)
    }

    pub fn is_real(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| self.matrix[(i, j)].im == 0.0))
    }
}

/// Fourier coefficients `c_m` of a real function, stored for `m >= 0`;
/// negative indices follow from `c_{-m} = conj(c_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCoefficients {
    nonneg: Vec<C64>,
}

impl FourierCoefficients {
    pub fn new(nonneg: Vec<C64>) -> Self {
        Self { nonneg }
    }

    pub fn max_index(&self) -> usize {
        self.nonneg.len().saturating_sub(1)
    }

    pub fn get(&self, m: i64) -> C64 {
        let idx = m.unsigned_abs() as usize;
        let c = self.nonneg.get(idx).copied().unwrap_or_default();
        if m < 0 {
            c.conj()
        } else {
            c
        }
    }
}

/// How multiplication by a damping function is represented on the grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Discretization {
    /// Toeplitz compression built from the exact Fourier coefficients.
    #[default]
    Galerkin,
    /// Pointwise multiplication of samples (aliased discrete coefficients).
    Collocation,
}

impl Discretization {
    pub fn as_str(self) -> &'static str {
        match self {
            Discretization::Galerkin => "galerkin",
            Discretization::Collocation => "collocation",
        }
    }
}

impl std::str::FromStr for Discretization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "galerkin" => Ok(Self::Galerkin),
            "collocation" => Ok(Self::Collocation),
            other => Err(Error::Invalid(format!("unknown discretization {other:?}"))),
        }
    }
}

/// Matrix of `u ↦ χu` assembled from the discrete coefficients of the
/// sampled χ: entry `(j, k)` is the coefficient with index `k_j - k_k mod N`.
pub fn multiplication_operator(chi: &SampleField, grid: &FourierGrid) -> Result<DenseOperator> {
    let hat = to_spectral(chi, grid)?;
    let n = grid.n_modes();
    let matrix = Mat::from_fn(n, n, |j, k| {
        hat.coeffs[grid.index_of(grid.frequency(j) - grid.frequency(k))]
    });
    DenseOperator::new(matrix, Basis::Fourier)
}

/// Toeplitz matrix `(c_{k_j - k_k})` of `u ↦ χu` from exact coefficients.
pub fn galerkin_multiplication(
    coeffs: &FourierCoefficients,
    grid: &FourierGrid,
) -> Result<DenseOperator> {
    let n = grid.n_modes();
    if coeffs.max_index() + 1 < n {
        return Err(Error::Invalid(format!(
            "need coefficients up to |m| = {}, got {}",
            n - 1,
            coeffs.max_index()
        )));
    }
    let matrix = Mat::from_fn(n, n, |j, k| coeffs.get(grid.frequency(j) - grid.frequency(k)));
    DenseOperator::new(matrix, Basis::Fourier)
}

/// `P(λ) = diag(|k|^α) - iλ M_χ - λ² I`.
pub fn assemble_p(
    lambda: C64,
    alpha: f64,
    chi: &DenseOperator,
    grid: &FourierGrid,
) -> Result<DenseOperator> {
    let mult = fractional_multiplier(alpha, grid)?;
    check_damping(chi, grid)?;
    let damp = C64::new(0.0, -1.0) * lambda;
    let shift = lambda * lambda;
    let n = grid.n_modes();
    let matrix = Mat::from_fn(n, n, |i, j| {
        let diag = if i == j { mult[i] - shift } else { C64::new(0.0, 0.0) };
        diag + damp * chi.matrix[(i, j)]
    });
    DenseOperator::new(matrix, Basis::Fourier)
}

/// `P(h, z) = diag(|hk|^α) - i z h^{α/2} M_χ - z² I`.
pub fn assemble_p_semiclassical(
    h: f64,
    z: f64,
    alpha: f64,
    chi: &DenseOperator,
    grid: &FourierGrid,
) -> Result<DenseOperator> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::out_of_range("h", h, "(0, ∞)"));
    }
    check_alpha(alpha)?;
    check_damping(chi, grid)?;
    let damp = C64::new(0.0, -z * h.powf(alpha / 2.0));
    let n = grid.n_modes();
    let matrix = Mat::from_fn(n, n, |i, j| {
        let diag = if i == j {
            let hk = h * grid.frequency(i).unsigned_abs() as f64;
            C64::new(hk.powf(alpha) - z * z, 0.0)
        } else {
            C64::new(0.0, 0.0)
        };
        diag + damp * chi.matrix[(i, j)]
    });
    DenseOperator::new(matrix, Basis::Fourier)
}

fn check_damping(chi: &DenseOperator, grid: &FourierGrid) -> Result<()> {
    if chi.basis != Basis::Fourier {
        return Err(Error::Invalid("damping operator must act on single fields".into()));
    }
    check_len(grid.n_modes(), chi.dim())
}
