//! Resolvent norms `‖P(h,z)⁻¹‖` and `‖P(λ)⁻¹‖` along the real axis, power-law
//! fits, the sharp rate constants and numerical quasimodes.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64 as C64;

use crate::damping::{damping_operator, DampingProfile};
use crate::error::{Error, Result};
use crate::fit;
use crate::linalg::smallest_singular;
use crate::parallel::Workers;
use crate::spectral::{
    assemble_p, assemble_p_semiclassical, check_alpha, make_grid, DenseOperator, Discretization,
    SpectralField,
};

fn check_domain(alpha: f64, beta: f64) -> Result<()> {
    check_alpha(alpha)?;
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::out_of_range("beta", beta, "[0, 1]"))
    }
}

/// `ν# = min(-1, 2β + α/2 - 2)`.
pub fn nu_sharp(alpha: f64, beta: f64) -> Result<f64> {
    check_domain(alpha, beta)?;
    Ok((2.0 * beta + alpha / 2.0 - 2.0).min(-1.0))
}

/// `γ# = 2 / (1 - 2(1 + ν#/α))`.
pub fn gamma_sharp(alpha: f64, beta: f64) -> Result<f64> {
    let nu = nu_sharp(alpha, beta)?;
    Ok(2.0 / (1.0 - 2.0 * (1.0 + nu / alpha)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateConstants {
    pub alpha: f64,
    pub beta: f64,
    pub nu_sharp: f64,
    pub gamma_sharp: f64,
}

impl RateConstants {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Ok(Self {
            alpha,
            beta,
            nu_sharp: nu_sharp(alpha, beta)?,
            gamma_sharp: gamma_sharp(alpha, beta)?,
        })
    }

    /// Exponent `-2(1 + ν#/α)` of `‖P(λ)⁻¹‖` in `λ`.
    pub fn lambda_exponent(&self) -> f64 {
        -2.0 * (1.0 + self.nu_sharp / self.alpha)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolventNorm {
    /// `1/σ_min`, infinite when the matrix is singular.
    pub norm: f64,
    pub sigma_min: f64,
    pub singular: bool,
}

pub fn resolvent_norm(p: &DenseOperator) -> Result<ResolventNorm> {
    let s = smallest_singular(&p.matrix)?;
    Ok(ResolventNorm {
        norm: if s.singular { f64::INFINITY } else { s.sigma.recip() },
        sigma_min: s.sigma,
        singular: s.singular,
    })
}

/// Right singular vector of `σ_min`, normalized in `L²`, with its residual
/// `‖Pu‖ = σ_min`.
pub fn quasimode_extract(p: &DenseOperator) -> Result<(SpectralField, f64)> {
    let s = smallest_singular(&p.matrix)?;
    let mut v = s.vector;
    let scale = 1.0 / ((2.0 * PI).sqrt() * crate::linalg::norm2(&v));
    if scale.is_finite() {
        v.iter_mut().for_each(|x| *x *= scale);
    }
    Ok((SpectralField::new(v), s.sigma))
}

/// Maps `h` to the number of Fourier modes used at that `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridRule {
    pub min_modes: usize,
    /// Modes per unit of `1/h`.
    pub modes_per_inverse_h: f64,
}

impl Default for GridRule {
    fn default() -> Self {
        Self {
            min_modes: 256,
            modes_per_inverse_h: 32.0,
        }
    }
}

impl GridRule {
    pub fn modes(&self, h: f64) -> usize {
        let n = ((self.modes_per_inverse_h / h).ceil() as usize).max(self.min_modes);
        n + n % 2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanOptions {
    pub discretization: Discretization,
    pub grid_rule: GridRule,
    /// Fraction of rows dropped from each end before fitting.
    pub trim: f64,
    /// Recompute each row at `2N` and keep it in the fit only if the norm
    /// changes by at most `drift_tolerance` (relative).
    pub check_doubling: bool,
    pub drift_tolerance: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            discretization: Discretization::Galerkin,
            grid_rule: GridRule::default(),
            trim: 0.2,
            check_doubling: true,
            drift_tolerance: 0.05,
        }
    }
}

/// `2^{-2}, 2^{-2.5}, …, 2^{-5}`.
pub fn default_h_grid() -> Vec<f64> {
    (0..7).map(|i| 2f64.powf(-2.0 - 0.5 * i as f64)).collect()
}

/// `λ = h^{-α/2}` over [`default_h_grid`].
pub fn default_lambda_grid(alpha: f64) -> Vec<f64> {
    default_h_grid().iter().map(|h| h.powf(-alpha / 2.0)).collect()
}

/// Largest dense grid a scan may request, doubling included.
pub const MAX_SCAN_MODES: usize = 8192;

fn check_sizes(sizes: impl Iterator<Item = usize>, options: &ScanOptions) -> Result<()> {
    let factor = if options.check_doubling { 2 } else { 1 };
    match sizes.map(|n| factor * n).max() {
        Some(n) if n > MAX_SCAN_MODES => Err(Error::Invalid(format!(
            "scan needs {n} modes, above the dense limit of {MAX_SCAN_MODES}; use a coarser grid"
        ))),
        _ => Ok(()),
    }
}

/// 21 equispaced points in `[0.9, 1.1]`.
pub fn default_z_grid() -> Vec<f64> {
    (0..21).map(|i| 0.9 + 0.01 * i as f64).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    /// `h` or `λ`.
    pub parameter: f64,
    pub z_worst: Option<f64>,
    pub norm: f64,
    pub n_used: usize,
    /// Relative change of the norm when `N` is doubled, if checked.
    pub drift: Option<f64>,
    pub singular: bool,
    pub in_fit: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    /// Sorted by increasing parameter.
    pub rows: Vec<ScanRow>,
    pub fitted_exponent: f64,
    /// Index range `[lo, hi)` of the trimmed window in `rows`.
    pub fit_window: (usize, usize),
    pub residual_of_fit: f64,
}

impl ScanResult {
    pub fn fitted_rows(&self) -> impl Iterator<Item = &ScanRow> {
        self.rows.iter().filter(|r| r.in_fit)
    }
}

/// Fits `log norm` against `log parameter` over the trimmed window, skipping
/// singular rows and rows that failed the doubling check.
pub fn fit_rows(mut rows: Vec<ScanRow>, trim: f64, drift_tolerance: f64) -> Result<ScanResult> {
    rows.sort_by(|a, b| a.parameter.total_cmp(&b.parameter));
    let window = fit::trimmed_window(rows.len(), trim);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, r) in rows.iter_mut().enumerate() {
        let stable = r.drift.is_none_or(|d| d <= drift_tolerance);
        r.in_fit = i >= window.0 && i < window.1 && !r.singular && r.norm.is_finite() && stable;
        if r.singular {
            warn!("singular operator at parameter {}; excluded from fit", r.parameter);
        } else if !stable {
            warn!(
                "row at parameter {} changed by {:.3} under N-doubling; excluded from fit",
                r.parameter,
                r.drift.unwrap_or(f64::NAN)
            );
        }
        if r.in_fit {
            xs.push(r.parameter);
            ys.push(r.norm);
        }
    }
    let line = fit::log_log(&xs, &ys)?;
    Ok(ScanResult {
        rows,
        fitted_exponent: line.slope,
        fit_window: window,
        residual_of_fit: line.residual,
    })
}

fn worst_over_z(
    alpha: f64,
    h: f64,
    z_grid: &[f64],
    chi: &DenseOperator,
    grid: &crate::spectral::FourierGrid,
) -> Result<(f64, f64, bool)> {
    let mut worst = (z_grid[0], 0.0f64, false);
    for &z in z_grid {
        let p = assemble_p_semiclassical(h, z, alpha, chi, grid)?;
        let r = resolvent_norm(&p)?;
        if r.singular {
            return Ok((z, f64::INFINITY, true));
        }
        if r.norm > worst.1 {
            worst = (z, r.norm, false);
        }
    }
    Ok(worst)
}

/// Semiclassical norm at one `(h, z)` on `n` modes.
pub fn semiclassical_norm(
    alpha: f64,
    profile: &DampingProfile,
    h: f64,
    z: f64,
    n: usize,
    discretization: Discretization,
) -> Result<ResolventNorm> {
    let grid = make_grid(n)?;
    let chi = damping_operator(profile, &grid, discretization)?;
    resolvent_norm(&assemble_p_semiclassical(h, z, alpha, &chi, &grid)?)
}

/// `max_z ‖P(h,z)⁻¹‖` for each `h`, with a power-law fit in `h`.
pub fn scan_h(
    alpha: f64,
    profile: &DampingProfile,
    h_grid: &[f64],
    z_grid: &[f64],
    options: &ScanOptions,
    workers: &Workers,
) -> Result<ScanResult> {
    check_alpha(alpha)?;
    if h_grid.is_empty() || z_grid.is_empty() {
        return Err(Error::Invalid("scan grids must be nonempty".into()));
    }
    if let Some(&h) = h_grid.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(Error::out_of_range("h", h, "(0, ∞)"));
    }
    check_sizes(h_grid.iter().map(|&h| options.grid_rule.modes(h)), options)?;
    let rows: Vec<Result<ScanRow>> = workers.map(h_grid, |&h| {
        let n = options.grid_rule.modes(h);
        let grid = make_grid(n)?;
        let chi = damping_operator(profile, &grid, options.discretization)?;
        let (z, norm, singular) = worst_over_z(alpha, h, z_grid, &chi, &grid)?;
        let drift = if options.check_doubling && !singular {
            let twice = semiclassical_norm(alpha, profile, h, z, 2 * n, options.discretization)?;
            Some((twice.norm - norm).abs() / norm)
        } else {
            None
        };
        Ok(ScanRow {
            parameter: h,
            z_worst: Some(z),
            norm,
            n_used: n,
            drift,
            singular,
            in_fit: false,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    fit_rows(rows, options.trim, options.drift_tolerance)
}

/// `‖P(λ)⁻¹‖` for real `λ`, on the grid the `h`-rule assigns to
/// `h = λ^{-2/α}`.
pub fn scan_lambda(
    alpha: f64,
    profile: &DampingProfile,
    lambda_grid: &[f64],
    options: &ScanOptions,
    workers: &Workers,
) -> Result<ScanResult> {
    check_alpha(alpha)?;
    if lambda_grid.is_empty() {
        return Err(Error::Invalid("scan grids must be nonempty".into()));
    }
    if let Some(&l) = lambda_grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::out_of_range("lambda", l, "(0, ∞)"));
    }
    check_sizes(
        lambda_grid.iter().map(|&l| options.grid_rule.modes(l.powf(-2.0 / alpha))),
        options,
    )?;
    let norm_at = |lambda: f64, n: usize| -> Result<ResolventNorm> {
        let grid = make_grid(n)?;
        let chi = damping_operator(profile, &grid, options.discretization)?;
        resolvent_norm(&assemble_p(C64::new(lambda, 0.0), alpha, &chi, &grid)?)
    };
    let rows: Vec<Result<ScanRow>> = workers.map(lambda_grid, |&lambda| {
        let n = options.grid_rule.modes(lambda.powf(-2.0 / alpha));
        let r = norm_at(lambda, n)?;
        let drift = if options.check_doubling && !r.singular {
            Some((norm_at(lambda, 2 * n)?.norm - r.norm).abs() / r.norm)
        } else {
            None
        };
        Ok(ScanRow {
            parameter: lambda,
            z_worst: None,
            norm: r.norm,
            n_used: n,
            drift,
            singular: r.singular,
            in_fit: false,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    fit_rows(rows, options.trim, options.drift_tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_grid, Basis};
    use faer::Mat;

    #[test]
    fn rate_spot_checks() {
        assert_eq!(nu_sharp(1.0, 0.0).unwrap(), -1.5);
        assert_eq!(nu_sharp(1.0, 0.25).unwrap(), -1.0);
        assert_eq!(nu_sharp(1.0, 1.0).unwrap(), -1.0);
        assert_eq!(gamma_sharp(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(gamma_sharp(1.0, 0.25).unwrap(), 2.0);
        assert_eq!(gamma_sharp(1.0, 1.0).unwrap(), 2.0);
        assert!(nu_sharp(2.0, 0.0).is_err());
        assert!(gamma_sharp(1.0, 1.5).is_err());
        assert_eq!(RateConstants::new(1.0, 0.25).unwrap().lambda_exponent(), 0.0);
    }

    #[test]
    fn diagonal_norm_and_quasimode() {
        let d = [3.0, -0.5, 2.0, 0.25, -4.0, 1.0, 7.0, 0.75];
        let m = Mat::from_fn(8, 8, |i, j| if i == j { C64::new(d[i], 0.0) } else { C64::new(0.0, 0.0) });
        let p = DenseOperator::new(m, Basis::Fourier).unwrap();
        let r = resolvent_norm(&p).unwrap();
        assert!((r.norm - 4.0).abs() < 1e-12);
        let (u, res) = quasimode_extract(&p).unwrap();
        assert!((res - 0.25).abs() < 1e-14);
        assert!((u.coeffs[3].norm() * (2.0 * PI).sqrt() - 1.0).abs() < 1e-12);
        assert!((res * r.norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_rule_rounds_to_even() {
        let g = GridRule::default();
        assert_eq!(g.modes(0.25), 256);
        assert_eq!(g.modes(1.0 / 32.0), 1024);
        assert_eq!(g.modes(0.03), 1068);
        assert_eq!(GridRule { min_modes: 8, modes_per_inverse_h: 3.0 }.modes(1.0), 8);
        assert_eq!(GridRule { min_modes: 8, modes_per_inverse_h: 9.0 }.modes(1.0), 10);
    }

    #[test]
    fn undamped_singular_point_is_flagged() {
        let g = make_grid(16).unwrap();
        let zero = DenseOperator::new(Mat::zeros(16, 16), Basis::Fourier).unwrap();
        let p = assemble_p(C64::new(2.0, 0.0), 1.0, &zero, &g).unwrap();
        let r = resolvent_norm(&p).unwrap();
        assert!(r.singular && r.norm.is_infinite());
    }

    #[test]
    fn synthetic_rows_fit_exactly() {
        let rows = (2..9)
            .map(|k| {
                let h = 2f64.powi(-k);
                ScanRow {
                    parameter: h,
                    z_worst: Some(1.0),
                    norm: h.powf(-1.5),
                    n_used: 64,
                    drift: Some(0.0),
                    singular: false,
                    in_fit: false,
                }
            })
            .collect();
        let s = fit_rows(rows, 0.2, 0.05).unwrap();
        assert!((s.fitted_exponent + 1.5).abs() < 1e-12);
        assert_eq!(s.fit_window, (1, 6));
        assert_eq!(s.fitted_rows().count(), 5);
        assert!(s.rows.windows(2).all(|w| w[0].parameter < w[1].parameter));
    }
}
