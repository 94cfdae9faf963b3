//! Numerical quasimode of `P(λ)` for indicator damping near λ = 13.
//!
//! The smallest right singular vector of `P(λ)` is mostly supported where
//! χ vanishes.

use std::f64::consts::FRAC_PI_2;

use fracwave::damping::{damping_operator, indicator_profile};
use fracwave::resolvent::quasimode_extract;
use fracwave::spectral::{assemble_p, make_grid, to_samples, Discretization};
use num_complex::Complex64 as C64;

fn main() -> fracwave::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(512);
    let grid = make_grid(n)?;
    let chi = damping_operator(&indicator_profile(), &grid, Discretization::Galerkin)?;
    for lambda in [12.5, 12.9, 13.0, 13.1, 13.5] {
        let p = assemble_p(C64::new(lambda, 0.0), 1.0, &chi, &grid)?;
        let (u, sigma) = quasimode_extract(&p)?;
        let samples = to_samples(&u, &grid)?;
        let total: f64 = samples.values.iter().map(|v| v.norm_sqr()).sum();
        let outside: f64 = grid
            .points()
            .iter()
            .zip(&samples.values)
            .filter(|(x, _)| (**x - std::f64::consts::PI).abs() < FRAC_PI_2)
            .map(|(_, v)| v.norm_sqr())
            .sum();
        println!(
            "λ = {lambda:5.2}  ‖P(λ)u‖ = {sigma:.3e}  mass outside (-π/2, π/2): {:.1}%",
            100.0 * outside / total
        );
    }
    Ok(())
}
