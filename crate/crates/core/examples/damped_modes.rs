//! Eigenvalues near λ = 13 for indicator and tanh damping.

use std::time::Instant;

use fracwave::damping::{damping_operator, indicator_profile, tanh_profile};
use fracwave::qevp::{assemble_generator, nearest_eigenpairs};
use fracwave::spectral::{make_grid, Discretization};
use num_complex::Complex64 as C64;

fn main() -> fracwave::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1024);
    let grid = make_grid(n)?;
    for profile in [indicator_profile(), tanh_profile()] {
        let t = Instant::now();
        let chi = damping_operator(&profile, &grid, Discretization::Galerkin)?;
        let a = assemble_generator(1.0, &chi, &grid)?;
        let pairs = nearest_eigenpairs(&a, C64::new(13.0, 0.0), 4)?;
        println!("{profile} (N = {n}, {:.1?})", t.elapsed());
        for p in &pairs {
            println!("  λ = {:.5} {:+.5}i   residual {:.1e}", p.lambda.re, p.lambda.im, p.residual);
        }
    }
    Ok(())
}
