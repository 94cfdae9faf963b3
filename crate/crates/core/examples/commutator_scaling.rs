//! Scaling of `‖[√χ_β, ψ(hD)]‖` in `h` for the Hölder family.

use std::time::Instant;

use fracwave::commutator::{commutator_modes, default_h_grid, scaling_fit, SeparableSymbol};
use fracwave::damping::holder_profile;
use fracwave::parallel::Workers;

fn main() -> fracwave::Result<()> {
    let symbol = SeparableSymbol::default_bump();
    let workers = Workers::new(std::thread::available_parallelism().map_or(1, |n| n.get()))?;
    let betas: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|s| s.parse().ok())
        .collect();
    let betas = if betas.is_empty() { vec![0.0, 0.25, 0.5, 0.75, 1.0] } else { betas };
    for beta in betas {
        let t = Instant::now();
        let scan = scaling_fit(
            &holder_profile(beta)?,
            &symbol,
            &default_h_grid(),
            |h| commutator_modes(&symbol, h),
            &workers,
        )?;
        println!(
            "β = {beta}: slope {:.3} (fit residual {:.1e}, {:.1?})",
            scan.fitted_slope,
            scan.fit_residual,
            t.elapsed()
        );
        for r in &scan.rows {
            println!(
                "  h = 2^{:<4} N = {:<7} norm = {:.5e}  ‖f‖ = {:.4}",
                r.h.log2(),
                r.n_used,
                r.norm,
                r.holder_norm_f
            );
        }
    }
    Ok(())
}
