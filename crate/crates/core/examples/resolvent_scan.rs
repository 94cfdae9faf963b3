//! Semiclassical resolvent scans for the χ_β family against ν#.

use std::time::Instant;

use fracwave::damping::holder_profile;
use fracwave::parallel::Workers;
use fracwave::resolvent::{default_h_grid, default_z_grid, nu_sharp, scan_h, ScanOptions};

fn main() -> fracwave::Result<()> {
    let workers = Workers::new(std::thread::available_parallelism().map_or(1, |n| n.get()))?;
    for (alpha, beta) in [(1.0, 0.0), (1.0, 0.25), (1.0, 0.5), (0.5, 0.5)] {
        let t = Instant::now();
        let profile = holder_profile(beta)?;
        let scan = scan_h(
            alpha,
            &profile,
            &default_h_grid(),
            &default_z_grid(),
            &ScanOptions::default(),
            &workers,
        )?;
        println!(
            "α = {alpha}, β = {beta}: ν_fit = {:.3}, ν# = {}, fit residual {:.1e} ({:.1?})",
            scan.fitted_exponent,
            nu_sharp(alpha, beta)?,
            scan.residual_of_fit,
            t.elapsed()
        );
        for r in &scan.rows {
            println!(
                "  h = {:.4}  z = {:.2}  norm = {:.4e}  N = {}  drift = {:.1e}{}",
                r.parameter,
                r.z_worst.unwrap_or(f64::NAN),
                r.norm,
                r.n_used,
                r.drift.unwrap_or(f64::NAN),
                if r.in_fit { "  *" } else { "" }
            );
        }
    }
    Ok(())
}
