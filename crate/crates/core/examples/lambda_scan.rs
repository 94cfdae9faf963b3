//! Resolvent norm along the real axis, `‖P(λ)⁻¹‖ ~ λ^e`.

use fracwave::damping::holder_profile;
use fracwave::parallel::Workers;
use fracwave::resolvent::{default_lambda_grid, scan_lambda, RateConstants, ScanOptions};

fn main() -> fracwave::Result<()> {
    let workers = Workers::new(std::thread::available_parallelism().map_or(1, |n| n.get()))?;
    for (alpha, beta) in [(1.0, 0.0), (1.0, 0.25), (1.0, 1.0)] {
        let scan = scan_lambda(alpha, &holder_profile(beta)?, &default_lambda_grid(alpha), &ScanOptions::default(), &workers)?;
        let rates = RateConstants::new(alpha, beta)?;
        println!(
            "α = {alpha}, β = {beta}: exponent {:.3} (bound {:.3})",
            scan.fitted_exponent,
            rates.lambda_exponent()
        );
        for r in &scan.rows {
            println!("  λ = {:7.3}  norm = {:.4e}  N = {}", r.parameter, r.norm, r.n_used);
        }
    }
    Ok(())
}
