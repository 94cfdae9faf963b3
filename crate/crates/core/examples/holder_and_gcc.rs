//! Measured Hölder norms of √χ_β under refinement, and the control condition.

use fracwave::damping::{constant_profile, gcc_check, holder_profile, holder_seminorm, tanh_profile};
use fracwave::spectral::make_grid;

fn main() -> fracwave::Result<()> {
    for beta in [0.0, 0.25, 0.5, 1.0] {
        let profile = holder_profile(beta)?;
        print!("β = {beta:<4}");
        for exponent in [beta, beta + 0.25].into_iter().filter(|e| *e <= 1.0) {
            let values: Vec<String> = [128, 512, 2048]
                .iter()
                .map(|&n| {
                    let grid = make_grid(n)?;
                    holder_seminorm(&profile.sqrt_sample(&grid), exponent, &grid).map(|v| format!("{v:.3}"))
                })
                .collect::<fracwave::Result<_>>()?;
            print!("   exponent {exponent:.2}: {}", values.join(" → "));
        }
        println!();
    }
    for profile in [holder_profile(0.5)?, tanh_profile(), constant_profile(0.0)?] {
        let g = gcc_check(&profile, 1024)?;
        println!(
            "{profile}: GCC {} on ({:.3}, {:.3}), T = {:.3}",
            if g.satisfied { "holds" } else { "fails" },
            g.interval.0,
            g.interval.1,
            g.time_bound
        );
    }
    Ok(())
}
