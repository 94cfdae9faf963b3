//! Table of ν# and γ# over a grid of (α, β).

use fracwave::resolvent::RateConstants;

fn main() -> fracwave::Result<()> {
    let alphas = [0.5, 1.0, 1.5, 1.9];
    let betas = [0.0, 0.25, 0.5, 0.75, 1.0];
    println!("{:>5} {:>5} {:>8} {:>8} {:>10}", "α", "β", "ν#", "γ#", "λ-exponent");
    for &alpha in &alphas {
        for &beta in &betas {
            let r = RateConstants::new(alpha, beta)?;
            println!(
                "{alpha:>5} {beta:>5} {:>8.4} {:>8.4} {:>10.4}",
                r.nu_sharp,
                r.gamma_sharp,
                r.lambda_exponent() + 0.0
            );
        }
    }
    Ok(())
}
