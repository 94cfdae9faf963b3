//! Energy decay of broadband data under several damping profiles.

use fracwave::damping::{damping_operator, holder_profile, indicator_profile, tanh_profile};
use fracwave::qevp::{assemble_generator, spectral_abscissa, spectrum};
use fracwave::resolvent::gamma_sharp;
use fracwave::spectral::{make_grid, Discretization};
use fracwave::timedomain::{
    broadband_initial_data, default_fit_window, dissipation_check, evolve, exponential_rate,
    fit_decay,
};

fn main() -> fracwave::Result<()> {
    let n = 64;
    let alpha = 1.0;
    let grid = make_grid(n)?;
    let initial = broadband_initial_data(&grid, alpha, 7)?;
    for profile in [indicator_profile(), holder_profile(0.5)?, holder_profile(1.0)?, tanh_profile()] {
        let chi = damping_operator(&profile, &grid, Discretization::Collocation)?;
        let abscissa = spectral_abscissa(&spectrum(&assemble_generator(alpha, &chi, &grid)?)?)?;
        let t_final = (12.0 / abscissa.abs()).min(2000.0);
        let trace = evolve(&initial, t_final, 0.01, alpha, &profile, 4)?;
        let window = default_fit_window(abscissa);
        let tail = (0.6 * t_final, t_final);
        println!(
            "{profile}: γ_fit = {:.2} on [{:.0}, {:.0}] (γ# = {}), tail rate {:.4} vs 2·abscissa {:.4}, dissipation residual {:.1e}",
            fit_decay(&trace, window)?,
            window.0,
            window.1,
            gamma_sharp(alpha, profile.declared_beta())?,
            exponential_rate(&trace, tail)?,
            2.0 * abscissa,
            dissipation_check(&trace)?
        );
    }
    Ok(())
}
