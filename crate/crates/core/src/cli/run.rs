//! Executes one configured experiment and writes its artifacts.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use log::info;
use num_complex::Complex64 as C64;

use crate::commutator::{commutator_modes, scaling_fit, SeparableSymbol};
use crate::damping::{damping_operator, DampingProfile};
use crate::error::Result;
use crate::parallel::Workers;
use crate::qevp::{assemble_generator, nearest_eigenpairs, spectral_abscissa, spectrum, EigenPair};
use crate::resolvent::{self, RateConstants, ScanOptions, ScanResult};
use crate::spectral::{make_grid, to_samples, Discretization, FourierGrid};
use crate::timedomain::{
    broadband_initial_data, default_fit_window, dissipation_check, evolve, fit_decay,
    max_time_step,
};

use super::config::{Command, ExperimentConfig};
use super::output::{DerivedConstants, OutputSet, Table};
use super::plot::{emit_plot, PlotKind};

/// Files written by a run, manifest last.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub manifest: PathBuf,
    pub summary: BTreeMap<String, String>,
}

/// Default number of modes per command.
pub fn default_modes(command: Command) -> usize {
    match command {
        Command::Modes => 1024,
        Command::Evolve => 64,
        _ => 256,
    }
}

fn symbol(cfg: &ExperimentConfig) -> SeparableSymbol {
    match cfg.symbol.as_str() {
        "log-bump" => SeparableSymbol::log_bump(),
        _ => SeparableSymbol::default_bump(),
    }
}

fn scan_options(cfg: &ExperimentConfig) -> Result<ScanOptions> {
    Ok(ScanOptions {
        discretization: cfg.discretization()?,
        grid_rule: resolvent::GridRule {
            min_modes: cfg.min_modes,
            modes_per_inverse_h: cfg.modes_per_inverse_h,
        },
        trim: cfg.trim,
        check_doubling: cfg.check_doubling,
        drift_tolerance: cfg.drift_tolerance,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let command = cfg.command()?;
    faer::set_global_parallelism(faer::Par::Seq);
    let workers = Workers::new(cfg.workers)?;
    let dir = cfg.resolved_output_dir().join(command.as_str());
    let mut out = OutputSet::create(&dir)?;
    let beta = cfg.beta()?;
    let rates = RateConstants::new(cfg.alpha, beta)?;
    let mut summary = BTreeMap::new();
    info!("{command}: writing to {}", dir.display());

    match command {
        Command::Rates => {
            let mut t = Table::new(&["alpha", "beta", "nu_sharp", "gamma_sharp"]);
            t.push_values(&[rates.alpha, rates.beta, rates.nu_sharp, rates.gamma_sharp]);
            out.write_table("rates.csv", &t)?;
        }
        Command::Modes => run_modes(cfg, &mut out, &mut summary)?,
        Command::ResolventScan => {
            let profile = cfg.damping_profile()?;
            let h_grid = cfg.h_grid.clone().unwrap_or_else(resolvent::default_h_grid);
            let z_grid = cfg.z_grid.clone().unwrap_or_else(resolvent::default_z_grid);
            let scan = resolvent::scan_h(cfg.alpha, &profile, &h_grid, &z_grid, &scan_options(cfg)?, &workers)?;
            let t = scan_table(&scan, &rates, rates.nu_sharp);
            write_scan(&mut out, "resolvent_scan", &t)?;
            summary.insert("fitted_exponent".into(), scan.fitted_exponent.to_string());
        }
        Command::LambdaScan => {
            let profile = cfg.damping_profile()?;
            let grid = cfg
                .lambda_grid
                .clone()
                .unwrap_or_else(|| resolvent::default_lambda_grid(cfg.alpha));
            let scan = resolvent::scan_lambda(cfg.alpha, &profile, &grid, &scan_options(cfg)?, &workers)?;
            let t = scan_table(&scan, &rates, rates.lambda_exponent());
            write_scan(&mut out, "lambda_scan", &t)?;
            summary.insert("fitted_exponent".into(), scan.fitted_exponent.to_string());
        }
        Command::Evolve => run_evolve(cfg, &rates, &mut out, &mut summary)?,
        Command::CommutatorScan => {
            let profile = cfg.damping_profile()?;
            let sym = symbol(cfg);
            let h_grid = cfg.h_grid.clone().unwrap_or_else(crate::commutator::default_h_grid);
            let modes = |h: f64| match cfg.n_modes {
                Some(n) => n,
                None => commutator_modes(&sym, h),
            };
            let scan = scaling_fit(&profile, &sym, &h_grid, modes, &workers)?;
            let mut t = Table::new(&["h", "N_used", "norm", "holder_norm_f"]);
            for r in &scan.rows {
                t.push_values(&[r.h, r.n_used as f64, r.norm, r.holder_norm_f]);
            }
            t.note("fitted_slope", scan.fitted_slope);
            t.note("beta_declared", scan.beta_declared);
            t.note("fit_residual", scan.fit_residual);
            t.note("symbol", sym.name());
            write_scan(&mut out, "commutator_scan", &t)?;
            summary.insert("fitted_slope".into(), scan.fitted_slope.to_string());
        }
    }

    summary.insert("nu_sharp".into(), rates.nu_sharp.to_string());
    summary.insert("gamma_sharp".into(), rates.gamma_sharp.to_string());
    let files = out.records().iter().map(|r| r.file.clone()).collect();
    let constants = DerivedConstants {
        alpha: rates.alpha,
        beta: rates.beta,
        nu_sharp: rates.nu_sharp,
        gamma_sharp: rates.gamma_sharp,
    };
    let manifest = out.finish(cfg, constants, summary.clone())?;
    Ok(RunReport {
        dir,
        files,
        manifest,
        summary,
    })
}

fn scan_table(scan: &ScanResult, rates: &RateConstants, predicted: f64) -> Table {
    let mut t = Table::new(&["parameter", "z_worst", "norm", "N_used"]);
    for r in &scan.rows {
        t.push(vec![Some(r.parameter), r.z_worst, Some(r.norm), Some(r.n_used as f64)]);
    }
    t.note("fitted_exponent", scan.fitted_exponent);
    t.note("nu_sharp", rates.nu_sharp);
    t.note("gamma_sharp", rates.gamma_sharp);
    t.note("fit_residual", scan.residual_of_fit);
    t.note("predicted_exponent", predicted);
    t.note("fit_window", format!("{}..{}", scan.fit_window.0, scan.fit_window.1));
    let drifts: Vec<String> = scan
        .rows
        .iter()
        .map(|r| r.drift.map_or_else(|| "-".to_string(), |d| format!("{d:.3e}")))
        .collect();
    t.note("doubling_drift", drifts.join(" "));
    let used: Vec<String> = scan.rows.iter().map(|r| u8::from(r.in_fit).to_string()).collect();
    t.note("in_fit", used.join(" "));
    t
}

fn write_scan(out: &mut OutputSet, stem: &str, t: &Table) -> Result<()> {
    out.write_table(&format!("{stem}.csv"), t)?;
    out.write(&format!("{stem}.svg"), emit_plot(t, PlotKind::Scan)?.as_bytes())?;
    Ok(())
}

fn mode_table(pair: &EigenPair, profile: &DampingProfile, grid: &FourierGrid) -> Result<Table> {
    let samples = to_samples(&pair.mode, grid)?;
    let n = grid.n_modes();
    let mut t = Table::new(&["x", "re", "im", "abs", "chi"]);
    // start at x = -π
    for j in (n / 2..n).chain(0..n / 2) {
        let x = grid.point(j) - if j >= n / 2 { 2.0 * PI } else { 0.0 };
        let v = samples.values[j];
        t.push_values(&[x, v.re, v.im, v.norm(), profile.eval(x)]);
    }
    t.note("lambda", format_complex(pair.lambda));
    t.note("residual", pair.residual);
    Ok(t)
}

pub fn format_complex(z: C64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

fn run_modes(cfg: &ExperimentConfig, out: &mut OutputSet, summary: &mut BTreeMap<String, String>) -> Result<()> {
    let profile = cfg.damping_profile()?;
    let n = cfg.n_modes.unwrap_or(default_modes(Command::Modes));
    let grid = make_grid(n)?;
    let chi = damping_operator(&profile, &grid, cfg.discretization()?)?;
    let a = assemble_generator(cfg.alpha, &chi, &grid)?;
    let target = C64::new(cfg.target[0], cfg.target[1]);
    let pairs = if cfg.full_spectrum {
        let all = spectrum(&a)?;
        let mut s = Table::new(&["re", "im", "residual"]);
        for p in &all {
            s.push_values(&[p.lambda.re, p.lambda.im, p.residual]);
        }
        s.note("spectral_abscissa", spectral_abscissa(&all)?);
        out.write_table("spectrum.csv", &s)?;
        let mut near: Vec<EigenPair> = all
            .into_iter()
            .filter(|p| p.lambda.norm() > crate::qevp::ZERO_MODE_TOL)
            .collect();
        near.sort_by(|p, q| (p.lambda - target).norm().total_cmp(&(q.lambda - target).norm()));
        near.truncate(cfg.eigenpairs);
        near
    } else {
        nearest_eigenpairs(&a, target, cfg.eigenpairs.min(n))?
    };
    let mut t = Table::new(&["re", "im", "residual"]);
    for p in &pairs {
        t.push_values(&[p.lambda.re, p.lambda.im, p.residual]);
    }
    t.note("target", format_complex(target));
    t.note("n_modes", n);
    t.note("discretization", cfg.discretization()?.as_str());
    out.write_table("eigenvalues.csv", &t)?;
    let best = &pairs[0];
    let m = mode_table(best, &profile, &grid)?;
    out.write_table("mode.csv", &m)?;
    out.write("mode.svg", emit_plot(&m, PlotKind::Mode)?.as_bytes())?;
    summary.insert("lambda".into(), format_complex(best.lambda));
    println!("λ = {} (residual {:.1e})", format_complex(best.lambda), best.residual);
    Ok(())
}

fn run_evolve(
    cfg: &ExperimentConfig,
    rates: &RateConstants,
    out: &mut OutputSet,
    summary: &mut BTreeMap<String, String>,
) -> Result<()> {
    let profile = cfg.damping_profile()?;
    let n = cfg.n_modes.unwrap_or(default_modes(Command::Evolve));
    let grid = make_grid(n)?;
    let dt = cfg.dt.unwrap_or_else(|| max_time_step(n, cfg.alpha).min(0.01));
    let initial = broadband_initial_data(&grid, cfg.alpha, cfg.seed)?;
    let trace = evolve(&initial, cfg.t_final, dt, cfg.alpha, &profile, cfg.sample_every)?;
    let abscissa = if n <= 512 {
        let chi = damping_operator(&profile, &grid, Discretization::Collocation)?;
        Some(spectral_abscissa(&spectrum(&assemble_generator(cfg.alpha, &chi, &grid)?)?)?)
    } else {
        None
    };
    let window = cfg
        .fit_window
        .map(|[a, b]| (a, b))
        .unwrap_or_else(|| default_fit_window(abscissa.unwrap_or(0.0)));
    let mut t = Table::new(&["t", "E", "dissipation"]);
    for r in &trace.rows {
        t.push_values(&[r.t, r.energy, r.dissipation]);
    }
    let gamma_fit = fit_decay(&trace, window).ok();
    t.note("alpha", cfg.alpha);
    t.note("profile", profile.name());
    t.note("dt", dt);
    t.note("n_modes", n);
    t.note("gamma_sharp", rates.gamma_sharp);
    t.note("gamma_fit", gamma_fit.map_or("nan".to_string(), |g| g.to_string()));
    t.note("fit_window", format!("{}..{}", window.0, window.1));
    if let Some(a) = abscissa {
        t.note("spectral_abscissa", a);
    }
    if trace.rows.len() >= 3 {
        t.note("dissipation_residual", dissipation_check(&trace)?);
    }
    out.write_table("trace.csv", &t)?;
    out.write("trace.svg", emit_plot(&t, PlotKind::Trace)?.as_bytes())?;
    summary.insert(
        "gamma_fit".into(),
        gamma_fit.map_or("nan".to_string(), |g| g.to_string()),
    );
    summary.insert("final_energy".into(), trace.rows.last().map_or(0.0, |r| r.energy).to_string());
    Ok(())
}
