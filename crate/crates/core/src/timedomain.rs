//! Time evolution of `(∂_t² + χ∂_t + |D|^α)u = 0`, the energy functional and
//! decay fits.

use std::f64::consts::PI;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::damping::DampingProfile;
use crate::error::{Error, Result};
use crate::fit;
use crate::linalg::singular_values;
use crate::qevp::GeneratorMatrix;
use crate::spectral::{
    fractional_multiplier, make_grid, to_samples, to_spectral, FourierGrid, SampleField,
    SpectralField,
};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    pub u: SpectralField,
    /// `∂_t u`.
    pub v: SpectralField,
    pub t: f64,
}

impl WaveState {
    pub fn new(u: SpectralField, v: SpectralField, t: f64) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::LengthMismatch {
                expected: u.len(),
                found: v.len(),
            });
        }
        let finite = |f: &SpectralField| f.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite());
        if !(finite(&u) && finite(&v) && t >= 0.0) {
            return Err(Error::Invalid("wave state must be finite with t >= 0".into()));
        }
        Ok(Self { u, v, t })
    }

    pub fn n_modes(&self) -> usize {
        self.u.len()
    }

    fn is_finite(&self) -> bool {
        self.u
            .coeffs
            .iter()
            .chain(&self.v.coeffs)
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// `E = 2π Σ_k (|k|^α |û_k|² + |v̂_k|²)`.
pub fn energy(state: &WaveState, alpha: f64) -> Result<f64> {
    let grid = make_grid(state.n_modes())?;
    let m = fractional_multiplier(alpha, &grid)?;
    Ok(energy_with(&m, state))
}

fn energy_with(multiplier: &[f64], state: &WaveState) -> f64 {
    let s: f64 = multiplier
        .iter()
        .zip(&state.u.coeffs)
        .zip(&state.v.coeffs)
        .map(|((m, u), v)| m * u.norm_sqr() + v.norm_sqr())
        .sum();
    2.0 * PI * s
}

/// Precomputed Strang splitting `D(dt/2) ∘ H(dt) ∘ D(dt/2)`.
pub struct Stepper {
    grid: FourierGrid,
    dt: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    omega: Vec<f64>,
    half_damping: Vec<f64>,
    chi: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: &FourierGrid, dt: f64, alpha: f64, chi: &SampleField) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::out_of_range("dt", dt, "(0, ∞)"));
        }
        if chi.len() != grid.n_modes() {
            return Err(Error::LengthMismatch {
                expected: grid.n_modes(),
                found: chi.len(),
            });
        }
        let omega: Vec<f64> = fractional_multiplier(alpha, grid)?
            .into_iter()
            .map(f64::sqrt)
            .collect();
        let chi = chi.real_parts();
        Ok(Self {
            grid: grid.clone(),
            dt,
            cos: omega.iter().map(|w| (w * dt).cos()).collect(),
            sin: omega.iter().map(|w| (w * dt).sin()).collect(),
            half_damping: chi.iter().map(|c| (-c * dt / 2.0).exp()).collect(),
            omega,
            chi,
        })
    }

    fn damp(&self, v: &mut SpectralField) -> Result<()> {
        let mut s = to_samples(v, &self.grid)?;
        s.values
            .iter_mut()
            .zip(&self.half_damping)
            .for_each(|(x, f)| *x *= f);
        *v = to_spectral(&s, &self.grid)?;
        Ok(())
    }

    fn rotate(&self, state: &mut WaveState) {
        for (k, (u, v)) in state
            .u
            .coeffs
            .iter_mut()
            .zip(state.v.coeffs.iter_mut())
            .enumerate()
        {
            let w = self.omega[k];
            if w == 0.0 {
                *u += self.dt * *v;
            } else {
                let (c, s) = (self.cos[k], self.sin[k]);
                let (u0, v0) = (*u, *v);
                *u = u0 * c + v0 * (s / w);
                *v = -u0 * (w * s) + v0 * c;
            }
        }
    }

    pub fn step(&self, state: &mut WaveState) -> Result<()> {
        self.damp(&mut state.v)?;
        self.rotate(state);
        self.damp(&mut state.v)?;
        state.t += self.dt;
        Ok(())
    }

    /// `-2∫χ|v|²`, computed in sample space.
    pub fn dissipation(&self, v: &SpectralField) -> Result<f64> {
        let s = to_samples(v, &self.grid)?;
        let sum: f64 = s
            .values
            .iter()
            .zip(&self.chi)
            .map(|(x, c)| c * x.norm_sqr())
            .sum();
        Ok(-2.0 * self.grid.spacing() * sum)
    }
}

pub fn step_strang(
    state: &WaveState,
    dt: f64,
    alpha: f64,
    chi: &SampleField,
) -> Result<WaveState> {
    let grid = make_grid(state.n_modes())?;
    let stepper = Stepper::new(&grid, dt, alpha, chi)?;
    let mut next = state.clone();
    stepper.step(&mut next)?;
    Ok(next)
}

/// Condition number above which the eigenbasis is rejected.
pub const MAX_BASIS_CONDITION: f64 = 1e8;

/// `e^{tA}` through the eigendecomposition of the generator.
pub struct ModalPropagator {
    n: usize,
    /// Retained indices; the constant mode is split off when it decouples.
    keep: Vec<usize>,
    mus: Vec<C64>,
    vectors: Mat<C64>,
    lu: PartialPivLu<C64>,
    zero_block: bool,
    condition: f64,
}

impl ModalPropagator {
    pub fn new(a: &GeneratorMatrix) -> Result<Self> {
        let n = a.n_modes();
        let m_chi = &a.damping().matrix;
        let z = n / 2;
        let zero_block = (0..n).all(|j| m_chi[(z, j)] == ZERO && m_chi[(j, z)] == ZERO);
        let keep: Vec<usize> = (0..n).filter(|&i| !(zero_block && i == z)).collect();
        let m = keep.len();
        let mut block = Mat::<C64>::zeros(2 * m, 2 * m);
        for (bj, &j) in keep.iter().enumerate() {
            for (bi, &i) in keep.iter().enumerate() {
                block[(bi + m, bj + m)] = -m_chi[(i, j)];
            }
            block[(bj, bj + m)] = C64::new(1.0, 0.0);
            block[(bj + m, bj)] = C64::new(-a.multiplier()[j], 0.0);
        }
        let eig = block
            .eigen()
            .map_err(|e| Error::Backend(format!("eigen: {e:?}")))?;
        let mus: Vec<C64> = eig.S().column_vector().iter().copied().collect();
        let vectors = eig.U().to_owned();
        let sv = singular_values(&vectors)?;
        let smallest = sv.last().copied().unwrap_or(0.0);
        let condition = if smallest > 0.0 { sv[0] / smallest } else { f64::INFINITY };
        if !(condition <= MAX_BASIS_CONDITION) {
            return Err(Error::IllConditioned(condition));
        }
        let lu = vectors.partial_piv_lu();
        Ok(Self {
            n,
            keep,
            mus,
            vectors,
            lu,
            zero_block,
            condition,
        })
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn propagate(&self, state: &WaveState, t: f64) -> Result<WaveState> {
        if state.n_modes() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: state.n_modes(),
            });
        }
        let m = self.keep.len();
        let mut y = Mat::from_fn(2 * m, 1, |i, _| {
            if i < m {
                state.u.coeffs[self.keep[i]]
            } else {
                state.v.coeffs[self.keep[i - m]]
            }
        });
        self.lu.solve_in_place(&mut y);
        for (i, mu) in self.mus.iter().enumerate() {
            y[(i, 0)] *= (mu * t).exp();
        }
        let out = &self.vectors * &y;
        let mut u = vec![ZERO; self.n];
        let mut v = vec![ZERO; self.n];
        for (b, &i) in self.keep.iter().enumerate() {
            u[i] = out[(b, 0)];
            v[i] = out[(b + m, 0)];
        }
        if self.zero_block {
            let z = self.n / 2;
            u[z] = state.u.coeffs[z] + t * state.v.coeffs[z];
            v[z] = state.v.coeffs[z];
        }
        WaveState::new(SpectralField::new(u), SpectralField::new(v), state.t + t)
    }
}

pub fn exact_evolve(state: &WaveState, t: f64, propagator: &ModalPropagator) -> Result<WaveState> {
    propagator.propagate(state, t)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub energy: f64,
    /// `-2∫χ|∂_t u|²`, the exact time derivative of `E`.
    pub dissipation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyTrace {
    pub rows: Vec<TraceRow>,
    pub alpha: f64,
    pub profile: String,
    pub dt: f64,
    pub n_modes: usize,
}

/// Largest `dt` accepted for `n` modes: `0.5 / ω_max`.
pub fn max_time_step(n: usize, alpha: f64) -> f64 {
    0.5 / (n as f64 / 2.0).powf(alpha / 2.0)
}

pub fn evolve(
    initial: &WaveState,
    t_final: f64,
    dt: f64,
    alpha: f64,
    profile: &DampingProfile,
    sample_every: usize,
) -> Result<EnergyTrace> {
    let n = initial.n_modes();
    let grid = make_grid(n)?;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::out_of_range("t_final", t_final, "(0, ∞)"));
    }
    let limit = max_time_step(n, alpha);
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
        return Err(Error::Invalid(format!(
            "dt = {dt} does not resolve the fastest mode (need dt <= {limit:.3e})"
        )));
    }
    if sample_every == 0 {
        return Err(Error::Invalid("sample_every must be positive".into()));
    }
    let steps = (t_final / dt).round() as usize;
    if steps == 0 {
        return Err(Error::Invalid("t_final is shorter than one step".into()));
    }
    let stepper = Stepper::new(&grid, dt, alpha, &profile.sample(&grid))?;
    let multiplier = fractional_multiplier(alpha, &grid)?;
    let mut state = initial.clone();
    let t0 = state.t;
    let row = |s: &WaveState| -> Result<TraceRow> {
        Ok(TraceRow {
            t: s.t,
            energy: energy_with(&multiplier, s),
            dissipation: stepper.dissipation(&s.v)?,
        })
    };
    let mut rows = vec![row(&state)?];
    for step in 1..=steps {
        stepper.step(&mut state)?;
        state.t = t0 + step as f64 * dt;
        if !state.is_finite() {
            return Err(Error::Blowup(step));
        }
        if step % sample_every == 0 || step == steps {
            rows.push(row(&state)?);
        }
    }
    Ok(EnergyTrace {
        rows,
        alpha,
        profile: profile.name().to_string(),
        dt,
        n_modes: n,
    })
}

/// `max |dE/dt - dissipation| / E(0)` over interior rows, with `dE/dt` from
/// the three-point (possibly nonuniform) centered difference.
pub fn dissipation_check(trace: &EnergyTrace) -> Result<f64> {
    let r = &trace.rows;
    if r.len() < 3 {
        return Err(Error::WindowTooShort {
            found: r.len(),
            needed: 3,
        });
    }
    let e0 = r[0].energy;
    if !(e0 > 0.0) {
        return Ok(0.0);
    }
    let mut worst = 0.0f64;
    for w in r.windows(3) {
        let (a, b, c) = (&w[0], &w[1], &w[2]);
        let h1 = b.t - a.t;
        let h2 = c.t - b.t;
        let deriv = -h2 / (h1 * (h1 + h2)) * a.energy
            + (h2 - h1) / (h1 * h2) * b.energy
            + h1 / (h2 * (h1 + h2)) * c.energy;
        worst = worst.max((deriv - b.dissipation).abs() / e0);
    }
    Ok(worst)
}

/// Minimum number of trace rows inside a decay-fit window.
pub const MIN_FIT_SAMPLES: usize = 10;

/// `-slope` of `log E` against `log⟨t⟩` over rows with `t ∈ window`.
pub fn fit_decay(trace: &EnergyTrace, window: (f64, f64)) -> Result<f64> {
    let (ts, es): (Vec<f64>, Vec<f64>) = trace
        .rows
        .iter()
        .filter(|r| r.t >= window.0 && r.t <= window.1)
        .map(|r| ((1.0 + r.t * r.t).sqrt(), r.energy))
        .unzip();
    if ts.len() < MIN_FIT_SAMPLES {
        return Err(Error::WindowTooShort {
            found: ts.len(),
            needed: MIN_FIT_SAMPLES,
        });
    }
    Ok(-fit::log_log(&ts, &es)?.slope)
}

/// Slope of `log E` against `t` over rows with `t ∈ window`.
pub fn exponential_rate(trace: &EnergyTrace, window: (f64, f64)) -> Result<f64> {
    let (ts, es): (Vec<f64>, Vec<f64>) = trace
        .rows
        .iter()
        .filter(|r| r.t >= window.0 && r.t <= window.1)
        .map(|r| (r.t, r.energy.ln()))
        .unzip();
    if ts.len() < MIN_FIT_SAMPLES {
        return Err(Error::WindowTooShort {
            found: ts.len(),
            needed: MIN_FIT_SAMPLES,
        });
    }
    Ok(fit::line(&ts, &es)?.slope)
}

/// `[5, min(50, 0.5/|abscissa|)]`.
pub fn default_fit_window(spectral_abscissa: f64) -> (f64, f64) {
    let tail = if spectral_abscissa < 0.0 {
        0.5 / spectral_abscissa.abs()
    } else {
        f64::INFINITY
    };
    (5.0, tail.min(50.0))
}

/// Real data with `û_k ∝ (1+|k|)^{-(α+1)/2}` and seeded phases, `v = 0`,
/// normalized to `2π Σ (1+k²)^α |û_k|² = 1`. The Nyquist mode is left empty.
pub fn broadband_initial_data(grid: &FourierGrid, alpha: f64, seed: u64) -> Result<WaveState> {
    crate::spectral::check_alpha(alpha)?;
    let n = grid.n_modes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = vec![ZERO; n];
    let amp = |k: i64| (1.0 + k.abs() as f64).powf(-(alpha + 1.0) / 2.0);
    u[grid.index_of(0)] = C64::new(amp(0), 0.0);
    for k in 1..(n as i64 / 2) {
        let phase: f64 = rng.random_range(0.0..2.0 * PI);
        let c = C64::from_polar(amp(k), phase);
        u[grid.index_of(k)] = c;
        u[grid.index_of(-k)] = c.conj();
    }
    let norm2: f64 = grid
        .frequencies()
        .iter()
        .zip(&u)
        .map(|(&k, c)| (1.0 + (k * k) as f64).powf(alpha) * c.norm_sqr())
        .sum::<f64>()
        * 2.0
        * PI;
    let scale = norm2.sqrt().recip();
    u.iter_mut().for_each(|c| *c *= scale);
    WaveState::new(SpectralField::new(u), SpectralField::zeros(n), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::{constant_profile, indicator_profile};

    fn mode_state(grid: &FourierGrid, k: i64, u: f64, v: f64) -> WaveState {
        let n = grid.n_modes();
        let mut uu = SpectralField::zeros(n);
        let mut vv = SpectralField::zeros(n);
        uu.coeffs[grid.index_of(k)] = C64::new(u, 0.0);
        vv.coeffs[grid.index_of(k)] = C64::new(v, 0.0);
        WaveState::new(uu, vv, 0.0).unwrap()
    }

    #[test]
    fn energy_examples() {
        let g = make_grid(16).unwrap();
        assert!((energy(&mode_state(&g, 0, 0.0, 1.0), 1.0).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((energy(&mode_state(&g, 1, 1.0, 0.0), 1.0).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert_eq!(energy(&mode_state(&g, 0, 3.0, 0.0), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn undamped_step_conserves_energy() {
        let g = make_grid(32).unwrap();
        let s = broadband_initial_data(&g, 1.0, 7).unwrap();
        let chi = SampleField::from_real(&[0.0; 32]);
        let e0 = energy(&s, 1.0).unwrap();
        let next = step_strang(&s, 0.05, 1.0, &chi).unwrap();
        assert!((energy(&next, 1.0).unwrap() - e0).abs() <= 1e-12 * e0);
        assert!((next.t - 0.05).abs() < 1e-15);
    }

    #[test]
    fn constant_damping_local_error_is_third_order() {
        let g = make_grid(16).unwrap();
        let c = 0.4;
        let k = 3i64;
        let chi = constant_profile(c).unwrap().sample(&g);
        // exact solution of u'' + c u' + |k| u = 0, u(0) = 1, u'(0) = 0
        let r = C64::new(k as f64 - c * c / 4.0, 0.0).sqrt();
        let (l1, l2) = (C64::new(0.0, -c / 2.0) + r, C64::new(0.0, -c / 2.0) - r);
        let exact = |t: f64| {
            // u = a e^{-iλ1 t} + b e^{-iλ2 t}
            let i = C64::new(0.0, 1.0);
            let b = l1 / (l1 - l2);
            let a = 1.0 - b;
            let u = a * (-i * l1 * t).exp() + b * (-i * l2 * t).exp();
            let v = -i * l1 * a * (-i * l1 * t).exp() - i * l2 * b * (-i * l2 * t).exp();
            (u, v)
        };
        let err = |dt: f64| {
            let s = step_strang(&mode_state(&g, k, 1.0, 0.0), dt, 1.0, &chi).unwrap();
            let (u, v) = exact(dt);
            let idx = g.index_of(k);
            ((s.u.coeffs[idx] - u).norm_sqr() + (s.v.coeffs[idx] - v).norm_sqr()).sqrt()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((6.5..9.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn evolve_records_monotone_energy() {
        let g = make_grid(32).unwrap();
        let s = broadband_initial_data(&g, 1.0, 1).unwrap();
        let tr = evolve(&s, 5.0, 0.01, 1.0, &indicator_profile(), 10).unwrap();
        assert_eq!(tr.rows.len(), 51);
        let e0 = tr.rows[0].energy;
        assert!(tr.rows.windows(2).all(|w| w[1].energy <= w[0].energy + 1e-10 * e0));
        assert!(tr.rows.last().unwrap().energy < e0);
        assert!(tr.rows.iter().all(|r| r.dissipation <= 0.0));
        assert!(evolve(&s, 5.0, 1.0, 1.0, &indicator_profile(), 1).is_err());
    }

    #[test]
    fn broadband_data_is_real_and_normalized() {
        let g = make_grid(64).unwrap();
        let s = broadband_initial_data(&g, 0.5, 3).unwrap();
        let samples = to_samples(&s.u, &g).unwrap();
        assert!(samples.values.iter().all(|x| x.im.abs() < 1e-14));
        let h: f64 = g
            .frequencies()
            .iter()
            .zip(&s.u.coeffs)
            .map(|(&k, c)| (1.0 + (k * k) as f64).powf(0.5) * c.norm_sqr())
            .sum::<f64>()
            * 2.0
            * PI;
        assert!((h - 1.0).abs() < 1e-12);
        assert_eq!(s, broadband_initial_data(&g, 0.5, 3).unwrap());
        assert_ne!(s, broadband_initial_data(&g, 0.5, 4).unwrap());
    }

    #[test]
    fn decay_fit_on_synthetic_traces() {
        for gamma in [1.0, 2.0] {
            let rows = (0..200)
                .map(|i| {
                    let t = 0.5 * i as f64;
                    TraceRow {
                        t,
                        energy: (1.0 + t * t).powf(-gamma / 2.0),
                        dissipation: 0.0,
                    }
                })
                .collect();
            let tr = EnergyTrace {
                rows,
                alpha: 1.0,
                profile: "synthetic".into(),
                dt: 0.5,
                n_modes: 8,
            };
            assert!((fit_decay(&tr, (5.0, 50.0)).unwrap() - gamma).abs() < 1e-10);
            assert!(fit_decay(&tr, (5.0, 8.0)).is_err());
        }
        assert_eq!(default_fit_window(-0.1), (5.0, 5.0));
        assert_eq!(default_fit_window(-0.001), (5.0, 50.0));
    }
}
