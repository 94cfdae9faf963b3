//! Damping profiles on the circle, Hölder seminorms of sampled functions and
//! the geometric control check.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::spectral::{
    galerkin_multiplication, multiplication_operator, DenseOperator, Discretization,
    FourierCoefficients, FourierGrid, SampleField,
};

/// Points closer than this to a jump of a discontinuous profile take the
/// midpoint value.
const JUMP_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    /// `(cos x)^{2β}` on `(-π/2, π/2)`, zero elsewhere.
    Holder { beta: f64 },
    Tanh,
    Constant(f64),
    /// Periodic piecewise-linear interpolation of `(x, χ(x))` samples.
    Table { xs: Vec<f64>, ys: Vec<f64> },
}

/// A nonnegative damping function `χ` together with the declared Hölder
/// exponent of `√χ`.
#[derive(Clone, Debug, PartialEq)]
pub struct DampingProfile {
    shape: Shape,
    name: String,
    declared_beta: f64,
}

/// `𝟙_{(-π/2, π/2)}`, taking the value 1/2 at the two jumps.
pub fn indicator_profile() -> DampingProfile {
    DampingProfile {
        shape: Shape::Holder { beta: 0.0 },
        name: "indicator".into(),
        declared_beta: 0.0,
    }
}

/// `1 + (tanh(20(x - π/2)) - tanh(20(x + π/2)))/2` on `(-π, π]`.
pub fn tanh_profile() -> DampingProfile {
    DampingProfile {
        shape: Shape::Tanh,
        name: "tanh".into(),
        declared_beta: 1.0,
    }
}

/// `χ_β = (cos x)^{2β} 𝟙_{(-π/2, π/2)}`, whose square root is `C^{0,β}`.
pub fn holder_profile(beta: f64) -> Result<DampingProfile> {
    check_beta(beta)?;
    Ok(DampingProfile {
        shape: Shape::Holder { beta },
        name: format!("holder:{beta}"),
        declared_beta: beta,
    })
}

pub fn constant_profile(c: f64) -> Result<DampingProfile> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::out_of_range("constant damping", c, "[0, ∞)"));
    }
    Ok(DampingProfile {
        shape: Shape::Constant(c),
        name: format!("constant:{c}"),
        declared_beta: 1.0,
    })
}

/// Profile interpolated from a table of `(x, χ(x))` with `x` in radians.
pub fn table_profile(
    name: impl Into<String>,
    points: &[(f64, f64)],
    declared_beta: f64,
) -> Result<DampingProfile> {
    check_beta(declared_beta)?;
    if points.len() < 2 {
        return Err(Error::Invalid("damping table needs at least two rows".into()));
    }
    let mut rows: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| (x.rem_euclid(2.0 * PI), y))
        .collect();
    if let Some(&(x, y)) = rows.iter().find(|(x, y)| !x.is_finite() || !(*y >= 0.0)) {
        return Err(Error::Invalid(format!(
            "damping table row ({x}, {y}) is not a finite nonnegative value"
        )));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    rows.dedup_by(|a, b| a.0 == b.0);
    let (xs, ys) = rows.into_iter().unzip();
    Ok(DampingProfile {
        shape: Shape::Table { xs, ys },
        name: name.into(),
        declared_beta,
    })
}

/// Reads a two-column table (comma or whitespace separated); lines starting
/// with `#` and a non-numeric header line are skipped.
pub fn load_table_profile(path: &Path, declared_beta: f64) -> Result<DampingProfile> {
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => points.push((v[0], v[1])),
            None if points.is_empty() && lineno == 0 => continue,
            _ => {
                return Err(Error::Config {
                    line: lineno + 1,
                    message: format!("expected two numbers in {}", path.display()),
                })
            }
        }
    }
    table_profile(format!("custom:{}", path.display()), &points, declared_beta)
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::out_of_range("beta", beta, "[0, 1]"))
    }
}

/// Reduces an angle to `(-π, π]`.
fn principal(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

impl DampingProfile {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn declared_beta(&self) -> f64 {
        self.declared_beta
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Holder { beta } => {
                let x = principal(x);
                let edge = x.abs() - PI / 2.0;
                if edge.abs() <= JUMP_TOL {
                    if *beta == 0.0 {
                        0.5
                    } else {
                        0.0
                    }
                } else if edge < 0.0 {
                    x.cos().powf(2.0 * beta)
                } else {
                    0.0
                }
            }
            Shape::Tanh => {
                let x = principal(x);
                1.0 + 0.5 * ((20.0 * (x - PI / 2.0)).tanh() - (20.0 * (x + PI / 2.0)).tanh())
            }
            Shape::Constant(c) => *c,
            Shape::Table { xs, ys } => interpolate_periodic(xs, ys, x.rem_euclid(2.0 * PI)),
        }
    }

    pub fn sample(&self, grid: &FourierGrid) -> SampleField {
        SampleField::from_fn(grid, |x| C64::new(self.eval(x), 0.0))
    }

    /// Samples of `√χ`.
    pub fn sqrt_sample(&self, grid: &FourierGrid) -> SampleField {
        SampleField::from_fn(grid, |x| C64::new(self.eval(x).sqrt(), 0.0))
    }

    /// Continuum Fourier coefficients `c_m = (1/2π) ∫ χ(x) e^{-imx} dx` for
    /// `0 <= m <= max_m`. Closed form for the Hölder family and constants,
    /// oversampled trapezoidal quadrature otherwise.
    pub fn fourier_coefficients(&self, max_m: usize) -> FourierCoefficients {
        match &self.shape {
            Shape::Holder { beta } => {
                FourierCoefficients::new(holder_coefficients(*beta, max_m))
            }
            Shape::Constant(c) => {
                let mut v = vec![C64::new(0.0, 0.0); max_m + 1];
                v[0] = C64::new(*c, 0.0);
                FourierCoefficients::new(v)
            }
            Shape::Tanh => {
                // even profile: the imaginary parts are pure roundoff
                let c = self.quadrature_coefficients(max_m);
                FourierCoefficients::new(c.into_iter().map(|z| C64::new(z.re, 0.0)).collect())
            }
            Shape::Table { .. } => FourierCoefficients::new(self.quadrature_coefficients(max_m)),
        }
    }

    fn quadrature_coefficients(&self, max_m: usize) -> Vec<C64> {
        let q = (16 * (max_m + 1)).max(4096).next_power_of_two();
        let mut buf: Vec<C64> = (0..q)
            .map(|j| C64::new(self.eval(2.0 * PI * j as f64 / q as f64), 0.0))
            .collect();
        let fft = rustfft::FftPlanner::new().plan_fft_forward(q);
        fft.process(&mut buf);
        buf.truncate(max_m + 1);
        buf.iter().map(|c| c / q as f64).collect()
    }
}

/// Matrix of `u ↦ χu` in the Fourier basis of `grid`.
pub fn damping_operator(
    profile: &DampingProfile,
    grid: &FourierGrid,
    discretization: Discretization,
) -> Result<DenseOperator> {
    match discretization {
        Discretization::Galerkin => {
            galerkin_multiplication(&profile.fourier_coefficients(grid.n_modes()), grid)
        }
        Discretization::Collocation => multiplication_operator(&profile.sample(grid), grid),
    }
}

impl fmt::Display for DampingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl FromStr for DampingProfile {
    type Err = Error;

    /// `indicator`, `tanh`, `holder:<beta>`, `constant:<c>` or
    /// `custom:<path>` (declared β = 0).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once(':') {
            None if s == "indicator" => Ok(indicator_profile()),
            None if s == "tanh" => Ok(tanh_profile()),
            Some(("holder", b)) => holder_profile(parse_num(b, s)?),
            Some(("constant", c)) => constant_profile(parse_num(c, s)?),
            Some(("custom", path)) => load_table_profile(Path::new(path), 0.0),
            _ => Err(Error::Invalid(format!("unknown damping profile {s:?}"))),
        }
    }
}

fn parse_num(v: &str, whole: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("bad number in profile {whole:?}")))
}

fn interpolate_periodic(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let upper = xs.partition_point(|&v| v <= x);
    let (i0, i1) = if upper == 0 || upper == n {
        (n - 1, 0)
    } else {
        (upper - 1, upper)
    };
    let x0 = xs[i0];
    let mut x1 = xs[i1];
    let mut xq = x;
    if i1 == 0 {
        x1 += 2.0 * PI;
        if xq < x0 {
            xq += 2.0 * PI;
        }
    }
    let t = if x1 > x0 { (xq - x0) / (x1 - x0) } else { 0.0 };
    ys[i0] + t * (ys[i1] - ys[i0])
}

/// Fourier coefficients of `(cos x)^ν 𝟙_{(-π/2,π/2)}` with `ν = 2β`:
/// `I(m) = ∫ cos^ν x cos(mx) dx = π Γ(ν+1) / (2^ν Γ((ν+m)/2+1) Γ((ν-m)/2+1))`,
/// generated by `I(m+2) = I(m) (ν - m) / (ν + m + 2)`.
fn holder_coefficients(beta: f64, max_m: usize) -> Vec<C64> {
    let nu = 2.0 * beta;
    let closed = |m: f64| {
        let lg = libm::lgamma(nu + 1.0)
            - nu * std::f64::consts::LN_2
            - libm::lgamma((nu + m) / 2.0 + 1.0)
            - libm::lgamma((nu - m) / 2.0 + 1.0);
        PI * lg.exp()
    };
    let mut integrals = vec![0.0; max_m + 1];
    integrals[0] = closed(0.0);
    if max_m >= 1 {
        integrals[1] = closed(1.0);
    }
    for m in 0..max_m.saturating_sub(1) {
        let mf = m as f64;
        integrals[m + 2] = integrals[m] * (nu - mf) / (nu + mf + 2.0);
    }
    integrals
        .into_iter()
        .map(|v| C64::new(v / (2.0 * PI), 0.0))
        .collect()
}

/// Arc distance on the circle.
fn arc_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Grid above which the pairwise scan uses a stride.
pub const HOLDER_FULL_LIMIT: usize = 2048;

/// `sup|f| + max_{i≠j} |f_i - f_j| / d(x_i, x_j)^β` over grid pairs (a lower
/// bound for the continuum `C^{0,β}` norm). Real parts of `f` are used.
pub fn holder_seminorm(f: &SampleField, beta: f64, grid: &FourierGrid) -> Result<f64> {
    check_beta(beta)?;
    let n = grid.n_modes();
    if f.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: f.len(),
        });
    }
    let vals = f.real_parts();
    let sup = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let stride = n.div_ceil(HOLDER_FULL_LIMIT);
    let idx: Vec<usize> = (0..n).step_by(stride).collect();
    let pts = grid.points();
    let mut ratio = 0.0f64;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let diff = (vals[i] - vals[j]).abs();
            if diff == 0.0 {
                continue;
            }
            let d = arc_distance(pts[i], pts[j]);
            ratio = ratio.max(diff / d.powf(beta));
        }
    }
    Ok(sup + ratio)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GccReport {
    pub satisfied: bool,
    /// Longest sampled arc `(a, b)` with `b > a` on which
    /// `χ >= max χ / 100`, padded by half a cell at each end.
    pub interval: (f64, f64),
    pub time_bound: f64,
}

/// Relative threshold defining where damping counts as active.
pub const GCC_RELATIVE_THRESHOLD: f64 = 0.01;

/// On the circle every unit-speed geodesic covers the whole circle within
/// `2π`, so geometric control holds iff χ is bounded below on some arc.
pub fn gcc_check(profile: &DampingProfile, resolution: usize) -> Result<GccReport> {
    if resolution < 64 {
        return Err(Error::Invalid(format!(
            "gcc_check needs resolution >= 64, got {resolution}"
        )));
    }
    let dx = 2.0 * PI / resolution as f64;
    let xs: Vec<f64> = (0..resolution).map(|j| -PI + j as f64 * dx).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| profile.eval(x)).collect();
    let max = vals.iter().cloned().fold(0.0, f64::max);
    let none = GccReport {
        satisfied: false,
        interval: (0.0, 0.0),
        time_bound: 2.0 * PI,
    };
    if !(max > 0.0) {
        return Ok(none);
    }
    let active: Vec<bool> = vals.iter().map(|&v| v >= GCC_RELATIVE_THRESHOLD * max).collect();
    if active.iter().all(|&a| a) {
        return Ok(GccReport {
            satisfied: true,
            interval: (-PI, PI),
            time_bound: 2.0 * PI,
        });
    }
    // Start the circular scan just after an inactive sample so runs never wrap.
    let first_off = active.iter().position(|&a| !a).unwrap_or(0);
    let mut best = (0usize, 0usize);
    let mut run_start = None;
    for step in 1..=resolution {
        let j = (first_off + step) % resolution;
        if active[j] {
            let start = *run_start.get_or_insert(step);
            let len = step - start + 1;
            if len > best.1 {
                best = (start, len);
            }
        } else {
            run_start = None;
        }
    }
    let start_idx = (first_off + best.0) % resolution;
    let a = xs[start_idx] - dx / 2.0;
    let b = a + best.1 as f64 * dx;
    Ok(GccReport {
        satisfied: best.1 > 0,
        interval: (a, b),
        time_bound: 2.0 * PI,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn indicator_values() {
        let p = indicator_profile();
        assert_eq!(p.eval(0.0), 1.0);
        assert_eq!(p.eval(PI), 0.0);
        assert_eq!(p.eval(PI / 2.0), 0.5);
        assert_eq!(p.eval(-PI / 2.0), 0.5);
        assert_eq!(p.eval(3.0 * PI / 2.0), 0.5);
        assert_eq!(p.declared_beta(), 0.0);
    }

    #[test]
    fn tanh_values_and_symmetry() {
        let p = tanh_profile();
        assert!(p.eval(0.0).abs() < 1e-8);
        assert!((p.eval(PI) - 1.0).abs() < 1e-8);
        let g = make_grid(256).unwrap();
        for x in g.points() {
            assert!((p.eval(x) - p.eval(-x)).abs() < 1e-12);
        }
    }

    #[test]
    fn holder_values() {
        let h0 = holder_profile(0.0).unwrap();
        let ind = indicator_profile();
        for j in 0..100 {
            let x = -PI + 0.0637 * j as f64;
            assert_eq!(h0.eval(x), ind.eval(x));
        }
        assert_eq!(holder_profile(0.5).unwrap().eval(0.0), 1.0);
        assert!((holder_profile(1.0).unwrap().eval(PI / 3.0) - 0.25).abs() < 1e-15);
        assert!(holder_profile(1.2).is_err());
        assert!(holder_profile(-0.1).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("indicator".parse::<DampingProfile>().unwrap(), indicator_profile());
        assert_eq!("tanh".parse::<DampingProfile>().unwrap(), tanh_profile());
        let h: DampingProfile = "holder:0.25".parse().unwrap();
        assert_eq!(h.declared_beta(), 0.25);
        assert!("holder:2".parse::<DampingProfile>().is_err());
        assert!("wave".parse::<DampingProfile>().is_err());
        assert_eq!("constant:0.5".parse::<DampingProfile>().unwrap().eval(1.0), 0.5);
    }

    #[test]
    fn holder_coefficients_match_elementary_integrals() {
        // β = 0: c_m = sin(mπ/2)/(πm); β = 1/2: cos x on (-π/2, π/2).
        let c0 = holder_profile(0.0).unwrap().fourier_coefficients(9);
        assert!((c0.get(0).re - 0.5).abs() < 1e-14);
        for m in 1..=9i64 {
            let expect = (m as f64 * PI / 2.0).sin() / (PI * m as f64);
            assert!((c0.get(m).re - expect).abs() < 1e-14, "m={m}");
            assert_eq!(c0.get(-m), c0.get(m));
        }
        let c1 = holder_profile(0.5).unwrap().fourier_coefficients(6);
        // ∫ cos x cos 2x over (-π/2, π/2) = 2/3
        assert!((c1.get(2).re - (2.0 / 3.0) / (2.0 * PI)).abs() < 1e-14);
        assert!((c1.get(1).re - 0.25).abs() < 1e-14);
    }

    #[test]
    fn quadrature_coefficients_of_tanh_are_even() {
        let c = tanh_profile().fourier_coefficients(40);
        assert!((c.get(0).re - 0.5).abs() < 1e-10);
        for m in 0..=40 {
            assert!(c.get(m).im.abs() < 1e-12);
        }
    }

    #[test]
    fn table_profile_interpolates_periodically() {
        let p = table_profile("t", &[(0.0, 0.0), (PI, 2.0)], 1.0).unwrap();
        assert!((p.eval(PI / 2.0) - 1.0).abs() < 1e-14);
        assert!((p.eval(3.0 * PI / 2.0) - 1.0).abs() < 1e-14);
        assert!((p.eval(-PI / 2.0) - 1.0).abs() < 1e-14);
        assert!(table_profile("bad", &[(0.0, -1.0), (1.0, 1.0)], 0.0).is_err());
    }

    #[test]
    fn holder_seminorm_examples() {
        let g = make_grid(256).unwrap();
        let c = SampleField::from_real(&vec![-0.7; 256]);
        assert!((holder_seminorm(&c, 0.5, &g).unwrap() - 0.7).abs() < 1e-15);

        let ramp = SampleField::from_fn(&g, |x| {
            let y = if x <= 1.0 {
                x
            } else if x >= 2.0 * PI - 1.0 {
                2.0 * PI - x
            } else {
                1.0
            };
            C64::new(y, 0.0)
        });
        let v = holder_seminorm(&ramp, 1.0, &g).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");

        let sq = indicator_profile().sqrt_sample(&g);
        assert!((holder_seminorm(&sq, 0.0, &g).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gcc_examples() {
        let r = gcc_check(&indicator_profile(), 64).unwrap();
        assert!(r.satisfied);
        assert!(r.interval.0 <= -PI / 4.0 && r.interval.1 >= PI / 4.0);
        assert_eq!(r.time_bound, 2.0 * PI);
        assert!(!gcc_check(&constant_profile(0.0).unwrap(), 64).unwrap().satisfied);
        for beta in [0.0, 0.3, 1.0] {
            let r = gcc_check(&holder_profile(beta).unwrap(), 128).unwrap();
            assert!(r.satisfied);
            assert!(r.interval.0 <= -PI / 4.0 && r.interval.1 >= PI / 4.0);
        }
        let t = gcc_check(&tanh_profile(), 128).unwrap();
        assert!(t.satisfied);
        assert!(t.interval.0 < PI && t.interval.1 > PI);
        assert!(gcc_check(&tanh_profile(), 32).is_err());
    }
}
