//! Experiment configuration: a flat TOML document plus command-line
//! overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::damping::DampingProfile;
use crate::error::{Error, Result};
use crate::spectral::Discretization;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "FRACWAVE_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "fracwave-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Modes,
    ResolventScan,
    LambdaScan,
    Evolve,
    CommutatorScan,
    Rates,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::ResolventScan => "resolvent-scan",
            Command::LambdaScan => "lambda-scan",
            Command::Evolve => "evolve",
            Command::CommutatorScan => "commutator-scan",
            Command::Rates => "rates",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Command::Modes,
            Command::ResolventScan,
            Command::LambdaScan,
            Command::Evolve,
            Command::CommutatorScan,
            Command::Rates,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
        .ok_or_else(|| Error::Invalid(format!("unknown command {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub alpha: f64,
    /// Hölder exponent for `rates` and the manifest constants; defaults to
    /// the profile's declared value.
    pub beta: Option<f64>,
    pub profile: String,
    pub discretization: String,
    pub n_modes: Option<usize>,
    /// Target eigenvalue `[re, im]`.
    pub target: [f64; 2],
    pub eigenpairs: usize,
    pub full_spectrum: bool,
    pub h_grid: Option<Vec<f64>>,
    pub z_grid: Option<Vec<f64>>,
    pub lambda_grid: Option<Vec<f64>>,
    pub min_modes: usize,
    pub modes_per_inverse_h: f64,
    pub trim: f64,
    pub drift_tolerance: f64,
    pub check_doubling: bool,
    pub dt: Option<f64>,
    pub t_final: f64,
    pub sample_every: usize,
    pub fit_window: Option<[f64; 2]>,
    pub seed: u64,
    pub symbol: String,
    pub workers: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            alpha: 1.0,
            beta: None,
            profile: "indicator".into(),
            discretization: "galerkin".into(),
            n_modes: None,
            target: [13.0, 0.0],
            eigenpairs: 6,
            full_spectrum: false,
            h_grid: None,
            z_grid: None,
            lambda_grid: None,
            min_modes: 256,
            modes_per_inverse_h: 32.0,
            trim: 0.2,
            drift_tolerance: 0.05,
            check_doubling: true,
            dt: None,
            t_final: 100.0,
            sample_every: 10,
            fit_window: None,
            seed: 0,
            symbol: "bump".into(),
            workers: 1,
            output_dir: None,
        }
    }
}

/// 1-based line of the first `key = ...` assignment in `text`.
fn line_of_key(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map_or(0, |s| line_of_offset(text, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.validate().map_err(|e| match e {
            Error::Config { line: 0, message } => {
                let key = message.split(':').next().unwrap_or("").trim().to_string();
                Error::Config {
                    line: line_of_key(text, &key),
                    message,
                }
            }
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Invalid(format!("serializing config: {e}")))
    }

    pub fn command(&self) -> Result<Command> {
        self.command
            .ok_or_else(|| Error::Invalid("no command given".into()))
    }

    pub fn damping_profile(&self) -> Result<DampingProfile> {
        self.profile.parse()
    }

    pub fn discretization(&self) -> Result<Discretization> {
        self.discretization.parse()
    }

    pub fn beta(&self) -> Result<f64> {
        match self.beta {
            Some(b) => Ok(b),
            None => Ok(self.damping_profile()?.declared_beta()),
        }
    }

    /// Output directory: the config value, else the environment variable,
    /// else `fracwave-out`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    /// Range checks. Errors name the offending key first so file loading
    /// can point at its line.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| -> Result<()> {
            Err(Error::Config {
                line: 0,
                message: format!("{key}: {msg}"),
            })
        };
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return bad("alpha", format!("{} is outside (0, 2)", self.alpha));
        }
        if let Some(b) = self.beta {
            if !(0.0..=1.0).contains(&b) {
                return bad("beta", format!("{b} is outside [0, 1]"));
            }
        }
        if let Err(e) = self.profile.parse::<DampingProfile>() {
            return bad("profile", e.to_string());
        }
        if let Err(e) = self.discretization.parse::<Discretization>() {
            return bad("discretization", e.to_string());
        }
        if let Some(n) = self.n_modes {
            if n < 8 || n % 2 != 0 {
                return bad("n_modes", format!("{n} must be even and >= 8"));
            }
        }
        if !self.target.iter().all(|v| v.is_finite()) {
            return bad("target", "must be finite".into());
        }
        if self.seed > i64::MAX as u64 {
            return bad("seed", format!("{} does not fit a TOML integer", self.seed));
        }
        if self.eigenpairs == 0 {
            return bad("eigenpairs", "must be positive".into());
        }
        for (key, grid) in [
            ("h_grid", &self.h_grid),
            ("z_grid", &self.z_grid),
            ("lambda_grid", &self.lambda_grid),
        ] {
            if let Some(g) = grid {
                if g.is_empty() || g.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return bad(key, "must be a nonempty list of positive numbers".into());
                }
            }
        }
        if let Some(z) = &self.z_grid {
            if z.iter().any(|v| !(0.9..=1.1).contains(v)) {
                return bad("z_grid", "values must lie in [0.9, 1.1]".into());
            }
        }
        if self.min_modes < 8 || !(self.modes_per_inverse_h > 0.0) {
            return bad("min_modes", "grid rule needs min_modes >= 8 and modes_per_inverse_h > 0".into());
        }
        if !(0.0..0.5).contains(&self.trim) {
            return bad("trim", format!("{} is outside [0, 0.5)", self.trim));
        }
        if !(self.drift_tolerance > 0.0) {
            return bad("drift_tolerance", "must be positive".into());
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("dt", "must be positive".into());
            }
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad("t_final", "must be positive".into());
        }
        if self.sample_every == 0 {
            return bad("sample_every", "must be positive".into());
        }
        if let Some([a, b]) = self.fit_window {
            if !(a >= 0.0 && b > a) {
                return bad("fit_window", format!("[{a}, {b}] is not an interval in [0, ∞)"));
            }
        }
        if self.seed > i64::MAX as u64 {
            return bad("seed", "must fit in a signed 64-bit integer".into());
        }
        if !["bump", "log-bump"].contains(&self.symbol.as_str()) {
            return bad("symbol", format!("unknown symbol {:?} (bump, log-bump)", self.symbol));
        }
        if self.workers == 0 {
            return bad("workers", "must be positive".into());
        }
        Ok(())
    }
}

/// Parses `13`, `13.03-0.03i`, `-0.5i` or `13.03,-0.03`.
pub fn parse_complex(s: &str) -> Result<[f64; 2]> {
    let err = || Error::Invalid(format!("cannot parse complex number {s:?}"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some((re, im)) = t.split_once(',') {
        return Ok([re.parse().map_err(|_| err())?, im.parse().map_err(|_| err())?]);
    }
    let Some(body) = t.strip_suffix('i') else {
        return Ok([t.parse().map_err(|_| err())?, 0.0]);
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    Ok([re.parse().map_err(|_| err())?, im.parse().map_err(|_| err())?])
}

/// Comma-separated list of numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("bad number {v:?} in list")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig {
            command: Some(Command::ResolventScan),
            beta: Some(0.25),
            h_grid: Some(vec![0.25, 0.125, 0.1]),
            fit_window: Some([5.0, 40.0]),
            output_dir: Some("out".into()),
            ..Default::default()
        };
        c.alpha = 0.7;
        let text = c.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c);
        let d = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&d.to_toml().unwrap()).unwrap(), d);
    }

    #[test]
    fn errors_carry_lines() {
        let text = "alpha = 1.0\nprofile = \"tanh\"\nbogus = 3\n";
        match ExperimentConfig::from_toml(text) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "profile = \"tanh\"\n\nalpha = 2.5\n";
        match ExperimentConfig::from_toml(text) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.starts_with("alpha"));
            }
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::from_toml("profile = \"wave\"").is_err());
        assert!(ExperimentConfig::from_toml("z_grid = [0.5]").is_err());
    }

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("13").unwrap(), [13.0, 0.0]);
        assert_eq!(parse_complex("13.03-0.03i").unwrap(), [13.03, -0.03]);
        assert_eq!(parse_complex("13.01 + 0.14i").unwrap(), [13.01, 0.14]);
        assert_eq!(parse_complex("-0.5i").unwrap(), [0.0, -0.5]);
        assert_eq!(parse_complex("1e-3-2e-1i").unwrap(), [1e-3, -0.2]);
        assert_eq!(parse_complex("13,-0.14").unwrap(), [13.0, -0.14]);
        assert!(parse_complex("x").is_err());
        assert_eq!(parse_list("0.25, 0.5").unwrap(), vec![0.25, 0.5]);
    }
}
