//! Least-squares line fits.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square deviation of the points from the line.
    pub residual: f64,
}

/// Unweighted least-squares line through `(x, y)`.
pub fn line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::WindowTooShort {
            found: xs.len(),
            needed: 2,
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Invalid("fit abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

/// Fit of `log y` against `log x`; all values must be positive.
pub fn log_log(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let logs = |v: &[f64]| -> Result<Vec<f64>> {
        v.iter()
            .map(|&x| {
                if x > 0.0 && x.is_finite() {
                    Ok(x.ln())
                } else {
                    Err(Error::Invalid(format!("log-log fit needs positive values, got {x}")))
                }
            })
            .collect()
    };
    line(&logs(xs)?, &logs(ys)?)
}

/// Index range `[lo, hi)` left after trimming `fraction` of `len` from each end.
pub fn trimmed_window(len: usize, fraction: f64) -> (usize, usize) {
    let cut = (len as f64 * fraction).floor() as usize;
    if 2 * cut >= len {
        (0, len)
    } else {
        (cut, len - cut)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let hs: Vec<f64> = (2..10).map(|k| 2f64.powi(-k)).collect();
        let ys: Vec<f64> = hs.iter().map(|h| h.powf(-1.5)).collect();
        let f = log_log(&hs, &ys).unwrap();
        assert!((f.slope + 1.5).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn windows() {
        assert_eq!(trimmed_window(7, 0.2), (1, 6));
        assert_eq!(trimmed_window(10, 0.2), (2, 8));
        assert_eq!(trimmed_window(2, 0.2), (0, 2));
        assert_eq!(trimmed_window(3, 0.5), (1, 2));
        assert_eq!(trimmed_window(4, 0.5), (0, 4));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(line(&[1.0], &[1.0]).is_err());
        assert!(line(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(log_log(&[1.0, 0.0], &[1.0, 2.0]).is_err());
    }
}
