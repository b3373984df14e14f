//! Log-log slope extraction for quantities that decay like a power of eps,
//! optionally with a |log eps| factor.

use crate::error::{Error, Result};

/// Result of a least-squares fit of log|value| against log eps.
#[derive(Debug, Clone)]
pub struct RateFit {
    /// Fitted power of eps.
    pub slope: f64,
    /// Whether a log|log eps| term was subtracted before fitting.
    pub log_corrected: bool,
    /// Coefficient of determination of the linear fit.
    pub r_squared: f64,
    /// The (eps, value) samples that entered the fit.
    pub samples: Vec<(f64, f64)>,
}

/// Fits value ~ C * eps^slope, or value ~ C * eps^slope * |log eps| when
/// `with_log` is set. Requires at least 4 samples spanning 1.5 decades with
/// positive eps and nonzero values.
pub fn fit_rate(samples: &[(f64, f64)], with_log: bool) -> Result<RateFit> {
    if samples.len() < 4 {
        return Err(Error::InsufficientSamples(format!(
            "{} samples, need at least 4",
            samples.len()
        )));
    }
    for &(eps, value) in samples {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::OutOfRange(format!("eps = {eps} not in (0, inf)")));
        }
        if value == 0.0 || !value.is_finite() {
            return Err(Error::OutOfRange(format!(
                "value = {value} has no usable log"
            )));
        }
    }
    let xs: Vec<f64> = samples.iter().map(|&(e, _)| e.ln()).collect();
    let span = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if span < 1.5 * std::f64::consts::LN_10 {
        return Err(Error::InsufficientSamples(format!(
            "eps range spans {:.2} decades, need at least 1.5",
            span / std::f64::consts::LN_10
        )));
    }
    let ys: Vec<f64> = samples
        .iter()
        .map(|&(e, v)| {
            let mut y = v.abs().ln();
            if with_log {
                y -= e.ln().abs().ln();
            }
            y
        })
        .collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all eps values coincide".into()));
    }
    let slope = sxy / sxx;
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let pred = my + slope * (x - mx);
            (y - pred) * (y - pred)
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0 // all residuals are zero too: the fit is exact and flat
    };
    Ok(RateFit {
        slope,
        log_corrected: with_log,
        r_squared,
        samples: samples.to_vec(),
    })
}
