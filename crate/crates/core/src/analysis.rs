//! Model fitting and fit-window selection shared by the echo and otoc
//! diagnostics: exponential / gaussian-in-t / power-law decays, log-log
//! scaling exponents, and tail fluctuation statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayModel {
    /// y = A exp(-rate t)
    Exponential,
    /// y = A exp(-(eta t)^2)
    Gaussian,
    /// y = A t^exponent
    Powerlaw,
    /// y = a + b t
    Linear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub model: DecayModel,
    /// [rate | eta | exponent | slope, prefactor]
    pub params: Vec<f64>,
    pub window: (f64, f64),
    /// RMS of residuals in the fitted (log) coordinates.
    pub residual: f64,
    pub r_squared: f64,
}

impl FitResult {
    pub fn rate(&self) -> f64 {
        self.params[0]
    }
}

fn linear_least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    let rms = (ss_res / n).sqrt();
    (slope, intercept, rms, r2)
}

/// Plain linear least squares y = intercept + slope x;
/// returns (slope, intercept, rms residual, r_squared).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(Error::TooShort("linear_fit needs >= 2 points".into()));
    }
    Ok(linear_least_squares(xs, ys))
}

/// Least-squares fit of a decay model on a window of the series.
/// Log-model fits are linear least squares in transformed coordinates.
/// Requires at least 8 samples in the window.
pub fn fit_decay(series: &TimeSeries, model: DecayModel, window: (f64, f64)) -> Result<FitResult> {
    fit_decay_with_min(series, model, window, 8)
}

/// [`fit_decay`] with an explicit sample floor. Needed for exponential fits
/// on unit-step Floquet grids where the decay saturates in fewer than 8
/// periods (fast-decay regimes at modest Hilbert dimension); the default
/// floor of 8 stays the public policy.
pub fn fit_decay_with_min(
    series: &TimeSeries,
    model: DecayModel,
    window: (f64, f64),
    min_points: usize,
) -> Result<FitResult> {
    let min_points = min_points.max(2);
    let (t_lo, t_hi) = window;
    if t_lo >= t_hi {
        return Err(Error::NoWindow(format!("empty window [{t_lo}, {t_hi}]")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in series.times.iter().zip(&series.values) {
        if t < t_lo || t > t_hi {
            continue;
        }
        match model {
            DecayModel::Linear => {
                xs.push(t);
                ys.push(v);
            }
            DecayModel::Exponential => {
                if v <= 0.0 {
                    return Err(Error::NonPositiveData);
                }
                xs.push(t);
                ys.push(v.ln());
            }
            DecayModel::Gaussian => {
                if v <= 0.0 {
                    return Err(Error::NonPositiveData);
                }
                xs.push(t * t);
                ys.push(v.ln());
            }
            DecayModel::Powerlaw => {
                if v <= 0.0 {
                    return Err(Error::NonPositiveData);
                }
                if t <= 0.0 {
                    continue; // log t undefined at the origin
                }
                xs.push(t.ln());
                ys.push(v.ln());
            }
        }
    }
    if xs.len() < min_points {
        return Err(Error::TooShort(format!(
            "{} samples in fit window, need >= {min_points}",
            xs.len()
        )));
    }
    let (slope, intercept, rms, r2) = linear_least_squares(&xs, &ys);
    let params = match model {
        DecayModel::Exponential => vec![-slope, intercept.exp()],
        DecayModel::Gaussian => {
            let eta = if slope < 0.0 { (-slope).sqrt() } else { 0.0 };
            vec![eta, intercept.exp()]
        }
        DecayModel::Powerlaw => vec![slope, intercept.exp()],
        DecayModel::Linear => vec![slope, intercept],
    };
    Ok(FitResult {
        model,
        params,
        window,
        residual: rms,
        r_squared: r2,
    })
}

/// Automatic fit window: starts past the parabolic segment (2 x curvature
/// time) and stops where the series first enters 3 x its saturation estimate.
/// Requires at least `min_points` samples inside; the spec default is 8.
pub fn auto_window_with_min(
    series: &TimeSeries,
    saturation_estimate: f64,
    curvature_time: f64,
    min_points: usize,
) -> Result<(f64, f64)> {
    if series.times.is_empty() {
        return Err(Error::Empty("auto_window on empty series"));
    }
    let t_lo = 2.0 * curvature_time;
    let threshold = 3.0 * saturation_estimate;
    let t_hi = series
        .times
        .iter()
        .zip(&series.values)
        .find(|(_, &v)| v <= threshold)
        .map(|(&t, _)| t)
        .unwrap_or(*series.times.last().unwrap());
    let count = series
        .times
        .iter()
        .filter(|&&t| t >= t_lo && t <= t_hi)
        .count();
    let ordered = matches!(t_lo.partial_cmp(&t_hi), Some(std::cmp::Ordering::Less));
    if !ordered || count < min_points {
        return Err(Error::NoWindow(format!(
            "window [{t_lo:.4}, {t_hi:.4}] holds {count} samples, need >= {min_points}"
        )));
    }
    Ok((t_lo, t_hi))
}

/// [`auto_window_with_min`] with the default 8-sample floor.
pub fn auto_window(
    series: &TimeSeries,
    saturation_estimate: f64,
    curvature_time: f64,
) -> Result<(f64, f64)> {
    auto_window_with_min(series, saturation_estimate, curvature_time, 8)
}

/// Log-log least-squares slope with its standard error.
pub fn scaling_exponent(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(Error::TooShort("scaling_exponent needs >= 3 points".into()));
    }
    if xs.iter().chain(ys).any(|&v| v <= 0.0) {
        return Err(Error::NonPositiveData);
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (slope, intercept, _, _) = linear_least_squares(&lx, &ly);
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = if n > 2.0 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, stderr))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluctuationStats {
    pub mean: f64,
    pub variance: f64,
    pub max_excursion: f64,
    pub n_samples: usize,
}

/// Tail moments and largest absolute deviation from the tail mean.
pub fn fluctuation_stats(series: &TimeSeries, tail_start: f64) -> Result<FluctuationStats> {
    let tail: Vec<f64> = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(&t, _)| t >= tail_start)
        .map(|(_, &v)| v)
        .collect();
    if tail.len() < 20 {
        return Err(Error::TooShort(format!(
            "{} tail samples, need >= 20",
            tail.len()
        )));
    }
    let n = tail.len() as f64;
    let mean = tail.iter().sum::<f64>() / n;
    let variance = tail.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let max_excursion = tail.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    Ok(FluctuationStats {
        mean,
        variance,
        max_excursion,
        n_samples: tail.len(),
    })
}
