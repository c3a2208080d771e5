//! Robust power-law regression in log-log space.
//!
//! Iteratively reweighted least squares with Huber weights (tuning
//! constant 1.345 on MAD-standardised residuals). The exponent is the
//! slope of the robust line; its standard error is the usual weighted
//! regression approximation conditional on the final weights.

use serde::Serialize;

use crate::error::{Error, Result};

const HUBER_C: f64 = 1.345;
const MAD_TO_SIGMA: f64 = 0.674_489_750_196_081_7;
const MAX_IRLS_ITER: usize = 50;

#[derive(Debug, Clone, Serialize)]
pub struct PowerLawFit {
    /// Prefactor of `amplitude * n^exponent`.
    pub amplitude: f64,
    pub exponent: f64,
    /// Approximate standard error of the exponent.
    pub exponent_stderr: f64,
    /// R-squared of the final weighted fit in log-log space.
    pub r_squared: f64,
    /// Final Huber weights, one per input point.
    pub weights: Vec<f64>,
    pub iterations: usize,
}

fn weighted_line(xs: &[f64], ys: &[f64], ws: &[f64]) -> Option<(f64, f64)> {
    let mut sw = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(ws) {
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let det = sw * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return None;
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / sw;
    if slope.is_finite() && intercept.is_finite() {
        Some((slope, intercept))
    } else {
        None
    }
}

fn median(sorted: &mut [f64]) -> f64 {
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Plain OLS in log-log space: `(amplitude, exponent)`.
pub fn ordinary_least_squares_loglog(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let (xs, ys) = log_points(points)?;
    let ws = vec![1.0; xs.len()];
    let (slope, intercept) = weighted_line(&xs, &ys, &ws).ok_or_else(|| {
        Error::InvalidParameter("degenerate abscissae in log-log fit".into())
    })?;
    Ok((intercept.exp(), slope))
}

fn log_points(points: &[(f64, f64)]) -> Result<(Vec<f64>, Vec<f64>)> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints { required: 3 });
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for (i, &(n, s)) in points.iter().enumerate() {
        if !(n > 0.0 && n.is_finite() && s > 0.0 && s.is_finite()) {
            return Err(Error::NonPositiveScale { index: i, value: s });
        }
        xs.push(n.ln());
        ys.push(s.ln());
    }
    Ok((xs, ys))
}

/// Robust fit of `s = amplitude * n^exponent` to `(n, s)` points.
pub fn fit_powerlaw(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    let (xs, ys) = log_points(points)?;
    let n = xs.len();

    let mut ws = vec![1.0; n];
    let (mut slope, mut intercept) = weighted_line(&xs, &ys, &ws).ok_or_else(|| {
        Error::InvalidParameter("degenerate abscissae in power-law fit".into())
    })?;

    let mut iterations = 0;
    for _ in 0..MAX_IRLS_ITER {
        iterations += 1;
        let residuals: Vec<f64> = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| y - (slope * x + intercept))
            .collect();
        let mut abs_dev: Vec<f64> = {
            let mut r = residuals.clone();
            let med = median(&mut r);
            residuals.iter().map(|v| (v - med).abs()).collect()
        };
        let sigma = (median(&mut abs_dev) / MAD_TO_SIGMA).max(1e-12);
        for (w, r) in ws.iter_mut().zip(&residuals) {
            let z = r.abs() / sigma;
            *w = if z <= HUBER_C { 1.0 } else { HUBER_C / z };
        }
        let (new_slope, new_intercept) = weighted_line(&xs, &ys, &ws).ok_or_else(|| {
            Error::InvalidParameter("degenerate weighted system in power-law fit".into())
        })?;
        let delta = (new_slope - slope).abs().max((new_intercept - intercept).abs());
        slope = new_slope;
        intercept = new_intercept;
        if delta < 1e-12 {
            break;
        }
    }

    // diagnostics on the final weighted fit
    let sw: f64 = ws.iter().sum();
    let xbar: f64 = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ybar: f64 = ys.iter().zip(&ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut sxx = 0.0;
    for ((&x, &y), &w) in xs.iter().zip(&ys).zip(&ws) {
        let fit = slope * x + intercept;
        ss_res += w * (y - fit) * (y - fit);
        ss_tot += w * (y - ybar) * (y - ybar);
        sxx += w * (x - xbar) * (x - xbar);
    }
    let dof = (n as f64 - 2.0).max(1.0);
    let exponent_stderr = if sxx > 0.0 {
        (ss_res / dof / sxx).sqrt()
    } else {
        f64::NAN
    };
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    Ok(PowerLawFit {
        amplitude: intercept.exp(),
        exponent: slope,
        exponent_stderr,
        r_squared,
        weights: ws,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_points() -> Vec<(f64, f64)> {
        (4..=12)
            .map(|k| {
                let n = (1u64 << k) as f64;
                (n, 2.0 * n.powf(0.75))
            })
            .collect()
    }

    #[test]
    fn exact_power_law_is_recovered_to_high_precision() {
        let fit = fit_powerlaw(&exact_points()).unwrap();
        assert!((fit.amplitude - 2.0).abs() < 1e-8, "amplitude {}", fit.amplitude);
        assert!((fit.exponent - 0.75).abs() < 1e-8, "exponent {}", fit.exponent);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn single_outlier_barely_moves_robust_fit_but_shifts_ols() {
        let mut points = exact_points();
        let last = points.len() - 1;
        points[last].1 *= 10.0;

        let robust = fit_powerlaw(&points).unwrap();
        let (_, ols_slope) = ordinary_least_squares_loglog(&points).unwrap();

        let robust_err = (robust.exponent - 0.75).abs();
        let ols_err = (ols_slope - 0.75).abs();
        assert!(robust_err < 0.02, "robust exponent off by {robust_err}");
        assert!(
            ols_err > robust_err,
            "OLS ({ols_err}) should deviate more than robust ({robust_err})"
        );
        // the outlier's weight collapses
        assert!(robust.weights[last] < 0.05);
    }

    #[test]
    fn outlier_position_does_not_matter() {
        for pos in 0..9 {
            let mut points = exact_points();
            points[pos].1 *= 10.0;
            let fit = fit_powerlaw(&points).unwrap();
            assert!(
                (fit.exponent - 0.75).abs() < 0.02,
                "outlier at {pos}: exponent {}",
                fit.exponent
            );
        }
    }

    #[test]
    fn two_points_are_rejected() {
        let err = fit_powerlaw(&[(1.0, 2.0), (2.0, 3.0)]).unwrap_err();
        assert!(matches!(err, Error::TooFewPoints { required: 3 }));
    }

    #[test]
    fn non_positive_scale_is_rejected() {
        let err = fit_powerlaw(&[(1.0, 2.0), (2.0, -3.0), (4.0, 5.0)]).unwrap_err();
        assert!(matches!(err, Error::NonPositiveScale { index: 1, .. }));
    }

    #[test]
    fn noisy_points_report_sane_stderr() {
        // multiplicative noise ~ 5%: slope error should be well under 0.1
        let points: Vec<(f64, f64)> = (2..12)
            .map(|k| {
                let n = (1u64 << k) as f64;
                let wobble = 1.0 + 0.05 * ((k as f64 * 12.9898).sin());
                (n, 3.0 * n.powf(0.5) * wobble)
            })
            .collect();
        let fit = fit_powerlaw(&points).unwrap();
        assert!((fit.exponent - 0.5).abs() < 0.05);
        assert!(fit.exponent_stderr > 0.0 && fit.exponent_stderr < 0.1);
    }
}
