//! Alternating scale/shape fit of the master curve across window sizes.
//!
//! The model is `R(x | N) = R_N * F(x / Q_N)` with a shape `F` shared by
//! all `N`. One alternation pass (a) fits `(Q_N, R_N)` per window size
//! with the shape held fixed — these fits are independent and run in
//! parallel — and (b) refits the shared shape on a random 80% subset of
//! the window sizes with all scales held fixed. After the loop the shape
//! is refit on all window sizes, scales are refreshed, and power laws
//! are fit to `Q_N` and `R_N` by robust regression.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::fit::nls::{nonlinear_least_squares, NlsOptions};
use crate::fit::powerlaw::fit_powerlaw;
use crate::fit::ScalingParams;
use crate::windows::ImpactCurve;

#[derive(Debug, Clone, PartialEq)]
pub struct MasterFitOptions {
    /// Window sizes below this are excluded from the fit.
    pub min_n: u32,
    pub max_alternations: usize,
    /// Relative change of (alpha, beta) that stops the alternation.
    pub shape_tol: f64,
    /// Fraction of window sizes included in each shape pass.
    pub subsample: f64,
    pub alpha_bounds: (f64, f64),
    pub beta_bounds: (f64, f64),
    pub nls: NlsOptions,
}

impl Default for MasterFitOptions {
    fn default() -> Self {
        MasterFitOptions {
            min_n: 10,
            max_alternations: 100,
            shape_tol: 1e-4,
            subsample: 0.8,
            alpha_bounds: (0.1, 10.0),
            beta_bounds: (0.0, 10.0),
            nls: NlsOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleEntry {
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "Q_N")]
    pub q_scale: f64,
    #[serde(rename = "R_N")]
    pub r_scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MasterFitDiagnostics {
    pub converged: bool,
    pub alternations: usize,
    /// Power-law amplitudes of the scale factors.
    pub q_amplitude: f64,
    pub r_amplitude: f64,
    pub q_r_squared: f64,
    pub r_r_squared: f64,
    /// Standard errors of the log-log regression slopes and the same
    /// relative to the exponent (the reported fitting-error convention).
    pub q_exponent_stderr: f64,
    pub r_exponent_stderr: f64,
    pub q_relative_stderr: f64,
    pub r_relative_stderr: f64,
    /// Weighted residual cost of the final shape fit.
    pub shape_cost: f64,
    /// Window sizes excluded (too few usable bins or failed scale fits).
    pub excluded: Vec<u32>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MasterFit {
    pub alpha: f64,
    pub beta: f64,
    pub scales: Vec<ScaleEntry>,
    pub xi: f64,
    pub psi: f64,
    pub kappa: f64,
    pub diagnostics: MasterFitDiagnostics,
}

impl MasterFit {
    pub fn shape(&self) -> ScalingParams {
        ScalingParams {
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    pub fn scale_for(&self, n: u32) -> Option<&ScaleEntry> {
        self.scales.iter().find(|s| s.n == n)
    }
}

/// Usable bins of one curve: (center, mean, inverse-variance weight).
struct NData {
    n: u32,
    points: Vec<(f64, f64, f64)>,
}

fn usable_points(curve: &ImpactCurve) -> Vec<(f64, f64, f64)> {
    curve
        .bins
        .iter()
        .filter(|b| {
            b.center.is_finite()
                && b.mean.is_finite()
                && b.stderr.is_finite()
                && b.stderr > 0.0
        })
        .map(|b| (b.center, b.mean, 1.0 / (b.stderr * b.stderr)))
        .collect()
}

/// Count-weighted RMS, the curve-level stand-in for a standard deviation.
fn weighted_rms(points: &[(f64, f64, f64)], pick: impl Fn(&(f64, f64, f64)) -> f64) -> f64 {
    let mut mass = 0.0;
    let mut sum2 = 0.0;
    for p in points {
        let v = pick(p);
        mass += 1.0;
        sum2 += v * v;
    }
    if mass == 0.0 {
        return 1.0;
    }
    let rms = (sum2 / mass).sqrt();
    if rms > 0.0 && rms.is_finite() {
        rms
    } else {
        1.0
    }
}

fn fit_scales_for(
    data: &NData,
    shape: ScalingParams,
    init: (f64, f64),
    nls: &NlsOptions,
) -> Result<(f64, f64)> {
    let model = move |x: f64, p: &[f64]| p[1].exp() * shape.eval(x * (-p[0]).exp());
    let sol = nonlinear_least_squares(
        model,
        &data.points,
        &[init.0.ln(), init.1.ln()],
        None,
        nls,
    )?;
    Ok((sol.params[0].exp(), sol.params[1].exp()))
}

fn fit_shape_on(
    subset: &[usize],
    data: &[NData],
    scales: &[(f64, f64)],
    init: ScalingParams,
    opts: &MasterFitOptions,
) -> Result<(ScalingParams, f64)> {
    // Rescale every bin into master-curve coordinates; the weight picks
    // up R_N^2 so the residual is identical to the unscaled one.
    let mut points = Vec::new();
    for &i in subset {
        let (q, r) = scales[i];
        for &(x, y, w) in &data[i].points {
            points.push((x / q, y / r, w * r * r));
        }
    }
    let lo = [opts.alpha_bounds.0, opts.beta_bounds.0];
    let hi = [opts.alpha_bounds.1, opts.beta_bounds.1];
    let sol = nonlinear_least_squares(
        |x, p| ScalingParams { alpha: p[0], beta: p[1] }.eval(x),
        &points,
        &[init.alpha, init.beta],
        Some((&lo, &hi)),
        &opts.nls,
    )?;
    Ok((
        ScalingParams {
            alpha: sol.params[0],
            beta: sol.params[1],
        },
        sol.cost,
    ))
}

fn fit_master_impl(
    curves: &[ImpactCurve],
    seed: u64,
    opts: &MasterFitOptions,
    exec: Exec,
) -> Result<MasterFit> {
    let mut warnings = Vec::new();
    let mut excluded = Vec::new();

    // Deduplicate by N, drop small N and curves with too few usable bins
    // (a 2-parameter scale fit wants at least 4 points).
    let mut by_n: std::collections::BTreeMap<u32, Vec<(f64, f64, f64)>> =
        std::collections::BTreeMap::new();
    for curve in curves {
        if curve.n < opts.min_n {
            continue;
        }
        let points = usable_points(curve);
        if points.len() < 4 {
            warnings.push(format!(
                "N={}: only {} usable bins, excluded",
                curve.n,
                points.len()
            ));
            excluded.push(curve.n);
            continue;
        }
        by_n.insert(curve.n, points);
    }
    let data: Vec<NData> = by_n
        .into_iter()
        .map(|(n, points)| NData { n, points })
        .collect();
    if data.len() < 5 {
        return Err(Error::TooFewCurves {
            required: 5,
            available: data.len(),
        });
    }

    let mut shape = ScalingParams {
        alpha: 1.0,
        beta: 1.0,
    };
    let init_scales: Vec<(f64, f64)> = data
        .iter()
        .map(|d| {
            (
                weighted_rms(&d.points, |p| p.0),
                weighted_rms(&d.points, |p| p.1),
            )
        })
        .collect();
    let mut scales = init_scales.clone();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all_indices: Vec<usize> = (0..data.len()).collect();
    let subset_size = ((opts.subsample * data.len() as f64).round() as usize)
        .clamp(2, data.len());

    let mut converged = false;
    let mut alternations = 0;

    for _ in 0..opts.max_alternations {
        alternations += 1;

        // (a) per-N scale fits, shape fixed
        let fitted: Vec<Result<(f64, f64)>> = exec::map_range(exec, 0..data.len(), |i| {
            fit_scales_for(&data[i], shape, scales[i], &opts.nls)
        });
        for (i, res) in fitted.into_iter().enumerate() {
            match res {
                Ok(s) => scales[i] = s,
                Err(e) => {
                    warnings.push(format!("N={}: scale fit failed ({e}), keeping previous", data[i].n));
                }
            }
        }

        // (b) shared shape on a random subset, scales fixed
        let mut subset = all_indices.clone();
        subset.shuffle(&mut rng);
        subset.truncate(subset_size);
        subset.sort_unstable();
        let (new_shape, _) = fit_shape_on(&subset, &data, &scales, shape, opts)?;

        let rel = ((new_shape.alpha - shape.alpha).abs() / new_shape.alpha.abs().max(1e-3))
            .max((new_shape.beta - shape.beta).abs() / new_shape.beta.abs().max(1e-3));
        shape = new_shape;
        if rel < opts.shape_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        warnings.push(format!(
            "alternation did not meet shape tolerance {} within {} passes",
            opts.shape_tol, opts.max_alternations
        ));
    }

    // Final pass: shape on all window sizes, then scales consistent with it.
    let (final_shape, shape_cost) = fit_shape_on(&all_indices, &data, &scales, shape, opts)?;
    shape = final_shape;
    let fitted: Vec<Result<(f64, f64)>> = exec::map_range(exec, 0..data.len(), |i| {
        fit_scales_for(&data[i], shape, scales[i], &opts.nls)
    });
    let mut kept: Vec<(u32, f64, f64)> = Vec::new();
    for (i, res) in fitted.into_iter().enumerate() {
        match res {
            Ok((q, r)) => kept.push((data[i].n, q, r)),
            Err(e) => {
                warnings.push(format!("N={}: final scale fit failed ({e})", data[i].n));
                excluded.push(data[i].n);
            }
        }
    }
    if kept.len() < 3 {
        return Err(Error::NonConvergence {
            iterations: alternations,
            reason: "fewer than 3 window sizes survived the scale fits".into(),
        });
    }

    let q_points: Vec<(f64, f64)> = kept.iter().map(|&(n, q, _)| (n as f64, q)).collect();
    let r_points: Vec<(f64, f64)> = kept.iter().map(|&(n, _, r)| (n as f64, r)).collect();
    let q_fit = fit_powerlaw(&q_points)?;
    let r_fit = fit_powerlaw(&r_points)?;

    let scales_out: Vec<ScaleEntry> = kept
        .iter()
        .map(|&(n, q, r)| ScaleEntry {
            n,
            q_scale: q,
            r_scale: r,
        })
        .collect();
    excluded.sort_unstable();
    excluded.dedup();

    Ok(MasterFit {
        alpha: shape.alpha,
        beta: shape.beta,
        scales: scales_out,
        xi: q_fit.exponent,
        psi: r_fit.exponent,
        kappa: q_fit.exponent - r_fit.exponent,
        diagnostics: MasterFitDiagnostics {
            converged,
            alternations,
            q_amplitude: q_fit.amplitude,
            r_amplitude: r_fit.amplitude,
            q_r_squared: q_fit.r_squared,
            r_r_squared: r_fit.r_squared,
            q_exponent_stderr: q_fit.exponent_stderr,
            r_exponent_stderr: r_fit.exponent_stderr,
            q_relative_stderr: q_fit.exponent_stderr / q_fit.exponent.abs().max(1e-300),
            r_relative_stderr: r_fit.exponent_stderr / r_fit.exponent.abs().max(1e-300),
            shape_cost,
            excluded,
            warnings,
        },
    })
}

/// Fit shared shape parameters, per-N scales and their power laws.
///
/// Deterministic given the curves, the seed and the options.
pub fn fit_master(curves: &[ImpactCurve], seed: u64, opts: &MasterFitOptions) -> Result<MasterFit> {
    fit_master_impl(curves, seed, opts, Exec::Auto)
}

/// Sequential twin of [`fit_master`].
pub fn fit_master_seq(
    curves: &[ImpactCurve],
    seed: u64,
    opts: &MasterFitOptions,
) -> Result<MasterFit> {
    fit_master_impl(curves, seed, opts, Exec::Sequential)
}
