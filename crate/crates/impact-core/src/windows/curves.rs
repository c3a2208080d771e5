//! Conditional curves built from pooled window statistics: aggregate
//! impact vs. (volume | sign | transaction) imbalance, price-change
//! probability vs. mean sign, and per-branch CCDFs of the rescaled
//! imbalance.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::tape::SessionTape;
use crate::windows::{collect_window_stats, quantile_bins, BinningOptions, WindowStats};

/// Which imbalance a curve conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ImbalanceKind {
    /// Normalised signed-volume sum.
    Volume,
    /// Trade-sign sum.
    Sign,
    /// Sign sum over unmerged transactions.
    Trade,
}

impl ImbalanceKind {
    pub fn label(self) -> &'static str {
        match self {
            ImbalanceKind::Volume => "volume",
            ImbalanceKind::Sign => "sign",
            ImbalanceKind::Trade => "trade",
        }
    }

    fn value(self, w: &WindowStats) -> f64 {
        match self {
            ImbalanceKind::Volume => w.imbalance,
            ImbalanceKind::Sign => w.sign_sum as f64,
            ImbalanceKind::Trade => w.tx_imbalance as f64,
        }
    }
}

/// One reported bin of a conditional curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveBin {
    pub lo: f64,
    pub hi: f64,
    /// Mass-weighted bin center (mean conditioning value of the members).
    pub center: f64,
    /// Conditional mean of the response in this bin.
    pub mean: f64,
    pub count: u64,
    /// Sample standard deviation / sqrt(count); NaN when count < 2.
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImpactCurve {
    pub n: u32,
    pub kind: ImbalanceKind,
    pub bins: Vec<CurveBin>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChangeProbCurve {
    pub n: u32,
    pub bins: Vec<CurveBin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Positive => "pos",
            Branch::Negative => "neg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcdfPoint {
    /// Grid point on the rescaled-imbalance axis.
    pub x: f64,
    /// P(|imbalance|/scale >= x) within the branch.
    pub prob: f64,
    pub tail_count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CcdfCurve {
    pub n: u32,
    pub kind: ImbalanceKind,
    pub branch: Branch,
    pub points: Vec<CcdfPoint>,
}

fn bin_conditional_mean(
    cond: &[f64],
    response: &[f64],
    opts: &BinningOptions,
) -> Result<Vec<CurveBin>> {
    let qbins = quantile_bins(cond, opts)?;
    let mut out = Vec::with_capacity(qbins.len());
    for qb in &qbins {
        let count = qb.members.len();
        let mut sum_c = 0.0;
        let mut sum_r = 0.0;
        for &i in &qb.members {
            sum_c += cond[i];
            sum_r += response[i];
        }
        let center = sum_c / count as f64;
        let mean = sum_r / count as f64;
        let stderr = if count >= 2 {
            let ss: f64 = qb
                .members
                .iter()
                .map(|&i| {
                    let d = response[i] - mean;
                    d * d
                })
                .sum();
            (ss / (count as f64 - 1.0)).sqrt() / (count as f64).sqrt()
        } else {
            f64::NAN
        };
        out.push(CurveBin {
            lo: qb.lo,
            hi: qb.hi,
            center,
            mean,
            count: count as u64,
            stderr,
        });
    }
    Ok(out)
}

/// Quantile-binned conditional mean return vs. imbalance.
pub fn impact_curve(
    stats: &[WindowStats],
    kind: ImbalanceKind,
    opts: &BinningOptions,
) -> Result<ImpactCurve> {
    let n = stats.first().map(|w| w.n).unwrap_or(0);
    let cond: Vec<f64> = stats.iter().map(|w| kind.value(w)).collect();
    let response: Vec<f64> = stats.iter().map(|w| w.log_return).collect();
    Ok(ImpactCurve {
        n,
        kind,
        bins: bin_conditional_mean(&cond, &response, opts)?,
    })
}

/// Mean mid-change probability vs. mean trade sign.
pub fn change_prob_curve(stats: &[WindowStats], opts: &BinningOptions) -> Result<ChangeProbCurve> {
    let n = stats.first().map(|w| w.n).unwrap_or(0);
    let cond: Vec<f64> = stats.iter().map(|w| w.mean_sign()).collect();
    let response: Vec<f64> = stats.iter().map(|w| w.change_fraction).collect();
    Ok(ChangeProbCurve {
        n,
        bins: bin_conditional_mean(&cond, &response, opts)?,
    })
}

const CCDF_GRID_POINTS: usize = 64;

fn ccdf_branch(mut values: Vec<f64>, n: u32, kind: ImbalanceKind, branch: Branch) -> CcdfCurve {
    values.sort_by(f64::total_cmp);
    let points = if values.is_empty() {
        Vec::new()
    } else {
        let count = values.len();
        let lo = values[0];
        let hi = values[count - 1];
        let grid: Vec<f64> = if lo == hi {
            vec![lo]
        } else {
            // log-spaced between the extremes of the branch, endpoints
            // pinned to the exact data extremes
            let (llo, lhi) = (lo.ln(), hi.ln());
            (0..CCDF_GRID_POINTS)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == CCDF_GRID_POINTS - 1 {
                        hi
                    } else {
                        (llo + (lhi - llo) * i as f64 / (CCDF_GRID_POINTS - 1) as f64).exp()
                    }
                })
                .collect()
        };
        grid.into_iter()
            .map(|x| {
                let first_ge = values.partition_point(|&v| v < x);
                let tail = count - first_ge;
                CcdfPoint {
                    x,
                    prob: tail as f64 / count as f64,
                    tail_count: tail as u64,
                }
            })
            .collect()
    };
    CcdfCurve {
        n,
        kind,
        branch,
        points,
    }
}

/// Complementary cumulative distributions of `imbalance / scale`,
/// computed independently for the positive and negative branches.
/// Zero imbalances belong to neither branch.
pub fn ccdf(
    stats: &[WindowStats],
    kind: ImbalanceKind,
    scale: f64,
) -> Result<(CcdfCurve, CcdfCurve)> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ccdf scale must be positive, got {scale}"
        )));
    }
    let n = stats.first().map(|w| w.n).unwrap_or(0);
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for w in stats {
        let v = kind.value(w) / scale;
        if v > 0.0 {
            pos.push(v);
        } else if v < 0.0 {
            neg.push(-v);
        }
    }
    Ok((
        ccdf_branch(pos, n, kind, Branch::Positive),
        ccdf_branch(neg, n, kind, Branch::Negative),
    ))
}

/// Every curve computed for one window size.
#[derive(Debug, Clone)]
pub struct NCurveSet {
    pub n: usize,
    pub volume: ImpactCurve,
    pub sign: ImpactCurve,
    pub trade: ImpactCurve,
    pub change_prob: ChangeProbCurve,
    /// (positive, negative) per conditioning kind, rescaled by the
    /// sample standard deviation of the imbalance.
    pub ccdf_volume: (CcdfCurve, CcdfCurve),
    pub ccdf_sign: (CcdfCurve, CcdfCurve),
    /// Scale used for the CCDF axes.
    pub volume_scale: f64,
    pub sign_scale: f64,
}

fn sample_std(values: impl Iterator<Item = f64>) -> f64 {
    let mut n = 0u64;
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for v in values {
        n += 1;
        sum += v;
        sum2 += v * v;
    }
    if n < 2 {
        return f64::NAN;
    }
    let nf = n as f64;
    let var = (sum2 - sum * sum / nf) / (nf - 1.0);
    var.max(0.0).sqrt()
}

fn curves_for_n(
    tapes: &[SessionTape],
    n: usize,
    stride: usize,
    opts: &BinningOptions,
) -> Result<NCurveSet> {
    let stats = collect_window_stats(tapes, n, stride);
    let volume = impact_curve(&stats, ImbalanceKind::Volume, opts)?;
    let sign = impact_curve(&stats, ImbalanceKind::Sign, opts)?;
    let trade = impact_curve(&stats, ImbalanceKind::Trade, opts)?;
    let change_prob = change_prob_curve(&stats, opts)?;
    let volume_scale = sample_std(stats.iter().map(|w| w.imbalance));
    let sign_scale = sample_std(stats.iter().map(|w| w.sign_sum as f64));
    let ccdf_volume = ccdf(&stats, ImbalanceKind::Volume, volume_scale.max(f64::MIN_POSITIVE))?;
    let ccdf_sign = ccdf(&stats, ImbalanceKind::Sign, sign_scale.max(f64::MIN_POSITIVE))?;
    Ok(NCurveSet {
        n,
        volume,
        sign,
        trade,
        change_prob,
        ccdf_volume,
        ccdf_sign,
        volume_scale,
        sign_scale,
    })
}

fn curves_for_grid_impl(
    tapes: &[SessionTape],
    grid: &[usize],
    stride: usize,
    opts: &BinningOptions,
    exec: Exec,
) -> Vec<(usize, Result<NCurveSet>)> {
    exec::map_vec(exec, grid, |&n| (n, curves_for_n(tapes, n, stride, opts)))
}

/// Compute the full curve set for every window size in the grid,
/// in parallel over grid entries. Window sizes with too few windows
/// yield an `Err` entry rather than failing the batch.
pub fn curves_for_grid(
    tapes: &[SessionTape],
    grid: &[usize],
    stride: usize,
    opts: &BinningOptions,
) -> Vec<(usize, Result<NCurveSet>)> {
    curves_for_grid_impl(tapes, grid, stride, opts, Exec::Auto)
}

/// Sequential twin of [`curves_for_grid`], for benchmarking and for
/// builds without the `parallel` feature.
pub fn curves_for_grid_seq(
    tapes: &[SessionTape],
    grid: &[usize],
    stride: usize,
    opts: &BinningOptions,
) -> Vec<(usize, Result<NCurveSet>)> {
    curves_for_grid_impl(tapes, grid, stride, opts, Exec::Sequential)
}

/// CSV with one row per bin: `center,mean,count,stderr`.
pub fn curve_bins_csv(bins: &[CurveBin]) -> String {
    let mut out = String::from("center,mean,count,stderr\n");
    for b in bins {
        out.push_str(&format!("{},{},{},{}\n", b.center, b.mean, b.count, b.stderr));
    }
    out
}

/// CSV with one row per grid point: `center,mean,count,stderr`, where
/// `mean` is the tail probability and `stderr` its binomial error.
pub fn ccdf_csv(curve: &CcdfCurve, branch_total: u64) -> String {
    let mut out = String::from("center,mean,count,stderr\n");
    for p in &curve.points {
        let se = if branch_total > 0 {
            (p.prob * (1.0 - p.prob) / branch_total as f64).sqrt()
        } else {
            f64::NAN
        };
        out.push_str(&format!("{},{},{},{}\n", p.x, p.prob, p.tail_count, se));
    }
    out
}
