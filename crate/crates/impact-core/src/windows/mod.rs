//! Fixed-trade-count sliding windows and their conditional statistics.
//!
//! A window of size `N` starting at trade `t` covers trades `t..t+N-1`.
//! Its return is `log m(t+N) - log m(t)` with `m(i)` the mid just before
//! trade `i`, so the start index must satisfy `t + N <= len - 1`: every
//! window needs the mid of the first trade after it. Windows never cross
//! day boundaries.

mod binning;
mod curves;

pub use binning::{quantile_bins, BinningOptions, QuantileBin};
pub use curves::{
    ccdf, ccdf_csv, change_prob_curve, curve_bins_csv, curves_for_grid, curves_for_grid_seq,
    impact_curve, Branch, CcdfCurve, CcdfPoint, ChangeProbCurve, CurveBin, ImbalanceKind,
    ImpactCurve, NCurveSet,
};

use crate::tape::SessionTape;

/// Conditional statistics of one window of `n` consecutive trades.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    /// Window size in trades.
    pub n: u32,
    /// Start index of the window within its day.
    pub start: usize,
    /// Normalised signed-volume sum over the window.
    pub imbalance: f64,
    /// Sign sum over the window.
    pub sign_sum: i64,
    /// Transaction-count imbalance: sign sum over unmerged transactions.
    pub tx_imbalance: i64,
    /// Log mid return across the window.
    pub log_return: f64,
    /// Fraction of the `n` trade-to-trade mid transitions inside the
    /// window (including the one crossing the window end) that moved.
    pub change_fraction: f64,
}

impl WindowStats {
    /// Mean trade sign of the window.
    #[inline]
    pub fn mean_sign(&self) -> f64 {
        self.sign_sum as f64 / self.n as f64
    }
}

/// Number of admissible window start positions for one day.
pub fn window_count(day_len: usize, n: usize) -> usize {
    day_len.saturating_sub(n)
}

/// Compute window statistics for one day with the given stride.
///
/// Returns one entry per admissible start index `0, stride, 2*stride, ...`.
/// A window size exceeding the day is not an error, just an empty result.
pub fn window_stats(tape: &SessionTape, n: usize, stride: usize) -> Vec<WindowStats> {
    assert!(n >= 1, "window size must be at least 1");
    assert!(stride >= 1, "stride must be at least 1");
    let count = window_count(tape.len(), n);
    let trades = &tape.trades;
    let factor = tape.norm_factor;

    let mut out = Vec::with_capacity(count.div_ceil(stride));
    let mut start = 0;
    while start < count {
        let mut imbalance = 0.0;
        let mut sign_sum = 0i64;
        let mut tx_imbalance = 0i64;
        let mut changes = 0usize;
        for i in start..start + n {
            let t = &trades[i];
            imbalance += t.signed_volume() * factor;
            sign_sum += t.sign.as_i64();
            tx_imbalance += t.sign.as_i64() * t.n_tx as i64;
            if trades[i + 1].mid_before != t.mid_before {
                changes += 1;
            }
        }
        out.push(WindowStats {
            n: n as u32,
            start,
            imbalance,
            sign_sum,
            tx_imbalance,
            log_return: trades[start + n].log_mid - trades[start].log_mid,
            change_fraction: changes as f64 / n as f64,
        });
        start += stride;
    }
    out
}

/// Window statistics pooled over several days, in day order.
pub fn collect_window_stats(tapes: &[SessionTape], n: usize, stride: usize) -> Vec<WindowStats> {
    let mut out = Vec::new();
    for tape in tapes {
        out.extend(window_stats(tape, n, stride));
    }
    out
}

/// Powers of two from 1 up to the largest admissible window of the
/// shortest day.
pub fn default_n_grid(tapes: &[SessionTape]) -> Vec<usize> {
    let shortest = tapes.iter().map(|t| t.len()).min().unwrap_or(0);
    let mut grid = Vec::new();
    let mut n = 1usize;
    while window_count(shortest, n) > 0 {
        grid.push(n);
        n *= 2;
    }
    grid
}
