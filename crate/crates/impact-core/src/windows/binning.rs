//! Tie-aware quantile binning along the imbalance axis.
//!
//! Bin boundaries are placed at equal-mass quantiles of the empirical
//! distribution but never split a run of equal values, so every distinct
//! value belongs to exactly one bin. When the number of distinct values
//! does not exceed the requested bin count, each distinct value gets its
//! own bin; grouping by exact sign sum is then a special case of
//! quantile binning.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinningOptions {
    /// Target (maximum) number of bins.
    pub bins: usize,
    /// Bins with fewer members are dropped from the reported curve.
    pub min_occupancy: usize,
}

impl Default for BinningOptions {
    fn default() -> Self {
        BinningOptions {
            bins: 31,
            min_occupancy: 50,
        }
    }
}

/// One quantile bin: a half-open value range and the member indices.
#[derive(Debug, Clone)]
pub struct QuantileBin {
    pub lo: f64,
    pub hi: f64,
    /// Indices into the original value slice.
    pub members: Vec<usize>,
}

/// Partition `values` into at most `opts.bins` equal-mass groups.
///
/// Fails when there are fewer than `bins * min_occupancy` values; bins
/// left with fewer than `min_occupancy` members after tie resolution are
/// silently dropped (their mass was absorbed by a tie run).
pub fn quantile_bins(values: &[f64], opts: &BinningOptions) -> Result<Vec<QuantileBin>> {
    let n = values.len();
    let required = opts.bins * opts.min_occupancy.max(1);
    if n < required {
        return Err(Error::TooFewWindows {
            required,
            available: n,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    // Runs of equal values in sorted order: (value, start, len).
    let mut runs: Vec<(f64, usize, usize)> = Vec::new();
    for (pos, &idx) in order.iter().enumerate() {
        let v = values[idx];
        match runs.last_mut() {
            Some((rv, _, len)) if *rv == v => *len += 1,
            _ => runs.push((v, pos, 1)),
        }
    }

    // Group boundaries: after the first run whose cumulative mass reaches
    // each equal-mass threshold k*n/bins.
    let mut groups: Vec<(usize, usize)> = Vec::new(); // run index ranges
    if runs.len() <= opts.bins {
        for i in 0..runs.len() {
            groups.push((i, i + 1));
        }
    } else {
        let mut run_start = 0usize;
        let mut cum = 0usize;
        let mut next_threshold = 1usize;
        for (i, &(_, _, len)) in runs.iter().enumerate() {
            cum += len;
            // Close the group once it reaches the current mass threshold,
            // skipping thresholds swallowed by a large tie run.
            if next_threshold < opts.bins && cum * opts.bins >= next_threshold * n {
                while next_threshold < opts.bins && cum * opts.bins >= next_threshold * n {
                    next_threshold += 1;
                }
                groups.push((run_start, i + 1));
                run_start = i + 1;
            }
        }
        if run_start < runs.len() {
            groups.push((run_start, runs.len()));
        }
    }

    let mut bins = Vec::with_capacity(groups.len());
    for (gi, &(r0, r1)) in groups.iter().enumerate() {
        let first = runs[r0];
        let last = runs[r1 - 1];
        let start = first.1;
        let end = last.1 + last.2;
        let members: Vec<usize> = order[start..end].to_vec();
        if members.len() < opts.min_occupancy.max(1) {
            continue;
        }
        // Edges halfway between adjacent groups; outer edges at the data.
        let lo = if gi == 0 {
            first.0
        } else {
            0.5 * (runs[r0 - 1].0 + first.0)
        };
        let hi = if r1 == runs.len() {
            last.0
        } else {
            0.5 * (last.0 + runs[r1].0)
        };
        bins.push(QuantileBin { lo, hi, members });
    }
    Ok(bins)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(bins: usize, min_occ: usize) -> BinningOptions {
        BinningOptions {
            bins,
            min_occupancy: min_occ,
        }
    }

    #[test]
    fn distinct_values_get_their_own_bins_when_few() {
        let values = [2.0, 0.0, -2.0, 0.0, 2.0, 0.0, -2.0, 0.0, 0.0];
        let bins = quantile_bins(&values, &opts(3, 1)).unwrap();
        assert_eq!(bins.len(), 3);
        assert_eq!(bins[0].members.len(), 2);
        assert_eq!(bins[1].members.len(), 5);
        assert_eq!(bins[2].members.len(), 2);
        for b in &bins {
            let vs: Vec<f64> = b.members.iter().map(|&i| values[i]).collect();
            assert!(vs.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn continuous_values_split_into_equal_mass_bins() {
        let values: Vec<f64> = (0..1000).map(|i| i as f64 * 0.001).collect();
        let bins = quantile_bins(&values, &opts(10, 50)).unwrap();
        assert_eq!(bins.len(), 10);
        for b in &bins {
            assert_eq!(b.members.len(), 100);
        }
        // ordered, non-overlapping ranges
        for pair in bins.windows(2) {
            assert!(pair[0].hi <= pair[1].lo);
        }
    }

    #[test]
    fn too_few_values_is_an_error() {
        let values = [1.0, 2.0, 3.0];
        let err = quantile_bins(&values, &opts(2, 50)).unwrap_err();
        match err {
            Error::TooFewWindows {
                required,
                available,
            } => {
                assert_eq!(required, 100);
                assert_eq!(available, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn huge_tie_run_absorbs_thresholds_without_panicking() {
        let mut values = vec![0.0; 900];
        values.extend(std::iter::repeat(1.0).take(5));
        values.extend(std::iter::repeat(2.0).take(5));
        let bins = quantile_bins(&values, &opts(3, 1)).unwrap();
        let total: usize = bins.iter().map(|b| b.members.len()).sum();
        assert_eq!(total, 910);
        assert!(bins.len() <= 3);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        /// Equal values never straddle a bin boundary, every value is
        /// assigned at most once, and ranges are ordered.
        #[test]
        fn ties_are_coherent(raw in proptest::collection::vec(-5i32..5, 40..400)) {
            let values: Vec<f64> = raw.iter().map(|&v| v as f64 * 0.5).collect();
            let bins = quantile_bins(&values, &opts(7, 1)).unwrap();
            let mut seen = vec![false; values.len()];
            let mut last_hi = f64::NEG_INFINITY;
            for b in &bins {
                proptest::prop_assert!(b.lo >= last_hi);
                last_hi = b.hi;
                for &i in &b.members {
                    proptest::prop_assert!(!seen[i]);
                    seen[i] = true;
                }
            }
            // a value appearing in one bin never appears in another
            for b in &bins {
                for &i in &b.members {
                    for other in &bins {
                        if !std::ptr::eq(b, other) {
                            proptest::prop_assert!(
                                !other.members.iter().any(|&j| values[j] == values[i])
                            );
                        }
                    }
                }
            }
        }
    }
}
