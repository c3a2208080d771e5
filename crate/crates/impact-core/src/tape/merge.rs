//! Trade-sign inference and merging of simultaneous transactions.

use crate::error::{Error, Result};
use crate::tape::{Sign, Trade, TransactionRecord};

/// How constituent transactions of one trade are grouped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergePolicy {
    /// Collapse consecutive records sharing (timestamp, sign).
    #[default]
    TimestampSign,
    /// Group by the vendor execution id where present; records without an
    /// id fall back to the (timestamp, sign) rule.
    TradeId,
}

/// A regular transaction with its inferred sign, ready for merging.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedTransaction {
    pub ts_ms: i64,
    pub sign: Sign,
    pub size: f64,
    /// Mid just before this transaction.
    pub mid: f64,
    pub trade_id: Option<u64>,
}

/// Classify a transaction against the prevailing mid-price.
///
/// `Some(Buy)` above the mid, `Some(Sell)` below, `None` exactly at the
/// mid (such transactions are discarded and never contribute volume).
pub fn infer_sign(tx: &TransactionRecord) -> Option<Sign> {
    let mid = tx.mid();
    if tx.price > mid {
        Some(Sign::Buy)
    } else if tx.price < mid {
        Some(Sign::Sell)
    } else {
        None
    }
}

impl SignedTransaction {
    pub fn from_record(tx: &TransactionRecord) -> Option<SignedTransaction> {
        let sign = infer_sign(tx)?;
        Some(SignedTransaction {
            ts_ms: tx.ts_ms,
            sign,
            size: tx.size,
            mid: tx.mid(),
            trade_id: tx.trade_id,
        })
    }
}

/// Collapse runs of simultaneous same-direction transactions into trades.
///
/// Only consecutive records merge. Merged volume is the sum of the
/// constituent sizes; the trade keeps the timestamp and pre-trade mid of
/// its first constituent. Input must be sorted by timestamp.
pub fn merge_transactions(
    records: &[SignedTransaction],
    policy: MergePolicy,
) -> Result<Vec<Trade>> {
    for (i, pair) in records.windows(2).enumerate() {
        if pair[1].ts_ms < pair[0].ts_ms {
            return Err(Error::Unsorted(i + 1));
        }
    }

    let same_group = |a: &SignedTransaction, b: &SignedTransaction| -> bool {
        match policy {
            MergePolicy::TimestampSign => a.ts_ms == b.ts_ms && a.sign == b.sign,
            MergePolicy::TradeId => match (a.trade_id, b.trade_id) {
                (Some(x), Some(y)) => x == y,
                _ => a.ts_ms == b.ts_ms && a.sign == b.sign,
            },
        }
    };

    let mut trades: Vec<Trade> = Vec::new();
    let mut run: Option<(SignedTransaction, f64, u32)> = None;
    for tx in records {
        match run.take() {
            None => run = Some((tx.clone(), tx.size, 1)),
            Some((head, vol, n)) => {
                if same_group(&head, tx) {
                    run = Some((head, vol + tx.size, n + 1));
                } else {
                    trades.push(Trade::new(head.ts_ms, head.sign, vol, head.mid, n));
                    run = Some((tx.clone(), tx.size, 1));
                }
            }
        }
    }
    if let Some((head, vol, n)) = run {
        trades.push(Trade::new(head.ts_ms, head.sign, vol, head.mid, n));
    }
    Ok(trades)
}
