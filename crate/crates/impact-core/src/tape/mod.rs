//! Trade-tape preparation: parsing, sign inference, merging, session
//! trimming and daily-volume normalisation.

mod merge;
mod parse;

pub mod io;

pub use merge::{infer_sign, merge_transactions, MergePolicy, SignedTransaction};
pub use parse::{parse_transactions, RawFormat};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trade sign: buyer-initiated (+1) or seller-initiated (-1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Buy,
    Sell,
}

impl Sign {
    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Sign::Buy => 1.0,
            Sign::Sell => -1.0,
        }
    }

    #[inline]
    pub fn as_i64(self) -> i64 {
        match self {
            Sign::Buy => 1,
            Sign::Sell => -1,
        }
    }

    pub fn from_i64(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Buy),
            -1 => Some(Sign::Sell),
            _ => None,
        }
    }

    #[inline]
    pub fn flipped(self) -> Sign {
        match self {
            Sign::Buy => Sign::Sell,
            Sign::Sell => Sign::Buy,
        }
    }
}

/// One raw transaction record as reported by the venue or vendor.
#[derive(Debug, Clone, PartialEq)]
pub struct TransactionRecord {
    /// Epoch milliseconds.
    pub ts_ms: i64,
    pub price: f64,
    /// Best bid just before the transaction.
    pub bid: f64,
    /// Best ask just before the transaction.
    pub ask: f64,
    pub size: f64,
    /// Vendor-provided aggressor side, when the feed carries one.
    pub vendor_side: Option<Sign>,
    /// Vendor-provided execution id, when the feed carries one.
    pub trade_id: Option<u64>,
    /// Set from the vendor flag, or when prices are non-finite/non-positive
    /// or the quote is crossed.
    pub irregular: bool,
}

impl TransactionRecord {
    /// Mid-price just before the transaction.
    #[inline]
    pub fn mid(&self) -> f64 {
        0.5 * (self.bid + self.ask)
    }
}

/// One (possibly merged) trade on the cleaned tape.
#[derive(Debug, Clone, PartialEq)]
pub struct Trade {
    /// Epoch milliseconds of the first constituent transaction.
    pub ts_ms: i64,
    pub sign: Sign,
    pub volume: f64,
    /// Mid-price just before the first constituent transaction.
    pub mid_before: f64,
    /// ln(mid_before), cached because every return computation needs it.
    pub log_mid: f64,
    /// Number of raw transactions merged into this trade.
    pub n_tx: u32,
}

impl Trade {
    pub fn new(ts_ms: i64, sign: Sign, volume: f64, mid_before: f64, n_tx: u32) -> Trade {
        Trade {
            ts_ms,
            sign,
            volume,
            mid_before,
            log_mid: mid_before.ln(),
            n_tx,
        }
    }

    /// Signed volume of this trade.
    #[inline]
    pub fn signed_volume(&self) -> f64 {
        self.sign.value() * self.volume
    }
}

/// Session calendar for one trading day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    /// Session open, milliseconds from UTC midnight.
    pub open_ms: i64,
    /// Session close, milliseconds from UTC midnight.
    pub close_ms: i64,
    /// Margin discarded after the open and before the close.
    pub trim_ms: i64,
    /// Days flagged with shortened trading hours are rejected outright.
    pub shortened: bool,
}

impl SessionSpec {
    pub const DEFAULT_TRIM_MS: i64 = 30 * 60 * 1000;

    pub fn new(open_ms: i64, close_ms: i64) -> SessionSpec {
        SessionSpec {
            open_ms,
            close_ms,
            trim_ms: Self::DEFAULT_TRIM_MS,
            shortened: false,
        }
    }

    /// Retained interval `[open + trim, close - trim]` in epoch ms.
    fn retained_interval(&self, date: NaiveDate) -> (i64, i64) {
        let midnight = date
            .and_hms_opt(0, 0, 0)
            .expect("midnight is always valid")
            .and_utc()
            .timestamp_millis();
        (
            midnight + self.open_ms + self.trim_ms,
            midnight + self.close_ms - self.trim_ms,
        )
    }
}

/// Cleaned, signed, merged trade sequence for one instrument-day.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionTape {
    pub instrument: String,
    pub date: NaiveDate,
    pub trades: Vec<Trade>,
    /// Total unsigned transaction volume of the day.
    pub day_volume: f64,
    /// `mean over days of day_volume / this day's day_volume`; set by
    /// [`normalize_daily`], 1.0 until then.
    pub norm_factor: f64,
}

impl SessionTape {
    pub fn new(instrument: impl Into<String>, date: NaiveDate, trades: Vec<Trade>) -> SessionTape {
        let day_volume = trades.iter().map(|t| t.volume).sum();
        SessionTape {
            instrument: instrument.into(),
            date,
            trades,
            day_volume,
            norm_factor: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.trades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trades.is_empty()
    }

    /// Check every structural invariant of a cleaned tape.
    pub fn validate(&self) -> Result<()> {
        let mut prev_ts = i64::MIN;
        for (i, t) in self.trades.iter().enumerate() {
            if t.ts_ms < prev_ts {
                return Err(Error::Unsorted(i));
            }
            prev_ts = t.ts_ms;
            if !(t.volume > 0.0 && t.volume.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "trade {i}: non-positive volume {}",
                    t.volume
                )));
            }
            if !(t.mid_before > 0.0 && t.mid_before.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "trade {i}: non-positive mid {}",
                    t.mid_before
                )));
            }
            if t.log_mid != t.mid_before.ln() {
                return Err(Error::InvalidParameter(format!(
                    "trade {i}: stale log_mid"
                )));
            }
        }
        if !(self.norm_factor > 0.0 && self.norm_factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-positive norm factor {}",
                self.norm_factor
            )));
        }
        Ok(())
    }
}

/// Trim the session margins and reject shortened days.
///
/// Trades must all belong to `date`; those outside
/// `[open + trim, close - trim]` are dropped. Returns the tape and the
/// number of trades trimmed away.
pub fn build_session(
    instrument: &str,
    date: NaiveDate,
    trades: Vec<Trade>,
    spec: &SessionSpec,
) -> Result<(SessionTape, usize)> {
    if spec.shortened {
        return Err(Error::ShortenedDay { date });
    }
    let (lo, hi) = spec.retained_interval(date);
    let before = trades.len();
    let retained: Vec<Trade> = trades
        .into_iter()
        .filter(|t| t.ts_ms >= lo && t.ts_ms <= hi)
        .collect();
    let trimmed = before - retained.len();
    Ok((SessionTape::new(instrument, date, retained), trimmed))
}

/// Set `norm_factor = <Q_D> / Q_D` on every tape, with `<Q_D>` the
/// arithmetic mean of the daily volumes over the given tapes.
pub fn normalize_daily(tapes: &mut [SessionTape]) -> Result<()> {
    if tapes.is_empty() {
        return Err(Error::InvalidParameter(
            "normalize_daily needs at least one tape".into(),
        ));
    }
    for tape in tapes.iter() {
        if !(tape.day_volume > 0.0) {
            return Err(Error::ZeroDailyVolume { date: tape.date });
        }
    }
    let mean: f64 = tapes.iter().map(|t| t.day_volume).sum::<f64>() / tapes.len() as f64;
    for tape in tapes.iter_mut() {
        tape.norm_factor = mean / tape.day_volume;
    }
    Ok(())
}
