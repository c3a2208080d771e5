//! Cleaned-tape files: CSV with columns `ts_ms,sign,volume,mid_before`
//! and an optional `n_tx` column carrying merged-transaction counts.
//!
//! Floats are written in shortest round-trip form, so write -> read -> write
//! is byte-stable and read -> write reproduces trades bit-exactly.

use std::io::{Read, Write};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::tape::{SessionTape, Sign, Trade};

/// Write one cleaned tape. With `tx_counts` the `n_tx` column is appended.
pub fn write_tape_csv<W: Write>(tape: &SessionTape, out: W, tx_counts: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if tx_counts {
        w.write_record(["ts_ms", "sign", "volume", "mid_before", "n_tx"])?;
    } else {
        w.write_record(["ts_ms", "sign", "volume", "mid_before"])?;
    }
    for t in &tape.trades {
        let ts = t.ts_ms.to_string();
        let sign = t.sign.as_i64().to_string();
        let vol = t.volume.to_string();
        let mid = t.mid_before.to_string();
        if tx_counts {
            w.write_record([ts.as_str(), &sign, &vol, &mid, &t.n_tx.to_string()])?;
        } else {
            w.write_record([ts.as_str(), &sign, &vol, &mid])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a cleaned tape written by [`write_tape_csv`].
///
/// Instrument and date are carried by the file name, not the contents.
pub fn read_tape_csv<R: Read>(
    input: R,
    instrument: &str,
    date: NaiveDate,
) -> Result<SessionTape> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = |name: &str| {
        col(name).ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("cleaned tape is missing column '{name}'"),
        })
    };
    let ts_col = required("ts_ms")?;
    let sign_col = required("sign")?;
    let vol_col = required("volume")?;
    let mid_col = required("mid_before")?;
    let ntx_col = col("n_tx");

    let mut trades = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let line = row_idx + 2;
        let row = row.map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        let get = |idx: usize, name: &str| -> Result<&str> {
            row.get(idx).map(str::trim).ok_or_else(|| Error::Parse {
                line,
                msg: format!("missing field '{name}'"),
            })
        };
        let ts_ms: i64 = get(ts_col, "ts_ms")?.parse().map_err(|_| Error::Parse {
            line,
            msg: "invalid ts_ms".into(),
        })?;
        let sign_raw: i64 = get(sign_col, "sign")?.parse().map_err(|_| Error::Parse {
            line,
            msg: "invalid sign".into(),
        })?;
        let sign = Sign::from_i64(sign_raw).ok_or_else(|| Error::Parse {
            line,
            msg: format!("sign must be 1 or -1, got {sign_raw}"),
        })?;
        let volume: f64 = get(vol_col, "volume")?.parse().map_err(|_| Error::Parse {
            line,
            msg: "invalid volume".into(),
        })?;
        let mid: f64 = get(mid_col, "mid_before")?.parse().map_err(|_| Error::Parse {
            line,
            msg: "invalid mid_before".into(),
        })?;
        let n_tx: u32 = match ntx_col {
            None => 1,
            Some(idx) => get(idx, "n_tx")?.parse().map_err(|_| Error::Parse {
                line,
                msg: "invalid n_tx".into(),
            })?,
        };
        trades.push(Trade::new(ts_ms, sign, volume, mid, n_tx));
    }
    let tape = SessionTape::new(instrument, date, trades);
    tape.validate()?;
    Ok(tape)
}

/// `{instrument}_{date}.csv`
pub fn tape_file_name(instrument: &str, date: NaiveDate) -> String {
    format!("{instrument}_{date}.csv")
}

/// Parse `{instrument}_{date}.csv` back into its parts.
pub fn parse_tape_file_name(name: &str) -> Option<(String, NaiveDate)> {
    let stem = name.strip_suffix(".csv")?;
    // date is the last 10 characters: YYYY-MM-DD
    if stem.len() < 12 {
        return None;
    }
    let (head, date_part) = stem.split_at(stem.len() - 10);
    let instrument = head.strip_suffix('_')?;
    let date: NaiveDate = date_part.parse().ok()?;
    Some((instrument.to_string(), date))
}
