//! Raw transaction CSV parsing.
//!
//! Expected schema (UTF-8, header row):
//! `ts_ms,price,bid,ask,size[,side][,irregular][,trade_id]`
//! Optional columns are matched by header name, not position.

use std::io::Read;

use crate::error::{Error, Result};
use crate::tape::{Sign, TransactionRecord};

/// Column layout resolved from the header row.
#[derive(Debug, Clone)]
pub struct RawFormat {
    ts_ms: usize,
    price: usize,
    bid: usize,
    ask: usize,
    size: usize,
    side: Option<usize>,
    irregular: Option<usize>,
    trade_id: Option<usize>,
}

impl RawFormat {
    pub fn from_headers(headers: &csv::StringRecord) -> Result<RawFormat> {
        let find = |name: &str| headers.iter().position(|h| h.trim() == name);
        let require = |name: &str| {
            find(name).ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("missing required column '{name}'"),
            })
        };
        Ok(RawFormat {
            ts_ms: require("ts_ms")?,
            price: require("price")?,
            bid: require("bid")?,
            ask: require("ask")?,
            size: require("size")?,
            side: find("side"),
            irregular: find("irregular"),
            trade_id: find("trade_id"),
        })
    }
}

fn field<'r>(rec: &'r csv::StringRecord, idx: usize, name: &str, line: usize) -> Result<&'r str> {
    rec.get(idx).ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing field '{name}'"),
    })
}

fn parse_f64(rec: &csv::StringRecord, idx: usize, name: &str, line: usize) -> Result<f64> {
    let s = field(rec, idx, name, line)?.trim();
    s.parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {name} value '{s}'"),
    })
}

fn parse_i64(rec: &csv::StringRecord, idx: usize, name: &str, line: usize) -> Result<i64> {
    let s = field(rec, idx, name, line)?.trim();
    s.parse::<i64>().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {name} value '{s}'"),
    })
}

/// Parse raw transaction records from a CSV stream, in file order.
///
/// Rows with non-finite or non-positive prices, or with a crossed quote
/// (`bid > ask`), are kept but flagged irregular rather than rejected;
/// structurally malformed rows are an error carrying the line number.
pub fn parse_transactions<R: Read>(input: R) -> Result<Vec<TransactionRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);

    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Vec::new());
    }
    let fmt = RawFormat::from_headers(&headers)?;

    let mut records = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let line = row_idx + 2; // header is line 1
        let row = row.map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        if row.len() == 1 && row[0].trim().is_empty() {
            continue;
        }

        let ts_ms = parse_i64(&row, fmt.ts_ms, "ts_ms", line)?;
        let price = parse_f64(&row, fmt.price, "price", line)?;
        let bid = parse_f64(&row, fmt.bid, "bid", line)?;
        let ask = parse_f64(&row, fmt.ask, "ask", line)?;
        let size = parse_f64(&row, fmt.size, "size", line)?;

        let vendor_side = match fmt.side {
            None => None,
            Some(idx) => match field(&row, idx, "side", line)?.trim() {
                "" => None,
                "buy" | "B" | "b" | "1" => Some(Sign::Buy),
                "sell" | "S" | "s" | "-1" => Some(Sign::Sell),
                other => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("invalid side value '{other}'"),
                    })
                }
            },
        };

        let mut irregular = match fmt.irregular {
            None => false,
            Some(idx) => {
                let s = field(&row, idx, "irregular", line)?.trim();
                matches!(s, "1" | "true" | "t" | "yes")
            }
        };

        let trade_id = match fmt.trade_id {
            None => None,
            Some(idx) => {
                let s = field(&row, idx, "trade_id", line)?.trim();
                if s.is_empty() {
                    None
                } else {
                    Some(s.parse::<u64>().map_err(|_| Error::Parse {
                        line,
                        msg: format!("invalid trade_id value '{s}'"),
                    })?)
                }
            }
        };

        // Data-quality screen: non-finite or non-positive prices and
        // crossed quotes make the record unusable for sign inference.
        let prices_ok = price.is_finite()
            && bid.is_finite()
            && ask.is_finite()
            && price > 0.0
            && bid > 0.0
            && ask > 0.0
            && size.is_finite()
            && size > 0.0
            && bid <= ask;
        if !prices_ok {
            irregular = true;
        }

        records.push(TransactionRecord {
            ts_ms,
            price,
            bid,
            ask,
            size,
            vendor_side,
            trade_id,
            irregular,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_row_maps_fields_directly() {
        let csv = "ts_ms,price,bid,ask,size\n1462107600123,97.32,97.31,97.33,100\n";
        let recs = parse_transactions(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.ts_ms, 1462107600123);
        assert_eq!(r.price, 97.32);
        assert_eq!(r.bid, 97.31);
        assert_eq!(r.ask, 97.33);
        assert_eq!(r.size, 100.0);
        assert!(!r.irregular);
        assert_eq!(r.vendor_side, None);
    }

    #[test]
    fn non_finite_bid_flags_irregular() {
        let csv = "ts_ms,price,bid,ask,size\n1,10.0,NaN,10.01,5\n";
        let recs = parse_transactions(csv.as_bytes()).unwrap();
        assert!(recs[0].irregular);
    }

    #[test]
    fn crossed_quote_flags_irregular() {
        let csv = "ts_ms,price,bid,ask,size\n1,10.0,10.02,10.01,5\n";
        let recs = parse_transactions(csv.as_bytes()).unwrap();
        assert!(recs[0].irregular);
    }

    #[test]
    fn empty_input_yields_empty_sequence() {
        let recs = parse_transactions("".as_bytes()).unwrap();
        assert!(recs.is_empty());
        let recs = parse_transactions("ts_ms,price,bid,ask,size\n".as_bytes()).unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let csv = "ts_ms,price,bid,ask,size\n1,10.0,9.9,10.1,5\nnot_a_number,1,1,1,1\n";
        let err = parse_transactions(csv.as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn optional_columns_are_read_by_name() {
        let csv = "ts_ms,price,bid,ask,size,side,irregular,trade_id\n\
                   1,10.0,9.9,10.1,5,buy,0,42\n\
                   2,10.0,9.9,10.1,5,sell,1,\n";
        let recs = parse_transactions(csv.as_bytes()).unwrap();
        assert_eq!(recs[0].vendor_side, Some(Sign::Buy));
        assert_eq!(recs[0].trade_id, Some(42));
        assert!(!recs[0].irregular);
        assert_eq!(recs[1].vendor_side, Some(Sign::Sell));
        assert_eq!(recs[1].trade_id, None);
        assert!(recs[1].irregular);
    }
}
