//! Aggregate price-impact analytics.
//!
//! The crate is organised around the stages of a batch analysis run:
//!
//! * [`tape`] — raw transaction parsing, trade-sign inference, merging of
//!   simultaneous transactions, session trimming and daily-volume
//!   normalisation, producing clean per-day trade tapes.
//! * [`windows`] — fixed-trade-count sliding windows and the conditional
//!   statistics derived from them: aggregate-volume/sign/trade impact
//!   curves, price-change-probability curves, and rescaled CCDFs.
//! * [`fit`] — the sigmoidal master curve, the alternating scale/shape
//!   fitting procedure across window sizes, and robust power-law
//!   regression of the rescaling factors.
//! * [`stats`] — Hurst exponents via variance of sums, the eta
//!   tick-discretisation statistic, sign autocorrelations with tail
//!   exponents, and the cross-instrument exponent panel.
//! * [`synth`] — a seeded synthetic order-flow generator with known
//!   ground truth, used as the verification oracle for every estimator.
//!
//! All estimators are deterministic given their inputs (and a seed where
//! randomness is involved). With the `parallel` feature (default) the
//! data-parallel inner loops run on rayon; the sequential fallback is
//! selected by building with `--no-default-features`.

pub mod error;
pub mod exec;
pub mod fit;
pub mod stats;
pub mod synth;
pub mod tape;
pub mod windows;

pub use error::{Error, Result};
