//! Synthetic order-flow generator with known ground truth.
//!
//! Tapes are generated day by day from counter-derived subseeds, so a
//! configuration and a root seed pin every byte of the output, and days
//! can be generated in parallel. Under the `surprise` price model the
//! mid moves one tick in the trade direction with probability
//! proportional to how much the trade sign deviates from an
//! exponentially weighted predictor of recent signs: predictable flow
//! pins the price, balanced flow lets it diffuse.

mod fgn;
mod signs;
mod volumes;

pub use fgn::{fgn_autocovariance, gen_fgn, standard_normal, FgnSampler};
pub use signs::{calibrated_input_h, gen_signs, gen_signs_splitting};
pub use volumes::{gen_volumes, pareto_volume};

use chrono::NaiveDate;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::tape::{SessionSpec, SessionTape, Sign, Trade};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceModel {
    /// Tick moves with probability `min(1, theta * surprise)`.
    #[default]
    Surprise,
    /// Tick moves with constant probability `min(1, theta)`.
    FixedProb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignModel {
    /// Thresholded fGn calibrated to the target Hurst exponent.
    #[default]
    ThresholdedFgn,
    /// Order-splitting runs with autocorrelation tail exponent
    /// `2 (1 - h_target)`.
    Splitting,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub instrument: String,
    pub n_days: usize,
    pub n_trades: usize,
    /// Target variance-of-sums Hurst exponent of the trade signs.
    pub h_target: f64,
    /// Volume tail exponent (> 1).
    pub mu: f64,
    pub price_model: PriceModel,
    pub sign_model: SignModel,
    /// Surprise strength (or the flat move probability for `FixedProb`).
    pub theta: f64,
    /// Memory of the sign predictor, in trades.
    pub predictor_memory: usize,
    pub tick: f64,
    pub mid0: f64,
    pub start_date: NaiveDate,
    pub session: SessionSpec,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        const MIN: i64 = 60_000;
        SynthConfig {
            instrument: "SYN".into(),
            n_days: 2,
            n_trades: 10_000,
            h_target: 0.7,
            mu: 3.0,
            price_model: PriceModel::Surprise,
            sign_model: SignModel::ThresholdedFgn,
            theta: 0.8,
            predictor_memory: 32,
            tick: 0.01,
            mid0: 100.0,
            start_date: NaiveDate::from_ymd_opt(2016, 5, 2).unwrap(),
            session: SessionSpec::new(570 * MIN, 960 * MIN), // 09:30-16:00
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_days == 0 || self.n_trades < 2 {
            return Err(Error::InvalidParameter(
                "need at least 1 day and 2 trades per day".into(),
            ));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "theta must be non-negative, got {}",
                self.theta
            )));
        }
        if self.predictor_memory == 0 {
            return Err(Error::InvalidParameter("predictor memory must be positive".into()));
        }
        if !(self.tick > 0.0 && self.mid0 > self.tick) {
            return Err(Error::InvalidParameter("invalid tick/mid0".into()));
        }
        if !(self.mu > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "volume tail exponent must exceed 1, got {}",
                self.mu
            )));
        }
        Ok(())
    }
}

/// splitmix64; used to derive independent per-day seeds from the root.
fn mix_seed(root: u64, counter: u64) -> u64 {
    let mut z = root ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gen_day(config: &SynthConfig, day: usize) -> Result<SessionTape> {
    let n = config.n_trades;
    let date = config.start_date + chrono::Days::new(day as u64);

    let signs = match config.sign_model {
        SignModel::ThresholdedFgn => {
            gen_signs(config.h_target, n, mix_seed(config.seed, 3 * day as u64 + 1))?
        }
        SignModel::Splitting => {
            let gamma = (2.0 * (1.0 - config.h_target)).clamp(0.05, 0.95);
            gen_signs_splitting(gamma, n, mix_seed(config.seed, 3 * day as u64 + 1))?
        }
    };
    let volumes = gen_volumes(config.mu, n, mix_seed(config.seed, 3 * day as u64 + 2))?;
    let mut price_rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 3 * day as u64 + 3));

    // evenly spaced timestamps inside the retained session window
    let midnight = date
        .and_hms_opt(0, 0, 0)
        .expect("midnight is always valid")
        .and_utc()
        .timestamp_millis();
    let open = config.session.open_ms + config.session.trim_ms;
    let close = config.session.close_ms - config.session.trim_ms;
    let span = close - open;
    if span < n as i64 {
        return Err(Error::InvalidParameter(format!(
            "{n} trades do not fit in a {span} ms session at 1 ms spacing"
        )));
    }

    // mid evolves on the tick grid as an integer tick count
    let mut mid_ticks: i64 = (config.mid0 / config.tick).round() as i64;
    let lambda = 1.0 / config.predictor_memory as f64;
    let mut predictor = 0.0f64;

    let mut trades = Vec::with_capacity(n);
    for (i, (&sign, &volume)) in signs.iter().zip(&volumes).enumerate() {
        let ts_ms = midnight + open + (i as i64 * span) / n as i64;
        let mid = mid_ticks as f64 * config.tick;
        trades.push(Trade::new(ts_ms, sign, volume, mid, 1));

        let move_prob = match config.price_model {
            PriceModel::Surprise => {
                // surprise in [0, 1]: zero when the sign was fully
                // predicted, one when it contradicts the predictor
                let surprise = 0.5 * (1.0 - sign.value() * predictor);
                (config.theta * surprise).min(1.0)
            }
            PriceModel::FixedProb => config.theta.min(1.0),
        };
        if move_prob > 0.0 && price_rng.gen::<f64>() < move_prob {
            mid_ticks += sign.as_i64();
            mid_ticks = mid_ticks.max(1);
        }
        predictor = (1.0 - lambda) * predictor + lambda * sign.value();
    }

    Ok(SessionTape::new(config.instrument.clone(), date, trades))
}

fn gen_tape_impl(config: &SynthConfig, exec: Exec) -> Result<Vec<SessionTape>> {
    config.validate()?;
    let days: Vec<Result<SessionTape>> =
        exec::map_range(exec, 0..config.n_days, |d| gen_day(config, d));
    days.into_iter().collect()
}

/// Generate one session tape per day, in parallel over days.
pub fn gen_tape(config: &SynthConfig) -> Result<Vec<SessionTape>> {
    gen_tape_impl(config, Exec::Auto)
}

/// Sequential twin of [`gen_tape`].
pub fn gen_tape_seq(config: &SynthConfig) -> Result<Vec<SessionTape>> {
    gen_tape_impl(config, Exec::Sequential)
}
