//! Fractional Gaussian noise by circulant embedding.
//!
//! The autocovariance `gamma(k) = ((k+1)^2H - 2 k^2H + (k-1)^2H) / 2` is
//! embedded in a circulant matrix of size `2n`; its eigenvalues come from
//! one FFT and are provably non-negative for this covariance, so any
//! material negative eigenvalue is reported as an error instead of being
//! clipped. Samples cost one length-`2n` FFT each.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

/// One standard normal draw (Box-Muller), deterministic given the RNG.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0f64..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Exact autocovariance of unit-variance fGn at lag `k`.
pub fn fgn_autocovariance(h: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let k = k as f64;
    let e = 2.0 * h;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).powf(e))
}

/// Reusable sampling plan for fixed `(h, n)`.
pub struct FgnSampler {
    n: usize,
    sqrt_eigenvalues: Vec<f64>,
    planner_len: usize,
}

impl FgnSampler {
    pub fn new(h: f64, n: usize) -> Result<FgnSampler> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Hurst exponent must lie in (0, 1), got {h}"
            )));
        }
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "sample length must be a power of two, got {n}"
            )));
        }
        let m = 2 * n;
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|j| {
                let lag = j.min(m - j);
                Complex::new(fgn_autocovariance(h, lag), 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut row);

        let max_eig = row.iter().map(|c| c.re).fold(0.0f64, f64::max);
        let tol = 1e-10 * max_eig.max(1.0);
        let mut sqrt_eigenvalues = Vec::with_capacity(m);
        for c in &row {
            if c.re < -tol {
                return Err(Error::EmbeddingFailed(c.re));
            }
            sqrt_eigenvalues.push(c.re.max(0.0).sqrt());
        }
        Ok(FgnSampler {
            n,
            sqrt_eigenvalues,
            planner_len: m,
        })
    }

    /// Draw one sample path of length `n` from the given RNG.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.planner_len;
        let mut buf: Vec<Complex<f64>> = self
            .sqrt_eigenvalues
            .iter()
            .map(|&w| {
                let re = standard_normal(rng);
                let im = standard_normal(rng);
                Complex::new(re * w, im * w)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let norm = 1.0 / (m as f64).sqrt();
        buf.iter().take(self.n).map(|c| c.re * norm).collect()
    }
}

/// Stationary Gaussian sequence with exact fGn autocovariance.
///
/// `n` must be a power of two (circulant embedding size).
pub fn gen_fgn(h: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = FgnSampler::new(h, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.sample(&mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lag_autocorr(xs: &[f64], lag: usize) -> f64 {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        let cov: f64 = xs[..n - lag]
            .iter()
            .zip(&xs[lag..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / (n - lag) as f64;
        cov / var
    }

    #[test]
    fn half_hurst_is_white_noise() {
        let n = 1 << 16;
        let xs = gen_fgn(0.5, n, 1).unwrap();
        let rho1 = lag_autocorr(&xs, 1);
        assert!(
            rho1.abs() < 3.0 / (n as f64).sqrt(),
            "lag-1 autocorrelation {rho1}"
        );
    }

    #[test]
    fn sum_variance_scales_with_the_hurst_exponent() {
        // Var(sum of N) = N^{2H} exactly for unit fGn; 5% tolerance on the
        // sample estimate for N in {16, ..., 4096}.
        let h = 0.75;
        let n = 1 << 20;
        let xs = gen_fgn(h, n, 7).unwrap();
        for k in 4..=12 {
            let block = 1usize << k;
            let sums: Vec<f64> = xs.chunks_exact(block).map(|c| c.iter().sum()).collect();
            let msq: f64 = sums.iter().map(|s| s * s).sum::<f64>() / sums.len() as f64;
            let expect = (block as f64).powf(2.0 * h);
            assert!(
                (msq / expect - 1.0).abs() < 0.05,
                "N={block}: mean square {msq:.1} vs {expect:.1}"
            );
        }
    }

    #[test]
    fn sample_mean_is_near_zero() {
        let h = 0.8;
        let n = 1 << 18;
        let xs = gen_fgn(h, n, 3).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        // std of the sample mean is n^{H-1}
        assert!(mean.abs() < 3.0 * (n as f64).powf(h - 1.0), "mean {mean}");
    }

    #[test]
    fn autocovariance_matches_closed_form_over_seeds() {
        let h = 0.7;
        let n = 1 << 12;
        let seeds = 100;
        let sampler = FgnSampler::new(h, n).unwrap();
        let mut acc = [[0.0f64; 3]; 2]; // per-lag sum and sum of squares
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs = sampler.sample(&mut rng);
            for lag in 0..3 {
                let cov: f64 = xs[..n - lag]
                    .iter()
                    .zip(&xs[lag..])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / (n - lag) as f64;
                acc[0][lag] += cov;
                acc[1][lag] += cov * cov;
            }
        }
        for lag in 0..3 {
            let mean = acc[0][lag] / seeds as f64;
            let var = acc[1][lag] / seeds as f64 - mean * mean;
            let se = (var / seeds as f64).sqrt();
            let expect = fgn_autocovariance(h, lag);
            assert!(
                (mean - expect).abs() < 3.0 * se + 1e-12,
                "lag {lag}: {mean} vs {expect} (se {se})"
            );
        }
    }

    #[test]
    fn same_seed_reproduces_the_path() {
        let a = gen_fgn(0.65, 1 << 10, 42).unwrap();
        let b = gen_fgn(0.65, 1 << 10, 42).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = gen_fgn(0.65, 1 << 10, 43).unwrap();
        assert!(a.iter().zip(&c).any(|(x, y)| x != y));
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        assert!(gen_fgn(0.5, 1000, 1).is_err()); // not a power of two
        assert!(gen_fgn(0.0, 1024, 1).is_err());
        assert!(gen_fgn(1.0, 1024, 1).is_err());
    }
}
