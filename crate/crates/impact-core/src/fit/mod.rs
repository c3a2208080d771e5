//! Master-curve evaluation and fitting.
//!
//! Rescaled aggregate-impact curves collapse onto a sigmoid
//! `F(x) = x / (1 + |x|^alpha)^(beta/alpha)`. This module evaluates that
//! curve, fits per-window-size scale factors and shared shape parameters
//! by an alternating procedure, and extracts power-law rescaling
//! exponents by robust regression.

mod master;
mod nls;
mod powerlaw;

pub use master::{
    fit_master, fit_master_seq, MasterFit, MasterFitDiagnostics, MasterFitOptions, ScaleEntry,
};
pub use nls::{nonlinear_least_squares, NlsOptions, NlsSolution};
pub use powerlaw::{fit_powerlaw, ordinary_least_squares_loglog, PowerLawFit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape parameters of the sigmoidal master curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub alpha: f64,
    pub beta: f64,
}

impl ScalingParams {
    pub fn new(alpha: f64, beta: f64) -> Result<ScalingParams> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be non-negative, got {beta}"
            )));
        }
        Ok(ScalingParams { alpha, beta })
    }

    /// Evaluate `F(x) = x / (1 + |x|^alpha)^(beta/alpha)`.
    ///
    /// Odd in `x` by construction; `beta = 0` reduces to the identity.
    pub fn eval(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let t = x.abs().powf(self.alpha);
        if t.is_finite() {
            x / (1.0 + t).powf(self.beta / self.alpha)
        } else {
            // |x|^alpha overflowed; use the large-x form sign(x)*|x|^(1-beta)
            x.signum() * ((1.0 - self.beta) * x.abs().ln()).exp()
        }
    }
}

/// Decay exponent of the linear-region slope: `xi - psi`.
pub fn kappa(xi: f64, psi: f64) -> f64 {
    xi - psi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, beta: f64) -> ScalingParams {
        ScalingParams::new(alpha, beta).unwrap()
    }

    #[test]
    fn zero_maps_to_zero() {
        for (a, b) in [(0.5, 0.3), (1.0, 1.0), (2.7, 4.0)] {
            assert_eq!(params(a, b).eval(0.0), 0.0);
        }
    }

    #[test]
    fn unit_point_with_unit_shape() {
        assert_eq!(params(1.0, 1.0).eval(1.0), 0.5);
    }

    #[test]
    fn beta_zero_is_identity() {
        let p = params(1.7, 0.0);
        for x in [-10.0, -0.3, 0.2, 5.0, 1e6] {
            assert_eq!(p.eval(x), x);
        }
    }

    #[test]
    fn beta_one_saturates_at_large_arguments() {
        let p = params(1.5, 1.0);
        assert!((p.eval(1e9) - 1.0).abs() < 1e-5);
        assert!((p.eval(-1e9) + 1.0).abs() < 1e-5);
    }

    #[test]
    fn odd_function_exactly() {
        let p = params(1.2, 1.3);
        for x in [1e-8, 0.1, 0.7, 3.0, 42.0, 1e5] {
            assert_eq!(p.eval(-x), -p.eval(x));
        }
    }

    #[test]
    fn small_x_expansion_dominates_residual() {
        // F(x) = x - (beta/alpha) sign(x) |x|^(1+alpha) + o(|x|^(1+alpha))
        for (a, b) in [(1.2, 1.3), (0.8, 2.0), (2.0, 0.5)] {
            let p = params(a, b);
            for x in [1e-3, 1e-4] {
                let lead = x - (b / a) * x.powf(1.0 + a);
                let residual = (p.eval(x) - lead).abs();
                let correction = (b / a) * x.powf(1.0 + a);
                assert!(
                    residual < 0.01 * correction,
                    "alpha={a} beta={b} x={x}: residual {residual:.3e} vs correction {correction:.3e}"
                );
            }
        }
    }

    #[test]
    fn large_x_form_has_unit_prefactor() {
        // F(x) * |x|^(beta-1) -> 1
        for (a, b) in [(1.2, 1.3), (1.0, 1.0), (2.0, 0.5)] {
            let p = params(a, b);
            let x = 1e6;
            let v = p.eval(x) * x.powf(b - 1.0);
            assert!((v - 1.0).abs() < 1e-3, "alpha={a} beta={b}: prefactor {v}");
        }
    }

    #[test]
    fn kappa_is_the_exponent_difference() {
        assert_eq!(kappa(0.75, 0.5), 0.25);
        assert_eq!(kappa(0.6, 0.6), 0.0);
        assert!((kappa(0.84, 0.53) - 0.31).abs() < 1e-15);
    }

    #[test]
    fn invalid_shape_parameters_are_rejected() {
        assert!(ScalingParams::new(0.0, 1.0).is_err());
        assert!(ScalingParams::new(-1.0, 1.0).is_err());
        assert!(ScalingParams::new(1.0, -0.1).is_err());
        assert!(ScalingParams::new(f64::NAN, 1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn oddness_holds_everywhere(
            x in -1e6f64..1e6,
            alpha in 0.1f64..10.0,
            beta in 0.0f64..10.0,
        ) {
            let p = params(alpha, beta);
            proptest::prop_assert_eq!(p.eval(-x), -p.eval(x));
        }
    }
}
