use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::log_add_exp;

/// A positive real stored by its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogValue {
    pub ln: f64,
}

impl LogValue {
    pub fn from_ln(ln: f64) -> Self {
        Self { ln }
    }

    /// Best-effort double; underflows to `0.0` for very small values.
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }

    /// `ln(self^k)`.
    pub fn ln_pow(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.ln * k as f64
        }
    }
}

/// `β(ε, Q) = (ε/3)^(3^Q)`.
pub fn beta(eps: f64, q: usize) -> Result<LogValue> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::ParameterOutOfRange(format!("beta needs 0 < eps < 1, got {eps}")));
    }
    if q == 0 {
        return Err(Error::ParameterOutOfRange("beta needs q >= 1".into()));
    }
    let exponent = 3f64.powi(q as i32);
    Ok(LogValue::from_ln(exponent * (eps / 3.0).ln()))
}

/// `β̃(ε, Q) = (ε + (Q − 1)/β(ε, Q))^(-1)`.
pub fn beta_tilde(eps: f64, q: usize) -> Result<LogValue> {
    if !(eps > 0.0 && eps <= 0.125) {
        return Err(Error::ParameterOutOfRange(format!(
            "beta_tilde needs 0 < eps <= 1/8, got {eps}"
        )));
    }
    let b = beta(eps, q)?;
    let ln_ratio = if q == 1 {
        f64::NEG_INFINITY
    } else {
        ((q - 1) as f64).ln() - b.ln
    };
    Ok(LogValue::from_ln(-log_add_exp(eps.ln(), ln_ratio)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_one_eighth_q2() {
        // (1/24)^9 = 1 / 2641807540224
        let b = beta(0.125, 2).unwrap();
        let expected = 1.0 / 2_641_807_540_224.0;
        assert!((b.value() - expected).abs() <= 1e-12 * expected);
        assert!((b.value() - 3.7853e-13).abs() < 1e-16);
    }

    #[test]
    fn beta_q1_is_cube() {
        for t in [0.01, 0.1, 0.2, 0.3] {
            let b = beta(3.0 * t, 1).unwrap();
            assert!((b.value() - t * t * t).abs() <= 1e-14 * t * t * t);
        }
    }

    #[test]
    fn beta_tilde_formula() {
        let b = beta(0.125, 2).unwrap().value();
        let bt = beta_tilde(0.125, 2).unwrap().value();
        let direct = 1.0 / (0.125 + 1.0 / b);
        assert!((bt - direct).abs() <= 1e-12 * direct);
        let exact = beta_tilde(1.0 / 16.0, 2).unwrap().value();
        let b16 = beta(1.0 / 16.0, 2).unwrap().value();
        assert!((exact - 1.0 / (1.0 / 16.0 + 1.0 / b16)).abs() <= 1e-12 * exact);
    }

    #[test]
    fn underflow_is_kept_in_log_space() {
        let b = beta(0.125, 5).unwrap();
        assert_eq!(b.value(), 0.0);
        assert!((b.ln - 243.0 * (1.0f64 / 24.0).ln()).abs() < 1e-9);
        assert!(beta_tilde(0.125, 5).unwrap().ln.is_finite());
    }

    #[test]
    fn range_errors() {
        assert!(beta(0.0, 2).is_err());
        assert!(beta(1.0, 2).is_err());
        assert!(beta(0.5, 0).is_err());
        assert!(beta_tilde(0.13, 2).is_err());
        assert!(beta_tilde(0.0, 2).is_err());
    }

    #[test]
    fn monotone_on_parameter_grid() {
        let epss = [0.01, 0.02, 0.05, 0.1, 0.12];
        for q in 1..8 {
            for w in epss.windows(2) {
                assert!(beta(w[0], q).unwrap().ln < beta(w[1], q).unwrap().ln);
                if q >= 2 {
                    assert!(beta_tilde(w[0], q).unwrap().ln < beta_tilde(w[1], q).unwrap().ln);
                }
            }
            for &e in &epss {
                assert!(beta(e, q + 1).unwrap().ln < beta(e, q).unwrap().ln);
                assert!(beta_tilde(e, q + 1).unwrap().ln < beta_tilde(e, q).unwrap().ln);
            }
        }
    }
}
