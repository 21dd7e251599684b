use serde::Serialize;

use super::beta::{beta_tilde, LogValue};
use super::split_point::split_point;
use crate::aq::{split, QPoint};
use crate::error::{Error, Result};

/// Checked quantities for one element `S_k` of the chain.
#[derive(Debug, Clone, Serialize)]
pub struct ChainStep {
    pub k: usize,
    /// `sep(S_k)`; infinite for `k = 0`.
    pub sep: f64,
    /// `G(S_{k−1}, S_k)`, absent for `k = 0`.
    pub dist_prev: Option<f64>,
    /// `G(T, S_k)`.
    pub dist_t: f64,
    /// `G(T, S_{k−1})`, absent for `k = 0`.
    pub dist_t_prev: Option<f64>,
    /// `T ∈ P_ε(S_k)` and the split is balanced.
    pub balanced: bool,
    /// `spt(S_k) ⊂ spt(T)`.
    pub support_contained: bool,
    /// `ln sep(S_k) − k ln β̃ − ln G(S_{k−1}, S_k)`.
    pub log_margin_step: f64,
    /// `ln sep(S_k) − k ln β̃ − ln max(G(T, S_k), G(T, S_{k−1}))`.
    pub log_margin_strong: f64,
}

impl ChainStep {
    pub fn is_valid(&self) -> bool {
        self.balanced
            && self.support_contained
            && self.log_margin_step >= 0.0
            && self.log_margin_strong >= 0.0
    }
}

/// The chain `S_0 = Q⟦t⟧, …, S_q = T` with per-step checks.
#[derive(Debug, Clone, Serialize)]
pub struct ChainCertificate {
    pub chain: Vec<QPoint>,
    pub eps: f64,
    pub beta_tilde: LogValue,
    pub steps: Vec<ChainStep>,
    /// `S_q == T` as multisets.
    pub reaches_t: bool,
}

impl ChainCertificate {
    /// Number of refinements `q` (the chain has `q + 1` elements).
    pub fn len(&self) -> usize {
        self.chain.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_valid(&self) -> bool {
        let q = self.chain[0].q();
        self.reaches_t && self.len() <= q && self.steps.iter().all(ChainStep::is_valid)
    }

    /// Smallest finite log-margin over all steps; `+inf` when there is none.
    pub fn min_slack(&self) -> f64 {
        self.steps
            .iter()
            .flat_map(|s| [s.log_margin_step, s.log_margin_strong])
            .filter(|m| m.is_finite())
            .fold(f64::INFINITY, f64::min)
    }
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        x.ln()
    }
}

fn check_step(
    t: &QPoint,
    k: usize,
    current: &QPoint,
    previous: Option<&QPoint>,
    eps: f64,
    bt: LogValue,
) -> Result<ChainStep> {
    let sep = current.sep(0.0);
    let dist_t = current.dist(t)?;
    let balanced = match split(&current.support(0.0), t, eps) {
        Ok(r) => r.balanced,
        Err(Error::NotInNeighborhood { .. }) => false,
        Err(e) => return Err(e),
    };
    let support_contained = current.points().all(|p| t.contains_point(p));
    let (dist_prev, dist_t_prev, log_margin_step, log_margin_strong) = match previous {
        None => (None, None, f64::INFINITY, f64::INFINITY),
        Some(prev) => {
            let dp = prev.dist(current)?;
            let dtp = prev.dist(t)?;
            let lhs = bt.ln_pow(k);
            (
                Some(dp),
                Some(dtp),
                sep.ln() - lhs - ln_or_neg_inf(dp),
                sep.ln() - lhs - ln_or_neg_inf(dist_t.max(dtp)),
            )
        }
    };
    Ok(ChainStep {
        k,
        sep,
        dist_prev,
        dist_t,
        dist_t_prev,
        balanced,
        support_contained,
        log_margin_step,
        log_margin_strong,
    })
}

/// Refines `Q⟦t⟧` (`t` the first point of `T` in canonical order) into `T`.
///
/// Each step splits `T` over the support of the current element, picks the
/// component `T_i` farthest from its atom (lowest index on ties), replaces
/// `Q_i⟦s_i⟧` by [`split_point`] of `T_i`, and stops once the element equals
/// `T`. Every element is then re-checked against properties (1), (2), (3)
/// and the strengthened (3)* with `β̃(ε, Q)`.
pub fn key_chain(t: &QPoint, eps: f64) -> Result<ChainCertificate> {
    if !(eps > 0.0 && eps <= 0.125) {
        return Err(Error::ParameterOutOfRange(format!(
            "key_chain needs 0 < eps <= 1/8, got {eps}"
        )));
    }
    let q = t.q();
    let bt = beta_tilde(eps, q)?;
    let mut chain = vec![QPoint::multiple(q, t.point(0))?];

    while chain.len() <= q {
        let current = chain.last().expect("chain is never empty");
        let parts = split(&current.support(0.0), t, eps)?;
        if !parts.balanced {
            return Err(Error::CertificateFailed(format!(
                "T is not balanced over S_{}",
                chain.len() - 1
            )));
        }
        let mut worst: Option<(usize, f64)> = None;
        for (i, c) in parts.components.iter().enumerate() {
            let d = c.dist_sq_to_target();
            if d > 0.0 && worst.is_none_or(|(_, w)| d > w) {
                worst = Some((i, d));
            }
        }
        let Some((wi, _)) = worst else { break };

        let refined = split_point(
            parts.components[wi].part.as_ref().expect("nonzero distance implies points"),
            eps,
        )?;
        let mut pieces = Vec::with_capacity(parts.components.len());
        for (i, c) in parts.components.iter().enumerate() {
            if i == wi {
                pieces.push(refined.s.clone());
            } else {
                pieces.push(QPoint::multiple(c.target.multiplicity, &c.target.location)?);
            }
        }
        chain.push(QPoint::concat(&pieces)?);
    }

    let mut steps = Vec::with_capacity(chain.len());
    for k in 0..chain.len() {
        let prev = if k == 0 { None } else { Some(&chain[k - 1]) };
        steps.push(check_step(t, k, &chain[k], prev, eps, bt)?);
    }
    let cert = ChainCertificate {
        reaches_t: chain.last() == Some(t),
        chain,
        eps,
        beta_tilde: bt,
        steps,
    };
    if !cert.is_valid() {
        let bad = cert.steps.iter().find(|s| !s.is_valid());
        return Err(Error::CertificateFailed(format!(
            "key_chain certificate violated (reaches_t={}, len={}, first bad step={:?})",
            cert.reaches_t,
            cert.len(),
            bad
        )));
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> QPoint {
        QPoint::new(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn single_fold_point_gives_trivial_chain() {
        let t = QPoint::multiple(3, &[1.0, -2.0]).unwrap();
        let c = key_chain(&t, 0.125).unwrap();
        assert_eq!(c.len(), 0);
        assert_eq!(c.chain, vec![t]);
        assert!(c.is_valid());
    }

    #[test]
    fn two_points() {
        let t = line(&[0.0, 1.0]);
        let c = key_chain(&t, 0.0625).unwrap();
        assert_eq!(c.chain, vec![line(&[0.0, 0.0]), t]);
        let s = &c.steps[1];
        assert_eq!(s.dist_prev, Some(1.0));
        assert_eq!(s.sep, 1.0);
        assert!(s.log_margin_step > 0.0);
    }

    #[test]
    fn multiscale_chain() {
        let t = line(&[0.0, 1e-4, 1.0, 1.0 + 1e-7, 50.0]);
        let c = key_chain(&t, 0.125).unwrap();
        assert!(c.is_valid());
        assert!(c.len() <= 5);
        assert_eq!(c.chain.last().unwrap(), &t);
        assert_eq!(c.chain[1], line(&[0.0, 0.0, 0.0, 0.0, 50.0]));
    }

    #[test]
    fn eps_range() {
        let t = line(&[0.0, 1.0]);
        assert!(key_chain(&t, 0.2).is_err());
        assert!(key_chain(&t, 0.0).is_err());
    }
}
