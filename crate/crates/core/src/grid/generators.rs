//! Closed-form Q-valued maps sampled on grids.

use std::f64::consts::PI;

use super::domain::GridDomain;
use super::field::QField;
use crate::aq::QPoint;
use crate::error::{Error, Result};

/// `Σ_{w^Q = z} ⟦w^p⟧` at `z = x + iy`, as a Q-point in R².
pub fn branch_value(q: usize, p: usize, z: [f64; 2]) -> QPoint {
    let r = z[0].hypot(z[1]);
    let mut coords = Vec::with_capacity(2 * q);
    if r == 0.0 {
        coords.resize(2 * q, 0.0);
    } else {
        let theta = z[1].atan2(z[0]);
        let modulus = r.powf(p as f64 / q as f64);
        for k in 0..q {
            let angle = p as f64 * (theta + 2.0 * PI * k as f64) / q as f64;
            coords.push(modulus * angle.cos());
            coords.push(modulus * angle.sin());
        }
    }
    QPoint::from_flat(q, 2, coords).expect("branch values are finite")
}

/// Samples `z ↦ Σ_{w^Q = z} ⟦w^p⟧` (homogeneous of degree `p/Q`).
pub fn gen_branch_map(q: usize, p: usize, domain: &GridDomain) -> Result<QField> {
    if q == 0 || p == 0 {
        return Err(Error::InvalidInput("branch map needs Q >= 1 and p >= 1".into()));
    }
    require_2d(domain)?;
    QField::from_fn(domain.clone(), q, 2, |z| Ok(branch_value(q, p, z)))
}

/// The examples of non-stationary and stationary one-dimensional and
/// planar maps built from `T±`.
#[derive(Debug, Clone, PartialEq)]
pub enum RemarkExample {
    /// `g(x) = 2⟦0⟧` for `x ≤ 0`, `⟦x⟧ + ⟦−x⟧` for `x > 0`.
    G1d,
    /// `(g(x) ⊕ a) + (g(−x) ⊕ (−a))`, four-valued with `|f′|² ≡ 2`.
    F4 { a: f64 },
    /// `h(x, y) = x·T₊` for `x > 0`, `x·T₋` for `x ≤ 0`.
    PlanarHSplit { tplus: QPoint, tminus: QPoint },
    /// `f(z) = Σ_{w^{Q1} = z} h(w)` with `h` the planar split map.
    Composite { q1: usize, tplus: QPoint, tminus: QPoint },
}

fn g_value(x: f64) -> [f64; 2] {
    if x > 0.0 {
        [x, -x]
    } else {
        [0.0, 0.0]
    }
}

fn hsplit_value(tplus: &QPoint, tminus: &QPoint, x: f64) -> Result<QPoint> {
    if x > 0.0 {
        tplus.scale(x)
    } else {
        tminus.scale(x)
    }
}

impl RemarkExample {
    pub fn q(&self) -> usize {
        match self {
            Self::G1d => 2,
            Self::F4 { .. } => 4,
            Self::PlanarHSplit { tplus, .. } => tplus.q(),
            Self::Composite { q1, tplus, .. } => q1 * tplus.q(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::G1d | Self::F4 { .. } => 1,
            Self::PlanarHSplit { tplus, .. } | Self::Composite { tplus, .. } => tplus.dim(),
        }
    }

    pub fn is_1d(&self) -> bool {
        matches!(self, Self::G1d | Self::F4 { .. })
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::G1d => Ok(()),
            Self::F4 { a } => {
                if a.is_finite() && *a > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!("f4 offset must be positive, got {a}")))
                }
            }
            Self::PlanarHSplit { tplus, tminus } | Self::Composite { tplus, tminus, .. } => {
                if tplus.q() != tminus.q() || tplus.dim() != tminus.dim() {
                    return Err(Error::Mismatch("T+ and T- must share (q, dim)".into()));
                }
                if let Self::Composite { q1, .. } = self {
                    if *q1 == 0 {
                        return Err(Error::InvalidInput("composite needs Q1 >= 1".into()));
                    }
                }
                Ok(())
            }
        }
    }

    /// The exact value at a point (`x[1]` is ignored for 1-D examples).
    pub fn value_at(&self, x: [f64; 2]) -> Result<QPoint> {
        match self {
            Self::G1d => QPoint::from_flat(2, 1, g_value(x[0]).to_vec()),
            Self::F4 { a } => {
                let p = g_value(x[0]);
                let m = g_value(-x[0]);
                QPoint::from_flat(4, 1, vec![p[0] + a, p[1] + a, m[0] - a, m[1] - a])
            }
            Self::PlanarHSplit { tplus, tminus } => hsplit_value(tplus, tminus, x[0]),
            Self::Composite { q1, tplus, tminus } => {
                let r = x[0].hypot(x[1]);
                let theta = x[1].atan2(x[0]);
                let modulus = r.powf(1.0 / *q1 as f64);
                let mut parts = Vec::with_capacity(*q1);
                for k in 0..*q1 {
                    let angle = (theta + 2.0 * PI * k as f64) / *q1 as f64;
                    let re = if r == 0.0 { 0.0 } else { modulus * angle.cos() };
                    parts.push(hsplit_value(tplus, tminus, re)?);
                }
                QPoint::concat(&parts)
            }
        }
    }
}

/// Samples one of the [`RemarkExample`] maps.
pub fn gen_remark_examples(which: &RemarkExample, domain: &GridDomain) -> Result<QField> {
    which.validate()?;
    if which.is_1d() != domain.is_1d() {
        return Err(Error::InvalidInput(format!(
            "example needs a {} grid",
            if which.is_1d() { "1-D" } else { "2-D" }
        )));
    }
    QField::from_fn(domain.clone(), which.q(), which.dim(), |x| which.value_at(x))
}

fn require_2d(domain: &GridDomain) -> Result<()> {
    if domain.is_1d() {
        Err(Error::InvalidInput("operation needs a 2-D grid".into()))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp1(xs: &[f64]) -> QPoint {
        QPoint::new(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn branch_identity_and_unit_circle() {
        let v = branch_value(1, 1, [0.3, -0.4]);
        assert_eq!(v.to_vecs(), vec![vec![0.3, -0.4]]);
        for k in 0..12 {
            let t = k as f64 * 0.5;
            let v = branch_value(2, 1, [t.cos(), t.sin()]);
            assert!((v.norm_sq() - 2.0).abs() < 1e-14);
        }
        assert_eq!(branch_value(3, 2, [0.0, 0.0]), QPoint::zero(3, 2));
    }

    #[test]
    fn branch_is_homogeneous() {
        let z = [0.37, 0.81];
        let lam: f64 = 0.3;
        let a = branch_value(3, 2, [lam * z[0], lam * z[1]]);
        let b = branch_value(3, 2, z).scale(lam.powf(2.0 / 3.0)).unwrap();
        assert!(a.dist(&b).unwrap() < 1e-14);
    }

    #[test]
    fn remark_g_values() {
        let g = RemarkExample::G1d;
        assert_eq!(g.value_at([-1.0, 0.0]).unwrap(), qp1(&[0.0, 0.0]));
        assert_eq!(g.value_at([1.0, 0.0]).unwrap(), qp1(&[1.0, -1.0]));
        let f = RemarkExample::F4 { a: 100.0 };
        assert_eq!(f.value_at([0.5, 0.0]).unwrap(), qp1(&[100.5, 99.5, -100.0, -100.0]));
        assert_eq!(f.value_at([-0.5, 0.0]).unwrap(), qp1(&[100.0, 100.0, -100.5, -99.5]));
    }

    #[test]
    fn composite_collapses_on_negative_axis() {
        let tp = QPoint::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let tm = QPoint::new(vec![vec![0.0, 1.0], vec![0.0, -1.0]]).unwrap();
        let c = RemarkExample::Composite {
            q1: 2,
            tplus: tp,
            tminus: tm,
        };
        assert_eq!(c.q(), 4);
        assert_eq!(c.value_at([-0.25, 0.0]).unwrap().card(1e-12), 1);
        assert_eq!(c.value_at([0.25, 0.1]).unwrap().card(1e-12), 4);
    }

    #[test]
    fn dimension_checks() {
        let d1 = GridDomain::interval(0.0, 0.1, 10).unwrap();
        assert!(gen_branch_map(2, 1, &d1).is_err());
        assert!(gen_remark_examples(&RemarkExample::G1d, &d1).is_ok());
        assert!(gen_remark_examples(&RemarkExample::F4 { a: -1.0 }, &d1).is_err());
    }
}
