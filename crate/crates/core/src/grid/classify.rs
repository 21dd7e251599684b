//! Classification of homogeneous one-dimensional maps against the
//! stationarity characterization `f(t) = t T₊ (t > 0)`, `t T₋ (t ≤ 0)`
//! with `|T₊| = |T₋|`.

use serde::Serialize;

use super::field::QField;
use crate::aq::QPoint;
use crate::error::{Error, Result};
use crate::numeric::linear_fit;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Classification1d {
    /// Linear on each half-line. `inner_ok` is `|T₊| = |T₋|`, the condition
    /// for the inner variation to vanish.
    Conforms {
        tplus: Vec<Vec<f64>>,
        tminus: Vec<Vec<f64>>,
        inner_ok: bool,
        alpha: f64,
    },
    Violates { reason: String, alpha: f64 },
}

impl Classification1d {
    pub fn conforms(&self) -> bool {
        matches!(self, Self::Conforms { .. })
    }
}

/// Nodes `(t, f(t))` on one side of the grid center, ordered by `|t|`.
fn side(f: &QField, sign: f64) -> Vec<(f64, QPoint)> {
    let d = f.domain();
    let c = d.center()[0];
    let mut v: Vec<(f64, QPoint)> = d
        .active_indices()
        .map(|k| (d.position(k)[0] - c, k))
        .filter(|(t, _)| t * sign > 0.0)
        .map(|(t, k)| (t, f.value(k)))
        .collect();
    v.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    v
}

/// Degree of homogeneity fitted on one side, `None` when the side vanishes.
fn fit_alpha(pts: &[(f64, QPoint)]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts
        .iter()
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(t, v)| (t.abs().ln(), v.norm().ln()))
        .unzip();
    (xs.len() >= 2).then(|| linear_fit(&xs, &ys).0)
}

/// Checks `f(t) = (|t|/|t_ref|)^α f(t_ref)` on one side within
/// `tol (1 + |f(t)|)`; returns the worst violation when it fails.
fn check_scaling(pts: &[(f64, QPoint)], alpha: f64, tol: f64) -> Result<()> {
    let Some((t_ref, v_ref)) = pts.last() else { return Ok(()) };
    for (t, v) in pts {
        let predicted = v_ref.scale((t / t_ref).abs().powf(alpha))?;
        let err = predicted.dist(v)?;
        if err > tol * (1.0 + v.norm()) {
            return Err(Error::NonHomogeneous(format!(
                "f({t}) differs from the rescaled f({t_ref}) by {err:.3e} at degree {alpha:.6}"
            )));
        }
    }
    Ok(())
}

/// The homogeneity degree is fitted on each half-line and checked by
/// rescaling the outermost value; a field failing that check is an error,
/// not a violation.
pub fn classify_1d(f: &QField, tol: f64) -> Result<Classification1d> {
    let d = f.domain();
    if !d.is_1d() {
        return Err(Error::InvalidInput("classify_1d needs a 1-D field".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let (q, dim) = (f.q(), f.dim());
    let origin = d.index((0, 0)).expect("grid center");
    let pos = side(f, 1.0);
    let neg = side(f, -1.0);
    let a_pos = fit_alpha(&pos);
    let a_neg = fit_alpha(&neg);
    let alpha = match (a_pos, a_neg) {
        (Some(a), Some(b)) => {
            if (a - b).abs() > tol * (1.0 + a.abs()) {
                return Err(Error::NonHomogeneous(format!(
                    "degrees differ across the origin: {a:.6} vs {b:.6}"
                )));
            }
            0.5 * (a + b)
        }
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => 1.0,
    };
    if !(alpha > 0.0) {
        return Err(Error::NonHomogeneous(format!("fitted degree {alpha:.6} is not positive")));
    }
    check_scaling(&pos, alpha, tol)?;
    check_scaling(&neg, alpha, tol)?;
    if f.value(origin).norm() > tol {
        return Err(Error::NonHomogeneous("f(0) is not Q⟦0⟧".into()));
    }
    if (alpha - 1.0).abs() > tol {
        return Ok(Classification1d::Violates {
            reason: format!("homogeneous of degree {alpha:.6} ≠ 1"),
            alpha,
        });
    }
    let slope = |pts: &[(f64, QPoint)]| -> Result<QPoint> {
        match pts.last() {
            Some((t, v)) => v.scale(1.0 / t),
            None => Ok(QPoint::zero(q, dim)),
        }
    };
    let tp = slope(&pos)?;
    let tm = slope(&neg)?;
    let (np, nm) = (tp.norm_sq(), tm.norm_sq());
    let inner_ok = (np - nm).abs() <= tol * (1.0 + np.max(nm));
    Ok(Classification1d::Conforms {
        tplus: tp.to_vecs(),
        tminus: tm.to_vecs(),
        inner_ok,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDomain;

    fn field(f: impl Fn(f64) -> Vec<Vec<f64>> + Sync) -> QField {
        let d = GridDomain::interval(0.0, 0.01, 100).unwrap();
        QField::from_fn(d, 2, 1, |x| QPoint::new(f(x[0]))).unwrap()
    }

    #[test]
    fn unequal_slopes_conform_without_inner_stationarity() {
        let f = field(|t| if t > 0.0 { vec![vec![t], vec![-t]] } else { vec![vec![2.0 * t], vec![0.0]] });
        match classify_1d(&f, 1e-8).unwrap() {
            Classification1d::Conforms { inner_ok, tplus, tminus, .. } => {
                assert!(!inner_ok);
                assert_eq!(QPoint::new(tplus).unwrap().norm_sq(), 2.0);
                assert!((QPoint::new(tminus).unwrap().norm_sq() - 4.0).abs() < 1e-12);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn symmetric_map_is_stationary() {
        let f = field(|t| vec![vec![t], vec![-t]]);
        let c = classify_1d(&f, 1e-8).unwrap();
        assert!(matches!(c, Classification1d::Conforms { inner_ok: true, .. }), "{c:?}");
    }

    #[test]
    fn quadratic_violates() {
        let f = field(|t| vec![vec![t * t], vec![t * t]]);
        match classify_1d(&f, 1e-6).unwrap() {
            Classification1d::Violates { alpha, .. } => assert!((alpha - 2.0).abs() < 1e-9),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn non_homogeneous_is_an_error() {
        let f = field(|t| vec![vec![t + t * t], vec![0.0]]);
        assert!(matches!(classify_1d(&f, 1e-6), Err(Error::NonHomogeneous(_))));
    }
}
