//! Average Hopf differential and conformalization.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::domain::GridDomain;
use super::energy::EnergyDensity;
use super::field::QField;
use super::frame::{local_frame, LocalFrame};
use crate::aq::QPoint;
use crate::error::{Error, Result};

/// `Φ` at every node whose frame is valid.
#[derive(Debug, Clone)]
pub struct HopfField {
    pub domain: GridDomain,
    pub values: Vec<Option<Complex64>>,
}

impl HopfField {
    /// Largest `|Φ|` over nodes where it is defined.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Σ |Φ| h²` over nodes where it is defined.
    pub fn l1(&self) -> f64 {
        let h = self.domain.h();
        let terms: Vec<f64> = self.values.iter().flatten().map(|z| z.norm() * h * h).collect();
        crate::numeric::pairwise_sum(&terms)
    }

    pub fn defined_count(&self) -> usize {
        self.values.iter().flatten().count()
    }
}

/// `Σ_i |d1_i|² − |d2_i|² − 2i d1_i·d2_i` of a frame.
pub fn frame_hopf(fr: &LocalFrame) -> Complex64 {
    let d2 = fr.d2().expect("Hopf differential needs a 2-D frame");
    let mut re = 0.0;
    let mut im = 0.0;
    for (a, b) in fr.d1().iter().zip(d2) {
        let mut aa = 0.0;
        let mut bb = 0.0;
        let mut ab = 0.0;
        for (x, y) in a.iter().zip(b) {
            aa += x * x;
            bb += y * y;
            ab += x * y;
        }
        re += aa - bb;
        im -= 2.0 * ab;
    }
    Complex64::new(re, im)
}

/// The average Hopf differential from local frames; missing where the
/// frame is invalid or cannot be formed.
pub fn hopf(f: &QField) -> Result<HopfField> {
    let d = f.domain();
    if d.is_1d() {
        return Err(Error::InvalidInput("Hopf differential needs a 2-D grid".into()));
    }
    let values = (0..d.len())
        .into_par_iter()
        .map(|k| {
            let fr = local_frame(f, k).ok()?;
            fr.valid.then(|| frame_hopf(&fr))
        })
        .collect();
    Ok(HopfField {
        domain: d.clone(),
        values,
    })
}

/// Output of [`make_conformal`].
#[derive(Debug, Clone)]
pub struct Conformalized {
    pub field: QField,
    /// `E = (∫|Df|²)^{1/2}` of the input.
    pub energy_root: f64,
    /// Largest difference between the x-first and y-first primitives of `Φ`.
    pub path_error: f64,
    pub report: ConformalReport,
}

/// Empirical check of `∫_{B_r}|DF|² ≤ ∫_{B_r}|Df|² + C r² ∫|Df|²`.
#[derive(Debug, Clone, Serialize)]
pub struct ConformalReport {
    pub radii: Vec<f64>,
    pub energy_f: Vec<f64>,
    pub energy_conformal: Vec<f64>,
    /// `(∫_{B_r}|DF|² − ∫_{B_r}|Df|²) / (r² ∫|Df|²)` per radius.
    pub constant: Vec<f64>,
    pub constant_max: f64,
}

/// Fills nodes without a value from the mean of defined 8-neighbors,
/// repeatedly; leftover nodes become zero.
fn fill_missing(d: &GridDomain, values: &[Option<Complex64>]) -> Vec<Complex64> {
    let mut cur: Vec<Option<Complex64>> = values.to_vec();
    for _ in 0..(d.nx() + d.ny()) {
        let mut changed = false;
        let next: Vec<Option<Complex64>> = (0..d.len())
            .map(|k| {
                if cur[k].is_some() || !d.is_active(k) {
                    return cur[k];
                }
                let (i, j) = d.node(k);
                let mut sum = Complex64::new(0.0, 0.0);
                let mut cnt = 0;
                for di in -1..=1 {
                    for dj in -1..=1 {
                        if let Some(n) = d.index((i + di, j + dj)) {
                            if let Some(v) = cur[n] {
                                sum += v;
                                cnt += 1;
                            }
                        }
                    }
                }
                (cnt > 0).then(|| sum / cnt as f64)
            })
            .collect();
        for k in 0..d.len() {
            if next[k].is_some() && cur[k].is_none() {
                changed = true;
            }
        }
        cur = next;
        if !changed {
            break;
        }
    }
    cur.into_iter().map(|v| v.unwrap_or_default()).collect()
}

/// Primitive of `Φ` from the grid center by the trapezoid rule along
/// lattice paths: first along `axis_first`, then along the other axis.
fn primitive(d: &GridDomain, phi: &[Complex64], axis_first: usize) -> Vec<Option<Complex64>> {
    let h = d.h();
    let step = [Complex64::new(h, 0.0), Complex64::new(0.0, h)];
    let mut psi = vec![None; d.len()];
    let origin = d.index((0, 0)).expect("grid center is a node");
    psi[origin] = Some(Complex64::new(0.0, 0.0));
    let (n, m) = (d.n_half() as i64, d.ny_half() as i64);
    let walk = |psi: &mut Vec<Option<Complex64>>, from: (i64, i64), dir: (i64, i64), len: i64, axis: usize| {
        let mut cur = from;
        for _ in 0..len {
            let next = (cur.0 + dir.0, cur.1 + dir.1);
            let (Some(a), Some(b)) = (d.index(cur), d.index(next)) else { break };
            if !d.is_active(b) {
                break;
            }
            let Some(base) = psi[a] else { break };
            let sign = (dir.0 + dir.1) as f64;
            psi[b] = Some(base + step[axis] * sign * 0.5 * (phi[a] + phi[b]));
            cur = next;
        }
    };
    let (first_len, second_len) = if axis_first == 0 { (n, m) } else { (m, n) };
    let axis_second = 1 - axis_first;
    let unit = |axis: usize, s: i64| if axis == 0 { (s, 0) } else { (0, s) };
    for s in [1, -1] {
        walk(&mut psi, (0, 0), unit(axis_first, s), first_len, axis_first);
    }
    for t in -first_len..=first_len {
        let start = if axis_first == 0 { (t, 0) } else { (0, t) };
        for s in [1, -1] {
            walk(&mut psi, start, unit(axis_second, s), second_len, axis_second);
        }
    }
    psi
}

/// Adds two coordinates `v = Re V, Im V` with
/// `V = E (z̄ − c̄)/(2√Q) − Ψ(z)/(2√Q E)` to every sheet, where `Ψ` is a
/// primitive of the Hopf differential and `E² = ∫|Df|²`, so that the Hopf
/// differential of the result vanishes.
pub fn make_conformal(f: &QField) -> Result<Conformalized> {
    let d = f.domain();
    if d.is_1d() {
        return Err(Error::InvalidInput("conformalization needs a 2-D grid".into()));
    }
    let (q, dim) = (f.q(), f.dim());
    let dens_f = EnergyDensity::new(f);
    let energy = dens_f.total();
    let e = energy.sqrt();
    let sq = (q as f64).sqrt();

    let (v, path_error) = if energy == 0.0 {
        (vec![Complex64::new(0.0, 0.0); d.len()], 0.0)
    } else {
        let phi = fill_missing(d, &hopf(f)?.values);
        let psi_x = primitive(d, &phi, 0);
        let psi_y = primitive(d, &phi, 1);
        let mut path_error = 0.0f64;
        let c = d.center();
        let v = (0..d.len())
            .map(|k| {
                if !d.is_active(k) {
                    return Complex64::new(0.0, 0.0);
                }
                let psi = psi_x[k].unwrap_or_default();
                if let (Some(a), Some(b)) = (psi_x[k], psi_y[k]) {
                    path_error = path_error.max((a - b).norm());
                }
                let p = d.position(k);
                let zbar = Complex64::new(p[0] - c[0], -(p[1] - c[1]));
                zbar * (e / (2.0 * sq)) - psi / (2.0 * sq * e)
            })
            .collect();
        (v, path_error)
    };

    let field = QField::from_fn_indexed(d.clone(), q, dim + 2, |k| {
        let x = f.slice(k);
        let mut coords = Vec::with_capacity(q * (dim + 2));
        for p in x.chunks_exact(dim) {
            coords.extend_from_slice(p);
            coords.push(v[k].re);
            coords.push(v[k].im);
        }
        QPoint::from_flat(q, dim + 2, coords)
    })?;

    let dens_big = EnergyDensity::new(&field);
    let r_max = d.radius();
    let radii: Vec<f64> = (1..=8).map(|s| r_max * s as f64 / 9.0).collect();
    let c = d.center();
    let energy_f: Vec<f64> = radii.iter().map(|&r| dens_f.ball(c, r)).collect();
    let energy_conformal: Vec<f64> = radii.iter().map(|&r| dens_big.ball(c, r)).collect();
    let constant: Vec<f64> = radii
        .iter()
        .zip(energy_f.iter().zip(&energy_conformal))
        .map(|(r, (a, b))| if energy > 0.0 { (b - a) / (r * r * energy) } else { 0.0 })
        .collect();
    let constant_max = constant.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Conformalized {
        field,
        energy_root: e,
        path_error,
        report: ConformalReport {
            radii,
            energy_f,
            energy_conformal,
            constant,
            constant_max,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generators::{gen_branch_map, gen_remark_examples, RemarkExample};

    #[test]
    fn holomorphic_single_valued_is_conformal() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 64).unwrap();
        let f = QField::from_fn(d.clone(), 1, 2, |z| {
            QPoint::new(vec![vec![z[0] * z[0] - z[1] * z[1], 2.0 * z[0] * z[1]]])
        })
        .unwrap();
        let phi = hopf(&f).unwrap();
        assert!(phi.sup_abs() <= 10.0 * d.h());
    }

    #[test]
    fn branch_map_is_average_conformal() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 64).unwrap();
        let f = gen_branch_map(2, 1, &d).unwrap();
        let phi = hopf(&f).unwrap();
        let h = d.h();
        for k in d.active_indices() {
            let p = d.position(k);
            if p[0].hypot(p[1]) > 0.25 {
                if let Some(v) = phi.values[k] {
                    assert!(v.norm() < 20.0 * h, "{v} at {p:?}");
                }
            }
        }
    }

    #[test]
    fn hsplit_has_constant_hopf() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 32).unwrap();
        let tp = QPoint::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let tm = QPoint::new(vec![vec![0.0, 1.0], vec![0.0, -1.0]]).unwrap();
        let f = gen_remark_examples(&RemarkExample::PlanarHSplit { tplus: tp, tminus: tm }, &d).unwrap();
        let phi = hopf(&f).unwrap();
        assert!(phi.defined_count() > 2000);
        for v in phi.values.iter().flatten() {
            assert!((v - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        }
        let conf = make_conformal(&f).unwrap();
        let after = hopf(&conf.field).unwrap();
        assert!(after.sup_abs() < 1e-9);
    }

    #[test]
    fn constant_field_pads_with_zeros() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 8).unwrap();
        let f = QField::from_fn(d, 2, 1, |_| QPoint::new(vec![vec![1.0], vec![3.0]])).unwrap();
        let conf = make_conformal(&f).unwrap();
        assert_eq!(conf.field.dim(), 3);
        for k in conf.field.domain().active_indices() {
            assert_eq!(conf.field.value(k), QPoint::new(vec![vec![1.0, 0.0, 0.0], vec![3.0, 0.0, 0.0]]).unwrap());
        }
    }
}
