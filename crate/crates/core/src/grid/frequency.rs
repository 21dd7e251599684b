//! Almgren's frequency function and energy-normalized blow-ups.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::curve::CurveSeries;
use super::domain::GridDomain;
use super::energy::EnergyDensity;
use super::field::QField;
use super::frame::match_neighbor;
use crate::aq::QPoint;
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Lower-left lattice cell containing `p` with bilinear weights for its
/// corners, or `None` when a corner is missing or inactive.
fn cell_weights(d: &GridDomain, p: [f64; 2]) -> Option<Vec<(usize, f64)>> {
    let c = d.center();
    let h = d.h();
    let u = (p[0] - c[0]) / h;
    let i0 = u.floor() as i64;
    let s = u - i0 as f64;
    let mut out = Vec::with_capacity(4);
    if d.is_1d() {
        for (di, w) in [(0, 1.0 - s), (1, s)] {
            let k = d.index((i0 + di, 0))?;
            if !d.is_active(k) {
                return None;
            }
            out.push((k, w));
        }
        return Some(out);
    }
    let v = (p[1] - c[1]) / h;
    let j0 = v.floor() as i64;
    let t = v - j0 as f64;
    for (di, dj, w) in [(0, 0, (1.0 - s) * (1.0 - t)), (1, 0, s * (1.0 - t)), (0, 1, (1.0 - s) * t), (1, 1, s * t)] {
        let k = d.index((i0 + di, j0 + dj))?;
        if !d.is_active(k) {
            return None;
        }
        out.push((k, w));
    }
    Some(out)
}

/// Number of angular samples for the boundary integral on a circle of
/// radius `r`.
pub fn angular_samples(r: f64, h: f64) -> usize {
    ((2.0 * PI * r / h).ceil() as usize).max(64)
}

/// `∫_{∂B_r(x)} |f|²` by the trapezoid rule over `M` equally spaced angles
/// of the bilinearly interpolated `|f|²`; in 1-D the two endpoint values.
fn boundary_mass(d: &GridDomain, norm_sq: &[f64], x: [f64; 2], r: f64) -> Result<f64> {
    let sample = |p: [f64; 2]| -> Result<f64> {
        let w = cell_weights(d, p)
            .ok_or_else(|| Error::RegionOutsideDomain(format!("sample point {p:?} of the sphere of radius {r}")))?;
        Ok(w.iter().map(|&(k, w)| w * norm_sq[k]).sum())
    };
    if d.is_1d() {
        return Ok(sample([x[0] - r, 0.0])? + sample([x[0] + r, 0.0])?);
    }
    let m = angular_samples(r, d.h());
    let vals = (0..m)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / m as f64;
            sample([x[0] + r * a.cos(), x[1] + r * a.sin()])
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(2.0 * PI * r / m as f64 * pairwise_sum(&vals))
}

/// Energy density and `|f|²` of a field, reused across many centers.
pub struct FrequencyData {
    dens: EnergyDensity,
    norm_sq: Vec<f64>,
}

impl FrequencyData {
    pub fn new(f: &QField) -> Self {
        Self {
            dens: EnergyDensity::new(f),
            norm_sq: f.norm_sq_grid(),
        }
    }

    /// `(D(r), H(r))` about `x`.
    pub fn d_and_h(&self, x: [f64; 2], r: f64) -> Result<(f64, f64)> {
        Ok((self.dens.ball(x, r), boundary_mass(self.dens.domain(), &self.norm_sq, x, r)?))
    }

    /// `rD/H`, NaN where `H = 0`.
    pub fn frequency(&self, x: [f64; 2], r: f64) -> Result<f64> {
        let (dv, hv) = self.d_and_h(x, r)?;
        Ok(if hv > 0.0 { r * dv / hv } else { f64::NAN })
    }
}

/// `D(r) = ∫_{B_r(x)}|Df|²`, `H(r) = ∫_{∂B_r(x)}|f|²` and `I = rD/H` for
/// each radius. Where `H(r) = 0` the map vanishes identically on the sphere;
/// `I` is then NaN and the `locally_zero` column is 1.
pub fn freq_curve(f: &QField, x: [f64; 2], r_list: &[f64]) -> Result<CurveSeries> {
    let d = f.domain();
    let h = d.h();
    for &r in r_list {
        if !(r > 0.0) {
            return Err(Error::InvalidInput(format!("radius {r} must be positive")));
        }
        if !d.contains_ball(x, r, h) {
            return Err(Error::RegionOutsideDomain(format!("B_{r}({x:?}) with margin {h}")));
        }
    }
    let pre = FrequencyData::new(f);
    let rows = r_list
        .par_iter()
        .map(|&r| pre.d_and_h(x, r))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (dcol, hcol): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let icol: Vec<f64> = r_list
        .iter()
        .zip(dcol.iter().zip(&hcol))
        .map(|(r, (dv, hv))| if *hv > 0.0 { r * dv / hv } else { f64::NAN })
        .collect();
    let zero: Vec<f64> = hcol.iter().map(|hv| if *hv > 0.0 { 0.0 } else { 1.0 }).collect();
    let mut c = CurveSeries::new("r", r_list.to_vec())?;
    c.push_column("D", dcol)?;
    c.push_column("H", hcol)?;
    c.push_column("I", icol)?;
    c.push_column("locally_zero", zero)?;
    Ok(c.with_meta("quantity", "I(r) = r D(r) / H(r)")
        .with_meta("center", format!("{},{}", x[0], x[1]))
        .with_meta("h", h))
}

/// Value of `f` at an arbitrary point: bilinear interpolation of matched
/// sheets when every cell corner matches the nearest node uniquely and
/// within half its separation, the nearest-node value otherwise.
pub fn sample_field(f: &QField, p: [f64; 2]) -> Result<QPoint> {
    let d = f.domain();
    let (q, dim) = (f.q(), f.dim());
    let anchor = d
        .index(d.nearest_node(p))
        .filter(|&k| d.is_active(k))
        .ok_or_else(|| Error::RegionOutsideDomain(format!("point {p:?}")))?;
    let ap = d.position(anchor);
    if (ap[0] - p[0]).hypot(ap[1] - p[1]) > d.h() {
        return Err(Error::RegionOutsideDomain(format!("point {p:?}")));
    }
    let x = f.slice(anchor);
    let Some(corners) = cell_weights(d, p) else {
        return Ok(f.value(anchor));
    };
    let sep = f.value(anchor).sep(0.0);
    let mut coords = vec![0.0; q * dim];
    for (k, w) in corners {
        if w == 0.0 {
            continue;
        }
        let y = f.slice(k);
        let perm = if k == anchor {
            (0..q).collect()
        } else {
            let m = match_neighbor(x, y, q, dim);
            if !(m.unique && m.max_disp < 0.5 * sep) {
                return Ok(f.value(anchor));
            }
            m.perm
        };
        for i in 0..q {
            for c in 0..dim {
                coords[i * dim + c] += w * y[perm[i] * dim + c];
            }
        }
    }
    QPoint::from_flat(q, dim, coords)
}

/// `f_{y,ρ}(x) = f(ρx + y) / √D_{y,f}(ρ)` sampled on `out_domain`.
pub fn blow_up(f: &QField, y: [f64; 2], rho: f64, out_domain: &GridDomain) -> Result<QField> {
    if !(rho > 0.0) {
        return Err(Error::InvalidInput("rho must be positive".into()));
    }
    let d = f.domain();
    if d.is_1d() != out_domain.is_1d() {
        return Err(Error::Mismatch("blow-up domain must have the dimension of the field".into()));
    }
    if !d.contains_ball(y, rho, 0.0) {
        return Err(Error::RegionOutsideDomain(format!("B_{rho}({y:?})")));
    }
    let energy = EnergyDensity::new(f).ball(y, rho);
    if !(energy > 0.0) {
        return Err(Error::ZeroLocalEnergy);
    }
    let scale = 1.0 / energy.sqrt();
    let c = out_domain.center();
    QField::from_fn(out_domain.clone(), f.q(), f.dim(), |x| {
        let p = [y[0] + rho * (x[0] - c[0]), y[1] + rho * (x[1] - c[1])];
        sample_field(f, p)?.scale(scale)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{dirichlet_energy, gen_branch_map};

    fn linear(cells: usize) -> QField {
        let d = GridDomain::disk([0.0, 0.0], 1.0, cells).unwrap();
        QField::from_fn(d, 1, 2, |z| QPoint::new(vec![z.to_vec()])).unwrap()
    }

    #[test]
    fn linear_map_has_frequency_one() {
        let f = linear(128);
        // Bilinear interpolation of |z|² overestimates H by about h²/(3r²).
        let c = freq_curve(&f, [0.0, 0.0], &[0.2, 0.3, 0.4]).unwrap();
        for v in c.column("I").unwrap() {
            assert!((v - 1.0).abs() < 1e-3, "{v}");
        }
    }

    #[test]
    fn zero_map_flags_undefined_frequency() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 16).unwrap();
        let f = QField::from_fn(d, 2, 1, |_| Ok(QPoint::zero(2, 1))).unwrap();
        let c = freq_curve(&f, [0.0, 0.0], &[0.3]).unwrap();
        assert!(c.column("I").unwrap()[0].is_nan());
        assert_eq!(c.column("locally_zero").unwrap()[0], 1.0);
    }

    #[test]
    fn radius_must_fit() {
        let f = linear(16);
        assert!(matches!(freq_curve(&f, [0.0, 0.0], &[0.99]), Err(Error::RegionOutsideDomain(_))));
    }

    #[test]
    fn blow_up_of_linear_map_has_unit_energy() {
        let f = linear(128);
        // The output grid extends past B₁ so the energy there is interior.
        let out = GridDomain::disk([0.0, 0.0], 1.25, 80).unwrap();
        let g = blow_up(&f, [0.1, -0.05], 0.5, &out).unwrap();
        let e = dirichlet_energy(&g, Some(([0.0, 0.0], 1.0))).unwrap();
        assert!((e - 1.0).abs() < 1e-3, "{e}");
    }

    #[test]
    fn branch_blow_ups_are_self_similar() {
        // Source spacing divides rho times the output spacing, so samples
        // land on nodes and only the energy normalization differs.
        let src = GridDomain::disk([0.0, 0.0], 1.0, 320).unwrap();
        let f = gen_branch_map(2, 1, &src).unwrap();
        let out = GridDomain::disk([0.0, 0.0], 1.0, 32).unwrap();
        let g: Vec<QField> = [0.4, 0.2, 0.1].iter().map(|&r| blow_up(&f, [0.0, 0.0], r, &out).unwrap()).collect();
        for a in 0..3 {
            for b in a + 1..3 {
                assert!(g[a].sup_dist(&g[b]).unwrap() <= 5.0 * out.h());
            }
        }
    }

    #[test]
    fn zero_energy_is_reported() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 16).unwrap();
        let f = QField::from_fn(d.clone(), 2, 1, |_| QPoint::new(vec![vec![1.0], vec![1.0]])).unwrap();
        assert!(matches!(blow_up(&f, [0.0, 0.0], 0.5, &d), Err(Error::ZeroLocalEnergy)));
    }
}
