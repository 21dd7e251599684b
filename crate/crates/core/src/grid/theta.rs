//! The cutoff-weighted energy `Θ_f(Ω, S, s) = s⁻² ∫_Ω φ(G(f, S)/s) |Df|²`.

use rayon::prelude::*;

use super::curve::CurveSeries;
use super::cutoff::phi;
use super::energy::{edge_scale, edge_target};
use super::field::QField;
use crate::aq::{dist_sq_slices, QPoint};
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

fn distances_to(f: &QField, s: &QPoint) -> Result<Vec<f64>> {
    if s.q() != f.q() || s.dim() != f.dim() {
        return Err(Error::Mismatch("S must share (q, dim) with the field".into()));
    }
    let d = f.domain();
    Ok((0..d.len())
        .into_par_iter()
        .map(|k| {
            if d.is_active(k) {
                dist_sq_slices(f.slice(k), s.coords(), f.q(), f.dim()).sqrt()
            } else {
                f64::INFINITY
            }
        })
        .collect())
}

/// Membership of each node in `Ω`: the closed ball `region` (which must lie
/// in the domain) or the whole grid when `None`.
fn region_mask(f: &QField, region: Option<([f64; 2], f64)>) -> Result<Vec<bool>> {
    let d = f.domain();
    if let Some((c, r)) = region {
        if !d.contains_ball(c, r, 0.0) {
            return Err(Error::RegionOutsideDomain(format!("B_{r}({c:?})")));
        }
    }
    Ok((0..d.len())
        .map(|k| {
            d.is_active(k)
                && region.is_none_or(|(c, r)| {
                    let p = d.position(k);
                    (p[0] - c[0]).hypot(p[1] - c[1]) <= r
                })
        })
        .collect())
}

/// Largest admissible radius for the monotonicity of `Θ` on `Ω`:
/// `min(¼ sep(S), G(f(y), S))` over nodes `y` on the grid boundary or
/// outside `Ω`, so that `{G(f, S) < r_S}` stays inside `Ω`.
pub fn theta_admissible_radius(f: &QField, region: Option<([f64; 2], f64)>, s: &QPoint) -> Result<f64> {
    let dist = distances_to(f, s)?;
    let inside = region_mask(f, region)?;
    let d = f.domain();
    let outside = d
        .active_indices()
        .filter(|&k| !inside[k] || d.kind(k) == super::domain::NodeKind::Boundary)
        .map(|k| dist[k])
        .fold(f64::INFINITY, f64::min);
    Ok((0.25 * s.sep(0.0)).min(outside))
}

/// `Θ_f(Ω, S, s)` for every `s` in `s_list`, with `Ω` the closed ball
/// `region` or the whole grid. Edges count when both endpoints lie in `Ω`;
/// each is weighted by the mean of the cutoff at its endpoints.
pub fn theta_curve(f: &QField, region: Option<([f64; 2], f64)>, s: &QPoint, s_list: &[f64]) -> Result<CurveSeries> {
    if s_list.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput("s values must be positive".into()));
    }
    let d = f.domain();
    let dist = distances_to(f, s)?;
    let inside = region_mask(f, region)?;
    let scale = edge_scale(d);
    let mut edges: Vec<(f64, f64, f64)> = Vec::new();
    for axis in 0..d.axes() {
        for k in 0..d.len() {
            if let Some(n) = edge_target(d, k, axis).filter(|&n| inside[k] && inside[n]) {
                let g2 = dist_sq_slices(f.slice(k), f.slice(n), f.q(), f.dim()) * scale;
                if g2 > 0.0 {
                    edges.push((dist[k], dist[n], g2));
                }
            }
        }
    }
    let values: Vec<f64> = s_list
        .par_iter()
        .map(|&sv| {
            let terms: Vec<f64> = edges
                .iter()
                .filter(|(a, b, _)| a.min(*b) < sv)
                .map(|(a, b, g2)| 0.5 * (phi(a / sv) + phi(b / sv)) * g2)
                .collect();
            pairwise_sum(&terms) / (sv * sv)
        })
        .collect();
    let mut c = CurveSeries::new("s", s_list.to_vec())?;
    c.push_column("theta", values)?;
    Ok(c.with_meta("quantity", "s^-2 * integral of phi(G(f,S)/s) |Df|^2"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDomain;

    #[test]
    fn constant_target_gives_zero() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 16).unwrap();
        let s = QPoint::new(vec![vec![1.0], vec![2.0]]).unwrap();
        let f = QField::from_fn(d, 2, 1, |_| Ok(s.clone())).unwrap();
        let c = theta_curve(&f, None, &s, &[0.1, 0.2]).unwrap();
        assert_eq!(c.column("theta").unwrap(), &[0.0, 0.0]);
    }

    #[test]
    fn linear_conformal_map_limit() {
        // f(z) = ⟦z⟧ is conformal: Θ → 2∫φ for s below the boundary distance.
        let d = GridDomain::disk([0.0, 0.0], 1.0, 128).unwrap();
        let f = QField::from_fn(d, 1, 2, |z| QPoint::new(vec![z.to_vec()])).unwrap();
        let s = QPoint::new(vec![vec![0.0, 0.0]]).unwrap();
        let c = theta_curve(&f, None, &s, &[0.2, 0.4]).unwrap();
        let target = 2.0 * crate::grid::cutoff::planar_integral();
        for v in c.column("theta").unwrap() {
            assert!((v - target).abs() < 0.02 * target, "{v} vs {target}");
        }
    }
}
