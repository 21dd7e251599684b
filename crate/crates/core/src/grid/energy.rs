//! Discrete Dirichlet energy built from edge-wise `G²`.
//!
//! Every lattice edge `(x, x + h e_a)` with both endpoints active carries
//! `G(f(x), f(x + h e_a))²`. In 2-D this is the energy density
//! `|∂_a f|² ≈ G²/h²` times the area `h²` of the edge's dual cell (the
//! `h × h` square centered at the edge midpoint); in 1-D the dual cell has
//! length `h` and the contribution is `G²/h`. Ball integrals weight each
//! dual cell by the fraction of it covered by the ball.

use rayon::prelude::*;

use super::domain::GridDomain;
use super::field::QField;
use crate::aq::dist_sq_slices;
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Horizontal strips used to integrate the ball/cell overlap.
const STRIPS: usize = 16;

/// Raw `G²` of every forward edge; `None` where an endpoint is inactive.
#[derive(Debug, Clone)]
pub struct EdgeEnergies {
    /// `g2[axis][k]` for the edge from node `k` in direction `e_axis`.
    pub g2: Vec<Vec<Option<f64>>>,
}

impl EdgeEnergies {
    pub fn new(f: &QField) -> Self {
        let d = f.domain();
        let (q, dim) = (f.q(), f.dim());
        let g2 = (0..d.axes())
            .map(|a| {
                (0..d.len())
                    .into_par_iter()
                    .map(|k| {
                        let n = edge_target(d, k, a)?;
                        Some(dist_sq_slices(f.slice(k), f.slice(n), q, dim))
                    })
                    .collect()
            })
            .collect();
        Self { g2 }
    }
}

/// Index of the other endpoint of the forward edge at `k`, when both
/// endpoints are active.
pub fn edge_target(d: &GridDomain, k: usize, axis: usize) -> Option<usize> {
    if !d.is_active(k) {
        return None;
    }
    let n = d.forward(k, axis)?;
    d.is_active(n).then_some(n)
}

/// Scale turning an edge `G²` into its energy contribution.
pub fn edge_scale(d: &GridDomain) -> f64 {
    if d.is_1d() {
        1.0 / d.h()
    } else {
        1.0
    }
}

/// Edge energy contributions arranged for fast ball integrals.
#[derive(Debug, Clone)]
pub struct EnergyDensity {
    domain: GridDomain,
    /// Contribution of each forward edge (zero when absent).
    contrib: Vec<Vec<f64>>,
    /// Per-row prefix sums of `contrib`, `nx + 1` entries per row.
    prefix: Vec<Vec<f64>>,
}

impl EnergyDensity {
    pub fn new(f: &QField) -> Self {
        Self::from_edges(f.domain(), &EdgeEnergies::new(f))
    }

    pub fn from_edges(d: &GridDomain, edges: &EdgeEnergies) -> Self {
        let scale = edge_scale(d);
        let nx = d.nx();
        let contrib: Vec<Vec<f64>> = edges
            .g2
            .iter()
            .map(|g| g.iter().map(|e| e.map_or(0.0, |v| v * scale)).collect())
            .collect();
        let prefix = contrib
            .iter()
            .map(|c| {
                let mut p = Vec::with_capacity(d.ny() * (nx + 1));
                for row in c.chunks_exact(nx) {
                    let mut s = 0.0;
                    p.push(0.0);
                    for v in row {
                        s += v;
                        p.push(s);
                    }
                }
                p
            })
            .collect();
        Self {
            domain: d.clone(),
            contrib,
            prefix,
        }
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    /// Contribution of the forward edge at node `k` along `axis`.
    pub fn edge(&self, axis: usize, k: usize) -> f64 {
        self.contrib[axis][k]
    }

    /// Total energy over the whole grid.
    pub fn total(&self) -> f64 {
        let all: Vec<f64> = self.contrib.iter().flatten().copied().collect();
        pairwise_sum(&all)
    }

    /// Node-centered density `Σ_a (contribution of the forward edge along a)
    /// / h^m` used for pointwise integrability diagnostics.
    pub fn node_density(&self, k: usize) -> f64 {
        let h = self.domain.h();
        let cell = if self.domain.is_1d() { h } else { h * h };
        self.contrib.iter().map(|c| c[k]).sum::<f64>() / cell
    }

    /// `∫_{B_r(c)} |Df|²` with fractional dual-cell weights.
    pub fn ball(&self, c: [f64; 2], r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let d = &self.domain;
        let h = d.h();
        let center = d.center();
        let mut parts = Vec::new();
        for axis in 0..d.axes() {
            // Midpoint offset of this axis's edges relative to their node.
            let (ox, oy) = if axis == 0 { (0.5, 0.0) } else { (0.0, 0.5) };
            let nx = d.nx() as i64;
            let (n, m) = (d.n_half() as i64, d.ny_half() as i64);
            let contrib = &self.contrib[axis];
            let prefix = &self.prefix[axis];
            let j_range = if d.is_1d() {
                0..=0
            } else {
                let lo = (((c[1] - r - center[1]) / h - oy - 1.0).floor() as i64).max(-m);
                let hi = (((c[1] + r - center[1]) / h - oy + 1.0).ceil() as i64).min(m);
                lo..=hi
            };
            for j in j_range {
                let row = ((j + m) * nx) as usize;
                let ym = center[1] + h * (j as f64 + oy);
                // Exact chord overlap per strip; in 1-D a single exact strip.
                let strips = if d.is_1d() { 1 } else { STRIPS };
                let half_w: Vec<Option<f64>> = (0..strips)
                    .map(|s| {
                        if d.is_1d() {
                            return Some(r);
                        }
                        let ys = ym - 0.5 * h + h * (s as f64 + 0.5) / strips as f64;
                        let dy = ys - c[1];
                        (dy.abs() < r).then(|| (r * r - dy * dy).sqrt())
                    })
                    .collect();
                let w_out = half_w.iter().flatten().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                if w_out == f64::NEG_INFINITY {
                    continue;
                }
                let w_in = if half_w.iter().all(|w| w.is_some()) {
                    half_w.iter().flatten().fold(f64::INFINITY, |a, &b| a.min(b))
                } else {
                    f64::NEG_INFINITY
                };
                // Cells with x-span [xm − h/2, xm + h/2], xm = x(i) + ox h.
                let to_i = |x: f64| (x - center[0]) / h - ox;
                let i_lo = (to_i(c[0] - w_out - 0.5 * h).floor() as i64).max(-n);
                let i_hi = (to_i(c[0] + w_out + 0.5 * h).ceil() as i64).min(n);
                if i_lo > i_hi {
                    continue;
                }
                let (mut in_lo, mut in_hi) = (i64::MAX, i64::MIN);
                if w_in > 0.5 * h {
                    in_lo = (to_i(c[0] - w_in + 0.5 * h).ceil() as i64).max(i_lo);
                    in_hi = (to_i(c[0] + w_in - 0.5 * h).floor() as i64).min(i_hi);
                }
                if in_lo <= in_hi {
                    let a = (in_lo + n) as usize;
                    let b = (in_hi + n) as usize;
                    let row_p = ((j + m) * (nx + 1)) as usize;
                    parts.push(prefix[row_p + b + 1] - prefix[row_p + a]);
                }
                for i in i_lo..=i_hi {
                    if in_lo <= in_hi && i >= in_lo && i <= in_hi {
                        continue;
                    }
                    let k = row + (i + n) as usize;
                    let v = contrib[k];
                    if v == 0.0 {
                        continue;
                    }
                    let xm = center[0] + h * (i as f64 + ox);
                    let (x0, x1) = (xm - 0.5 * h, xm + 0.5 * h);
                    let mut covered = 0.0;
                    for w in half_w.iter().flatten() {
                        let lo = x0.max(c[0] - w);
                        let hi = x1.min(c[0] + w);
                        if hi > lo {
                            covered += hi - lo;
                        }
                    }
                    let frac = covered / (h * strips as f64);
                    if frac > 0.0 {
                        parts.push(v * frac);
                    }
                }
            }
        }
        pairwise_sum(&parts)
    }
}

/// Discrete Dirichlet energy of `f`, over the whole grid or over the disk
/// `region = (center, radius)`.
pub fn dirichlet_energy(f: &QField, region: Option<([f64; 2], f64)>) -> Result<f64> {
    let dens = EnergyDensity::new(f);
    match region {
        None => Ok(dens.total()),
        Some((c, r)) => {
            if !f.domain().contains_ball(c, r, 0.0) {
                return Err(Error::RegionOutsideDomain(format!(
                    "ball of radius {r} at {c:?} leaves the grid"
                )));
            }
            Ok(dens.ball(c, r))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aq::QPoint;

    #[test]
    fn constant_field_has_zero_energy() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 16).unwrap();
        let f = QField::from_fn(d, 2, 3, |_| QPoint::new(vec![vec![1.0, 2.0, 3.0], vec![0.0, 0.0, 0.0]]))
            .unwrap();
        assert_eq!(dirichlet_energy(&f, None).unwrap(), 0.0);
        assert_eq!(dirichlet_energy(&f, Some(([0.0, 0.0], 0.5))).unwrap(), 0.0);
    }

    #[test]
    fn affine_field_on_square_is_exact() {
        // f(x) = Ax on [−1, 1]², A = [[1, 2], [−3, 0.5]]; |A|² = 14.25.
        let d = GridDomain::square([0.0, 0.0], 1.0 / 16.0, 16).unwrap();
        let f = QField::from_fn(d.clone(), 1, 2, |x| {
            QPoint::new(vec![vec![x[0] + 2.0 * x[1], -3.0 * x[0] + 0.5 * x[1]]])
        })
        .unwrap();
        // Edges along e1 cover [−1, 1] × [−1, 1] in x-extent 2 and 33 rows
        // of height h, so the exact sum is the integral over the dual cells.
        let e = dirichlet_energy(&f, None).unwrap();
        let rows = d.ny() as f64 * d.h();
        let expected = 10.0 * 2.0 * rows + 4.25 * 2.0 * rows;
        assert!((e - expected).abs() < 1e-10);
    }

    #[test]
    fn ball_weights_cover_area() {
        // A field with unit density along e1 only: G² = h² per edge.
        let d = GridDomain::square([0.0, 0.0], 1.0 / 32.0, 64).unwrap();
        let f = QField::from_fn(d, 1, 1, |x| QPoint::new(vec![vec![x[0]]])).unwrap();
        let dens = EnergyDensity::new(&f);
        for &r in &[0.1, 0.37, 0.5, 1.2] {
            let e = dens.ball([0.013, -0.21], r);
            let area = std::f64::consts::PI * r * r;
            assert!((e - area).abs() < 2e-4 * area.max(0.1), "r={r}: {e} vs {area}");
        }
    }

    #[test]
    fn one_dimensional_energy() {
        let d = GridDomain::interval(0.0, 0.01, 100).unwrap();
        let f = QField::from_fn(d, 1, 1, |x| QPoint::new(vec![vec![3.0 * x[0]]])).unwrap();
        let e = dirichlet_energy(&f, None).unwrap();
        assert!((e - 18.0).abs() < 1e-10);
        let part = dirichlet_energy(&f, Some(([0.1, 0.0], 0.25))).unwrap();
        assert!((part - 4.5).abs() < 1e-10);
    }

    #[test]
    fn region_must_fit() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 8).unwrap();
        let f = QField::from_fn(d, 1, 1, |x| QPoint::new(vec![vec![x[0]]])).unwrap();
        assert!(matches!(
            dirichlet_energy(&f, Some(([0.5, 0.0], 0.6))),
            Err(Error::RegionOutsideDomain(_))
        ));
    }
}
