//! Local splitting of a map near a point into averaged components plus
//! average-free parts.

use serde::Serialize;

use super::domain::GridDomain;
use super::field::QField;
use crate::aq::{dist_sq_slices, match_slices, QPoint};
use crate::error::{Error, Result};

/// One cluster of `f(x₀)` followed over the neighborhood.
#[derive(Debug, Clone)]
pub struct Component {
    /// Number of sheets `Q_k`.
    pub multiplicity: usize,
    /// `h_k = η∘f_k` per node of the sub-domain (zeros at inactive nodes).
    pub average: Vec<Vec<f64>>,
    /// `g_k = f_k ⊖ h_k`.
    pub g: QField,
}

/// `f = Σ_k h_k ⊕ g_k` on a disk of radius `r₀` about the node nearest
/// `x₀`, with `f̃ = Σ_k g_k`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub basepoint: [f64; 2],
    pub r0: f64,
    pub domain: GridDomain,
    pub components: Vec<Component>,
    pub f_tilde: QField,
    /// Map from sub-domain node index to the index in the input domain.
    pub source_index: Vec<Option<usize>>,
}

/// Summary of a decomposition for reports.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionSummary {
    pub basepoint: [f64; 2],
    pub r0: f64,
    pub multiplicities: Vec<usize>,
    pub reconstruction_error: f64,
    pub f_tilde_at_basepoint: f64,
    pub laplacian_residuals: Vec<f64>,
    pub average_free_error: f64,
}

impl Decomposition {
    /// `Σ_k h_k ⊕ g_k` on the sub-domain.
    pub fn reconstruct(&self) -> Result<QField> {
        let d = &self.domain;
        let q: usize = self.components.iter().map(|c| c.multiplicity).sum();
        let dim = self.f_tilde.dim();
        QField::from_fn_indexed(d.clone(), q, dim, |k| {
            let parts = self
                .components
                .iter()
                .map(|c| c.g.value(k).translate(&c.average[k], 1.0))
                .collect::<Result<Vec<QPoint>>>()?;
            QPoint::concat(&parts)
        })
    }

    /// Largest pointwise `G` between the reconstruction and `f`.
    pub fn reconstruction_error(&self, f: &QField) -> Result<f64> {
        let r = self.reconstruct()?;
        let d = &self.domain;
        Ok(d.active_indices()
            .map(|k| {
                let src = self.source_index[k].expect("sub-domain node maps into the input");
                dist_sq_slices(r.slice(k), f.slice(src), f.q(), f.dim()).sqrt()
            })
            .fold(0.0, f64::max))
    }

    /// `max |Δ_h h_k|` over sub-domain nodes with all lattice neighbors
    /// active, using the 5-point (3-point in 1-D) stencil.
    pub fn laplacian_residual(&self, k: usize) -> f64 {
        let d = &self.domain;
        let h2 = d.h() * d.h();
        let avg = &self.components[k].average;
        let mut worst = 0.0f64;
        for n in d.active_indices() {
            let mut nbrs = Vec::with_capacity(4);
            for axis in 0..d.axes() {
                nbrs.push(d.forward(n, axis));
                nbrs.push(d.backward(n, axis));
            }
            if nbrs.iter().any(|m| !m.is_some_and(|m| d.is_active(m))) {
                continue;
            }
            for c in 0..avg[n].len() {
                let s: f64 = nbrs.iter().map(|m| avg[m.unwrap()][c]).sum();
                worst = worst.max(((s - nbrs.len() as f64 * avg[n][c]) / h2).abs());
            }
        }
        worst
    }

    /// Largest `|η∘g_k|` over nodes and components.
    pub fn average_free_error(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.g.domain().active_indices().map(move |k| c.g.value(k).eta()))
            .map(|e| e.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn summary(&self, f: &QField) -> Result<DecompositionSummary> {
        let center = self.domain.index((0, 0)).expect("center node");
        Ok(DecompositionSummary {
            basepoint: self.basepoint,
            r0: self.r0,
            multiplicities: self.components.iter().map(|c| c.multiplicity).collect(),
            reconstruction_error: self.reconstruction_error(f)?,
            f_tilde_at_basepoint: self.f_tilde.value(center).norm(),
            laplacian_residuals: (0..self.components.len()).map(|k| self.laplacian_residual(k)).collect(),
            average_free_error: self.average_free_error(),
        })
    }
}

/// Splits `f` near the node nearest `x0` by the clusters of `T = f(x0)` at
/// clustering threshold `tol`. The radius `r₀ = k h` is the largest with
/// `B_{r₀}` inside the domain and `G(f(x), T) < sep(T)/16` on it; each sheet
/// follows the point of `T` it is matched to optimally.
pub fn decompose(f: &QField, x0: [f64; 2], tol: f64) -> Result<Decomposition> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let d = f.domain();
    let (q, dim, h) = (f.q(), f.dim(), d.h());
    let (bi, bj) = d.nearest_node(x0);
    let base = d
        .index((bi, bj))
        .filter(|&k| d.is_active(k))
        .ok_or_else(|| Error::RegionOutsideDomain(format!("basepoint {x0:?}")))?;
    let p0 = d.position(base);
    let t = f.value(base);
    let clusters = t.clusters(tol);
    let sep = t.sep(tol);
    if clusters.len() >= 2 && !(sep > 8.0 * tol) {
        return Err(Error::InvalidInput(format!(
            "sep(f(x0)) = {sep} must exceed 8 tol = {}",
            8.0 * tol
        )));
    }

    let threshold = sep / 16.0;
    let bad = d
        .active_indices()
        .filter(|&k| dist_sq_slices(f.slice(k), t.coords(), q, dim).sqrt() >= threshold)
        .map(|k| {
            let p = d.position(k);
            (p[0] - p0[0]).hypot(p[1] - p0[1])
        })
        .fold(f64::INFINITY, f64::min);
    let mut cells = 0usize;
    loop {
        let r = (cells + 1) as f64 * h;
        if r >= bad || !d.contains_ball(p0, r, 0.0) {
            break;
        }
        cells += 1;
    }
    if cells == 0 {
        return Err(Error::NoAdmissibleRadius(format!(
            "no radius k·h around {p0:?} keeps G(f, f(x0)) below sep/16"
        )));
    }
    let r0 = cells as f64 * h;
    let sub = if d.is_1d() {
        GridDomain::interval(p0[0], h, cells)?
    } else {
        GridDomain::disk(p0, r0, cells)?
    };
    let source_index: Vec<Option<usize>> = (0..sub.len())
        .map(|k| {
            sub.is_active(k).then(|| {
                let (i, j) = sub.node(k);
                d.index((i + bi, j + bj)).expect("sub-domain lies in the lattice")
            })
        })
        .collect();

    let mut cluster_of = vec![0usize; q];
    for (c, members) in clusters.iter().enumerate() {
        for &m in members {
            cluster_of[m] = c;
        }
    }
    let k_count = clusters.len();
    // parts[c][node] = sheets of f(node) matched into cluster c.
    let mut parts: Vec<Vec<Option<QPoint>>> = vec![vec![None; sub.len()]; k_count];
    for n in sub.active_indices() {
        let src = source_index[n].expect("active");
        let x = f.slice(src);
        let m = match_slices(t.coords(), x, q, dim);
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); k_count];
        for (i, &j) in m.perm.iter().enumerate() {
            buckets[cluster_of[i]].extend_from_slice(&x[j * dim..(j + 1) * dim]);
        }
        for (c, coords) in buckets.into_iter().enumerate() {
            parts[c][n] = Some(QPoint::from_flat(clusters[c].len(), dim, coords)?);
        }
    }

    let mut components = Vec::with_capacity(k_count);
    for (c, members) in clusters.iter().enumerate() {
        let qk = members.len();
        let average: Vec<Vec<f64>> = (0..sub.len())
            .map(|n| parts[c][n].as_ref().map_or_else(|| vec![0.0; dim], |p| p.eta()))
            .collect();
        let g = QField::from_fn_indexed(sub.clone(), qk, dim, |n| {
            parts[c][n].as_ref().expect("active").translate(&average[n], -1.0)
        })?;
        components.push(Component {
            multiplicity: qk,
            average,
            g,
        });
    }
    let f_tilde = QField::from_fn_indexed(sub.clone(), q, dim, |n| {
        let gs: Vec<QPoint> = components.iter().map(|c| c.g.value(n)).collect();
        QPoint::concat(&gs)
    })?;
    Ok(Decomposition {
        basepoint: p0,
        r0,
        domain: sub,
        components,
        f_tilde,
        source_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generators::{gen_branch_map, gen_remark_examples, RemarkExample};

    #[test]
    fn f4_splits_into_two_offset_copies() {
        let d = GridDomain::interval(0.0, 1e-3, 1000).unwrap();
        let f = gen_remark_examples(&RemarkExample::F4 { a: 100.0 }, &d).unwrap();
        let dec = decompose(&f, [0.0, 0.0], 1e-6).unwrap();
        assert_eq!(dec.components.len(), 2);
        assert!((dec.r0 - 1.0).abs() < 1e-12);
        assert!(dec.reconstruction_error(&f).unwrap() <= 1e-10);
        let center = dec.domain.index((0, 0)).unwrap();
        assert_eq!(dec.f_tilde.value(center), QPoint::zero(4, 1));
        for k in dec.domain.active_indices() {
            let a = dec.components[0].average[k][0].abs();
            assert!((a - 100.0).abs() < 1e-9);
            // f̃ collapses exactly where the four values form two pairs.
            let card_f = f.value(dec.source_index[k].unwrap()).card(1e-9);
            let card_t = dec.f_tilde.value(k).card(1e-9);
            assert_eq!(card_t == 1, card_f == 2);
        }
        assert!(dec.average_free_error() < 1e-12);
    }

    #[test]
    fn single_cluster_is_identity_with_average_removed() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 16).unwrap();
        let f = QField::from_fn(d, 2, 1, |z| QPoint::new(vec![vec![z[0]], vec![z[0] + 1e-9]])).unwrap();
        let dec = decompose(&f, [0.1, 0.0], 1e-6).unwrap();
        assert_eq!(dec.components.len(), 1);
        assert!(dec.reconstruction_error(&f).unwrap() <= 1e-10);
    }

    #[test]
    fn branch_plus_constant_recovers_components() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 64).unwrap();
        let b = gen_branch_map(2, 1, &d).unwrap();
        let f = b
            .map(3, 2, |_, v| QPoint::concat(&[v.clone(), QPoint::new(vec![vec![5.0, 0.0]]).unwrap()]))
            .unwrap();
        let dec = decompose(&f, [0.0, 0.0], 1e-6).unwrap();
        assert_eq!(dec.components.iter().map(|c| c.multiplicity).collect::<Vec<_>>().len(), 2);
        assert!(dec.reconstruction_error(&f).unwrap() <= 1e-10);
        for k in 0..2 {
            assert!(dec.laplacian_residual(k) <= 10.0 * d.h());
        }
    }

    #[test]
    fn tight_clusters_are_rejected() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 8).unwrap();
        let f = QField::from_fn(d, 2, 1, |_| QPoint::new(vec![vec![0.0], vec![1e-3]])).unwrap();
        assert!(decompose(&f, [0.0, 0.0], 2e-4).is_err());
    }
}
