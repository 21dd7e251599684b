//! Per-sheet difference quotients from optimal matchings to the forward
//! neighbors.

use super::field::QField;
use crate::aq::{assignment, sq_dist, QPoint};
use crate::error::{Error, Result};

/// Relative tolerance under which two matchings are considered tied.
pub const MATCH_TOL: f64 = 1e-9;

/// A selection of the sheets at a node with forward difference quotients.
#[derive(Debug, Clone)]
pub struct LocalFrame {
    pub node: usize,
    /// The values at the node, in canonical order.
    pub selection: Vec<Vec<f64>>,
    /// `d[a][i] = (f(x + h e_a)_{σ_a(i)} − f(x)_i) / h`.
    pub d: Vec<Vec<Vec<f64>>>,
    /// Both matchings are unique and no matched displacement reaches half
    /// the separation of `f(x)`.
    pub valid: bool,
}

impl LocalFrame {
    pub fn d1(&self) -> &[Vec<f64>] {
        &self.d[0]
    }

    pub fn d2(&self) -> Option<&[Vec<f64>]> {
        self.d.get(1).map(|v| v.as_slice())
    }

    /// `Σ_a Σ_i |d_a,i|²`.
    pub fn density(&self) -> f64 {
        self.d.iter().flatten().map(|v| v.iter().map(|x| x * x).sum::<f64>()).sum()
    }
}

/// Result of matching the node value to one neighbor.
pub(crate) struct Matched {
    pub perm: Vec<usize>,
    pub unique: bool,
    pub max_disp: f64,
}

pub(crate) fn match_neighbor(x: &[f64], y: &[f64], q: usize, dim: usize) -> Matched {
    let mut cost = Vec::with_capacity(q * q);
    for i in 0..q {
        for j in 0..q {
            cost.push(sq_dist(&x[i * dim..(i + 1) * dim], &y[j * dim..(j + 1) * dim]));
        }
    }
    let best = assignment::solve(&cost, q);
    let second = assignment::second_best_cost(&cost, q, &best.perm);
    let scale = QPoint::from_flat(q, dim, x.to_vec())
        .map(|p| p.diam())
        .unwrap_or(0.0)
        .max(QPoint::from_flat(q, dim, y.to_vec()).map(|p| p.diam()).unwrap_or(0.0))
        .max(best.cost.sqrt());
    let unique = second.sqrt() - best.cost.sqrt() > MATCH_TOL * scale;
    let max_disp = (0..q).map(|i| cost[i * q + best.perm[i]]).fold(0.0f64, f64::max).sqrt();
    Matched {
        perm: best.perm,
        unique,
        max_disp,
    }
}

/// Builds the frame at `node`; needs active forward neighbors along every
/// axis of the grid.
pub fn local_frame(f: &QField, node: usize) -> Result<LocalFrame> {
    let d = f.domain();
    let (q, dim, h) = (f.q(), f.dim(), d.h());
    if !d.is_active(node) {
        return Err(Error::InvalidInput(format!("node {node} is outside the domain")));
    }
    let x = f.slice(node);
    let sep = f.value(node).sep(0.0);
    let mut valid = true;
    let mut diffs = Vec::with_capacity(d.axes());
    for axis in 0..d.axes() {
        let n = super::energy::edge_target(d, node, axis).ok_or_else(|| {
            Error::InvalidInput(format!("node {node} has no active forward neighbor along axis {axis}"))
        })?;
        let y = f.slice(n);
        let m = match_neighbor(x, y, q, dim);
        valid &= m.unique && m.max_disp < 0.5 * sep;
        diffs.push(
            (0..q)
                .map(|i| {
                    let j = m.perm[i];
                    (0..dim).map(|c| (y[j * dim + c] - x[i * dim + c]) / h).collect()
                })
                .collect(),
        );
    }
    Ok(LocalFrame {
        node,
        selection: x.chunks_exact(dim).map(|p| p.to_vec()).collect(),
        d: diffs,
        valid,
    })
}

/// Frames at every node with active forward neighbors.
pub fn all_frames(f: &QField) -> Vec<Option<LocalFrame>> {
    use rayon::prelude::*;
    (0..f.domain().len())
        .into_par_iter()
        .map(|k| local_frame(f, k).ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::energy::EdgeEnergies;
    use crate::grid::{gen_branch_map, GridDomain};

    #[test]
    fn single_valued_frames_are_forward_differences() {
        let d = GridDomain::square([0.0, 0.0], 0.1, 5).unwrap();
        let f = QField::from_fn(d.clone(), 1, 1, |x| QPoint::new(vec![vec![x[0] * x[0] + 3.0 * x[1]]])).unwrap();
        let k = d.index((1, 2)).unwrap();
        let fr = local_frame(&f, k).unwrap();
        assert!(fr.valid);
        let x: f64 = 0.1;
        assert!((fr.d1()[0][0] - ((x + 0.1).powi(2) - x * x) / 0.1).abs() < 1e-12);
        assert!((fr.d2().unwrap()[0][0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn branch_frames_agree_with_edge_energy() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 32).unwrap();
        let f = gen_branch_map(2, 1, &d).unwrap();
        let edges = EdgeEnergies::new(&f);
        let h2 = d.h() * d.h();
        let mut checked = 0;
        for k in d.interior_indices() {
            let fr = local_frame(&f, k).unwrap();
            if !fr.valid {
                continue;
            }
            let g = edges.g2[0][k].unwrap() + edges.g2[1][k].unwrap();
            assert!((fr.density() * h2 - g).abs() <= 1e-9 * g.max(1e-300));
            checked += 1;
        }
        assert!(checked > 3000);
        let origin = d.index((0, 0)).unwrap();
        assert!(!local_frame(&f, origin).unwrap().valid);
    }
}
