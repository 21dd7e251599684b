use serde::Serialize;

use super::{sq_dist, QPoint, SupportAtom};
use crate::error::{Error, Result};

/// The points of `T` that fell into one projection ball.
#[derive(Debug, Clone, Serialize)]
pub struct SplitComponent {
    pub target: SupportAtom,
    /// Canonical indices into `T` of the points in this ball.
    pub indices: Vec<usize>,
    /// `T ⌞ B_{ε r_i}(s_i)`; `None` when the ball holds no point.
    pub part: Option<QPoint>,
}

/// Decomposition of `T` over the projection neighborhoods of `S`.
#[derive(Debug, Clone, Serialize)]
pub struct SplitResult {
    pub components: Vec<SplitComponent>,
    pub epsilon: f64,
    /// Every ball holds exactly as many points as its atom's multiplicity.
    pub balanced: bool,
}

/// Radii `r_i(S)`: distance from each atom to the nearest other atom,
/// `+inf` for a single atom.
pub fn atom_radii(atoms: &[SupportAtom]) -> Vec<f64> {
    atoms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            atoms
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| sq_dist(&a.location, &b.location).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Splits `t` over the balls `B_{eps·r_i}(s_i)` of the atoms of `S`.
pub fn split(atoms: &[SupportAtom], t: &QPoint, eps: f64) -> Result<SplitResult> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::ParameterOutOfRange(format!("split needs 0 < eps < 1/4, got {eps}")));
    }
    if atoms.is_empty() {
        return Err(Error::InvalidInput("split needs at least one atom".into()));
    }
    if atoms.iter().any(|a| a.location.len() != t.dim()) {
        return Err(Error::Mismatch("atom dimension differs from T".into()));
    }
    let radii = atom_radii(atoms);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); atoms.len()];
    for (idx, p) in t.points().enumerate() {
        let home = atoms.iter().zip(&radii).position(|(a, r)| {
            let d = sq_dist(p, &a.location).sqrt();
            d < eps * r
        });
        match home {
            Some(k) => buckets[k].push(idx),
            None => return Err(Error::NotInNeighborhood { index: idx }),
        }
    }
    let mut balanced = true;
    let mut components = Vec::with_capacity(atoms.len());
    for (atom, indices) in atoms.iter().zip(buckets) {
        balanced &= indices.len() == atom.multiplicity;
        let part = if indices.is_empty() {
            None
        } else {
            let coords = indices.iter().flat_map(|&i| t.point(i).iter().copied()).collect();
            Some(QPoint::from_flat(indices.len(), t.dim(), coords)?)
        };
        components.push(SplitComponent {
            target: atom.clone(),
            indices,
            part,
        });
    }
    Ok(SplitResult {
        components,
        epsilon: eps,
        balanced,
    })
}

impl SplitComponent {
    /// `G(T_i, Q_i⟦s_i⟧)²` with `Q_i` the number of points in the ball.
    pub fn dist_sq_to_target(&self) -> f64 {
        match &self.part {
            Some(p) => p.points().map(|x| sq_dist(x, &self.target.location)).sum(),
            None => 0.0,
        }
    }
}

impl SplitResult {
    /// `P_S(T)`: every point moved to the center of its ball.
    pub fn retraction(&self) -> Result<QPoint> {
        let q: usize = self.components.iter().map(|c| c.indices.len()).sum();
        let dim = self.components[0].target.location.len();
        let mut coords = Vec::with_capacity(q * dim);
        for c in &self.components {
            for _ in &c.indices {
                coords.extend_from_slice(&c.target.location);
            }
        }
        QPoint::from_flat(q, dim, coords)
    }

    /// `Σ_i G²(T_i, Q_i⟦s_i⟧)`.
    pub fn split_sum_sq(&self) -> f64 {
        self.components.iter().map(|c| c.dist_sq_to_target()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(p: &[f64], m: usize) -> SupportAtom {
        SupportAtom {
            location: p.to_vec(),
            multiplicity: m,
        }
    }

    #[test]
    fn self_split_is_balanced_and_exact() {
        let s = QPoint::new(vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![3.0, 1.0]]).unwrap();
        let atoms = s.support(0.0);
        let r = split(&atoms, &s, 0.2).unwrap();
        assert!(r.balanced);
        for c in &r.components {
            assert_eq!(c.dist_sq_to_target(), 0.0);
            assert_eq!(c.indices.len(), c.target.multiplicity);
        }
        assert_eq!(r.retraction().unwrap(), s);
    }

    #[test]
    fn two_singletons() {
        let atoms = vec![atom(&[0.0, 0.0], 1), atom(&[10.0, 0.0], 1)];
        let t = QPoint::new(vec![vec![0.1, 0.0], vec![9.9, 0.0]]).unwrap();
        let r = split(&atoms, &t, 0.125).unwrap();
        assert!(r.balanced);
        assert_eq!(r.components[0].indices, vec![0]);
        assert_eq!(r.components[1].indices, vec![1]);
    }

    #[test]
    fn unbalanced_and_outside() {
        let atoms = vec![atom(&[0.0], 1), atom(&[10.0], 1)];
        let t = QPoint::new(vec![vec![0.1], vec![0.2]]).unwrap();
        let r = split(&atoms, &t, 0.125).unwrap();
        assert!(!r.balanced);
        assert!(r.components[1].part.is_none());
        let far = QPoint::new(vec![vec![0.1], vec![5.0]]).unwrap();
        assert!(matches!(split(&atoms, &far, 0.125), Err(Error::NotInNeighborhood { index: 1 })));
        assert!(split(&atoms, &t, 0.3).is_err());
    }
}
