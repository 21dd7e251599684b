//! The metric space of Q-points: unordered Q-tuples of vectors in R^n.
//!
//! A [`QPoint`] is stored canonically (points sorted lexicographically), so
//! two Q-points with the same multiset of vectors are equal and hash alike.
//! The distance between Q-points is the optimal-matching ℓ² distance
//!
//! ```text
//! G(T, S)² = min_σ Σ_i |p_i − s_σ(i)|²
//! ```
//!
//! computed exactly by [`assignment::solve`].

pub mod assignment;
mod split;

use std::cmp::Ordering;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use split::{atom_radii, split, SplitComponent, SplitResult};

/// An element of A_Q(R^n).
#[derive(Debug, Clone)]
pub struct QPoint {
    q: usize,
    dim: usize,
    coords: Vec<f64>,
}

/// One point of a support together with its multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportAtom {
    pub location: Vec<f64>,
    pub multiplicity: usize,
}

fn cmp_points(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Squared Euclidean distance, summed in coordinate order.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

/// Optimal matching between two Q-points given as raw `q * dim` slices
/// (any point order): `perm[i]` is the point of `b` matched to point `i` of
/// `a`.
pub fn match_slices(a: &[f64], b: &[f64], q: usize, dim: usize) -> assignment::Assignment {
    let mut cost = Vec::with_capacity(q * q);
    for i in 0..q {
        let pa = &a[i * dim..(i + 1) * dim];
        for j in 0..q {
            cost.push(sq_dist(pa, &b[j * dim..(j + 1) * dim]));
        }
    }
    assignment::solve(&cost, q)
}

/// `G²` between two Q-points given as raw slices.
pub fn dist_sq_slices(a: &[f64], b: &[f64], q: usize, dim: usize) -> f64 {
    if q == 1 {
        return sq_dist(a, b);
    }
    match_slices(a, b, q, dim).cost
}

impl QPoint {
    /// Builds a Q-point from `q * dim` coordinates laid out point by point.
    pub fn from_flat(q: usize, dim: usize, mut coords: Vec<f64>) -> Result<Self> {
        if q == 0 || dim == 0 {
            return Err(Error::InvalidQPoint("q and dim must be positive".into()));
        }
        if coords.len() != q * dim {
            return Err(Error::InvalidQPoint(format!(
                "expected {} coordinates for q={q}, dim={dim}, got {}",
                q * dim,
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidQPoint(format!("non-finite coordinate {bad}")));
        }
        for c in coords.iter_mut() {
            // -0.0 and 0.0 must canonicalize identically.
            if *c == 0.0 {
                *c = 0.0;
            }
        }
        canonicalize(&mut coords, dim);
        Ok(Self { q, dim, coords })
    }

    /// Builds a Q-point from a list of vectors.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let q = points.len();
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidQPoint("points have differing dimensions".into()));
        }
        Self::from_flat(q, dim, points.into_iter().flatten().collect())
    }

    /// `q⟦p⟧`.
    pub fn multiple(q: usize, p: &[f64]) -> Result<Self> {
        let mut coords = Vec::with_capacity(q * p.len());
        for _ in 0..q {
            coords.extend_from_slice(p);
        }
        Self::from_flat(q, p.len(), coords)
    }

    /// `q⟦0⟧` in R^dim.
    pub fn zero(q: usize, dim: usize) -> Self {
        Self::from_flat(q, dim, vec![0.0; q * dim]).expect("zero Q-point is valid")
    }

    /// Expands a list of atoms into a Q-point.
    pub fn from_atoms(atoms: &[SupportAtom]) -> Result<Self> {
        let dim = atoms.first().map(|a| a.location.len()).unwrap_or(0);
        let mut coords = Vec::new();
        let mut q = 0;
        for a in atoms {
            if a.location.len() != dim {
                return Err(Error::InvalidQPoint("atoms have differing dimensions".into()));
            }
            for _ in 0..a.multiplicity {
                coords.extend_from_slice(&a.location);
            }
            q += a.multiplicity;
        }
        Self::from_flat(q, dim, coords)
    }

    /// The sum `Σ T_k` of Q_k-points (concatenation of their supports).
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a QPoint>) -> Result<Self> {
        let mut coords = Vec::new();
        let mut q = 0;
        let mut dim = 0;
        for p in parts {
            if dim == 0 {
                dim = p.dim;
            } else if p.dim != dim {
                return Err(Error::Mismatch("parts have differing dimensions".into()));
            }
            q += p.q;
            coords.extend_from_slice(&p.coords);
        }
        Self::from_flat(q, dim, coords)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Canonically ordered coordinates, `q * dim` of them.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The `i`-th point in canonical order.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.points().map(|p| p.to_vec()).collect()
    }

    fn check_compatible(&self, other: &QPoint) -> Result<()> {
        if self.q != other.q || self.dim != other.dim {
            return Err(Error::Mismatch(format!(
                "(q={}, dim={}) vs (q={}, dim={})",
                self.q, self.dim, other.q, other.dim
            )));
        }
        Ok(())
    }

    /// Row-major `q × q` matrix of squared point distances.
    pub fn cost_matrix(&self, other: &QPoint) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.q * other.q);
        for a in self.points() {
            for b in other.points() {
                c.push(sq_dist(a, b));
            }
        }
        c
    }

    /// Optimal matching: `perm[i]` is the index in `other` matched to point
    /// `i` of `self`.
    pub fn matching(&self, other: &QPoint) -> Result<assignment::Assignment> {
        self.check_compatible(other)?;
        Ok(assignment::solve(&self.cost_matrix(other), self.q))
    }

    /// `G(self, other)²`.
    pub fn dist_sq(&self, other: &QPoint) -> Result<f64> {
        Ok(self.matching(other)?.cost)
    }

    /// `G(self, other)`.
    pub fn dist(&self, other: &QPoint) -> Result<f64> {
        Ok(self.dist_sq(other)?.sqrt())
    }

    /// `|T| = G(T, Q⟦0⟧)`.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        let mut s = 0.0;
        for p in self.points() {
            let mut n = 0.0;
            for x in p {
                n += x * x;
            }
            s += n;
        }
        s
    }

    /// Largest distance between two points of the support.
    pub fn diam(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.q {
            for j in (i + 1)..self.q {
                d = d.max(sq_dist(self.point(i), self.point(j)));
            }
        }
        d.sqrt()
    }

    /// Smallest distance between two points farther apart than `tol`;
    /// `+inf` when every pair lies within `tol`.
    pub fn sep(&self, tol: f64) -> f64 {
        let mut s = f64::INFINITY;
        for i in 0..self.q {
            for j in (i + 1)..self.q {
                let d = sq_dist(self.point(i), self.point(j)).sqrt();
                if d > tol && d < s {
                    s = d;
                }
            }
        }
        s
    }

    /// The average `η∘T`.
    pub fn eta(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for p in self.points() {
            for (mk, x) in m.iter_mut().zip(p) {
                *mk += x;
            }
        }
        for mk in m.iter_mut() {
            *mk /= self.q as f64;
        }
        m
    }

    /// `T ⊕ v` for `sign = +1`, `T ⊖ v` for `sign = -1`.
    pub fn translate(&self, v: &[f64], sign: f64) -> Result<Self> {
        if v.len() != self.dim {
            return Err(Error::Mismatch(format!(
                "translation of dimension {} applied to dim {}",
                v.len(),
                self.dim
            )));
        }
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(v).map(move |(x, y)| x + sign * y))
            .collect();
        Self::from_flat(self.q, self.dim, coords)
    }

    /// Multiplies every point by `lambda`.
    pub fn scale(&self, lambda: f64) -> Result<Self> {
        Self::from_flat(self.q, self.dim, self.coords.iter().map(|x| lambda * x).collect())
    }

    /// Single-linkage clusters of the points at threshold `tol`; each cluster
    /// is returned as the canonical indices of its members, clusters ordered
    /// by their first member.
    pub fn clusters(&self, tol: f64) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.q).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let tol_sq = tol * tol;
        for i in 0..self.q {
            for j in (i + 1)..self.q {
                if sq_dist(self.point(i), self.point(j)) <= tol_sq {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
                        parent[hi] = lo;
                    }
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut root_slot = vec![usize::MAX; self.q];
        for i in 0..self.q {
            let r = find(&mut parent, i);
            if root_slot[r] == usize::MAX {
                root_slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[root_slot[r]].push(i);
        }
        groups
    }

    /// The support as atoms: single-linkage clusters at `tol`, each placed
    /// at its first member in canonical order.
    pub fn support(&self, tol: f64) -> Vec<SupportAtom> {
        self.clusters(tol)
            .into_iter()
            .map(|members| SupportAtom {
                location: self.point(members[0]).to_vec(),
                multiplicity: members.len(),
            })
            .collect()
    }

    /// `card(spt(T))` at clustering threshold `tol`.
    pub fn card(&self, tol: f64) -> usize {
        self.clusters(tol).len()
    }

    /// Whether `p` is (exactly) one of the points of `self`.
    pub fn contains_point(&self, p: &[f64]) -> bool {
        self.points().any(|x| x == p)
    }
}

fn canonicalize(coords: &mut [f64], dim: usize) {
    let q = coords.len() / dim;
    if q <= 1 {
        return;
    }
    let mut pts: Vec<&[f64]> = coords.chunks_exact(dim).collect();
    if pts.windows(2).all(|w| cmp_points(w[0], w[1]) != Ordering::Greater) {
        return;
    }
    pts.sort_by(|a, b| cmp_points(a, b));
    let sorted: Vec<f64> = pts.into_iter().flatten().copied().collect();
    coords.copy_from_slice(&sorted);
}

impl PartialEq for QPoint {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q && self.dim == other.dim && self.coords == other.coords
    }
}

impl Eq for QPoint {}

impl Hash for QPoint {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.q.hash(state);
        self.dim.hash(state);
        for c in &self.coords {
            c.to_bits().hash(state);
        }
    }
}

#[derive(Serialize, Deserialize)]
struct QPointRepr {
    q: usize,
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl Serialize for QPoint {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        QPointRepr {
            q: self.q,
            dim: self.dim,
            points: self.to_vecs(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QPoint {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = QPointRepr::deserialize(deserializer)?;
        if repr.points.len() != repr.q || repr.points.iter().any(|p| p.len() != repr.dim) {
            return Err(serde::de::Error::custom("points do not match declared q/dim"));
        }
        QPoint::from_flat(repr.q, repr.dim, repr.points.into_iter().flatten().collect())
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp(points: &[&[f64]]) -> QPoint {
        QPoint::new(points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn equality_ignores_order() {
        let a = qp(&[&[1.0, 2.0], &[0.0, 5.0]]);
        let b = qp(&[&[0.0, 5.0], &[1.0, 2.0]]);
        assert_eq!(a, b);
        assert_eq!(qp(&[&[-0.0]]), qp(&[&[0.0]]));
    }

    #[test]
    fn rejects_invalid_input() {
        assert!(QPoint::from_flat(2, 1, vec![1.0]).is_err());
        assert!(QPoint::from_flat(1, 1, vec![f64::NAN]).is_err());
        assert!(QPoint::from_flat(0, 1, vec![]).is_err());
        let a = qp(&[&[0.0]]);
        let b = qp(&[&[0.0], &[1.0]]);
        assert!(a.dist(&b).is_err());
    }

    #[test]
    fn dist_examples() {
        let t = qp(&[&[0.3, -1.0], &[2.0, 2.0], &[0.0, 0.0]]);
        assert_eq!(t.dist(&t).unwrap(), 0.0);
        let a = qp(&[&[0.0, 0.0], &[2.0, 0.0]]);
        let b = qp(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert_eq!(a.dist(&b).unwrap(), 2f64.sqrt());
    }

    #[test]
    fn norm_examples() {
        assert_eq!(QPoint::zero(3, 2).norm(), 0.0);
        assert_eq!(qp(&[&[3.0, 0.0], &[0.0, 4.0]]).norm(), 5.0);
    }

    #[test]
    fn diam_and_sep() {
        let p = QPoint::multiple(3, &[1.0, -2.0]).unwrap();
        assert_eq!(p.diam(), 0.0);
        assert_eq!(p.sep(0.0), f64::INFINITY);
        let t = qp(&[&[0.0, 0.0], &[1.0, 0.0], &[5.0, 0.0]]);
        assert_eq!(t.diam(), 5.0);
        assert_eq!(t.sep(0.0), 1.0);
        assert_eq!(t.sep(1.5), 4.0);
    }

    #[test]
    fn eta_and_translate() {
        let t = qp(&[&[0.0, 0.0], &[2.0, 0.0]]);
        assert_eq!(t.eta(), vec![1.0, 0.0]);
        let v = [0.25, -3.0];
        let back = t.translate(&v, 1.0).unwrap().translate(&v, -1.0).unwrap();
        assert_eq!(back, t);
        let moved = t.translate(&v, 1.0).unwrap();
        assert_eq!(moved.eta(), vec![1.25, -3.0]);
    }

    #[test]
    fn support_examples() {
        let t = qp(&[&[1.0, 1.0], &[0.0, 2.0], &[1.0, 1.0]]);
        let s = t.support(0.0);
        assert_eq!(
            s,
            vec![
                SupportAtom {
                    location: vec![0.0, 2.0],
                    multiplicity: 1
                },
                SupportAtom {
                    location: vec![1.0, 1.0],
                    multiplicity: 2
                },
            ]
        );
        let z = QPoint::zero(4, 3).support(0.0);
        assert_eq!(z.len(), 1);
        assert_eq!(z[0].multiplicity, 4);
    }

    #[test]
    fn support_chains_single_linkage() {
        // 0 - 0.4 - 0.8 chain at tol 0.5 collapses, 5.0 stays separate
        let t = qp(&[&[0.0], &[0.4], &[0.8], &[5.0]]);
        let s = t.support(0.5);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].multiplicity, 3);
        assert_eq!(s[0].location, vec![0.0]);
    }

    #[test]
    fn json_roundtrip_is_canonical() {
        let t = qp(&[&[2.0, 0.1], &[-1.0, 3.0]]);
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.starts_with(r#"{"q":2,"dim":2,"points":[[-1.0,3.0]"#));
        let back: QPoint = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<QPoint>(r#"{"q":3,"dim":1,"points":[[1.0]]}"#).is_err());
    }
}
