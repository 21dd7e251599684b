use serde::Serialize;

use super::beta::{beta, LogValue};
use crate::aq::{sq_dist, QPoint};
use crate::error::{Error, Result};

/// A coarsening `S` of `T` together with the checked inequalities
///
/// * `β(ε,Q)·diam(T) ≤ sep(S) < ∞`
/// * `G(S, T) ≤ ε·sep(S)`
/// * `spt(S) ⊂ spt(T)`
#[derive(Debug, Clone, Serialize)]
pub struct SplitCertificate {
    pub s: QPoint,
    pub eps: f64,
    pub beta: LogValue,
    pub diam_t: f64,
    pub sep_s: f64,
    pub dist_st: f64,
    /// `sep(S) − β·diam(T)` in doubles (β may underflow to zero here).
    pub slack_sep1: f64,
    /// `ln sep(S) − ln β − ln diam(T)`; the authoritative check.
    pub log_margin_sep1: f64,
    /// `ε·sep(S) − G(S, T)`.
    pub slack_sep2: f64,
    pub support_contained: bool,
    /// Number of dendrogram merges applied to obtain the clusters of `S`.
    pub level: usize,
}

impl SplitCertificate {
    pub fn is_valid(&self) -> bool {
        self.sep_s.is_finite()
            && self.log_margin_sep1 >= 0.0
            && self.slack_sep2 >= 0.0
            && self.support_contained
    }

    pub fn min_slack(&self) -> f64 {
        self.log_margin_sep1.min(self.slack_sep2)
    }
}

/// Single-linkage merge edges `(distance, i, j)` of the points of `t`, in
/// merge order (ties broken by index pair).
fn dendrogram_edges(t: &QPoint) -> Vec<(f64, usize, usize)> {
    let q = t.q();
    let mut pairs = Vec::with_capacity(q * (q - 1) / 2);
    for i in 0..q {
        for j in (i + 1)..q {
            pairs.push((sq_dist(t.point(i), t.point(j)), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut parent: Vec<usize> = (0..q).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut edges = Vec::with_capacity(q - 1);
    for (d2, i, j) in pairs {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
            edges.push((d2.sqrt(), i, j));
            if edges.len() == q - 1 {
                break;
            }
        }
    }
    edges
}

/// Clusters after applying the first `level` merges; each cluster lists
/// canonical indices in increasing order, clusters ordered by first member.
fn clusters_at(q: usize, edges: &[(f64, usize, usize)], level: usize) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..q).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            x = parent[x];
        }
        x
    }
    for &(_, i, j) in &edges[..level] {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        parent[ri.max(rj)] = ri.min(rj);
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; q];
    for i in 0..q {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = out.len();
            out.push(Vec::new());
        }
        out[slot[r]].push(i);
    }
    out
}

fn max_cluster_diam(t: &QPoint, clusters: &[Vec<usize>]) -> f64 {
    let mut d = 0.0f64;
    for c in clusters {
        for (a, &i) in c.iter().enumerate() {
            for &j in &c[a + 1..] {
                d = d.max(sq_dist(t.point(i), t.point(j)));
            }
        }
    }
    d.sqrt()
}

/// Splits `T` into well separated clusters.
///
/// The single-linkage dendrogram of `T` is cut at the coarsest level (at
/// least two clusters) whose external separation `s` and largest cluster
/// diameter `δ` satisfy `s > 0` and `s ≥ max(3, √Q)/ε · δ`. Such a level
/// always exists: once the zero-length merges are applied, `δ = 0`. `S`
/// carries each cluster's cardinality at its first member in canonical
/// order.
pub fn split_point(t: &QPoint, eps: f64) -> Result<SplitCertificate> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "split_point needs 0 < eps < 1, got {eps}"
        )));
    }
    let diam_t = t.diam();
    if diam_t == 0.0 {
        return Err(Error::Degenerate);
    }
    let q = t.q();
    let edges = dendrogram_edges(t);
    let gap = (q as f64).sqrt().max(3.0) / eps;

    let mut chosen = None;
    for level in (0..q - 1).rev() {
        let clusters = clusters_at(q, &edges, level);
        let s = edges[level].0;
        let delta = max_cluster_diam(t, &clusters);
        if s > 0.0 && s >= gap * delta {
            chosen = Some((level, clusters));
            break;
        }
    }
    let (level, clusters) = chosen
        .ok_or_else(|| Error::CertificateFailed("no admissible dendrogram level".into()))?;

    let mut coords = Vec::with_capacity(q * t.dim());
    for c in &clusters {
        let rep = t.point(c[0]);
        for _ in c {
            coords.extend_from_slice(rep);
        }
    }
    let s = QPoint::from_flat(q, t.dim(), coords)?;
    let b = beta(eps, q)?;
    let sep_s = s.sep(0.0);
    let dist_st = s.dist(t)?;
    let log_margin_sep1 = sep_s.ln() - b.ln - diam_t.ln();
    let support_contained = s.points().all(|p| t.contains_point(p));
    let cert = SplitCertificate {
        slack_sep1: sep_s - b.value() * diam_t,
        log_margin_sep1,
        slack_sep2: eps * sep_s - dist_st,
        s,
        eps,
        beta: b,
        diam_t,
        sep_s,
        dist_st,
        support_contained,
        level,
    };
    if !cert.is_valid() {
        return Err(Error::CertificateFailed(format!(
            "split_point certificate violated: margin1={}, slack2={}, contained={}",
            cert.log_margin_sep1, cert.slack_sep2, cert.support_contained
        )));
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> QPoint {
        QPoint::new(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn separated_pair_is_kept() {
        let t = line(&[0.0, 1.0]);
        let c = split_point(&t, 0.125).unwrap();
        assert_eq!(c.s, t);
        assert_eq!(c.sep_s, 1.0);
        assert_eq!(c.dist_st, 0.0);
        assert!(c.is_valid());
    }

    #[test]
    fn close_pair_collapses() {
        let d = 1e-6;
        let t = line(&[0.0, d, 1.0]);
        let c = split_point(&t, 0.125).unwrap();
        assert_eq!(c.s, line(&[0.0, 0.0, 1.0]));
        assert!((c.dist_st - d).abs() < 1e-18);
        assert!(c.slack_sep2 > 0.0 && c.log_margin_sep1 > 0.0);
        assert!(c.dist_st <= 0.125 * c.sep_s);
    }

    #[test]
    fn duplicates_are_merged_first() {
        let t = line(&[0.0, 0.0, 0.0, 2.0]);
        let c = split_point(&t, 0.0625).unwrap();
        assert_eq!(c.s, t);
    }

    #[test]
    fn degenerate_and_range() {
        let t = QPoint::multiple(3, &[1.0, 2.0]).unwrap();
        assert!(matches!(split_point(&t, 0.125), Err(Error::Degenerate)));
        assert!(split_point(&line(&[0.0, 1.0]), 1.0).is_err());
    }

    #[test]
    fn deterministic() {
        let t = QPoint::new(vec![vec![0.0, 0.1], vec![0.3, 0.0], vec![5.0, 5.0], vec![5.1, 5.0]]).unwrap();
        let a = split_point(&t, 0.125).unwrap();
        let b = split_point(&t.clone(), 0.125).unwrap();
        assert_eq!(a.s, b.s);
        assert_eq!(a.level, b.level);
        assert_eq!(a.slack_sep2.to_bits(), b.slack_sep2.to_bits());
    }
}
