//! Cardinality maps and a singular-set diagnostic.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use super::domain::GridDomain;
use super::field::QField;
use super::frequency::FrequencyData;
use crate::error::{Error, Result};
use crate::numeric::linear_fit;

/// `card(spt f(x))` at every active node.
pub fn card_map(f: &QField, tol: f64) -> Result<Vec<Option<usize>>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let d = f.domain();
    Ok((0..d.len())
        .into_par_iter()
        .map(|k| d.is_active(k).then(|| f.value(k).card(tol)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateRule {
    /// Cardinality below the most common value among the 4 neighbors.
    CardDrop,
    /// Frequency of `f ⊖ η∘f` at radius `2h` above the floor and maximal
    /// among the 8 neighbors.
    Frequency,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularCandidate {
    pub node: usize,
    pub position: [f64; 2],
    pub card: usize,
    pub rule: CandidateRule,
}

/// Most common value among the active 4-neighbors; ties resolve to the
/// largest value.
fn neighbor_majority(d: &GridDomain, card: &[Option<usize>], k: usize) -> Option<usize> {
    let (i, j) = d.node(k);
    let mut seen: Vec<(usize, usize)> = Vec::new();
    for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
        if d.is_1d() && dj != 0 {
            continue;
        }
        if let Some(c) = d.index((i + di, j + dj)).and_then(|n| card[n]) {
            match seen.iter_mut().find(|(v, _)| *v == c) {
                Some(e) => e.1 += 1,
                None => seen.push((c, 1)),
            }
        }
    }
    seen.into_iter().max_by_key(|&(v, n)| (n, v)).map(|(v, _)| v)
}

/// Nodes flagged by either rule, in node order; a node flagged by both is
/// reported once under the cardinality rule.
pub fn singular_candidates(f: &QField, tol: f64, freq_floor: f64) -> Result<Vec<SingularCandidate>> {
    let d = f.domain();
    let card = card_map(f, tol)?;
    let mut out = Vec::new();
    let mut flagged = vec![false; d.len()];
    for k in d.active_indices() {
        let c = card[k].expect("active node");
        if neighbor_majority(d, &card, k).is_some_and(|m| c < m) {
            flagged[k] = true;
            out.push(SingularCandidate {
                node: k,
                position: d.position(k),
                card: c,
                rule: CandidateRule::CardDrop,
            });
        }
    }
    let centered = f.map(f.q(), f.dim(), |_, v| v.translate(&v.eta(), -1.0))?;
    let r = 2.0 * d.h();
    let pre = FrequencyData::new(&centered);
    let freq: Vec<f64> = (0..d.len())
        .into_par_iter()
        .map(|k| {
            if !d.is_active(k) || !d.contains_ball(d.position(k), r, d.h()) {
                return f64::NAN;
            }
            pre.frequency(d.position(k), r).unwrap_or(f64::NAN)
        })
        .collect();
    for k in d.active_indices() {
        if flagged[k] || !(freq[k] > freq_floor) {
            continue;
        }
        let (i, j) = d.node(k);
        let peak = (-1..=1)
            .flat_map(|di| (-1..=1).map(move |dj| (di, dj)))
            .filter_map(|(di, dj)| d.index((i + di, j + dj)))
            .all(|n| !(freq[n] > freq[k]));
        if peak {
            out.push(SingularCandidate {
                node: k,
                position: d.position(k),
                card: card[k].expect("active node"),
                rule: CandidateRule::Frequency,
            });
        }
    }
    out.sort_by_key(|c| c.node);
    Ok(out)
}

/// Least-squares slope of `log N(δ)` against `log(1/δ)`, where `N(δ)` counts
/// the occupied boxes of an axis-aligned `δ`-grid.
#[derive(Debug, Clone, Serialize)]
pub struct BoxDimension {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn box_dimension(points: &[[f64; 2]], scales: &[f64]) -> Result<BoxDimension> {
    if scales.len() < 3 {
        return Err(Error::InvalidInput("box dimension needs at least 3 scales".into()));
    }
    if scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidInput("box scales must be positive".into()));
    }
    if points.is_empty() {
        return Err(Error::InvalidInput("box dimension of an empty set".into()));
    }
    let counts: Vec<usize> = scales
        .iter()
        .map(|&s| {
            points
                .iter()
                .map(|p| ((p[0] / s).floor() as i64, (p[1] / s).floor() as i64))
                .collect::<HashSet<_>>()
                .len()
        })
        .collect();
    let xs: Vec<f64> = scales.iter().map(|s| (1.0 / s).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&n| (n as f64).ln()).collect();
    let (slope, intercept, residual) = linear_fit(&xs, &ys);
    Ok(BoxDimension {
        slope,
        intercept,
        residual,
        scales: scales.to_vec(),
        counts,
    })
}

/// Dyadic box sizes from `extent/4` down to no less than `4h`.
pub fn default_box_scales(extent: f64, h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut s = 0.25 * extent;
    while s >= 4.0 * h {
        out.push(s);
        s *= 0.5;
    }
    out
}

/// Positions of a candidate list.
pub fn candidate_positions(c: &[SingularCandidate]) -> Vec<[f64; 2]> {
    c.iter().map(|c| c.position).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aq::QPoint;
    use crate::grid::generators::{gen_branch_map, gen_remark_examples, RemarkExample};

    #[test]
    fn branch_map_singular_set_is_the_origin() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 64).unwrap();
        let f = gen_branch_map(2, 1, &d).unwrap();
        let c = singular_candidates(&f, 1e-3, 0.1).unwrap();
        assert!(!c.is_empty());
        for s in &c {
            assert!(s.position[0].hypot(s.position[1]) <= d.h() * 2f64.sqrt() + 1e-12, "{s:?}");
        }
    }

    #[test]
    fn smooth_separated_field_has_no_candidates() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 32).unwrap();
        let f = QField::from_fn(d, 2, 1, |z| QPoint::new(vec![vec![z[0]], vec![3.0 + z[1]]])).unwrap();
        assert!(singular_candidates(&f, 1e-3, 0.1).unwrap().is_empty());
    }

    #[test]
    fn composite_candidates_are_one_dimensional() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 128).unwrap();
        let tp = QPoint::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let tm = QPoint::new(vec![vec![2.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let f = gen_remark_examples(&RemarkExample::Composite { q1: 2, tplus: tp, tminus: tm }, &d).unwrap();
        let c = singular_candidates(&f, 1e-3, 0.1).unwrap();
        let b = box_dimension(&candidate_positions(&c), &default_box_scales(2.0, d.h())).unwrap();
        assert!((0.8..=1.2).contains(&b.slope), "{b:?}");
    }

    #[test]
    fn box_dimension_of_point_and_segment() {
        let scales = [0.25, 0.125, 0.0625, 0.03125];
        let p = box_dimension(&[[0.1, 0.1]], &scales).unwrap();
        assert_eq!(p.slope, 0.0);
        let seg: Vec<[f64; 2]> = (0..1000).map(|k| [k as f64 / 1000.0, 0.3]).collect();
        let s = box_dimension(&seg, &scales).unwrap();
        assert!((s.slope - 1.0).abs() < 1e-9);
        assert!(box_dimension(&seg, &scales[..2]).is_err());
    }
}
