//! Seeded verification campaigns over random Q-points and small grids.
//!
//! Every trial draws from its own ChaCha8 stream keyed by the campaign seed
//! and the trial coordinates, so records do not depend on the thread count
//! or on which other suites run.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::aq::{split, QPoint, SupportAtom};
use crate::combinatorics::{key_chain, split_point};
use crate::error::{Error, Result};
use crate::grid::{dirichlet_energy, freq_curve, gen_branch_map, GridDomain, QField};
use crate::oracle::brute_force_dist_sq;

/// One line of a campaign log.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub suite: String,
    pub check: String,
    pub q: usize,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub seed: u64,
    pub trial: usize,
    pub ok: bool,
    /// Smallest margin of the checked inequalities; negative on failure.
    pub min_slack: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Which suites to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Metric,
    Lemmas,
    Grid,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Vec<Suite>> {
        match s {
            "metric" => Some(vec![Suite::Metric]),
            "lemmas" => Some(vec![Suite::Lemmas]),
            "grid" => Some(vec![Suite::Grid]),
            "all" => Some(vec![Suite::Metric, Suite::Lemmas, Suite::Grid]),
            _ => None,
        }
    }
}

/// Deliberate corruption of the values under test, for checking that a
/// campaign can fail.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Fault {
    /// Added to every distance computed by the production path.
    pub dist_offset: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CampaignConfig {
    /// Trials per (Q, n) or (Q, ε) combination.
    pub trials: usize,
    pub qmax: usize,
    pub seed: u64,
    pub fault: Fault,
}

/// SplitMix64 finalizer over the trial coordinates.
pub fn trial_seed(seed: u64, tag: u64, a: u64, b: u64, trial: u64) -> u64 {
    let mut z = seed;
    for v in [tag, a, b, trial] {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(v);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

fn uniform_point(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

fn grow(rng: &mut ChaCha8Rng, n: usize, center: Vec<f64>, scale: f64, root: bool, out: &mut Vec<Vec<f64>>) {
    if n == 1 {
        out.push(center);
        return;
    }
    if !root && rng.gen_bool(0.1) {
        out.extend(std::iter::repeat_n(center, n));
        return;
    }
    let k = rng.gen_range(2..=n);
    // Random composition of n into k positive parts.
    let mut cuts: Vec<usize> = (1..n).collect();
    for i in 0..k - 1 {
        let j = rng.gen_range(i..cuts.len());
        cuts.swap(i, j);
    }
    let mut cuts: Vec<usize> = cuts[..k - 1].to_vec();
    cuts.sort_unstable();
    cuts.push(n);
    let mut prev = 0;
    for c in cuts {
        let offset = uniform_point(rng, center.len(), scale);
        let sub: Vec<f64> = center.iter().zip(&offset).map(|(a, b)| a + b).collect();
        let shrink = 10f64.powf(-rng.gen_range(0.0..4.0));
        grow(rng, c - prev, sub, scale * shrink, false, out);
        prev = c;
    }
}

/// A Q-point with clusters nested over several orders of magnitude; never
/// a single Q-fold point for `q ≥ 2`.
pub fn random_qpoint(rng: &mut ChaCha8Rng, q: usize, dim: usize) -> QPoint {
    loop {
        let mut pts = Vec::with_capacity(q);
        let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
        let center = uniform_point(rng, dim, scale);
        grow(rng, q, center, scale, true, &mut pts);
        let t = QPoint::new(pts).expect("finite points");
        if q < 2 || t.diam() > 0.0 {
            return t;
        }
    }
}

/// Uniform points in `[−1, 1]^dim`; with probability 1/4 one point is
/// repeated, so ties between permutations occur exactly.
pub fn random_uniform_qpoint(rng: &mut ChaCha8Rng, q: usize, dim: usize) -> QPoint {
    let mut pts: Vec<Vec<f64>> = (0..q).map(|_| uniform_point(rng, dim, 1.0)).collect();
    if q >= 2 && rng.gen_bool(0.25) {
        let (i, j) = (rng.gen_range(0..q), rng.gen_range(0..q));
        pts[j] = pts[i].clone();
    }
    QPoint::new(pts).expect("finite points")
}

/// Atoms `S` with multiplicities summing to `q` and a Q-point `T` with
/// exactly `Q_i` points inside each ball `B_{ε r_i}(s_i)`.
pub fn random_balanced(rng: &mut ChaCha8Rng, q: usize, dim: usize, eps: f64) -> (Vec<SupportAtom>, QPoint) {
    let k = rng.gen_range(1..=q.min(4));
    let mut mult = vec![1usize; k];
    for _ in k..q {
        mult[rng.gen_range(0..k)] += 1;
    }
    let atoms: Vec<SupportAtom> = mult
        .iter()
        .map(|&m| SupportAtom {
            location: uniform_point(rng, dim, 1.0),
            multiplicity: m,
        })
        .collect();
    let radii = crate::aq::atom_radii(&atoms);
    let mut pts = Vec::with_capacity(q);
    for (a, r) in atoms.iter().zip(&radii) {
        let reach = if r.is_finite() { eps * r } else { 1.0 };
        for _ in 0..a.multiplicity {
            // Uniform direction, radius strictly inside the ball.
            let mut dir = uniform_point(rng, dim, 1.0);
            let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            let rho = reach * 0.999 * rng.gen_range(0.0..1.0);
            for x in &mut dir {
                *x *= rho / n;
            }
            pts.push(a.location.iter().zip(&dir).map(|(s, d)| s + d).collect());
        }
    }
    (atoms, QPoint::new(pts).expect("finite points"))
}

fn record(suite: &str, check: &str, q: usize, dim: usize, eps: Option<f64>, seed: u64, trial: usize) -> TrialRecord {
    TrialRecord {
        suite: suite.into(),
        check: check.into(),
        q,
        dim,
        eps,
        seed,
        trial,
        ok: false,
        min_slack: f64::NEG_INFINITY,
        detail: None,
    }
}

fn dist_with_fault(a: &QPoint, b: &QPoint, fault: Fault) -> f64 {
    a.dist_sq(b).expect("same (q, dim)") + fault.dist_offset
}

/// Oracle agreement, symmetry, identity and the triangle inequality on a
/// random triple.
fn metric_trial(q: usize, dim: usize, seed: u64, trial: usize, fault: Fault) -> TrialRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_uniform_qpoint(&mut rng, q, dim);
    let b = random_uniform_qpoint(&mut rng, q, dim);
    let c = random_uniform_qpoint(&mut rng, q, dim);
    let mut r = record("metric", "dist", q, dim, None, seed, trial);
    let d_ab = dist_with_fault(&a, &b, fault);
    let oracle = brute_force_dist_sq(&a, &b);
    let d_ba = dist_with_fault(&b, &a, fault);
    let d_aa = dist_with_fault(&a, &a, fault);
    let (g_ab, g_ac, g_cb) = (d_ab.sqrt(), dist_with_fault(&a, &c, fault).sqrt(), dist_with_fault(&c, &b, fault).sqrt());
    let triangle = g_ac + g_cb - g_ab + 1e-10;
    let mut slack = triangle;
    let mut problems = Vec::new();
    if d_ab != oracle {
        problems.push(format!("dist² {d_ab:e} vs oracle {oracle:e}"));
        slack = slack.min(-(d_ab - oracle).abs());
    }
    if d_ab != d_ba {
        problems.push("asymmetric".to_string());
        slack = slack.min(-(d_ab - d_ba).abs());
    }
    if d_aa.sqrt() > 1e-12 {
        problems.push(format!("dist(a, a) = {:e}", d_aa.sqrt()));
        slack = slack.min(-d_aa.sqrt());
    }
    if triangle < 0.0 {
        problems.push(format!("triangle inequality fails by {:e}", -triangle));
    }
    r.ok = problems.is_empty();
    r.min_slack = slack;
    r.detail = (!r.ok).then(|| problems.join("; "));
    r
}

fn split_point_trial(q: usize, dim: usize, eps: f64, seed: u64, trial: usize) -> TrialRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = random_qpoint(&mut rng, q, dim);
    let mut r = record("lemmas", "split_point", q, dim, Some(eps), seed, trial);
    match split_point(&t, eps) {
        Ok(c) => {
            r.ok = c.is_valid();
            r.min_slack = c.min_slack();
        }
        Err(e) => r.detail = Some(e.to_string()),
    }
    r
}

fn chain_trial(q: usize, dim: usize, eps: f64, seed: u64, trial: usize) -> TrialRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = random_qpoint(&mut rng, q, dim);
    let mut r = record("lemmas", "key_chain", q, dim, Some(eps), seed, trial);
    match key_chain(&t, eps) {
        Ok(c) => {
            r.ok = c.is_valid() && c.len() <= q;
            r.min_slack = c.min_slack();
            if !r.ok {
                r.detail = Some(format!("chain of length {} invalid", c.len()));
            }
        }
        Err(e) => r.detail = Some(e.to_string()),
    }
    r
}

/// `|G²(S, T) − Σ G²(T_i, Q_i⟦s_i⟧)| ≤ 1e-10 (1 + G²)` on a balanced
/// configuration.
fn splitsum_trial(q: usize, dim: usize, seed: u64, trial: usize, fault: Fault) -> TrialRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = rng.gen_range(0.01..0.25);
    let (atoms, t) = random_balanced(&mut rng, q, dim, eps);
    let mut r = record("lemmas", "splitsum", q, dim, Some(eps), seed, trial);
    let s = QPoint::from_atoms(&atoms).expect("atoms are finite");
    match split(&atoms, &t, eps) {
        Ok(sp) if sp.balanced => {
            let g2 = dist_with_fault(&s, &t, fault);
            let sum = sp.split_sum_sq();
            r.min_slack = 1e-10 * (1.0 + g2) - (g2 - sum).abs();
            r.ok = r.min_slack >= 0.0;
        }
        Ok(_) => r.detail = Some("configuration is not balanced".into()),
        Err(e) => r.detail = Some(e.to_string()),
    }
    r
}

/// Translation invariance, 2-homogeneity of the energy and the frequency
/// of a linear map, on small grids.
fn grid_trial(q: usize, seed: u64, trial: usize) -> Result<Vec<TrialRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rng.gen_range(1..=2 * q);
    let d = GridDomain::disk([0.0, 0.0], 1.0, 16)?;
    let f = gen_branch_map(q, p, &d)?;
    let e = dirichlet_energy(&f, None)?;
    let v = uniform_point(&mut rng, 2, 10.0);
    let shifted = f.map(q, 2, |_, x| x.translate(&v, 1.0))?;
    let e_shift = dirichlet_energy(&shifted, None)?;
    let mut out = Vec::new();
    let mut r = record("grid", "energy_translation", q, 2, None, seed, trial);
    r.min_slack = 1e-10 * (1.0 + e) - (e_shift - e).abs();
    r.ok = r.min_slack >= 0.0;
    out.push(r);

    let lambda = 10f64.powf(rng.gen_range(-1.0..1.0));
    let scaled = f.map(q, 2, |_, x| x.scale(lambda))?;
    let e_scaled = dirichlet_energy(&scaled, None)?;
    let mut r = record("grid", "energy_homogeneity", q, 2, None, seed, trial);
    r.min_slack = 1e-10 * (1.0 + e_scaled) - (e_scaled - lambda * lambda * e).abs();
    r.ok = r.min_slack >= 0.0;
    out.push(r);

    // A linear map is homogeneous of degree one about any center.
    let a = 2.0 * PI * rng.gen_range(0.0..1.0);
    let m = [[a.cos(), -a.sin()], [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]];
    let g = QField::from_fn(GridDomain::disk([0.0, 0.0], 1.0, 32)?, 1, 2, |z| {
        QPoint::new(vec![vec![m[0][0] * z[0] + m[0][1] * z[1], m[1][0] * z[0] + m[1][1] * z[1]]])
    })?;
    let c = freq_curve(&g, [0.0, 0.0], &[0.3])?;
    let i = c.column("I").expect("frequency column")[0];
    let mut r = record("grid", "linear_frequency", 1, 2, None, seed, trial);
    r.min_slack = 0.01 - (i - 1.0).abs();
    r.ok = r.min_slack >= 0.0;
    if !r.ok {
        r.detail = Some(format!("I(0.3) = {i}"));
    }
    out.push(r);
    Ok(out)
}

pub const SPLIT_EPS: [f64; 2] = [0.125, 0.0625];

/// Runs one suite; records come back in a fixed order.
pub fn run_suite(suite: Suite, cfg: &CampaignConfig) -> Result<Vec<TrialRecord>> {
    if cfg.qmax < 2 {
        return Err(Error::ParameterOutOfRange("qmax must be at least 2".into()));
    }
    let qs: Vec<usize> = (2..=cfg.qmax).collect();
    let n = cfg.trials;
    let seed = cfg.seed;
    let fault = cfg.fault;
    let out = match suite {
        Suite::Metric => {
            let jobs: Vec<(usize, usize, usize)> = qs
                .iter()
                .flat_map(|&q| (1..=3).flat_map(move |dim| (0..n).map(move |t| (q, dim, t))))
                .collect();
            jobs.par_iter()
                .map(|&(q, dim, t)| metric_trial(q, dim, trial_seed(seed, 1, q as u64, dim as u64, t as u64), t, fault))
                .collect()
        }
        Suite::Lemmas => {
            let jobs: Vec<(usize, usize, usize)> = qs
                .iter()
                .flat_map(|&q| (0..SPLIT_EPS.len()).flat_map(move |e| (0..n).map(move |t| (q, e, t))))
                .collect();
            let mut recs: Vec<TrialRecord> = jobs
                .par_iter()
                .flat_map_iter(|&(q, e, t)| {
                    let eps = SPLIT_EPS[e];
                    let s = trial_seed(seed, 2, q as u64, e as u64, t as u64);
                    let dim = 1 + (s % 3) as usize;
                    [split_point_trial(q, dim, eps, s, t), chain_trial(q, dim, eps, s, t)]
                })
                .collect();
            let sums: Vec<(usize, usize)> = qs.iter().flat_map(|&q| (0..n).map(move |t| (q, t))).collect();
            recs.par_extend(sums.par_iter().map(|&(q, t)| {
                let s = trial_seed(seed, 3, q as u64, 0, t as u64);
                splitsum_trial(q, 1 + (s % 3) as usize, s, t, fault)
            }));
            recs
        }
        Suite::Grid => {
            let gq: Vec<usize> = (1..=cfg.qmax.min(3)).collect();
            let jobs: Vec<(usize, usize)> = gq.iter().flat_map(|&q| (0..n.min(10)).map(move |t| (q, t))).collect();
            let nested: Vec<Vec<TrialRecord>> = jobs
                .par_iter()
                .map(|&(q, t)| grid_trial(q, trial_seed(seed, 4, q as u64, 0, t as u64), t))
                .collect::<Result<_>>()?;
            nested.into_iter().flatten().collect()
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_points_span_scales_and_stay_nondegenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for q in 2..=6 {
            for _ in 0..50 {
                let t = random_qpoint(&mut rng, q, 2);
                assert_eq!(t.q(), q);
                assert!(t.diam() > 0.0);
            }
        }
    }

    #[test]
    fn balanced_configurations_are_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let (atoms, t) = random_balanced(&mut rng, 5, 2, 0.2);
            assert!(split(&atoms, &t, 0.2).unwrap().balanced);
        }
    }

    #[test]
    fn fault_makes_the_metric_suite_fail() {
        let cfg = CampaignConfig {
            trials: 5,
            qmax: 3,
            seed: 1,
            fault: Fault { dist_offset: 1e-6 },
        };
        let recs = run_suite(Suite::Metric, &cfg).unwrap();
        assert!(recs.iter().any(|r| !r.ok));
    }

    #[test]
    fn small_campaigns_pass() {
        let cfg = CampaignConfig {
            trials: 20,
            qmax: 4,
            seed: 3,
            fault: Fault::default(),
        };
        for s in [Suite::Metric, Suite::Lemmas, Suite::Grid] {
            let recs = run_suite(s, &cfg).unwrap();
            let bad: Vec<_> = recs.iter().filter(|r| !r.ok).collect();
            assert!(bad.is_empty(), "{:?}", &bad[..bad.len().min(3)]);
        }
    }
}
