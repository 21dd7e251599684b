//! Empirical surrogates for the Hölder modulus and the reverse Hölder
//! inequality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::domain::GridDomain;
use super::energy::EnergyDensity;
use super::field::QField;
use crate::aq::dist_sq_slices;
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Maximum of the modulus ratio over pairs whose distance falls in
/// `[lo, hi)`.
#[derive(Debug, Clone, Serialize)]
pub struct ScaleBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub max: f64,
}

/// Distribution of `C*(x, y) = G(f(x), f(y))² / (∫_{B_{3δ}(x)}|Df|² + δ² ∫_{B_R}|Df|²)`
/// with `δ = |x − y|` over random node pairs in `B_{R/2}`, `δ < R/4`.
#[derive(Debug, Clone, Serialize)]
pub struct ModulusReport {
    pub radius: f64,
    pub h: f64,
    pub pairs: usize,
    pub seed: u64,
    pub total_energy: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub p90: f64,
    pub p99: f64,
    pub by_scale: Vec<ScaleBin>,
}

fn nodes_within(d: &GridDomain, c: [f64; 2], r: f64) -> Vec<usize> {
    d.active_indices()
        .filter(|&k| {
            let p = d.position(k);
            (p[0] - c[0]).hypot(p[1] - c[1]) <= r * (1.0 + 1e-12)
        })
        .collect()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

/// `R` is the radius of the largest centered disk in the domain.
pub fn modulus_check(f: &QField, pairs: usize, seed: u64) -> Result<ModulusReport> {
    let d = f.domain();
    let (c, big_r, h) = (d.center(), d.radius(), d.h());
    let inner = nodes_within(d, c, 0.5 * big_r);
    let reach = (0.25 * big_r / h).floor() as i64;
    if inner.len() < 2 || reach < 1 {
        return Err(Error::InvalidInput("grid too coarse for the modulus check".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(pairs);
    while samples.len() < pairs {
        let x = inner[rng.gen_range(0..inner.len())];
        let (i, j) = d.node(x);
        let di = rng.gen_range(-reach..=reach);
        let dj = if d.is_1d() { 0 } else { rng.gen_range(-reach..=reach) };
        let delta = h * (di as f64).hypot(dj as f64);
        if delta == 0.0 || delta >= 0.25 * big_r {
            continue;
        }
        let Some(y) = d.index((i + di, j + dj)) else { continue };
        let py = d.position(y);
        if !d.is_active(y) || (py[0] - c[0]).hypot(py[1] - c[1]) > 0.5 * big_r * (1.0 + 1e-12) {
            continue;
        }
        samples.push((x, y, delta));
    }
    let dens = EnergyDensity::new(f);
    let total = dens.ball(c, big_r);
    let ratios: Vec<f64> = samples
        .par_iter()
        .map(|&(x, y, delta)| {
            let g2 = dist_sq_slices(f.slice(x), f.slice(y), f.q(), f.dim());
            let denom = dens.ball(d.position(x), 3.0 * delta) + delta * delta * total;
            if denom > 0.0 {
                g2 / denom
            } else {
                0.0
            }
        })
        .collect();
    let mut bins = Vec::new();
    let mut hi = 0.25 * big_r;
    while hi > h {
        let lo = 0.5 * hi;
        let in_bin: Vec<f64> = samples
            .iter()
            .zip(&ratios)
            .filter(|((_, _, dl), _)| *dl >= lo && *dl < hi)
            .map(|(_, r)| *r)
            .collect();
        bins.push(ScaleBin {
            lo,
            hi,
            count: in_bin.len(),
            max: in_bin.iter().copied().fold(0.0, f64::max),
        });
        hi = lo;
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(ModulusReport {
        radius: big_r,
        h,
        pairs,
        seed,
        total_energy: total,
        max: sorted.last().copied().unwrap_or(0.0),
        mean: pairwise_sum(&ratios) / ratios.len().max(1) as f64,
        median: quantile(&sorted, 0.5),
        p90: quantile(&sorted, 0.9),
        p99: quantile(&sorted, 0.99),
        by_scale: bins,
    })
}

/// `|Df|²` at a node from the mean of its forward and backward edges along
/// each axis.
pub fn node_energy_density(dens: &EnergyDensity, k: usize) -> f64 {
    let d = dens.domain();
    let h = d.h();
    let cell = if d.is_1d() { h } else { h * h };
    let mut s = 0.0;
    for axis in 0..d.axes() {
        let fwd = dens.edge(axis, k);
        let bwd = d.backward(k, axis).map_or(0.0, |b| dens.edge(axis, b));
        s += 0.5 * (fwd + bwd);
    }
    s / cell
}

/// One center and radius of the reverse Hölder check; averages are node
/// means over the closed balls.
#[derive(Debug, Clone, Serialize)]
pub struct ReverseHolderEntry {
    pub center: [f64; 2],
    pub r: f64,
    /// `⨍_{B_r}|Df|²`.
    pub lhs: f64,
    /// `(⨍_{B_{2r}}|Df|²)^{1/2} ⨍_{B_{2r}}|Df|`.
    pub rhs: f64,
    /// `lhs / rhs`, zero when both vanish.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReverseHolderReport {
    pub radius: f64,
    pub h: f64,
    pub entries: Vec<ReverseHolderEntry>,
    pub max_ratio: f64,
    /// `(r, max ratio over centers)` per dyadic radius.
    pub by_radius: Vec<(f64, f64)>,
    /// `(p, (⨍_{B_{R/2}}|Df|^p)^{1/p})`.
    pub lp_means: Vec<(f64, f64)>,
}

pub const LP_EXPONENTS: [f64; 3] = [2.1, 2.2, 2.5];

/// Centers on a lattice of spacing `R/8` inside `B_{R/2}`, radii
/// `R/4, R/8, …` down to `2h`, keeping `B_{2r}(center) ⊂ B_R`.
pub fn reverse_holder_check(f: &QField) -> Result<ReverseHolderReport> {
    let d = f.domain();
    let (c, big_r, h) = (d.center(), d.radius(), d.h());
    let dens = EnergyDensity::new(f);
    let density: Vec<f64> = (0..d.len())
        .map(|k| if d.is_active(k) { node_energy_density(&dens, k) } else { 0.0 })
        .collect();
    let step = big_r / 8.0;
    let mut centers = Vec::new();
    let ny = if d.is_1d() { 0 } else { 4 };
    for j in -ny..=ny {
        for i in -4i32..=4 {
            let p = [c[0] + step * i as f64, c[1] + step * j as f64];
            if (p[0] - c[0]).hypot(p[1] - c[1]) <= 0.5 * big_r + 1e-12 {
                centers.push(p);
            }
        }
    }
    let mut radii = Vec::new();
    let mut r = 0.25 * big_r;
    while r >= 2.0 * h {
        radii.push(r);
        r *= 0.5;
    }
    if radii.is_empty() {
        return Err(Error::InvalidInput("grid too coarse for the reverse Hölder check".into()));
    }
    let jobs: Vec<([f64; 2], f64)> = centers
        .iter()
        .flat_map(|&p| radii.iter().map(move |&r| (p, r)))
        .filter(|&(p, r)| (p[0] - c[0]).hypot(p[1] - c[1]) + 2.0 * r <= big_r + 1e-12)
        .collect();
    let mean = |nodes: &[usize], g: &dyn Fn(f64) -> f64| -> f64 {
        let v: Vec<f64> = nodes.iter().map(|&k| g(density[k])).collect();
        pairwise_sum(&v) / v.len().max(1) as f64
    };
    let entries: Vec<ReverseHolderEntry> = jobs
        .par_iter()
        .map(|&(p, r)| {
            let small = nodes_within(d, p, r);
            let large = nodes_within(d, p, 2.0 * r);
            let lhs = mean(&small, &|x| x);
            let rhs = mean(&large, &|x| x).sqrt() * mean(&large, &|x| x.sqrt());
            let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
            ReverseHolderEntry {
                center: p,
                r,
                lhs,
                rhs,
                ratio,
            }
        })
        .collect();
    let by_radius = radii
        .iter()
        .map(|&r| {
            let m = entries.iter().filter(|e| e.r == r).map(|e| e.ratio).fold(0.0, f64::max);
            (r, m)
        })
        .collect();
    let inner = nodes_within(d, c, 0.5 * big_r);
    let lp_means = LP_EXPONENTS
        .iter()
        .map(|&p| (p, mean(&inner, &|x| x.powf(0.5 * p)).powf(1.0 / p)))
        .collect();
    Ok(ReverseHolderReport {
        radius: big_r,
        h,
        max_ratio: entries.iter().map(|e| e.ratio).fold(0.0, f64::max),
        entries,
        by_radius,
        lp_means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aq::QPoint;
    use crate::grid::gen_branch_map;

    #[test]
    fn constant_field_is_trivial() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 32).unwrap();
        let f = QField::from_fn(d, 2, 1, |_| QPoint::new(vec![vec![0.5], vec![-1.0]])).unwrap();
        let m = modulus_check(&f, 500, 1).unwrap();
        assert_eq!(m.max, 0.0);
        let rh = reverse_holder_check(&f).unwrap();
        assert_eq!(rh.max_ratio, 0.0);
    }

    #[test]
    fn linear_map_modulus_is_explicit() {
        // G² = δ², ∫_{B_3δ} = 2π(3δ)², δ²∫_{B_1} = 2πδ²: C* = 1/(20π) while
        // B_3δ(x) stays inside the disk.
        let d = GridDomain::disk([0.0, 0.0], 1.0, 64).unwrap();
        let f = QField::from_fn(d, 1, 2, |z| QPoint::new(vec![z.to_vec()])).unwrap();
        let m = modulus_check(&f, 2000, 3).unwrap();
        let exact = 1.0 / (20.0 * std::f64::consts::PI);
        let small: Vec<&ScaleBin> = m.by_scale.iter().filter(|b| b.hi <= 1.0 / 16.0 && b.count > 0).collect();
        assert!(!small.is_empty());
        for b in small {
            assert!((b.max - exact).abs() < 0.05 * exact, "{b:?} vs {exact}");
        }
        assert!(m.max >= m.p99 && m.p99 >= m.median);
    }

    #[test]
    fn smooth_field_reverse_holder_near_one() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 128).unwrap();
        let f = QField::from_fn(d, 1, 1, |z| QPoint::new(vec![vec![(z[0] + 0.3 * z[1]).exp()]])).unwrap();
        let rh = reverse_holder_check(&f).unwrap();
        let (r_min, worst) = *rh.by_radius.last().unwrap();
        assert!(r_min < 0.02);
        assert!((worst - 1.0).abs() < 0.02, "{worst}");
    }

    #[test]
    fn branch_map_lp_means_are_finite() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 64).unwrap();
        let f = gen_branch_map(2, 1, &d).unwrap();
        let rh = reverse_holder_check(&f).unwrap();
        for (_, v) in rh.lp_means {
            assert!(v.is_finite() && v > 0.0);
        }
    }
}
