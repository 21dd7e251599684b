//! Discrete critical points of the Q-valued Dirichlet energy with
//! prescribed boundary values.
//!
//! The scheme alternates two exact descent steps. With the sheet matching
//! of every edge fixed, the energy is a sum of decoupled quadratics and a
//! red-black Gauss–Seidel sweep moves every interior sheet to the mean of
//! its matched neighbors. Re-solving the edge assignments can only lower
//! each edge cost. The energy is therefore non-increasing; the computed
//! history is kept exactly monotone by undoing a sweep whose rounding
//! raises it, which ends the run.
//!
//! Runs start from the cone extension of the boundary data over an apex.
//! Labeling the boundary sheets and extending each harmonically would put
//! the branching at the labeling seam on the boundary, and the descent
//! cannot move it off the lattice plaquette where it starts.

mod stationarity;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aq::{match_slices, sq_dist, QPoint};
use crate::error::{Error, Result};
use crate::grid::{CurveSeries, GridDomain, QField};
use crate::numeric::pairwise_sum;

pub use stationarity::{preset_bumps, residual_threshold, stationarity_report, ResidualEntry, StationarityReport};

/// Rounding slack for the computed energy after a sweep, relative to the
/// energy; larger increases are reported as divergence.
const ROUNDING_RISE: f64 = 1e-12;

/// Starting field of a restart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    /// Cone over the grid center (restart 0) or a seeded apex.
    Cone,
    /// Boundary sheets labeled from a seeded permutation of the first
    /// boundary node, each extended harmonically. Prone to pinning the
    /// branching at the labeling seam.
    Harmonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeConfig {
    pub max_sweeps: usize,
    /// Stop when the relative energy decrease of a sweep falls below this
    /// and re-matching changes no edge.
    pub energy_tol: f64,
    /// Sweeps between re-solving the edge assignments.
    pub match_refresh: usize,
    pub seed: u64,
    pub restarts: usize,
    /// Relaxation factor in `(0, 2)`; 1 is plain Gauss–Seidel.
    pub omega: f64,
    /// Bumps in the stationarity report attached to the result.
    pub report_bumps: usize,
    pub init: InitKind,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 50_000,
            energy_tol: 1e-10,
            match_refresh: 10,
            seed: 0,
            restarts: 1,
            omega: 1.0,
            report_bumps: 5,
            init: InitKind::Cone,
        }
    }
}

impl MinimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps < 1 {
            return Err(Error::ParameterOutOfRange("max_sweeps must be at least 1".into()));
        }
        if !(self.energy_tol > 0.0) {
            return Err(Error::ParameterOutOfRange("energy_tol must be positive".into()));
        }
        if self.match_refresh < 1 {
            return Err(Error::ParameterOutOfRange("match_refresh must be at least 1".into()));
        }
        if self.restarts < 1 {
            return Err(Error::ParameterOutOfRange("restarts must be at least 1".into()));
        }
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::ParameterOutOfRange("omega must lie in (0, 2)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizeReport {
    /// Energy after every sweep of the returned restart; sweep 0 is the
    /// initialization.
    pub energy_history: CurveSeries,
    pub final_energy: f64,
    pub final_outer_residual: f64,
    pub final_inner_residual: f64,
    pub converged: bool,
    pub sweeps_used: usize,
    /// Sweeps that changed at least one edge assignment.
    pub rematch_events: usize,
    pub restart_energies: Vec<f64>,
    pub best_restart: usize,
    pub stationarity: StationarityReport,
}

/// Lattice edge with both endpoints active.
struct Edge {
    from: usize,
    to: usize,
}

/// Neighbor of an interior node: the node, the edge and whether the node is
/// the edge's source.
#[derive(Clone, Copy)]
struct Link {
    node: usize,
    edge: usize,
    outgoing: bool,
}

struct Problem<'a> {
    domain: &'a GridDomain,
    q: usize,
    dim: usize,
    edges: Vec<Edge>,
    /// Interior nodes by color `(i + j) mod 2`.
    colors: [Vec<usize>; 2],
    links: Vec<Vec<Link>>,
    edge_scale: f64,
}

/// Mutable iterate: labeled sheets and per-edge permutations.
#[derive(Clone)]
struct State {
    x: Vec<f64>,
    /// `perm[e * q + i]`: sheet of `to` matched to sheet `i` of `from`.
    perm: Vec<usize>,
    /// `inv[e * q + i]`: sheet of `from` matched to sheet `i` of `to`.
    inv: Vec<usize>,
}

impl<'a> Problem<'a> {
    fn new(domain: &'a GridDomain, q: usize, dim: usize) -> Self {
        let mut edges = Vec::new();
        let mut links: Vec<Vec<Link>> = vec![Vec::new(); domain.len()];
        for axis in 0..domain.axes() {
            for k in domain.active_indices() {
                if let Some(n) = domain.forward(k, axis).filter(|&n| domain.is_active(n)) {
                    let e = edges.len();
                    edges.push(Edge { from: k, to: n });
                    links[k].push(Link {
                        node: n,
                        edge: e,
                        outgoing: true,
                    });
                    links[n].push(Link {
                        node: k,
                        edge: e,
                        outgoing: false,
                    });
                }
            }
        }
        let mut colors = [Vec::new(), Vec::new()];
        for k in domain.interior_indices() {
            let (i, j) = domain.node(k);
            colors[(i + j).rem_euclid(2) as usize].push(k);
        }
        let edge_scale = crate::grid::energy::edge_scale(domain);
        Self {
            domain,
            q,
            dim,
            edges,
            colors,
            links,
            edge_scale,
        }
    }

    fn stride(&self) -> usize {
        self.q * self.dim
    }

    fn edge_cost(&self, s: &State, e: usize, perm: &[usize]) -> f64 {
        let (q, dim, st) = (self.q, self.dim, self.stride());
        let Edge { from, to } = self.edges[e];
        let a = &s.x[from * st..(from + 1) * st];
        let b = &s.x[to * st..(to + 1) * st];
        let mut c = 0.0;
        for i in 0..q {
            let j = perm[i];
            c += sq_dist(&a[i * dim..(i + 1) * dim], &b[j * dim..(j + 1) * dim]);
        }
        c
    }

    fn energy(&self, s: &State) -> f64 {
        self.energy_with(s, &mut Vec::new())
    }

    fn energy_with(&self, s: &State, costs: &mut Vec<f64>) -> f64 {
        let q = self.q;
        costs.clear();
        costs.resize(self.edges.len(), 0.0);
        costs
            .par_iter_mut()
            .enumerate()
            .for_each(|(e, c)| *c = self.edge_cost(s, e, &s.perm[e * q..(e + 1) * q]));
        pairwise_sum(costs) * self.edge_scale
    }

    /// Adopts the optimal assignment of every edge whose cost it strictly
    /// lowers; returns the number of edges changed.
    fn rematch(&self, s: &mut State) -> usize {
        let (q, dim, st) = (self.q, self.dim, self.stride());
        let updates: Vec<Option<Vec<usize>>> = (0..self.edges.len())
            .into_par_iter()
            .map(|e| {
                let Edge { from, to } = self.edges[e];
                let m = match_slices(&s.x[from * st..(from + 1) * st], &s.x[to * st..(to + 1) * st], q, dim);
                let current = self.edge_cost(s, e, &s.perm[e * q..(e + 1) * q]);
                (self.edge_cost(s, e, &m.perm) < current).then_some(m.perm)
            })
            .collect();
        let mut changed = 0;
        for (e, u) in updates.into_iter().enumerate() {
            if let Some(p) = u {
                for (i, &j) in p.iter().enumerate() {
                    s.perm[e * q + i] = j;
                    s.inv[e * q + j] = i;
                }
                changed += 1;
            }
        }
        changed
    }

    /// One red-black sweep with relaxation `omega`; `buf` is scratch space.
    fn sweep(&self, s: &mut State, omega: f64, buf: &mut Vec<f64>) {
        let (q, dim, st) = (self.q, self.dim, self.stride());
        for color in &self.colors {
            buf.clear();
            buf.resize(color.len() * st, 0.0);
            let x = &s.x;
            buf.par_chunks_mut(st).zip(color.par_iter()).for_each(|(mean, &k)| {
                let links = &self.links[k];
                for l in links {
                    let map = if l.outgoing { &s.perm } else { &s.inv };
                    let y = &x[l.node * st..(l.node + 1) * st];
                    for i in 0..q {
                        let j = map[l.edge * q + i];
                        for c in 0..dim {
                            mean[i * dim + c] += y[j * dim + c];
                        }
                    }
                }
                let w = 1.0 / links.len() as f64;
                let xk = &x[k * st..(k + 1) * st];
                for (m, xv) in mean.iter_mut().zip(xk) {
                    *m = if omega == 1.0 { *m * w } else { (1.0 - omega) * xv + omega * (*m * w) };
                }
            });
            for (&k, v) in color.iter().zip(buf.chunks_exact(st)) {
                s.x[k * st..(k + 1) * st].copy_from_slice(v);
            }
        }
    }

    fn state_from(&self, x: Vec<f64>) -> State {
        let q = self.q;
        let mut s = State {
            x,
            perm: (0..self.edges.len()).flat_map(|_| 0..q).collect(),
            inv: (0..self.edges.len()).flat_map(|_| 0..q).collect(),
        };
        self.rematch(&mut s);
        s
    }

    /// Boundary nodes in angular order about `apex`, with their angles.
    fn boundary_cycle(&self, apex: [f64; 2]) -> Vec<(f64, usize)> {
        let d = self.domain;
        let mut b: Vec<(f64, usize)> = d
            .boundary_indices()
            .map(|k| {
                let p = d.position(k);
                ((p[1] - apex[1]).atan2(p[0] - apex[0]), k)
            })
            .collect();
        b.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        b
    }

    /// Cone starts use the grid center as apex on restart 0 and a seeded
    /// point within a quarter radius afterwards. 1-D grids always use the
    /// harmonic start, which is exact there.
    fn initial_state(&self, boundary: &[f64], init: InitKind, seed: u64, restart: usize) -> State {
        let d = self.domain;
        let mut x = boundary.to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if d.is_1d() || init == InitKind::Harmonic {
            let (dim, st) = (self.dim, self.stride());
            let cycle: Vec<usize> = self.boundary_cycle(d.center()).into_iter().map(|(_, k)| k).collect();
            if let Some(&first) = cycle.first() {
                let mut order: Vec<usize> = (0..self.q).collect();
                order.shuffle(&mut rng);
                for (i, &j) in order.iter().enumerate() {
                    x[first * st + i * dim..first * st + (i + 1) * dim]
                        .copy_from_slice(&boundary[first * st + j * dim..first * st + (j + 1) * dim]);
                }
            }
            self.label_along(&mut x, boundary, &cycle);
            self.harmonic_extension(&mut x);
        } else {
            let c = d.center();
            let apex = if restart == 0 {
                c
            } else {
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = 0.25 * d.radius() * rng.gen_range(0.0f64..1.0).sqrt();
                [c[0] + r * a.cos(), c[1] + r * a.sin()]
            };
            self.cone_extension(&mut x, boundary, apex);
        }
        self.state_from(x)
    }

    /// Relabels the boundary sheets so that consecutive nodes of `cycle`
    /// are optimally matched.
    fn label_along(&self, x: &mut [f64], boundary: &[f64], cycle: &[usize]) {
        let (q, dim, st) = (self.q, self.dim, self.stride());
        for w in cycle.windows(2) {
            let (a, b) = (w[0], w[1]);
            let m = match_slices(&x[a * st..(a + 1) * st], &boundary[b * st..(b + 1) * st], q, dim);
            for i in 0..q {
                let j = m.perm[i];
                x[b * st + i * dim..b * st + (i + 1) * dim].copy_from_slice(&boundary[b * st + j * dim..b * st + (j + 1) * dim]);
            }
        }
    }

    /// `f(apex + t(b − apex)) = η + t (f(b) ⊖ η)` with `η` the mean boundary
    /// average and `f(b)` interpolated between the two boundary nodes
    /// adjacent in angle, matched optimally.
    fn cone_extension(&self, x: &mut [f64], boundary: &[f64], apex: [f64; 2]) {
        let d = self.domain;
        let (q, dim, st) = (self.q, self.dim, self.stride());
        let cycle = self.boundary_cycle(apex);
        let nb = cycle.len();
        let mut eta = vec![0.0; dim];
        for &(_, k) in &cycle {
            for i in 0..q {
                for c in 0..dim {
                    eta[c] += boundary[k * st + i * dim + c];
                }
            }
        }
        for e in &mut eta {
            *e /= (nb * q) as f64;
        }
        // Constant data must give the constant field exactly.
        let first = cycle.first().map(|&(_, k)| &boundary[k * st..k * st + dim]);
        if let Some(v) = first {
            if cycle.iter().all(|&(_, k)| boundary[k * st..(k + 1) * st].chunks_exact(dim).all(|p| p == v)) {
                eta.copy_from_slice(v);
            }
        }
        let interior: Vec<usize> = d.interior_indices().collect();
        let values: Vec<Vec<f64>> = interior
            .par_iter()
            .map(|&k| {
                let p = d.position(k);
                let (ux, uy) = (p[0] - apex[0], p[1] - apex[1]);
                let theta = uy.atan2(ux);
                let hi = cycle.partition_point(|&(a, _)| a <= theta) % nb;
                let lo = (hi + nb - 1) % nb;
                let (ta, a) = cycle[lo];
                let (mut tb, b) = cycle[hi];
                if tb <= ta {
                    tb += std::f64::consts::TAU;
                }
                let mut th = theta;
                if th < ta {
                    th += std::f64::consts::TAU;
                }
                let s = if tb > ta { ((th - ta) / (tb - ta)).clamp(0.0, 1.0) } else { 0.0 };
                let (pa, pb) = (d.position(a), d.position(b));
                let ra = (pa[0] - apex[0]).hypot(pa[1] - apex[1]);
                let rb = (pb[0] - apex[0]).hypot(pb[1] - apex[1]);
                let t = (ux.hypot(uy) / ((1.0 - s) * ra + s * rb)).min(1.0);
                let va = &boundary[a * st..(a + 1) * st];
                let vb = &boundary[b * st..(b + 1) * st];
                let m = match_slices(va, vb, q, dim);
                let mut out = vec![0.0; st];
                for i in 0..q {
                    let j = m.perm[i];
                    for c in 0..dim {
                        let v = va[i * dim + c] + s * (vb[j * dim + c] - va[i * dim + c]);
                        out[i * dim + c] = eta[c] + t * (v - eta[c]);
                    }
                }
                out
            })
            .collect();
        for (&k, v) in interior.iter().zip(values) {
            x[k * st..(k + 1) * st].copy_from_slice(&v);
        }
    }

    /// Solves the 5-point (3-point) Laplace equation for every coordinate of
    /// every labeled sheet on the interior by conjugate gradients.
    fn harmonic_extension(&self, x: &mut [f64]) {
        let d = self.domain;
        let st = self.stride();
        let interior: Vec<usize> = d.interior_indices().collect();
        let n = interior.len();
        if n == 0 {
            return;
        }
        let mut slot = vec![usize::MAX; d.len()];
        for (s, &k) in interior.iter().enumerate() {
            slot[k] = s;
        }
        let deg: Vec<f64> = interior.iter().map(|&k| self.links[k].len() as f64).collect();
        let apply = |v: &[f64], out: &mut [f64]| {
            out.par_iter_mut().enumerate().for_each(|(s, o)| {
                let k = interior[s];
                let mut acc = deg[s] * v[s];
                for l in &self.links[k] {
                    if slot[l.node] != usize::MAX {
                        acc -= v[slot[l.node]];
                    }
                }
                *o = acc;
            });
        };
        let dot = |a: &[f64], b: &[f64]| pairwise_sum(&a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<_>>());
        for comp in 0..st {
            let rhs: Vec<f64> = interior
                .iter()
                .map(|&k| {
                    self.links[k]
                        .iter()
                        .filter(|l| slot[l.node] == usize::MAX)
                        .map(|l| x[l.node * st + comp])
                        .sum()
                })
                .collect();
            // Starting from the boundary mean makes constant data exact.
            let bnd: Vec<f64> = d.boundary_indices().map(|k| x[k * st + comp]).collect();
            let mean = pairwise_sum(&bnd) / bnd.len().max(1) as f64;
            let mut u = vec![mean; n];
            let mut ap = vec![0.0; n];
            apply(&u, &mut ap);
            let mut r: Vec<f64> = rhs.iter().zip(&ap).map(|(b, a)| b - a).collect();
            let mut p = r.clone();
            let mut rr = dot(&r, &r);
            let stop = 1e-24 * dot(&rhs, &rhs).max(1e-300);
            for _ in 0..(4 * n).max(100) {
                if rr <= stop {
                    break;
                }
                apply(&p, &mut ap);
                let alpha = rr / dot(&p, &ap);
                for s in 0..n {
                    u[s] += alpha * p[s];
                    r[s] -= alpha * ap[s];
                }
                let rr_new = dot(&r, &r);
                let beta = rr_new / rr;
                for s in 0..n {
                    p[s] = r[s] + beta * p[s];
                }
                rr = rr_new;
            }
            for (s, &k) in interior.iter().enumerate() {
                x[k * st + comp] = u[s];
            }
        }
    }
}

/// Result of one seeded run.
struct Run {
    state: State,
    history: Vec<f64>,
    converged: bool,
    rematch_events: usize,
}

fn run(p: &Problem, mut s: State, cfg: &MinimizeConfig) -> Result<Run> {
    let mut e_prev = p.energy(&s);
    if !e_prev.is_finite() {
        return Err(Error::Diverged(format!("initial energy is {e_prev}")));
    }
    let mut history = vec![e_prev];
    let mut converged = e_prev == 0.0;
    let mut rematch_events = 0;
    let mut backup = s.clone();
    let mut sweep = 0;
    let mut buf = Vec::new();
    let mut costs = Vec::new();
    while !converged && sweep < cfg.max_sweeps {
        sweep += 1;
        backup.x.copy_from_slice(&s.x);
        p.sweep(&mut s, cfg.omega, &mut buf);
        let mut e = p.energy_with(&s, &mut costs);
        if !e.is_finite() {
            return Err(Error::Diverged(format!("energy became {e} at sweep {sweep}")));
        }
        if e > e_prev {
            if e - e_prev > ROUNDING_RISE * e_prev {
                return Err(Error::Diverged(format!(
                    "energy rose from {e_prev:e} to {e:e} at sweep {sweep}"
                )));
            }
            // The sweep is at the rounding floor of the fixed-matching
            // quadratic: undo it and stop.
            s.x.copy_from_slice(&backup.x);
            converged = p.rematch(&mut s) == 0;
            if !converged {
                rematch_events += 1;
                let e_re = p.energy(&s);
                history.push(e_re);
                e_prev = e_re;
                continue;
            }
            break;
        }
        let small = e_prev == 0.0 || (e_prev - e) <= cfg.energy_tol * e_prev;
        if sweep % cfg.match_refresh == 0 || small {
            let changed = p.rematch(&mut s);
            if changed > 0 {
                rematch_events += 1;
                e = p.energy(&s);
            } else if small {
                converged = true;
            }
        }
        history.push(e);
        e_prev = e;
    }
    Ok(Run {
        state: s,
        history,
        converged,
        rematch_events,
    })
}

/// Minimizes the energy over fields with the given value at every boundary
/// node of `domain`; `init`, when given, seeds the first restart and must
/// agree with the boundary data.
pub fn minimize(
    domain: &GridDomain,
    boundary: &[(usize, QPoint)],
    config: &MinimizeConfig,
    init: Option<&QField>,
) -> Result<(QField, MinimizeReport)> {
    config.validate()?;
    let expected: Vec<usize> = domain.boundary_indices().collect();
    let mut given: Vec<usize> = boundary.iter().map(|(k, _)| *k).collect();
    given.sort_unstable();
    if given != expected {
        return Err(Error::Mismatch(format!(
            "boundary data covers {} nodes but the domain has {} boundary nodes",
            given.len(),
            expected.len()
        )));
    }
    let (q, dim) = (boundary[0].1.q(), boundary[0].1.dim());
    if boundary.iter().any(|(_, v)| v.q() != q || v.dim() != dim) {
        return Err(Error::Mismatch("boundary values have differing (q, dim)".into()));
    }
    let st = q * dim;
    let mut bvals = vec![0.0; domain.len() * st];
    for (k, v) in boundary {
        bvals[k * st..(k + 1) * st].copy_from_slice(v.coords());
    }
    if let Some(f) = init {
        if f.domain() != domain || f.q() != q || f.dim() != dim {
            return Err(Error::Mismatch("initial field lives on a different domain or space".into()));
        }
        for (k, v) in boundary {
            if f.value(*k) != *v {
                return Err(Error::Mismatch(format!("initial field disagrees with the boundary at node {k}")));
            }
        }
    }

    let p = Problem::new(domain, q, dim);
    let mut best: Option<(usize, Run)> = None;
    let mut restart_energies = Vec::with_capacity(config.restarts);
    for r in 0..config.restarts {
        let start = match (r, init) {
            (0, Some(f)) => p.state_from(f.raw().to_vec()),
            _ => p.initial_state(&bvals, config.init, config.seed.wrapping_add(r as u64), r),
        };
        let result = run(&p, start, config)?;
        let e = *result.history.last().expect("history starts with the initial energy");
        restart_energies.push(e);
        if best.as_ref().is_none_or(|(_, b)| e < *b.history.last().unwrap()) {
            best = Some((r, result));
        }
    }
    let (best_restart, result) = best.expect("at least one restart");
    let field = QField::from_raw(domain.clone(), q, dim, result.state.x)?;
    let stationarity = stationarity_report(&field, config.report_bumps)?;
    let sweeps: Vec<f64> = (0..result.history.len()).map(|k| k as f64).collect();
    let mut energy_history = CurveSeries::new("sweep", sweeps)?;
    let final_energy = *result.history.last().unwrap();
    energy_history.push_column("energy", result.history)?;
    let energy_history = energy_history
        .with_meta("seed", config.seed.wrapping_add(best_restart as u64))
        .with_meta("h", domain.h());
    Ok((
        field,
        MinimizeReport {
            sweeps_used: energy_history.len() - 1,
            energy_history,
            final_energy,
            final_outer_residual: stationarity.max_outer,
            final_inner_residual: stationarity.max_inner,
            converged: result.converged,
            rematch_events: result.rematch_events,
            restart_energies,
            best_restart,
            stationarity,
        },
    ))
}

/// The boundary trace of a field, as accepted by [`minimize`].
pub fn boundary_of(f: &QField) -> Vec<(usize, QPoint)> {
    f.trace()
}
