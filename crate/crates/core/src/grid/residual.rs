//! Discrete outer and inner first variations of the Dirichlet energy.
//!
//! The outer residual is the exact first variation of the edge energy under
//! `f ↦ f + tψ(x, f)` with the optimal edge matchings held fixed:
//! `½ d/dt Σ_e G²_e = Σ_e Σ_i ⟨Δf_i, Δψ_i⟩` (divided by `h` in 1-D).
//!
//! The inner residual discretizes
//! `2 Σ_i ⟨Df_i : Df_i Dφ⟩ − |Df|² div φ
//!   = |∂₁f|²(∂₁φ¹ − ∂₂φ²) + |∂₂f|²(∂₂φ² − ∂₁φ¹) + 2 ∂₁f·∂₂f (∂₁φ² + ∂₂φ¹)`
//! with the squared terms taken edge-wise from `G²` and the mixed term from
//! local frames. In 1-D it is `Σ_e G²_e Δφ / h²`, which telescopes exactly.

use rayon::prelude::*;
use serde::Serialize;

use super::cutoff::{dphi, phi};
use super::domain::GridDomain;
use super::energy::{edge_scale, edge_target};
use super::field::QField;
use super::frame::local_frame;
use crate::aq::{atom_radii, match_slices, QPoint, SupportAtom};
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Radial bump `η(x) = φ(|x − c| / ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Bump {
    pub fn new(center: [f64; 2], radius: f64) -> Self {
        Self { center, radius }
    }

    fn offset(&self, x: [f64; 2]) -> ([f64; 2], f64) {
        let v = [x[0] - self.center[0], x[1] - self.center[1]];
        (v, v[0].hypot(v[1]))
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        phi(self.offset(x).1 / self.radius)
    }

    pub fn grad(&self, x: [f64; 2]) -> [f64; 2] {
        let (v, r) = self.offset(x);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let s = dphi(r / self.radius) / (self.radius * r);
        [s * v[0], s * v[1]]
    }

    pub fn touches(&self, x: [f64; 2]) -> bool {
        self.offset(x).1 < self.radius
    }

    fn check_inside(&self, d: &GridDomain) -> Result<()> {
        if !(self.radius > 0.0) || !d.contains_ball(self.center, self.radius, d.h()) {
            return Err(Error::SupportViolation(format!(
                "test field support B_{}({:?}) is not strictly inside the grid",
                self.radius, self.center
            )));
        }
        Ok(())
    }
}

/// Outer variation fields `ψ(x, u)`.
#[derive(Debug, Clone, PartialEq)]
pub enum TestField {
    /// `η(x) u`.
    Linear { bump: Bump },
    /// `η(x) θ(|u|/δ) u` with `θ(t) = φ(t/2)`.
    Truncated { bump: Bump, delta: f64 },
    /// `η(x) (u − s_i) φ(|u − s_i| / (ε r_i))` for `u` in the `i`-th
    /// projection ball of `S`, zero elsewhere.
    RetractionCutoff { bump: Bump, target: QPoint, eps: f64 },
}

impl TestField {
    pub fn bump(&self) -> &Bump {
        match self {
            Self::Linear { bump } | Self::Truncated { bump, .. } | Self::RetractionCutoff { bump, .. } => bump,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear { .. } => "outer_linear",
            Self::Truncated { .. } => "outer_truncated",
            Self::RetractionCutoff { .. } => "outer_retraction",
        }
    }

    fn prepare(&self) -> Result<PreparedOuter> {
        match self {
            Self::RetractionCutoff { target, eps, .. } => {
                if !(*eps > 0.0 && *eps < 0.25) {
                    return Err(Error::ParameterOutOfRange(format!("retraction eps must lie in (0, 1/4), got {eps}")));
                }
                let atoms = target.support(0.0);
                let radii = atom_radii(&atoms);
                Ok(PreparedOuter { atoms, radii })
            }
            Self::Truncated { delta, .. } if !(*delta > 0.0) => {
                Err(Error::ParameterOutOfRange(format!("truncation delta must be positive, got {delta}")))
            }
            _ => Ok(PreparedOuter {
                atoms: Vec::new(),
                radii: Vec::new(),
            }),
        }
    }

    fn eval(&self, prep: &PreparedOuter, x: [f64; 2], u: &[f64], out: &mut [f64]) {
        let eta = self.bump().value(x);
        out.iter_mut().for_each(|o| *o = 0.0);
        if eta == 0.0 {
            return;
        }
        match self {
            Self::Linear { .. } => {
                for (o, v) in out.iter_mut().zip(u) {
                    *o = eta * v;
                }
            }
            Self::Truncated { delta, .. } => {
                let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                let w = eta * phi(n / (2.0 * delta));
                for (o, v) in out.iter_mut().zip(u) {
                    *o = w * v;
                }
            }
            Self::RetractionCutoff { eps, .. } => {
                for (a, r) in prep.atoms.iter().zip(&prep.radii) {
                    let dist = crate::aq::sq_dist(u, &a.location).sqrt();
                    let ball = eps * r;
                    if dist < ball {
                        let w = eta * phi(dist / ball);
                        for ((o, v), s) in out.iter_mut().zip(u).zip(&a.location) {
                            *o = w * (v - s);
                        }
                        return;
                    }
                }
            }
        }
    }
}

struct PreparedOuter {
    atoms: Vec<SupportAtom>,
    radii: Vec<f64>,
}

/// Inner variation vector fields `φ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VectorTestField {
    /// `η(x) (x − c)`.
    Radial { bump: Bump },
    /// `η(x) e_axis`.
    Coordinate { bump: Bump, axis: usize },
}

impl VectorTestField {
    pub fn bump(&self) -> &Bump {
        match self {
            Self::Radial { bump } | Self::Coordinate { bump, .. } => bump,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Radial { .. } => "inner_radial".into(),
            Self::Coordinate { axis, .. } => format!("inner_bump_e{}", axis + 1),
        }
    }

    pub fn value(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            Self::Radial { bump } => {
                let e = bump.value(x);
                [e * (x[0] - bump.center[0]), e * (x[1] - bump.center[1])]
            }
            Self::Coordinate { bump, axis } => {
                let e = bump.value(x);
                let mut v = [0.0, 0.0];
                v[*axis] = e;
                v
            }
        }
    }

    /// `jac[b][a] = ∂_a φ^b`.
    pub fn jacobian(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        match self {
            Self::Radial { bump } => {
                let e = bump.value(x);
                let g = bump.grad(x);
                let v = [x[0] - bump.center[0], x[1] - bump.center[1]];
                [[e + v[0] * g[0], v[0] * g[1]], [v[1] * g[0], e + v[1] * g[1]]]
            }
            Self::Coordinate { bump, axis } => {
                let g = bump.grad(x);
                let mut j = [[0.0; 2]; 2];
                j[*axis] = g;
                j
            }
        }
    }
}

fn near_support(bump: &Bump, d: &GridDomain, k: usize, n: usize) -> bool {
    let h = d.h();
    let grow = Bump::new(bump.center, bump.radius + 2.0 * h);
    grow.touches(d.position(k)) || grow.touches(d.position(n))
}

/// Discrete outer first variation `O(f, ψ)`.
pub fn outer_residual(f: &QField, psi: &TestField) -> Result<f64> {
    let d = f.domain();
    psi.bump().check_inside(d)?;
    let prep = psi.prepare()?;
    let (q, dim) = (f.q(), f.dim());
    let scale = edge_scale(d);
    let mut terms: Vec<f64> = Vec::new();
    for axis in 0..d.axes() {
        let part: Vec<f64> = (0..d.len())
            .into_par_iter()
            .filter_map(|k| {
                let n = edge_target(d, k, axis)?;
                if !near_support(psi.bump(), d, k, n) {
                    return None;
                }
                let (x, y) = (f.slice(k), f.slice(n));
                let (px, py) = (d.position(k), d.position(n));
                let m = match_slices(x, y, q, dim);
                let mut a = vec![0.0; dim];
                let mut b = vec![0.0; dim];
                let mut s = 0.0;
                for i in 0..q {
                    let j = m.perm[i];
                    let (ui, vj) = (&x[i * dim..(i + 1) * dim], &y[j * dim..(j + 1) * dim]);
                    psi.eval(&prep, px, ui, &mut a);
                    psi.eval(&prep, py, vj, &mut b);
                    for c in 0..dim {
                        s += (vj[c] - ui[c]) * (b[c] - a[c]);
                    }
                }
                Some(s * scale)
            })
            .collect();
        terms.extend(part);
    }
    Ok(pairwise_sum(&terms))
}

/// Discrete inner first variation `I(f, φ)`.
pub fn inner_residual(f: &QField, field: &VectorTestField) -> Result<f64> {
    let d = f.domain();
    let bump = field.bump();
    bump.check_inside(d)?;
    let h = d.h();
    let (q, dim) = (f.q(), f.dim());
    let mut terms: Vec<f64> = Vec::new();
    for axis in 0..d.axes() {
        let part: Vec<f64> = (0..d.len())
            .into_par_iter()
            .filter_map(|k| {
                let n = edge_target(d, k, axis)?;
                if !near_support(bump, d, k, n) {
                    return None;
                }
                let g2 = crate::aq::dist_sq_slices(f.slice(k), f.slice(n), q, dim);
                let (px, py) = (d.position(k), d.position(n));
                let along = (field.value(py)[axis] - field.value(px)[axis]) / h;
                if d.is_1d() {
                    return Some(g2 * along / h);
                }
                let mid = [0.5 * (px[0] + py[0]), 0.5 * (px[1] + py[1])];
                let other = 1 - axis;
                let cross = field.jacobian(mid)[other][other];
                Some(g2 * (along - cross))
            })
            .collect();
        terms.extend(part);
    }
    if !d.is_1d() {
        let part: Vec<f64> = (0..d.len())
            .into_par_iter()
            .filter_map(|k| {
                let p = d.position(k);
                let corner = [p[0] + 0.5 * h, p[1] + 0.5 * h];
                if !Bump::new(bump.center, bump.radius + 2.0 * h).touches(corner) {
                    return None;
                }
                let fr = local_frame(f, k).ok()?;
                let jac = field.jacobian(corner);
                let mut dot = 0.0;
                for (a, b) in fr.d1().iter().zip(fr.d2().expect("2-D frame")) {
                    for (x, y) in a.iter().zip(b) {
                        dot += x * y;
                    }
                }
                Some(2.0 * h * h * dot * (jac[1][0] + jac[0][1]))
            })
            .collect();
        terms.extend(part);
    }
    Ok(pairwise_sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generators::{gen_remark_examples, RemarkExample};

    #[test]
    fn constant_field_has_zero_outer_residual() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 16).unwrap();
        let f = QField::from_fn(d, 2, 1, |_| QPoint::new(vec![vec![1.0], vec![-2.0]])).unwrap();
        let b = Bump::new([0.1, 0.0], 0.5);
        for psi in [
            TestField::Linear { bump: b },
            TestField::Truncated { bump: b, delta: 0.5 },
            TestField::RetractionCutoff {
                bump: b,
                target: QPoint::new(vec![vec![1.0], vec![-2.0]]).unwrap(),
                eps: 0.2,
            },
        ] {
            assert_eq!(outer_residual(&f, &psi).unwrap(), 0.0);
        }
    }

    #[test]
    fn support_must_be_inside() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 16).unwrap();
        let f = QField::from_fn(d, 1, 1, |x| QPoint::new(vec![vec![x[0]]])).unwrap();
        let psi = TestField::Linear {
            bump: Bump::new([0.5, 0.0], 0.5),
        };
        assert!(matches!(outer_residual(&f, &psi), Err(Error::SupportViolation(_))));
    }

    #[test]
    fn one_dimensional_g_fails_inner_variation() {
        let d = GridDomain::interval(0.0, 1e-3, 1000).unwrap();
        let g = gen_remark_examples(&RemarkExample::G1d, &d).unwrap();
        let bump = Bump::new([0.0, 0.0], 0.5);
        let i = inner_residual(&g, &VectorTestField::Coordinate { bump, axis: 0 }).unwrap();
        assert!((i + 2.0).abs() < 1e-9, "{i}");
        let o = outer_residual(&g, &TestField::Linear { bump }).unwrap();
        assert!(o.abs() < 1e-9, "{o}");
    }

    #[test]
    fn bump_gradient_matches_difference_quotient() {
        let b = Bump::new([0.2, -0.1], 0.4);
        let x = [0.45, 0.05];
        let g = b.grad(x);
        let e = 1e-7;
        let fx = (b.value([x[0] + e, x[1]]) - b.value([x[0] - e, x[1]])) / (2.0 * e);
        let fy = (b.value([x[0], x[1] + e]) - b.value([x[0], x[1] - e])) / (2.0 * e);
        assert!((g[0] - fx).abs() < 1e-6 && (g[1] - fy).abs() < 1e-6);
    }
}
