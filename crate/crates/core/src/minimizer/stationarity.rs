use serde::Serialize;

use crate::error::Result;
use crate::grid::{inner_residual, outer_residual, Bump, QField, TestField, VectorTestField};

/// Residual tolerance for fields of unit-order energy: the closed-form
/// stationary examples measure `|residual| ≈ 3h` over the preset bank.
pub fn residual_threshold(h: f64) -> f64 {
    10.0 * h
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualEntry {
    pub test_field: String,
    pub bump_center: [f64; 2],
    pub bump_radius: f64,
    pub value: f64,
}

/// Outer and inner residuals over the preset test-field bank.
#[derive(Debug, Clone, Serialize)]
pub struct StationarityReport {
    pub h: f64,
    pub threshold: f64,
    pub outer: Vec<ResidualEntry>,
    pub inner: Vec<ResidualEntry>,
    pub max_outer: f64,
    pub max_inner: f64,
}

impl StationarityReport {
    pub fn passes(&self) -> bool {
        self.max_outer <= self.threshold && self.max_inner <= self.threshold
    }

    /// Largest `|residual| / threshold`.
    pub fn worst_ratio(&self) -> f64 {
        self.max_outer.max(self.max_inner) / self.threshold
    }
}

/// `count` bumps of radius `R/2`: one at the grid center, the rest evenly
/// spaced on the circle of radius `R/4` (the points `±R/4` on a line in 1-D).
pub fn preset_bumps(f: &QField, count: usize) -> Vec<Bump> {
    let d = f.domain();
    let (c, r) = (d.center(), d.radius());
    let rho = 0.5 * r - d.h();
    let mut out = vec![Bump::new(c, rho)];
    for k in 1..count {
        let p = if d.is_1d() {
            let s = if k % 2 == 1 { 1.0 } else { -1.0 };
            [c[0] + s * 0.25 * r, c[1]]
        } else {
            let a = 2.0 * std::f64::consts::PI * (k - 1) as f64 / (count - 1) as f64;
            [c[0] + 0.25 * r * a.cos(), c[1] + 0.25 * r * a.sin()]
        };
        out.push(Bump::new(p, rho));
    }
    out
}

/// Residuals of `f` for every preset bump against the linear, truncated and
/// retraction outer fields and the radial and coordinate inner fields.
pub fn stationarity_report(f: &QField, count: usize) -> Result<StationarityReport> {
    let d = f.domain();
    let scale = d
        .active_indices()
        .flat_map(|k| f.slice(k).chunks_exact(f.dim()).map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt()))
        .fold(0.0, f64::max);
    let delta = if scale > 0.0 { 0.5 * scale } else { 1.0 };
    let mut outer = Vec::new();
    let mut inner = Vec::new();
    for bump in preset_bumps(f, count.max(1)) {
        let k = d
            .index(d.nearest_node(bump.center))
            .expect("bump center lies in the lattice");
        let target = f.value(k);
        let outer_fields = [
            TestField::Linear { bump },
            TestField::Truncated { bump, delta },
            TestField::RetractionCutoff { bump, target, eps: 0.125 },
        ];
        for psi in outer_fields {
            outer.push(ResidualEntry {
                test_field: psi.name().to_string(),
                bump_center: bump.center,
                bump_radius: bump.radius,
                value: outer_residual(f, &psi)?,
            });
        }
        let mut inner_fields = vec![VectorTestField::Radial { bump }, VectorTestField::Coordinate { bump, axis: 0 }];
        if !d.is_1d() {
            inner_fields.push(VectorTestField::Coordinate { bump, axis: 1 });
        }
        for phi in inner_fields {
            inner.push(ResidualEntry {
                test_field: phi.name(),
                bump_center: bump.center,
                bump_radius: bump.radius,
                value: inner_residual(f, &phi)?,
            });
        }
    }
    let max_abs = |v: &[ResidualEntry]| v.iter().map(|e| e.value.abs()).fold(0.0, f64::max);
    Ok(StationarityReport {
        h: d.h(),
        threshold: residual_threshold(d.h()),
        max_outer: max_abs(&outer),
        max_inner: max_abs(&inner),
        outer,
        inner,
    })
}
