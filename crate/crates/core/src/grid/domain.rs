use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which nodes of the square lattice belong to the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mask", rename_all = "lowercase")]
pub enum Mask {
    /// Nodes with `|x − center| ≤ radius`.
    Disk { radius: f64 },
    /// Every lattice node.
    Square,
}

/// Role of a node in the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Boundary,
    Outside,
}

/// Uniform lattice `center + h·(i, j)`, `|i| ≤ n_half`, `|j| ≤ ny_half`,
/// restricted by a mask. `ny_half = 0` gives a 1-D grid on the x-axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    center: [f64; 2],
    h: f64,
    n_half: usize,
    ny_half: usize,
    mask: Mask,
    kinds: Vec<NodeKind>,
}

/// Lattice coordinates of a node.
pub type Node = (i64, i64);

impl GridDomain {
    pub fn new(center: [f64; 2], h: f64, n_half: usize, ny_half: usize, mask: Mask) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid grid spacing {h} or center")));
        }
        if n_half == 0 {
            return Err(Error::InvalidInput("grid needs n_half >= 1".into()));
        }
        if let Mask::Disk { radius } = mask {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Error::InvalidInput(format!("invalid disk radius {radius}")));
            }
        }
        let mut d = Self {
            center,
            h,
            n_half,
            ny_half,
            mask,
            kinds: Vec::new(),
        };
        d.kinds = d.classify();
        if !d.kinds.contains(&NodeKind::Interior) {
            return Err(Error::InvalidInput("grid has no interior node".into()));
        }
        Ok(d)
    }

    /// Disk of the given radius resolved by `cells` spacings per radius.
    pub fn disk(center: [f64; 2], radius: f64, cells: usize) -> Result<Self> {
        Self::new(center, radius / cells as f64, cells, cells, Mask::Disk { radius })
    }

    /// Full square `[−N h, N h]²`.
    pub fn square(center: [f64; 2], h: f64, n_half: usize) -> Result<Self> {
        Self::new(center, h, n_half, n_half, Mask::Square)
    }

    /// Interval `[c − N h, c + N h]` on the x-axis.
    pub fn interval(center: f64, h: f64, n_half: usize) -> Result<Self> {
        Self::new([center, 0.0], h, n_half, 0, Mask::Square)
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_half(&self) -> usize {
        self.n_half
    }

    pub fn ny_half(&self) -> usize {
        self.ny_half
    }

    pub fn mask(&self) -> Mask {
        self.mask
    }

    pub fn is_1d(&self) -> bool {
        self.ny_half == 0
    }

    pub fn nx(&self) -> usize {
        2 * self.n_half + 1
    }

    pub fn ny(&self) -> usize {
        2 * self.ny_half + 1
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Radius of the largest centered disk (interval) covered by the mask.
    pub fn radius(&self) -> f64 {
        let box_r = self.h * self.n_half.min(if self.is_1d() { self.n_half } else { self.ny_half }) as f64;
        match self.mask {
            Mask::Disk { radius } => radius.min(box_r),
            Mask::Square => box_r,
        }
    }

    pub fn index(&self, node: Node) -> Option<usize> {
        let (i, j) = node;
        let (n, m) = (self.n_half as i64, self.ny_half as i64);
        if i.abs() > n || j.abs() > m {
            return None;
        }
        Some(((j + m) as usize) * self.nx() + (i + n) as usize)
    }

    pub fn node(&self, idx: usize) -> Node {
        let i = (idx % self.nx()) as i64 - self.n_half as i64;
        let j = (idx / self.nx()) as i64 - self.ny_half as i64;
        (i, j)
    }

    pub fn position(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.node(idx);
        self.node_position((i, j))
    }

    pub fn node_position(&self, (i, j): Node) -> [f64; 2] {
        [self.center[0] + self.h * i as f64, self.center[1] + self.h * j as f64]
    }

    /// Index of the `+e_axis` neighbor, if it exists in the lattice.
    pub fn forward(&self, idx: usize, axis: usize) -> Option<usize> {
        let (i, j) = self.node(idx);
        match axis {
            0 => self.index((i + 1, j)),
            _ if self.is_1d() => None,
            _ => self.index((i, j + 1)),
        }
    }

    /// Index of the `−e_axis` neighbor, if it exists in the lattice.
    pub fn backward(&self, idx: usize, axis: usize) -> Option<usize> {
        let (i, j) = self.node(idx);
        match axis {
            0 => self.index((i - 1, j)),
            _ if self.is_1d() => None,
            _ => self.index((i, j - 1)),
        }
    }

    pub fn axes(&self) -> usize {
        if self.is_1d() {
            1
        } else {
            2
        }
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        self.kinds[idx]
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.kinds[idx] != NodeKind::Outside
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.kinds[idx] == NodeKind::Interior
    }

    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.is_active(k))
    }

    pub fn boundary_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.kinds[k] == NodeKind::Boundary)
    }

    pub fn interior_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.kinds[k] == NodeKind::Interior)
    }

    pub fn active_count(&self) -> usize {
        self.active_indices().count()
    }

    /// Nearest lattice node to a point (clamped to the lattice).
    pub fn nearest_node(&self, x: [f64; 2]) -> Node {
        let i = ((x[0] - self.center[0]) / self.h).round() as i64;
        let j = if self.is_1d() {
            0
        } else {
            ((x[1] - self.center[1]) / self.h).round() as i64
        };
        let (n, m) = (self.n_half as i64, self.ny_half as i64);
        (i.clamp(-n, n), j.clamp(-m, m))
    }

    /// Whether the closed ball `B_r(x)` lies in the domain with at least
    /// `margin` to spare.
    pub fn contains_ball(&self, x: [f64; 2], r: f64, margin: f64) -> bool {
        let dx = x[0] - self.center[0];
        let dy = if self.is_1d() { 0.0 } else { x[1] - self.center[1] };
        let lim_x = self.h * self.n_half as f64;
        let lim_y = self.h * self.ny_half as f64;
        let reach = r + margin;
        let in_box = dx.abs() + reach <= lim_x * (1.0 + 1e-12)
            && (self.is_1d() || dy.abs() + reach <= lim_y * (1.0 + 1e-12));
        match self.mask {
            Mask::Square => in_box,
            Mask::Disk { radius } => in_box && dx.hypot(dy) + reach <= radius * (1.0 + 1e-12),
        }
    }

    fn in_mask(&self, idx: usize) -> bool {
        match self.mask {
            Mask::Square => true,
            Mask::Disk { radius } => {
                let (i, j) = self.node(idx);
                let r = self.h * ((i * i + j * j) as f64).sqrt();
                r <= radius * (1.0 + 1e-12)
            }
        }
    }

    fn classify(&self) -> Vec<NodeKind> {
        let inside: Vec<bool> = (0..self.len()).map(|k| self.in_mask(k)).collect();
        (0..self.len())
            .map(|k| {
                if !inside[k] {
                    return NodeKind::Outside;
                }
                let all_neighbors = (0..self.axes()).all(|a| {
                    let f = self.forward(k, a).is_some_and(|n| inside[n]);
                    let b = self.backward(k, a).is_some_and(|n| inside[n]);
                    f && b
                });
                if all_neighbors {
                    NodeKind::Interior
                } else {
                    NodeKind::Boundary
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_classification() {
        let d = GridDomain::disk([0.0, 0.0], 1.0, 4).unwrap();
        assert_eq!(d.h(), 0.25);
        assert_eq!(d.kind(d.index((0, 0)).unwrap()), NodeKind::Interior);
        assert_eq!(d.kind(d.index((4, 0)).unwrap()), NodeKind::Boundary);
        assert_eq!(d.kind(d.index((4, 4)).unwrap()), NodeKind::Outside);
        for k in d.boundary_indices() {
            let neighbors_outside = (0..2).any(|a| {
                d.forward(k, a).is_none_or(|n| !d.is_active(n))
                    || d.backward(k, a).is_none_or(|n| !d.is_active(n))
            });
            assert!(neighbors_outside);
        }
    }

    #[test]
    fn index_round_trip() {
        let d = GridDomain::square([1.0, -2.0], 0.5, 3).unwrap();
        for k in 0..d.len() {
            assert_eq!(d.index(d.node(k)), Some(k));
        }
        assert_eq!(d.position(d.index((1, -1)).unwrap()), [1.5, -2.5]);
        assert_eq!(d.nearest_node([1.74, -2.0]), (1, 0));
    }

    #[test]
    fn one_dimensional() {
        let d = GridDomain::interval(0.0, 0.1, 10).unwrap();
        assert!(d.is_1d());
        assert_eq!(d.len(), 21);
        assert_eq!(d.boundary_indices().count(), 2);
        assert!(d.contains_ball([0.5, 0.0], 0.3, 0.1));
        assert!(!d.contains_ball([0.5, 0.0], 0.5, 0.1));
    }
}
