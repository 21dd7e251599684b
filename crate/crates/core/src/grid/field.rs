use rayon::prelude::*;

use super::domain::GridDomain;
use crate::aq::QPoint;
use crate::error::{Error, Result};

/// A Q-point at every active node of a [`GridDomain`].
///
/// Values are stored flat, `q * dim` coordinates per lattice node, in the
/// canonical point order of [`QPoint`]. Nodes outside the mask hold zeros
/// that are never read.
#[derive(Debug, Clone, PartialEq)]
pub struct QField {
    domain: GridDomain,
    q: usize,
    dim: usize,
    coords: Vec<f64>,
}

impl QField {
    /// Samples `f` at every active node.
    pub fn from_fn<F>(domain: GridDomain, q: usize, dim: usize, f: F) -> Result<Self>
    where
        F: Fn([f64; 2]) -> Result<QPoint> + Sync,
    {
        let positions = domain.clone();
        Self::from_fn_indexed(domain, q, dim, |k| f(positions.position(k)))
    }

    /// Builds a field from per-node coordinates in any point order; each
    /// node's block is canonicalized.
    pub fn from_raw(domain: GridDomain, q: usize, dim: usize, raw: Vec<f64>) -> Result<Self> {
        let stride = q * dim;
        if raw.len() != domain.len() * stride {
            return Err(Error::Mismatch("raw field has the wrong length".into()));
        }
        let mut coords = vec![0.0; raw.len()];
        for k in domain.active_indices() {
            let v = QPoint::from_flat(q, dim, raw[k * stride..(k + 1) * stride].to_vec())?;
            coords[k * stride..(k + 1) * stride].copy_from_slice(v.coords());
        }
        Ok(Self {
            domain,
            q,
            dim,
            coords,
        })
    }

    /// Builds a field from one value per active node, in index order.
    pub fn from_active_values(domain: GridDomain, values: Vec<QPoint>) -> Result<Self> {
        let active: Vec<usize> = domain.active_indices().collect();
        if values.len() != active.len() {
            return Err(Error::Mismatch(format!(
                "{} values for {} active nodes",
                values.len(),
                active.len()
            )));
        }
        let (q, dim) = (values[0].q(), values[0].dim());
        let stride = q * dim;
        let mut coords = vec![0.0; domain.len() * stride];
        for (k, v) in active.into_iter().zip(values) {
            if v.q() != q || v.dim() != dim {
                return Err(Error::Mismatch("field values have differing (q, dim)".into()));
            }
            coords[k * stride..(k + 1) * stride].copy_from_slice(v.coords());
        }
        Ok(Self {
            domain,
            q,
            dim,
            coords,
        })
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stride(&self) -> usize {
        self.q * self.dim
    }

    /// Canonically ordered coordinates at a node.
    pub fn slice(&self, idx: usize) -> &[f64] {
        let s = self.stride();
        &self.coords[idx * s..(idx + 1) * s]
    }

    /// The value at an active node.
    pub fn value(&self, idx: usize) -> QPoint {
        debug_assert!(self.domain.is_active(idx));
        QPoint::from_flat(self.q, self.dim, self.slice(idx).to_vec()).expect("stored values are valid")
    }

    pub fn value_at(&self, node: (i64, i64)) -> Option<QPoint> {
        let k = self.domain.index(node)?;
        self.domain.is_active(k).then(|| self.value(k))
    }

    /// All active values in index order.
    pub fn active_values(&self) -> Vec<QPoint> {
        self.domain.active_indices().map(|k| self.value(k)).collect()
    }

    pub fn raw(&self) -> &[f64] {
        &self.coords
    }

    /// Applies `f` to every active value.
    pub fn map<F>(&self, q: usize, dim: usize, f: F) -> Result<QField>
    where
        F: Fn(usize, &QPoint) -> Result<QPoint> + Sync,
    {
        let src = self;
        QField::from_fn_indexed(self.domain.clone(), q, dim, |k| f(k, &src.value(k)))
    }

    pub(crate) fn from_fn_indexed<F>(domain: GridDomain, q: usize, dim: usize, f: F) -> Result<Self>
    where
        F: Fn(usize) -> Result<QPoint> + Sync,
    {
        let stride = q * dim;
        let values: Vec<Result<Option<QPoint>>> = (0..domain.len())
            .into_par_iter()
            .map(|k| if domain.is_active(k) { f(k).map(Some) } else { Ok(None) })
            .collect();
        let mut coords = vec![0.0; domain.len() * stride];
        for (k, v) in values.into_iter().enumerate() {
            if let Some(v) = v? {
                if v.q() != q || v.dim() != dim {
                    return Err(Error::Mismatch("mapped value has unexpected (q, dim)".into()));
                }
                coords[k * stride..(k + 1) * stride].copy_from_slice(v.coords());
            }
        }
        Ok(Self {
            domain,
            q,
            dim,
            coords,
        })
    }

    /// `|f|²` at every node (zero outside the mask).
    pub fn norm_sq_grid(&self) -> Vec<f64> {
        (0..self.domain.len())
            .map(|k| {
                if self.domain.is_active(k) {
                    self.slice(k).iter().map(|x| x * x).sum()
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Values of the field on its boundary nodes, in index order.
    pub fn trace(&self) -> Vec<(usize, QPoint)> {
        self.domain.boundary_indices().map(|k| (k, self.value(k))).collect()
    }

    /// Largest pointwise `G` distance to another field on the same domain.
    pub fn sup_dist(&self, other: &QField) -> Result<f64> {
        if self.domain != other.domain || self.q != other.q || self.dim != other.dim {
            return Err(Error::Mismatch("fields live on different domains or spaces".into()));
        }
        let d: Vec<f64> = self
            .domain
            .active_indices()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&k| crate::aq::dist_sq_slices(self.slice(k), other.slice(k), self.q, self.dim))
            .collect();
        Ok(d.into_iter().fold(0.0f64, f64::max).sqrt())
    }
}
