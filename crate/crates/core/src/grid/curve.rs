use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Sampled scalar curves sharing one abscissa.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSeries {
    pub abscissa_name: String,
    pub abscissae: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
    pub metadata: BTreeMap<String, String>,
}

impl CurveSeries {
    pub fn new(abscissa_name: &str, abscissae: Vec<f64>) -> Result<Self> {
        if abscissae.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(format!(
                "{abscissa_name} values must be strictly increasing"
            )));
        }
        Ok(Self {
            abscissa_name: abscissa_name.to_string(),
            abscissae,
            columns: Vec::new(),
            metadata: BTreeMap::new(),
        })
    }

    pub fn push_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.abscissae.len() {
            return Err(Error::Mismatch(format!(
                "column {name} has {} values for {} abscissae",
                values.len(),
                self.abscissae.len()
            )));
        }
        self.columns.push((name.to_string(), values));
        Ok(())
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.abscissae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissae.is_empty()
    }

    /// Smallest forward difference `c[k+1] − c[k]` of a column, ignoring
    /// non-finite entries; `+inf` when there are fewer than two.
    pub fn min_forward_difference(&self, name: &str) -> Option<f64> {
        let c = self.column(name)?;
        Some(
            c.windows(2)
                .filter(|w| w[0].is_finite() && w[1].is_finite())
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min),
        )
    }

    /// Largest drop `max_{j<k} (c[j] − c[k])` over all ordered pairs.
    pub fn max_drop(&self, name: &str) -> Option<f64> {
        let c = self.column(name)?;
        let mut running_max = f64::NEG_INFINITY;
        let mut drop = 0.0f64;
        for &v in c.iter().filter(|v| v.is_finite()) {
            drop = drop.max(running_max - v);
            running_max = running_max.max(v);
        }
        Some(drop)
    }
}

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_and_differences() {
        assert!(CurveSeries::new("r", vec![0.1, 0.1]).is_err());
        let mut c = CurveSeries::new("r", vec![0.1, 0.2, 0.3]).unwrap();
        assert!(c.push_column("I", vec![1.0]).is_err());
        c.push_column("I", vec![1.0, 0.8, 1.5]).unwrap();
        assert!((c.min_forward_difference("I").unwrap() + 0.2).abs() < 1e-15);
        assert!((c.max_drop("I").unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }
}
