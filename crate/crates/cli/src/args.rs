//! Value types and the grid options shared by several subcommands.

use std::str::FromStr;

use clap::{Args, ValueEnum};
use qvlab_core::grid::GridDomain;
use serde::Serialize;

use crate::CliError;

/// `x,y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point2(pub [f64; 2]);

impl FromStr for Point2 {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<f64> = FloatList::from_str(s)?.0;
        match v[..] {
            [x, y] => Ok(Point2([x, y])),
            [x] => Ok(Point2([x, 0.0])),
            _ => Err(format!("expected x,y but got {s:?}")),
        }
    }
}

/// Comma-separated numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| format!("{t:?} is not a number")))
            .collect::<Result<Vec<f64>, String>>()
            .and_then(|v| {
                if v.iter().all(|x| x.is_finite()) {
                    Ok(FloatList(v))
                } else {
                    Err(format!("non-finite value in {s:?}"))
                }
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskArg {
    Disk,
    Square,
}

/// Lattice options. Planar grids use `--grid` spacings per radius; 1-D
/// grids use `--grid1d`.
#[derive(Args, Debug, Clone, Serialize)]
pub struct GridArgs {
    /// Planar grid: cells per radius.
    #[arg(long)]
    pub grid: Option<usize>,
    /// 1-D grid: cells per unit of `--radius` on each side of the center.
    #[arg(long)]
    pub grid1d: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub center: Point2,
    #[arg(long, value_enum, default_value_t = MaskArg::Disk)]
    pub mask: MaskArg,
}

impl GridArgs {
    pub fn planar(&self) -> Result<GridDomain, CliError> {
        let n = self
            .grid
            .ok_or_else(|| CliError::Usage("planar grids need --grid".into()))?;
        if n == 0 || !(self.radius > 0.0) {
            return Err(CliError::Usage("--grid and --radius must be positive".into()));
        }
        let d = match self.mask {
            MaskArg::Disk => GridDomain::disk(self.center.0, self.radius, n),
            MaskArg::Square => GridDomain::square(self.center.0, self.radius / n as f64, n),
        };
        Ok(d?)
    }

    pub fn line(&self) -> Result<GridDomain, CliError> {
        let n = self
            .grid1d
            .or(self.grid)
            .ok_or_else(|| CliError::Usage("1-D grids need --grid1d".into()))?;
        if n == 0 || !(self.radius > 0.0) {
            return Err(CliError::Usage("--grid1d and --radius must be positive".into()));
        }
        Ok(GridDomain::interval(self.center.0[0], self.radius / n as f64, n)?)
    }
}
