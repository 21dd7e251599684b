use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qvlab_core::io::{read_boundary, read_field, write_curve_csv, write_field, write_json};
use qvlab_core::minimizer::{minimize, InitKind, MinimizeConfig};
use serde::Serialize;

use crate::args::GridArgs;
use crate::provenance::{provenance, Report};
use crate::{input, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitArg {
    Cone,
    Harmonic,
}

#[derive(Args, Debug, Serialize)]
pub struct MinimizeArgs {
    /// Take the domain and boundary values from this field file.
    #[arg(long, conflicts_with = "boundary")]
    pub trace_of: Option<PathBuf>,
    /// Boundary file (list of node index and value) on the grid given by
    /// the grid options.
    #[arg(long)]
    pub boundary: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50_000)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub energy_tol: f64,
    #[arg(long, default_value_t = 10)]
    pub match_refresh: usize,
    /// Over-relaxation factor in (0, 2).
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, value_enum, default_value_t = InitArg::Cone)]
    pub init: InitArg,
    #[arg(long, default_value_t = 5)]
    pub report_bumps: usize,
    /// Minimized field.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON report.
    #[arg(long)]
    pub report: PathBuf,
    /// Energy history CSV; defaults to the report path with a `.csv`
    /// extension.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

pub fn run(a: &MinimizeArgs) -> Result<(), CliError> {
    let (domain, boundary) = match (&a.trace_of, &a.boundary) {
        (Some(p), _) => {
            let f = input(p, read_field(p))?;
            (f.domain().clone(), f.trace())
        }
        (None, Some(p)) => {
            let b = input(p, read_boundary(p))?;
            (a.grid.planar()?, b)
        }
        (None, None) => return Err(CliError::Usage("minimize needs --trace-of or --boundary".into())),
    };
    if boundary.is_empty() {
        return Err(CliError::Usage("boundary data is empty".into()));
    }
    let cfg = MinimizeConfig {
        max_sweeps: a.max_sweeps,
        energy_tol: a.energy_tol,
        match_refresh: a.match_refresh,
        seed: a.seed,
        restarts: a.restarts,
        omega: a.omega,
        report_bumps: a.report_bumps,
        init: match a.init {
            InitArg::Cone => InitKind::Cone,
            InitArg::Harmonic => InitKind::Harmonic,
        },
    };
    let (field, report) = minimize(&domain, &boundary, &cfg, None)?;
    let prov = provenance("minimize", a);
    let mut history = report.energy_history.clone();
    for (k, v) in &prov {
        history.metadata.insert(k.clone(), v.clone());
    }
    let history_path = a.history.clone().unwrap_or_else(|| a.report.with_extension("csv"));
    write_field(&a.out, &field, prov.clone())?;
    write_json(
        &a.report,
        &Report {
            provenance: &prov,
            report: &report,
        },
    )?;
    write_curve_csv(&history_path, &history)?;
    Ok(())
}
