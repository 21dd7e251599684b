use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qvlab_core::grid::singular::default_box_scales;
use qvlab_core::grid::{
    blow_up, box_dimension, decompose, freq_curve, hopf, linspace, make_conformal, modulus_check,
    reverse_holder_check, sample_field, singular_candidates, theta_admissible_radius, theta_curve, CurveSeries,
    GridDomain, QField,
};
use qvlab_core::io::{read_field, write_curve_csv, write_field, write_json};
use serde::Serialize;

use crate::args::Point2;
use crate::provenance::{provenance, Report};
use crate::{input, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Frequency curve `D, H, I` over radii (CSV).
    Freq,
    /// `Θ(s)` about `f(x₀)` (CSV).
    Theta,
    /// Hopf differential, optionally after conformalization (JSON).
    Hopf,
    /// Hölder modulus ratios over random pairs (JSON).
    Modulus,
    /// Reverse Hölder ratios over balls (JSON).
    Rholder,
    /// Singular-set candidates and box dimension (JSON).
    Singset,
    /// Local splitting into averaged components (JSON).
    Decompose,
    /// Rescaled map about a point (field JSON).
    Blowup,
}

#[derive(Args, Debug, Serialize)]
pub struct AnalyzeArgs {
    #[arg(value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Center of the frequency balls.
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<Point2>,
    #[arg(long)]
    pub rmin: Option<f64>,
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Base point for theta, decompose and blowup.
    #[arg(long, allow_hyphen_values = true)]
    pub at: Option<Point2>,
    /// Smallest s for theta; defaults to 5h.
    #[arg(long)]
    pub smin: Option<f64>,
    /// Largest s for theta, a number or `auto` for the admissible radius.
    #[arg(long)]
    pub smax: Option<String>,
    /// Restrict theta to the closed ball of this radius about `--at`.
    #[arg(long)]
    pub region_radius: Option<f64>,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Support clustering threshold.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub freq_floor: Option<f64>,
    /// Blow-up scale.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Blow-up output disk: cells per radius.
    #[arg(long)]
    pub out_grid: Option<usize>,
    #[arg(long)]
    pub out_radius: Option<f64>,
    /// Write the conformalized field here (hopf only).
    #[arg(long)]
    pub conformal_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct HopfReport {
    sup_abs: f64,
    l1: f64,
    defined_nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    conformal: Option<ConformalSummary>,
}

#[derive(Serialize)]
struct ConformalSummary {
    sup_abs: f64,
    l1: f64,
    energy_root: f64,
    path_error: f64,
    energy_comparison: qvlab_core::grid::hopf::ConformalReport,
}

#[derive(Serialize)]
struct SingsetReport {
    tol: f64,
    freq_floor: f64,
    candidates: Vec<qvlab_core::grid::SingularCandidate>,
    box_dimension: Option<qvlab_core::grid::BoxDimension>,
    box_dimension_error: Option<String>,
}

fn write_report<T: Serialize>(a: &AnalyzeArgs, command: &str, report: &T) -> Result<(), CliError> {
    let prov = provenance(command, a);
    write_json(
        &a.out,
        &Report {
            provenance: &prov,
            report,
        },
    )?;
    Ok(())
}

fn write_curve(a: &AnalyzeArgs, command: &str, c: CurveSeries) -> Result<(), CliError> {
    let mut c = c;
    for (k, v) in provenance(command, a) {
        c.metadata.insert(k, v);
    }
    write_curve_csv(&a.out, &c)?;
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive, got {v}")))
    }
}

pub fn run(a: &AnalyzeArgs) -> Result<(), CliError> {
    let f = input(&a.field, read_field(&a.field))?;
    let command = format!("analyze {}", serde_json::to_value(a.kind).expect("kind").as_str().unwrap_or(""));
    match a.kind {
        Kind::Freq => {
            let c = freq(&f, a)?;
            write_curve(a, &command, c)
        }
        Kind::Theta => {
            let c = theta(&f, a)?;
            write_curve(a, &command, c)
        }
        Kind::Hopf => {
            let hf = hopf(&f)?;
            let conformal = match &a.conformal_out {
                Some(path) => {
                    let c = make_conformal(&f)?;
                    let hc = hopf(&c.field)?;
                    write_field(path, &c.field, provenance(&command, a))?;
                    Some(ConformalSummary {
                        sup_abs: hc.sup_abs(),
                        l1: hc.l1(),
                        energy_root: c.energy_root,
                        path_error: c.path_error,
                        energy_comparison: c.report,
                    })
                }
                None => None,
            };
            write_report(
                a,
                &command,
                &HopfReport {
                    sup_abs: hf.sup_abs(),
                    l1: hf.l1(),
                    defined_nodes: hf.defined_count(),
                    conformal,
                },
            )
        }
        Kind::Modulus => {
            let r = modulus_check(&f, a.pairs.unwrap_or(10_000), a.seed.unwrap_or(0))?;
            write_report(a, &command, &r)
        }
        Kind::Rholder => write_report(a, &command, &reverse_holder_check(&f)?),
        Kind::Singset => {
            let tol = positive("tol", a.tol.unwrap_or(1e-3))?;
            let floor = a.freq_floor.unwrap_or(0.1);
            let candidates = singular_candidates(&f, tol, floor)?;
            let d = f.domain();
            let scales = default_box_scales(2.0 * d.radius(), d.h());
            let pts: Vec<[f64; 2]> = candidates.iter().map(|c| c.position).collect();
            let (bd, err) = match box_dimension(&pts, &scales) {
                Ok(b) => (Some(b), None),
                Err(e) => (None, Some(e.to_string())),
            };
            write_report(
                a,
                &command,
                &SingsetReport {
                    tol,
                    freq_floor: floor,
                    candidates,
                    box_dimension: bd,
                    box_dimension_error: err,
                },
            )
        }
        Kind::Decompose => {
            let at = a.at.map_or([0.0, 0.0], |p| p.0);
            let dec = decompose(&f, at, positive("tol", a.tol.unwrap_or(1e-6))?)?;
            write_report(a, &command, &dec.summary(&f)?)
        }
        Kind::Blowup => {
            let y = a.at.map_or([0.0, 0.0], |p| p.0);
            let rho = positive("rho", a.rho.ok_or_else(|| CliError::Usage("blowup needs --rho".into()))?)?;
            let out_r = positive("out-radius", a.out_radius.unwrap_or(1.0))?;
            let cells = a.out_grid.unwrap_or(64);
            let out = GridDomain::disk([0.0, 0.0], out_r, cells)?;
            let b = blow_up(&f, y, rho, &out)?;
            write_field(&a.out, &b, provenance(&command, a))?;
            Ok(())
        }
    }
}

fn freq(f: &QField, a: &AnalyzeArgs) -> Result<CurveSeries, CliError> {
    let x = a.center.map_or(f.domain().center(), |p| p.0);
    let rmin = positive("rmin", a.rmin.unwrap_or(0.05))?;
    let rmax = positive("rmax", a.rmax.unwrap_or(0.45))?;
    let steps = a.steps.unwrap_or(40);
    if steps < 1 || (steps > 1 && !(rmax > rmin)) {
        return Err(CliError::Usage("need --steps >= 1 and --rmax > --rmin".into()));
    }
    Ok(freq_curve(f, x, &linspace(rmin, rmax, steps))?)
}

fn theta(f: &QField, a: &AnalyzeArgs) -> Result<CurveSeries, CliError> {
    let x0 = a.at.ok_or_else(|| CliError::Usage("theta needs --at".into()))?.0;
    let s = sample_field(f, x0)?;
    let region = a.region_radius.map(|r| (x0, r));
    let r_s = theta_admissible_radius(f, region, &s)?;
    let h = f.domain().h();
    let smin = positive("smin", a.smin.unwrap_or(5.0 * h))?;
    let smax = match a.smax.as_deref() {
        None | Some("auto") => r_s,
        Some(v) => v
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("--smax {v:?} is neither a number nor auto")))?,
    };
    let steps = a.steps.unwrap_or(40);
    if !(smax > smin) || steps < 2 {
        return Err(CliError::Usage(format!(
            "theta needs smax > smin and --steps >= 2 (smin = {smin}, smax = {smax}, r_S = {r_s})"
        )));
    }
    let c = theta_curve(f, region, &s, &linspace(smin, smax, steps))?;
    Ok(c.with_meta("r_S", r_s).with_meta("at", format!("{},{}", x0[0], x0[1])))
}
