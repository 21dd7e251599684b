use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qvlab_core::aq::QPoint;
use qvlab_core::grid::{gen_branch_map, gen_remark_examples, RemarkExample};
use qvlab_core::io::write_field;
use serde::Serialize;

use crate::args::{FloatList, GridArgs};
use crate::provenance::provenance;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    /// `z ↦ Σ_{w^Q = z} ⟦w^p⟧`.
    Branch,
    /// 1-D two-valued `g`.
    #[value(name = "remark16-g")]
    Remark16G,
    /// 1-D four-valued `f4` with offset `--a`.
    #[value(name = "remark16-f4")]
    Remark16F4,
    /// Planar `x T₊ / x T₋`.
    Hsplit,
    /// `Σ_{w^Q = z} h(w)` with the planar split map `h`.
    Composite,
}

#[derive(Args, Debug, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub map: MapKind,
    /// Number of values (branch), or the outer branching order (composite).
    #[arg(long = "Q", default_value_t = 2)]
    pub q: usize,
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    /// Offset of the four-valued 1-D example.
    #[arg(long, default_value_t = 100.0)]
    pub a: f64,
    /// Points of T₊, `--tdim` coordinates each, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub tplus: Option<FloatList>,
    #[arg(long, allow_hyphen_values = true)]
    pub tminus: Option<FloatList>,
    #[arg(long, default_value_t = 1)]
    pub tdim: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: PathBuf,
}

fn target(list: &Option<FloatList>, dim: usize, name: &str) -> Result<QPoint, CliError> {
    let v = &list
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("--{name} is required for this map")))?
        .0;
    if dim == 0 || v.is_empty() || v.len() % dim != 0 {
        return Err(CliError::Usage(format!("--{name} needs a multiple of --tdim = {dim} values")));
    }
    Ok(QPoint::new(v.chunks(dim).map(<[f64]>::to_vec).collect())?)
}

pub fn run(a: &GenArgs) -> Result<(), CliError> {
    let field = match a.map {
        MapKind::Branch => gen_branch_map(a.q, a.p, &a.grid.planar()?)?,
        MapKind::Remark16G => gen_remark_examples(&RemarkExample::G1d, &a.grid.line()?)?,
        MapKind::Remark16F4 => gen_remark_examples(&RemarkExample::F4 { a: a.a }, &a.grid.line()?)?,
        MapKind::Hsplit => {
            let ex = RemarkExample::PlanarHSplit {
                tplus: target(&a.tplus, a.tdim, "tplus")?,
                tminus: target(&a.tminus, a.tdim, "tminus")?,
            };
            gen_remark_examples(&ex, &a.grid.planar()?)?
        }
        MapKind::Composite => {
            let ex = RemarkExample::Composite {
                q1: a.q,
                tplus: target(&a.tplus, a.tdim, "tplus")?,
                tminus: target(&a.tminus, a.tdim, "tminus")?,
            };
            gen_remark_examples(&ex, &a.grid.planar()?)?
        }
    };
    write_field(&a.out, &field, provenance("gen", a))?;
    Ok(())
}
