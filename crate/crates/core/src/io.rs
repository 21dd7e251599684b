//! File formats: field JSON, boundary JSON, curve CSV, reports and JSONL
//! logs.
//!
//! Every float is written in scientific notation with 17 significant
//! digits, which round-trips `f64` exactly; non-finite values become `null`
//! in JSON and `NaN`/`inf` in CSV.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aq::QPoint;
use crate::error::{Error, Result};
use crate::grid::{CurveSeries, GridDomain, Mask, QField};

/// serde_json formatter writing floats as `{:.16e}`.
struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{}", fmt_f64(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// `{:.16e}` for finite values; `NaN`, `inf`, `-inf` otherwise.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Compact JSON with 17-digit floats, no trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SeventeenDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

/// Writes `contents` to a sibling temporary file and renames it into
/// place, so a failed write leaves no partial output.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(contents)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::Io(e)
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = to_json_string(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// JSON-lines sink. The file is opened in append mode and every record is
/// one `write` call, so concurrent writers never interleave within a line.
pub struct JsonlWriter<W: Write> {
    out: W,
}

impl JsonlWriter<File> {
    pub fn append(path: &Path) -> Result<Self> {
        Ok(Self {
            out: OpenOptions::new().create(true).append(true).open(path)?,
        })
    }
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn write<T: Serialize + ?Sized>(&mut self, value: &T) -> Result<()> {
        let mut line = to_json_string(value)?;
        line.push('\n');
        self.out.write_all(line.as_bytes())?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        Ok(self.out.flush()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub center: [f64; 2],
    pub h: f64,
    pub n_half: usize,
    /// Absent means a square lattice (`n_half` both ways); 0 is 1-D.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny_half: Option<usize>,
    /// `"disk"` or `"square"`.
    pub mask: String,
    /// Disk radius; the half-width of the lattice for squares.
    pub radius: f64,
}

impl DomainSpec {
    pub fn of(d: &GridDomain) -> Self {
        let (mask, radius) = match d.mask() {
            Mask::Disk { radius } => ("disk", radius),
            Mask::Square => ("square", d.radius()),
        };
        Self {
            center: d.center(),
            h: d.h(),
            n_half: d.n_half(),
            ny_half: Some(d.ny_half()),
            mask: mask.into(),
            radius,
        }
    }

    pub fn build(&self) -> Result<GridDomain> {
        let mask = match self.mask.as_str() {
            "disk" => Mask::Disk { radius: self.radius },
            "square" => Mask::Square,
            m => return Err(Error::InvalidInput(format!("unknown mask {m:?}"))),
        };
        GridDomain::new(self.center, self.h, self.n_half, self.ny_half.unwrap_or(self.n_half), mask)
    }
}

/// Field file: the Q-point header, the domain and one value per active
/// node in index order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldFile {
    pub q: usize,
    pub dim: usize,
    pub domain: DomainSpec,
    pub values: Vec<QPoint>,
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

impl FieldFile {
    pub fn new(f: &QField, provenance: BTreeMap<String, String>) -> Self {
        Self {
            q: f.q(),
            dim: f.dim(),
            domain: DomainSpec::of(f.domain()),
            values: f.active_values(),
            provenance,
        }
    }

    pub fn into_field(self) -> Result<QField> {
        let d = self.domain.build()?;
        if self.values.iter().any(|v| v.q() != self.q || v.dim() != self.dim) {
            return Err(Error::Mismatch(format!("values disagree with q = {}, dim = {}", self.q, self.dim)));
        }
        QField::from_active_values(d, self.values)
    }
}

pub fn write_field(path: &Path, f: &QField, provenance: BTreeMap<String, String>) -> Result<()> {
    write_json(path, &FieldFile::new(f, provenance))
}

pub fn read_field(path: &Path) -> Result<QField> {
    read_json::<FieldFile>(path)?.into_field()
}

/// Boundary file: a list of `[node index, QPoint]` pairs.
pub fn write_boundary(path: &Path, boundary: &[(usize, QPoint)]) -> Result<()> {
    write_json(path, boundary)
}

pub fn read_boundary(path: &Path) -> Result<Vec<(usize, QPoint)>> {
    read_json(path)
}

/// CSV text: `# key = value` lines, a header row, then one row per
/// abscissa.
pub fn curve_to_csv(c: &CurveSeries) -> Result<String> {
    let mut out = String::new();
    for (k, v) in &c.metadata {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![c.abscissa_name.as_str()];
    header.extend(c.columns.iter().map(|(n, _)| n.as_str()));
    w.write_record(&header).map_err(csv_err)?;
    for (r, x) in c.abscissae.iter().enumerate() {
        let mut row = vec![fmt_f64(*x)];
        row.extend(c.columns.iter().map(|(_, v)| fmt_f64(v[r])));
        w.write_record(&row).map_err(csv_err)?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    out.push_str(&String::from_utf8(body).expect("csv writes UTF-8"));
    Ok(out)
}

pub fn write_curve_csv(path: &Path, c: &CurveSeries) -> Result<()> {
    write_atomic(path, curve_to_csv(c)?.as_bytes())
}

pub fn curve_from_csv(text: &str) -> Result<CurveSeries> {
    let mut meta = BTreeMap::new();
    let mut body = String::new();
    for line in text.lines() {
        match line.strip_prefix('#') {
            Some(m) => {
                if let Some((k, v)) = m.split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
            None => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.is_empty() {
        return Err(Error::InvalidInput("CSV has no header".into()));
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad number {cell:?} in column {}", header[c])))?;
            cols[c].push(v);
        }
    }
    let mut it = header.into_iter().zip(cols);
    let (name, xs) = it.next().expect("non-empty header");
    let mut c = CurveSeries::new(&name, xs)?;
    for (n, v) in it {
        c.push_column(&n, v)?;
    }
    c.metadata = meta;
    Ok(c)
}

pub fn read_curve_csv(path: &Path) -> Result<CurveSeries> {
    curve_from_csv(&std::fs::read_to_string(path)?)
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("CSV: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::gen_branch_map;

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = to_json_string(&[0.1, 1.0, f64::NAN]).unwrap();
        assert_eq!(s, "[1.0000000000000001e-1,1.0000000000000000e0,null]");
    }

    #[test]
    fn field_roundtrip_is_bitwise() {
        let d = GridDomain::disk([0.25, -0.5], 1.0, 12).unwrap();
        let f = gen_branch_map(3, 2, &d).unwrap();
        let text = to_json_string(&FieldFile::new(&f, BTreeMap::new())).unwrap();
        let back = serde_json::from_str::<FieldFile>(&text).unwrap().into_field().unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn curve_roundtrip_keeps_metadata_and_nan() {
        let mut c = CurveSeries::new("r", vec![0.1, 0.2]).unwrap().with_meta("tool", "x");
        c.push_column("I", vec![1.0 / 3.0, f64::NAN]).unwrap();
        let back = curve_from_csv(&curve_to_csv(&c).unwrap()).unwrap();
        assert_eq!(back.metadata, c.metadata);
        assert_eq!(back.abscissae, c.abscissae);
        assert_eq!(back.column("I").unwrap()[0], 1.0 / 3.0);
        assert!(back.column("I").unwrap()[1].is_nan());
    }
}
