//! Text formats: Wavefront meshes, field tables as CSV, JSON run reports and
//! two-column tables for plotting.
//!
//! Meshes, reports and plot tables print numbers with 9 significant digits.
//! Field tables are read back as input to the residual suite, so they use the
//! shortest representation that parses back to the same `f64`.

use std::io::{BufRead, Write};

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::calculus::{ComplexField, ExtComplexField, Field, FieldValue, GridChart, ScalarField};
use crate::error::{Error, Result};
use crate::gauss::{GaussData, Immersion};
use crate::minimality::{
    induced_metric, ClassificationEvidence, Derived, OrderEntry, ResidualEntry, ResidualReport,
};
use crate::model::ExtComplex;
use crate::reconstruct::CongruenceResult;
use crate::scalar::Real;

pub const SIGNIFICANT_DIGITS: usize = 9;

/// Column names of a field table, in file order.
pub const FIELD_COLUMNS: [&str; 10] = [
    "u", "v", "ReF", "ImF", "h", "Reg", "Img", "r", "K", "g_chart",
];

/// `x` with 9 significant digits; `inf`, `-inf` and `nan` for non-finite values.
pub fn fmt_sig(x: f64) -> String {
    if x.is_finite() {
        format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
    } else {
        fmt_token(x)
    }
}

/// Rounds to 9 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x.is_finite() {
        fmt_sig(x).parse().unwrap_or(x)
    } else {
        x
    }
}

fn fmt_exact(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        fmt_token(x)
    }
}

fn fmt_token(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    let t = tok.trim();
    match t {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        _ => t
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: expected a number, found {t:?}"))),
    }
}

/// Polygon mesh with 0-based face indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<Vec<usize>>,
}

impl Mesh {
    /// One vertex per node and one quad per grid cell, ordered so the face
    /// normal follows `X_u × X_v`.
    pub fn grid<T: Real>(x: &Immersion<T>) -> Self {
        let ch = *x.chart();
        let vertices = ch
            .nodes()
            .map(|(i, j)| {
                let p = x.point(i, j);
                [p.x.to_f64_lossy(), p.y.to_f64_lossy(), p.z.to_f64_lossy()]
            })
            .collect();
        let mut faces = Vec::with_capacity((ch.nu - 1) * (ch.nv - 1));
        for i in 0..ch.nu - 1 {
            for j in 0..ch.nv - 1 {
                faces.push(vec![
                    ch.idx(i, j),
                    ch.idx(i + 1, j),
                    ch.idx(i + 1, j + 1),
                    ch.idx(i, j + 1),
                ]);
            }
        }
        Self { vertices, faces }
    }

    /// Indices in range, at least three distinct vertices per face, finite
    /// coordinates.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if let Some(k) = self
            .vertices
            .iter()
            .position(|v| v.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::Parse(format!("vertex {} is not finite", k + 1)));
        }
        for (k, face) in self.faces.iter().enumerate() {
            if face.len() < 3 {
                return Err(Error::Parse(format!(
                    "face {} has {} vertices",
                    k + 1,
                    face.len()
                )));
            }
            if let Some(&bad) = face.iter().find(|&&v| v >= n) {
                return Err(Error::Parse(format!(
                    "face {} references vertex {} of {n}",
                    k + 1,
                    bad + 1
                )));
            }
            let mut sorted = face.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != face.len() {
                return Err(Error::Parse(format!("face {} repeats a vertex", k + 1)));
            }
        }
        Ok(())
    }

    /// `v x y z` and `f i j k l` lines, 1-based, LF line endings.
    pub fn write_obj<W: Write>(&self, mut w: W) -> Result<()> {
        self.validate()?;
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", fmt_sig(v[0]), fmt_sig(v[1]), fmt_sig(v[2]))?;
        }
        for face in &self.faces {
            write!(w, "f")?;
            for &k in face {
                write!(w, " {}", k + 1)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads the `v`/`f` subset of Wavefront OBJ. Other statements and
    /// comments are skipped; `f` entries may carry `/vt/vn` suffixes and
    /// negative (relative) indices.
    pub fn read_obj<R: BufRead>(r: R) -> Result<Self> {
        let mut mesh = Self::default();
        for (k, line) in r.lines().enumerate() {
            let line = line?;
            let ln = k + 1;
            let mut toks = line.split_whitespace();
            match toks.next() {
                Some("v") => {
                    let c: Vec<f64> = toks.map(|t| parse_num(t, ln)).collect::<Result<_>>()?;
                    if !(3..=4).contains(&c.len()) {
                        return Err(Error::Parse(format!(
                            "line {ln}: vertex needs 3 coordinates"
                        )));
                    }
                    mesh.vertices.push([c[0], c[1], c[2]]);
                }
                Some("f") => {
                    let n = mesh.vertices.len() as i64;
                    let face = toks
                        .map(|t| {
                            let idx: i64 =
                                t.split('/').next().unwrap_or("").parse().map_err(|_| {
                                    Error::Parse(format!("line {ln}: bad face index {t:?}"))
                                })?;
                            let abs = if idx < 0 { n + idx } else { idx - 1 };
                            if idx == 0 || abs < 0 {
                                return Err(Error::Parse(format!(
                                    "line {ln}: face index {idx} out of range"
                                )));
                            }
                            Ok(abs as usize)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    mesh.faces.push(face);
                }
                _ => {}
            }
        }
        mesh.validate()?;
        Ok(mesh)
    }
}

/// Per-node fields of a sampled surface, any of which may be absent.
#[derive(Debug, Clone)]
pub struct FieldTable {
    pub chart: GridChart<f64>,
    pub f: Option<ComplexField<f64>>,
    pub h: Option<ScalarField<f64>>,
    pub g: Option<ExtComplexField<f64>>,
    pub r: Option<ScalarField<f64>>,
    pub k: Option<ScalarField<f64>>,
}

impl FieldTable {
    /// `F`, `h`, and the derived `g`, `r` and curvature `K`.
    pub fn from_immersion<T: Real>(x: &Immersion<T>) -> Result<Self> {
        let gd = GaussData::compute(x)?;
        let dv = Derived::new(x, &gd);
        let k = induced_metric(x, &gd, &dv)?.k;
        let ch = x.chart();
        let chart = GridChart::new(
            ch.u0.to_f64_lossy(),
            ch.u1.to_f64_lossy(),
            ch.v0.to_f64_lossy(),
            ch.v1.to_f64_lossy(),
            ch.nu,
            ch.nv,
        )?;
        let lower = |w: Complex<T>| Complex::new(w.re.to_f64_lossy(), w.im.to_f64_lossy());
        Ok(Self {
            chart,
            f: Some(cast(chart, x.f(), lower)),
            h: Some(cast(chart, x.h(), |v: T| v.to_f64_lossy())),
            g: Some(cast(chart, &gd.g, |w: ExtComplex<T>| ExtComplex {
                value: lower(w.value),
                inverted: w.inverted,
            })),
            r: Some(cast(chart, &gd.r, |v: T| v.to_f64_lossy())),
            k: Some(cast(chart, &k, |v: T| v.to_f64_lossy())),
        })
    }

    /// Only a Gauss map, for reconstruction input.
    pub fn from_gauss_map(g: ExtComplexField<f64>) -> Self {
        Self {
            chart: *g.chart(),
            f: None,
            h: None,
            g: Some(g),
            r: None,
            k: None,
        }
    }

    /// The immersion `(F, h)`; fails when either column is missing.
    pub fn immersion(&self) -> Result<Immersion<f64>> {
        match (&self.f, &self.h) {
            (Some(f), Some(h)) => Immersion::new(f.clone(), h.clone()),
            _ => Err(Error::InsufficientData(
                "field table has no ReF/ImF/h columns".into(),
            )),
        }
    }

    /// Writes every column of [`FIELD_COLUMNS`]; absent or invalid values are
    /// `nan`. Inverted-chart `g` values are stored as `1/g` with `g_chart`
    /// set to `inverted`, and a pole (`1/g = 0`) is written as `inf,inf`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(FIELD_COLUMNS).map_err(csv_error)?;
        let scalar = |f: &Option<ScalarField<f64>>, i, j| {
            f.as_ref().and_then(|f| f.get(i, j)).unwrap_or(f64::NAN)
        };
        for (i, j) in self.chart.nodes() {
            let f = self
                .f
                .as_ref()
                .and_then(|f| f.get(i, j))
                .unwrap_or(Complex::new(f64::NAN, f64::NAN));
            let (g, chart) = match self.g.as_ref().and_then(|g| g.get(i, j)) {
                Some(w) if w.inverted && w.value == Complex::new(0.0, 0.0) => {
                    (Complex::new(f64::INFINITY, f64::INFINITY), "inverted")
                }
                Some(w) if w.inverted => (w.value, "inverted"),
                Some(w) => (w.value, "standard"),
                None => (Complex::new(f64::NAN, f64::NAN), ""),
            };
            let nums = [
                self.chart.u(i),
                self.chart.v(j),
                f.re,
                f.im,
                scalar(&self.h, i, j),
                g.re,
                g.im,
                scalar(&self.r, i, j),
                scalar(&self.k, i, j),
            ];
            let mut record: Vec<String> = nums.iter().map(|&x| fmt_exact(x)).collect();
            record.push(chart.into());
            out.write_record(&record).map_err(csv_error)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a table written by [`write_csv`](Self::write_csv) or any CSV
    /// with a header naming a subset of [`FIELD_COLUMNS`]. `u` and `v` are
    /// required and must sample a uniform grid; rows may come in any order.
    /// A missing `g_chart` column means every `g` value is standard.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(r);
        let header = rdr.headers().map_err(csv_error)?.clone();
        let col = |name: &str| header.iter().position(|h| h == name);
        let (Some(cu), Some(cv)) = (col("u"), col("v")) else {
            return Err(Error::Parse("field table needs u and v columns".into()));
        };
        let pair = |a: &str, b: &str| match (col(a), col(b)) {
            (Some(x), Some(y)) => Ok(Some((x, y))),
            (None, None) => Ok(None),
            _ => Err(Error::Parse(format!(
                "columns {a} and {b} must appear together"
            ))),
        };
        let (cf, cg) = (pair("ReF", "ImF")?, pair("Reg", "Img")?);
        let (ch, cr, ck, cchart) = (col("h"), col("r"), col("K"), col("g_chart"));

        let mut rows = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_error)?;
            let ln = k + 2;
            let num = |c: usize| parse_num(rec.get(c).unwrap_or(""), ln);
            let opt = |c: Option<usize>| c.map(num).transpose();
            let optc = |c: Option<(usize, usize)>| -> Result<Option<Complex<f64>>> {
                c.map(|(a, b)| Ok(Complex::new(num(a)?, num(b)?)))
                    .transpose()
            };
            let inverted = match cchart.map(|c| rec.get(c).unwrap_or("")) {
                None | Some("standard") | Some("") => false,
                Some("inverted") => true,
                Some(other) => {
                    return Err(Error::Parse(format!(
                        "line {ln}: unknown g_chart {other:?}"
                    )))
                }
            };
            rows.push(Row {
                u: num(cu)?,
                v: num(cv)?,
                f: optc(cf)?,
                h: opt(ch)?,
                g: optc(cg)?,
                inverted,
                r: opt(cr)?,
                k: opt(ck)?,
            });
        }
        let chart = infer_chart(&rows)?;
        let mut slot = vec![usize::MAX; chart.len()];
        for (n, row) in rows.iter().enumerate() {
            let node = locate(&chart, row.u, row.v).ok_or_else(|| {
                Error::Parse(format!(
                    "row {} at ({}, {}) is off the grid",
                    n + 2,
                    row.u,
                    row.v
                ))
            })?;
            let k = chart.idx(node.0, node.1);
            if slot[k] != usize::MAX {
                return Err(Error::Parse(format!("row {} repeats node {node:?}", n + 2)));
            }
            slot[k] = n;
        }
        let row = |i: usize, j: usize| &rows[slot[chart.idx(i, j)]];
        let finite = |x: f64| x.is_finite().then_some(x);
        let table = Self {
            chart,
            f: cf.map(|_| {
                Field::from_fn_opt(chart, |i, j| {
                    row(i, j).f.filter(|w| w.re.is_finite() && w.im.is_finite())
                })
            }),
            h: ch.map(|_| Field::from_fn_opt(chart, |i, j| row(i, j).h.and_then(finite))),
            g: cg.map(|_| {
                restore_margin(Field::from_fn_opt(chart, |i, j| {
                    let r = row(i, j);
                    let w = r.g?;
                    if w.re.is_nan() || w.im.is_nan() {
                        None
                    } else if w.re.is_infinite() || w.im.is_infinite() {
                        Some(ExtComplex::infinity())
                    } else {
                        Some(ExtComplex {
                            value: w,
                            inverted: r.inverted,
                        })
                    }
                }))
            }),
            r: cr.map(|_| Field::from_fn_opt(chart, |i, j| row(i, j).r.and_then(finite))),
            k: ck.map(|_| {
                restore_margin(Field::from_fn_opt(chart, |i, j| {
                    row(i, j).k.and_then(finite)
                }))
            }),
        };
        Ok(table)
    }
}

/// Marks the fully invalid boundary layers of a derived field as its margin.
fn restore_margin<V: FieldValue<f64>>(f: Field<f64, V>) -> Field<f64, V> {
    let ch = *f.chart();
    let mut margin = 0;
    while 2 * (margin + 1) < ch.nu.min(ch.nv)
        && ch
            .nodes()
            .filter(|&n| !ch.is_interior(n, margin + 1))
            .all(|(i, j)| !f.is_valid(i, j))
    {
        margin += 1;
    }
    f.with_margin(margin)
}

struct Row {
    u: f64,
    v: f64,
    f: Option<Complex<f64>>,
    h: Option<f64>,
    g: Option<Complex<f64>>,
    inverted: bool,
    r: Option<f64>,
    k: Option<f64>,
}

fn cast<T: Real, V: FieldValue<T>, W: FieldValue<f64>>(
    chart: GridChart<f64>,
    f: &Field<T, V>,
    mut m: impl FnMut(V) -> W,
) -> Field<f64, W> {
    Field::from_fn_opt(chart, |i, j| f.get(i, j).map(&mut m)).with_margin(f.margin())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        kind => Error::Parse(format!("{kind:?}")),
    }
}

fn infer_chart(rows: &[Row]) -> Result<GridChart<f64>> {
    let axis = |get: fn(&Row) -> f64| -> Result<Vec<f64>> {
        let mut xs: Vec<f64> = rows.iter().map(get).collect();
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse("grid coordinates must be finite".into()));
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        Ok(xs)
    };
    let (us, vs) = (axis(|r| r.u)?, axis(|r| r.v)?);
    if us.len() * vs.len() != rows.len() {
        return Err(Error::Parse(format!(
            "{} rows do not fill a {}x{} grid",
            rows.len(),
            us.len(),
            vs.len()
        )));
    }
    let (Some(&u0), Some(&u1), Some(&v0), Some(&v1)) =
        (us.first(), us.last(), vs.first(), vs.last())
    else {
        return Err(Error::Parse("field table has no rows".into()));
    };
    let chart = GridChart::new(u0, u1, v0, v1, us.len(), vs.len())?;
    let uniform = |xs: &[f64], at: &dyn Fn(usize) -> f64, h: f64| {
        xs.iter()
            .enumerate()
            .all(|(k, &x)| (x - at(k)).abs() <= 1e-6 * h)
    };
    if !uniform(&us, &|k| chart.u(k), chart.hu()) || !uniform(&vs, &|k| chart.v(k), chart.hv()) {
        return Err(Error::Parse(
            "grid coordinates are not uniformly spaced".into(),
        ));
    }
    Ok(chart)
}

fn locate(chart: &GridChart<f64>, u: f64, v: f64) -> Option<(usize, usize)> {
    let (i, j) = chart.nearest(u, v);
    ((u - chart.u(i)).abs() <= 1e-6 * chart.hu() && (v - chart.v(j)).abs() <= 1e-6 * chart.hv())
        .then_some((i, j))
}

/// One residual entry with its verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    #[serde(flatten)]
    pub entry: ResidualEntry,
    pub relative: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityRecord {
    pub fn from_entry(entry: &ResidualEntry, tol: f64) -> Self {
        Self {
            entry: entry.clone(),
            relative: entry.relative(),
            tolerance: tol,
            passed: entry.passes(tol),
        }
    }
}

/// Residuals of one refinement level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub resolution: [usize; 2],
    pub spacing: f64,
    pub identities: Vec<IdentityRecord>,
}

impl LevelRecord {
    pub fn from_report(rep: &ResidualReport) -> Self {
        Self {
            resolution: rep.resolution,
            spacing: rep.spacing,
            identities: rep
                .identities
                .iter()
                .map(|e| IdentityRecord::from_entry(e, rep.tol_rel))
                .collect(),
        }
    }
}

/// Congruence of one reconstructed candidate with a reference immersion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongruenceRecord {
    pub candidate: String,
    pub reference: String,
    #[serde(flatten)]
    pub result: CongruenceResult,
    pub tolerance: f64,
}

/// JSON report of a `verify` or `reconstruct` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunReport {
    pub command: String,
    pub passed: bool,
    #[serde(default)]
    pub identities: Vec<IdentityRecord>,
    #[serde(default)]
    pub classification: Option<ClassificationEvidence>,
    #[serde(default)]
    pub congruence: Vec<CongruenceRecord>,
    #[serde(default)]
    pub orders: Vec<OrderEntry>,
    /// Every refinement level of a convergence run, coarsest first.
    #[serde(default)]
    pub levels: Vec<LevelRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl RunReport {
    /// Pretty JSON with numbers rounded to 9 significant digits. Non-finite
    /// numbers are written as `null`.
    pub fn to_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self).map_err(|e| Error::Parse(e.to_string()))?;
        round_numbers(&mut value);
        let mut s =
            serde_json::to_string_pretty(&value).map_err(|e| Error::Parse(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n
                .as_f64()
                .map(round_sig)
                .and_then(serde_json::Number::from_f64)
            {
                *n = x;
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(round_numbers),
        Value::Object(m) => m.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// Per-identity `(spacing, max_abs)` series from the `levels` of a JSON
/// report, in level order; `null` values read as NaN.
pub fn residual_series(report: &str) -> Result<Vec<(String, Vec<(f64, f64)>)>> {
    let value: Value = serde_json::from_str(report).map_err(|e| Error::Parse(e.to_string()))?;
    let levels = value
        .get("levels")
        .and_then(Value::as_array)
        .filter(|l| !l.is_empty())
        .ok_or_else(|| Error::InsufficientData("report has no refinement levels".into()))?;
    let mut out: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for level in levels {
        let h = level
            .get("spacing")
            .and_then(Value::as_f64)
            .unwrap_or(f64::NAN);
        let ids = level
            .get("identities")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("level without identities".into()))?;
        for id in ids {
            let name = id
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Parse("identity without a name".into()))?;
            let max_abs = id
                .get("max_abs")
                .and_then(Value::as_f64)
                .unwrap_or(f64::NAN);
            match out.iter_mut().find(|(n, _)| n == name) {
                Some((_, series)) => series.push((h, max_abs)),
                None => out.push((name.to_string(), vec![(h, max_abs)])),
            }
        }
    }
    Ok(out)
}

/// Header of the residual table written by [`write_residual_csv`].
pub const RESIDUAL_COLUMNS: [&str; 9] = [
    "name",
    "max_abs",
    "rms",
    "nodes",
    "margin",
    "scale",
    "relative",
    "tolerance",
    "passed",
];

/// One row per identity, 9 significant digits.
pub fn write_residual_csv<W: Write>(mut w: W, identities: &[IdentityRecord]) -> Result<()> {
    writeln!(w, "{}", RESIDUAL_COLUMNS.join(","))?;
    for r in identities {
        let e = &r.entry;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            e.name,
            fmt_sig(e.max_abs),
            fmt_sig(e.rms),
            e.nodes_evaluated,
            e.mask_margin,
            fmt_sig(e.scale),
            fmt_sig(r.relative),
            fmt_sig(r.tolerance),
            r.passed
        )?;
    }
    Ok(())
}

/// Two-column table for gnuplot: `#`-prefixed comment lines, then `x,y` rows.
pub fn write_two_column<W: Write>(mut w: W, comments: &[&str], rows: &[(f64, f64)]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    for &(x, y) in rows {
        writeln!(w, "{},{}", fmt_sig(x), fmt_sig(y))?;
    }
    Ok(())
}

/// A scalar field sampled along the coordinate lines through the chart's
/// central node: `(u, f(u, v_mid))` and `(v, f(u_mid, v))`. Invalid nodes are
/// skipped.
pub fn coordinate_profiles(f: &ScalarField<f64>) -> [Vec<(f64, f64)>; 2] {
    let ch = f.chart();
    let (im, jm) = (ch.nu / 2, ch.nv / 2);
    let along_u = (0..ch.nu)
        .filter_map(|i| f.get(i, jm).map(|y| (ch.u(i), y)))
        .collect();
    let along_v = (0..ch.nv)
        .filter_map(|j| f.get(im, j).map(|y| (ch.v(j), y)))
        .collect();
    [along_u, along_v]
}
