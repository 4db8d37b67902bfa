use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use s2r_gauss::calculus::{ExtComplexField, Field};
use s2r_gauss::gauss::{GaussData, Immersion};
use s2r_gauss::io::{
    coordinate_profiles, residual_series, write_residual_csv, write_two_column, CongruenceRecord,
    FieldTable, LevelRecord, Mesh, RunReport,
};
use s2r_gauss::minimality::{
    chart_tolerance, convergence_orders, gauss_map_regularity, residual_suite_with, Classification,
    ClassificationEvidence, CLASSIFY_TOL,
};
use s2r_gauss::reconstruct::{reconstruct_pipeline, verify_congruence, Congruence};
use s2r_gauss::{DoubleDouble, Error, Real, Result};

use crate::args::{FamilyArgs, InputArgs};

/// Congruence deviations are accepted up to this multiple of the chart tolerance.
pub const CONGRUENCE_FACTOR: f64 = 50.0;

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    ToleranceFailure,
    DegenerateInput,
}

pub fn generate(family: &FamilyArgs, out_dir: &Path) -> Result<Outcome> {
    let x = family.spec::<f64>(family.res)?.generate()?;
    let mesh = Mesh::grid(&x);
    let table = FieldTable::from_immersion(&x)?;
    create_dir(out_dir)?;
    write_file(&out_dir.join("mesh.obj"), |w| mesh.write_obj(w))?;
    write_file(&out_dir.join("fields.csv"), |w| table.write_csv(w))?;
    println!(
        "wrote {} vertices, {} faces to {}",
        mesh.vertices.len(),
        mesh.faces.len(),
        out_dir.display()
    );
    Ok(Outcome::Pass)
}

pub fn verify(
    input: &InputArgs,
    convergence: bool,
    tol: Option<f64>,
    out_dir: &Path,
) -> Result<Outcome> {
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Config(format!("--tol must be positive, got {t}")));
        }
    }
    let res = input.family.res;
    let mut levels = vec![res];
    if convergence {
        if input.fields.is_some() {
            return Err(Error::Config(
                "--convergence needs a family, not a field table".into(),
            ));
        }
        levels.push((2 * res.0 - 1, 2 * res.1 - 1));
        levels.push((4 * res.0 - 3, 4 * res.1 - 3));
    }
    let reports = match &input.fields {
        Some(path) => {
            let x = read_fields(path)?.immersion()?;
            vec![suite(&x, tol)?]
        }
        None if input.double_double => levels
            .iter()
            .map(|&r| suite(&input.family.spec::<DoubleDouble>(r)?.generate()?, tol))
            .collect::<Result<_>>()?,
        None => levels
            .iter()
            .map(|&r| suite(&input.family.spec::<f64>(r)?.generate()?, tol))
            .collect::<Result<_>>()?,
    };
    let first = &reports[0];
    let orders = if convergence {
        convergence_orders(&reports)?
    } else {
        Vec::new()
    };
    let passed = reports.iter().all(|r| r.passed()) && orders.iter().all(|o| o.passed);
    let run = RunReport {
        command: "verify".into(),
        passed,
        identities: LevelRecord::from_report(first).identities,
        classification: Some(first.classification),
        orders,
        levels: reports.iter().map(LevelRecord::from_report).collect(),
        ..Default::default()
    };
    create_dir(out_dir)?;
    write_file(&out_dir.join("verify.json"), |w| {
        Ok(w.write_all(run.to_json()?.as_bytes())?)
    })?;
    write_file(&out_dir.join("verify.csv"), |w| {
        write_residual_csv(w, &run.identities)
    })?;
    println!(
        "classification: {}",
        classification_name(first.classification.classification)
    );
    for level in &run.levels {
        for r in level.identities.iter().filter(|r| !r.passed) {
            println!(
                "FAIL {} at {}x{}: relative {:e} > {:e}",
                r.entry.name, level.resolution[0], level.resolution[1], r.relative, r.tolerance
            );
        }
    }
    for o in run.orders.iter().filter(|o| !o.passed) {
        println!("FAIL {} observed orders {:?}", o.name, o.orders);
    }
    Ok(if passed {
        Outcome::Pass
    } else {
        Outcome::ToleranceFailure
    })
}

fn suite<T: Real>(
    x: &Immersion<T>,
    tol: Option<f64>,
) -> Result<s2r_gauss::minimality::ResidualReport> {
    residual_suite_with(x, tol.unwrap_or_else(|| chart_tolerance(x.chart())))
}

pub fn reconstruct(
    input: &InputArgs,
    r0: f64,
    base: Option<(usize, usize)>,
    out_dir: &Path,
) -> Result<Outcome> {
    let res = input.family.res;
    let (run, outcome) = match &input.fields {
        Some(path) => {
            let table = read_fields(path)?;
            let g = table
                .g
                .clone()
                .ok_or_else(|| Error::Parse("field table has no Reg, Img columns".into()))?;
            let reference = match (&table.f, &table.h) {
                (Some(_), Some(_)) => Some(table.immersion()?),
                _ => None,
            };
            run_reconstruct(&g, reference.as_ref(), base, r0, out_dir)?
        }
        None if input.double_double => {
            let x = input.family.spec::<DoubleDouble>(res)?.generate()?;
            let g = GaussData::compute(&x)?.g;
            run_reconstruct(&g, Some(&x), base, r0, out_dir)?
        }
        None => {
            let x = input.family.spec::<f64>(res)?.generate()?;
            let g = GaussData::compute(&x)?.g;
            run_reconstruct(&g, Some(&x), base, r0, out_dir)?
        }
    };
    create_dir(out_dir)?;
    write_file(&out_dir.join("reconstruct.json"), |w| {
        Ok(w.write_all(run.to_json()?.as_bytes())?)
    })?;
    if let Some(msg) = &run.message {
        println!("{msg}");
    }
    for c in &run.congruence {
        println!(
            "candidate {} vs {}: {} (deviation {:e}, tolerance {:e})",
            c.candidate,
            c.reference,
            verdict_name(c.result.verdict),
            c.result.max_deviation,
            c.tolerance
        );
    }
    Ok(outcome)
}

/// Runs the pipeline, writes the candidates and returns the report. Constant
/// or singular Gauss maps give a failed report with a classification instead.
fn run_reconstruct<T: Real>(
    g: &ExtComplexField<T>,
    reference: Option<&Immersion<T>>,
    base: Option<(usize, usize)>,
    r0: f64,
    out_dir: &Path,
) -> Result<(RunReport, Outcome)> {
    let ch = *g.chart();
    let base = base.unwrap_or((ch.nu / 2, ch.nv / 2));
    if base.0 >= ch.nu || base.1 >= ch.nv {
        return Err(Error::Config(format!(
            "base node {base:?} is outside the {}x{} chart",
            ch.nu, ch.nv
        )));
    }
    let rec = match reconstruct_pipeline(g, base, T::lit(r0)) {
        Ok(rec) => rec,
        Err(
            e @ (Error::ConstantGaussMap(_)
            | Error::SingularGaussMap { .. }
            | Error::DegenerateQuadratic { .. }
            | Error::InsufficientData(_)),
        ) => {
            let run = RunReport {
                command: "reconstruct".into(),
                passed: false,
                classification: Some(classify_gauss_map(g)),
                message: Some(e.to_string()),
                ..Default::default()
            };
            return Ok((run, Outcome::DegenerateInput));
        }
        Err(e) => return Err(e),
    };
    let tol = CONGRUENCE_FACTOR * chart_tolerance(&ch);
    let [c1, c2] = &rec.candidates;
    let mut congruence = Vec::new();
    if let Some(x) = reference {
        let x = rec.restrict(x)?;
        for (name, c) in [("1", c1), ("2", c2)] {
            congruence.push(CongruenceRecord {
                candidate: name.into(),
                reference: "source".into(),
                result: verify_congruence(&x, &c.immersion, tol)?,
                tolerance: tol,
            });
        }
    }
    congruence.push(CongruenceRecord {
        candidate: "2".into(),
        reference: "candidate_1".into(),
        result: verify_congruence(&c1.immersion, &c2.immersion, tol)?,
        tolerance: tol,
    });
    let mut against_source: Vec<Congruence> = congruence
        .iter()
        .filter(|c| c.reference == "source")
        .map(|c| c.result.verdict)
        .collect();
    against_source.sort_by_key(|v| *v as u8);
    let source_ok = reference.is_none()
        || against_source
            == [
                Congruence::VerticalTranslation,
                Congruence::AntipodalTranslation,
            ];
    let mutual_ok = congruence
        .last()
        .is_some_and(|c| c.result.verdict == Congruence::AntipodalTranslation);
    create_dir(out_dir)?;
    for (k, c) in [c1, c2].into_iter().enumerate() {
        let stem = format!("candidate_{}", k + 1);
        write_file(&out_dir.join(format!("{stem}.obj")), |w| {
            Mesh::grid(&c.immersion).write_obj(w)
        })?;
        let table = FieldTable::from_immersion(&c.immersion)?;
        write_file(&out_dir.join(format!("{stem}.csv")), |w| table.write_csv(w))?;
    }
    let passed = source_ok && mutual_ok;
    let run = RunReport {
        command: "reconstruct".into(),
        passed,
        congruence,
        message: rec
            .coincident
            .then(|| "the two candidates coincide on this chart".to_string()),
        ..Default::default()
    };
    let outcome = if passed {
        Outcome::Pass
    } else {
        Outcome::ToleranceFailure
    };
    Ok((run, outcome))
}

/// Classification from `g` alone: cylinder when `g` is constant.
fn classify_gauss_map<T: Real>(g: &ExtComplexField<T>) -> ClassificationEvidence {
    let reg = gauss_map_regularity(g);
    let (g_variation, max_det_dg, max_g_z) = reg
        .map(|r| (r.g_variation, r.max_det_dg, r.max_g_z))
        .unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    let classification = if g_variation <= CLASSIFY_TOL {
        Classification::Cylinder
    } else if max_det_dg <= CLASSIFY_TOL || reg.is_none() {
        Classification::Degenerate
    } else {
        Classification::Generic
    };
    ClassificationEvidence {
        classification,
        g_variation,
        max_det_dg,
        min_p_minus_g: f64::NAN,
        min_p_antipodal_g: f64::NAN,
        max_g_z,
        tol: CLASSIFY_TOL,
    }
}

pub fn report(verify: Option<&Path>, fields: Option<&Path>, out_dir: &Path) -> Result<Outcome> {
    if verify.is_none() && fields.is_none() {
        return Err(Error::Config("give --verify and/or --fields".into()));
    }
    let mut outputs: Vec<(PathBuf, Vec<String>, Vec<(f64, f64)>)> = Vec::new();
    if let Some(path) = verify {
        let text = fs::read_to_string(path).map_err(|e| io_context(e, path))?;
        for (name, series) in residual_series(&text)? {
            outputs.push((
                out_dir.join(format!("residual_{name}.csv")),
                vec![format!("{name}: grid spacing h, max_abs residual")],
                series,
            ));
        }
    }
    if let Some(path) = fields {
        let table = read_fields(path)?;
        let k = table
            .k
            .as_ref()
            .ok_or_else(|| Error::Parse("field table has no K column".into()))?;
        let g = table
            .g
            .as_ref()
            .ok_or_else(|| Error::Parse("field table has no Reg, Img columns".into()))?;
        let abs_g = Field::from_fn_opt(table.chart, |i, j| {
            g.get(i, j).map(|w| {
                if w.inverted {
                    1.0 / w.value.norm()
                } else {
                    w.value.norm()
                }
            })
        });
        let ch = table.chart;
        let (um, vm) = (ch.u(ch.nu / 2), ch.v(ch.nv / 2));
        for (label, f) in [("K", k), ("abs_g", &abs_g)] {
            let [along_u, along_v] = coordinate_profiles(f);
            outputs.push((
                out_dir.join(format!("{label}_along_u.csv")),
                vec![format!("{label} against u at v = {vm}")],
                along_u,
            ));
            outputs.push((
                out_dir.join(format!("{label}_along_v.csv")),
                vec![format!("{label} against v at u = {um}")],
                along_v,
            ));
        }
    }
    create_dir(out_dir)?;
    for (path, comments, rows) in &outputs {
        let comments: Vec<&str> = comments.iter().map(String::as_str).collect();
        write_file(path, |w| write_two_column(w, &comments, rows))?;
    }
    println!("wrote {} tables to {}", outputs.len(), out_dir.display());
    Ok(Outcome::Pass)
}

fn read_fields(path: &Path) -> Result<FieldTable> {
    let file = File::open(path).map_err(|e| io_context(e, path))?;
    FieldTable::read_csv(BufReader::new(file))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_context(e, dir))
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_context(e, path))?);
    body(&mut w)?;
    w.flush().map_err(|e| io_context(e, path))
}

fn io_context(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

fn classification_name(c: Classification) -> &'static str {
    match c {
        Classification::Generic => "generic",
        Classification::Cylinder => "cylinder",
        Classification::Sphere => "sphere",
        Classification::Degenerate => "degenerate",
    }
}

fn verdict_name(c: Congruence) -> &'static str {
    match c {
        Congruence::VerticalTranslation => "vertical_translation",
        Congruence::AntipodalTranslation => "antipodal_translation",
        Congruence::NotCongruent => "not_congruent",
    }
}
