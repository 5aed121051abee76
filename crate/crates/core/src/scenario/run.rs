use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{BoxSpec, LieSpec, MapSpec, NormalitySpec, NormalityTest, RenormalizeSpec, TorusSpec, TubeSpec};
use super::{ScenarioConfig, ScenarioError, ScenarioKind};
use crate::field::{AffineChart, GridSpec, HarmonicExpr, HolExpr, ProbeBox};
use crate::group::{from_rows, lie_renormalize, torus_renormalize, MatrixHoloMap, TorusClass, TorusMap};
use crate::maps::{holomorphy_witness, image_probe, jacobian, rank_degenerate_probe, HarmonicMap};
use crate::normality::{criterion_levelset, marty_bound, FamilySample};
use crate::renorm::{renormalize_entire, LimitClass, PhiField};
use crate::tube::{catalog, classify_tube, BrodyVerdict, DomainExpr, KobayashiVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: Status,
    pub report: Value,
    pub csv: Option<CsvTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub seed: u64,
    pub wall_time: f64,
}

fn to_json<T: Serialize>(v: &T) -> Result<Value, ScenarioError> {
    serde_json::to_value(v).map_err(|e| ScenarioError::Numeric(e.to_string()))
}

fn probe_box(spec: &BoxSpec) -> Result<ProbeBox, ScenarioError> {
    Ok(ProbeBox::new(spec.lo.clone(), spec.hi.clone())?)
}

fn harmonic(text: &str, dim: usize, field: &str) -> Result<HarmonicExpr, ScenarioError> {
    HarmonicExpr::parse(text, dim).map_err(|e| ScenarioError::in_field(field, e))
}

fn holomorphic(text: &str, field: &str) -> Result<HolExpr, ScenarioError> {
    HolExpr::parse(text).map_err(|e| ScenarioError::in_field(field, e))
}

fn domain(text: &Option<String>, name: &Option<String>, field: &str) -> Result<DomainExpr, ScenarioError> {
    match (text, name) {
        (Some(t), None) => DomainExpr::parse(t).map_err(|e| ScenarioError::in_field(&format!("{field}.domain"), e)),
        (None, Some(n)) => catalog::by_name(n)
            .ok_or_else(|| ScenarioError::Parse(format!("unknown catalog domain `{n}` in `{field}.catalog`"))),
        _ => Err(ScenarioError::Parse(format!(
            "`{field}` needs exactly one of `domain` or `catalog`"
        ))),
    }
}

/// Runs the scenario named by `cfg.kind` with the given seed.
pub fn run_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<Outcome, ScenarioError> {
    cfg.validate()?;
    let missing = || ScenarioError::Parse(format!("missing table [{}]", cfg.kind.table()));
    match cfg.kind {
        ScenarioKind::Renormalize => renormalize(cfg.renormalize.as_ref().ok_or_else(missing)?),
        ScenarioKind::Normality => normality(cfg.normality.as_ref().ok_or_else(missing)?),
        ScenarioKind::TubeClassify => tube(cfg.tube_classify.as_ref().ok_or_else(missing)?, seed),
        ScenarioKind::MapAnalysis => map_analysis(cfg.map_analysis.as_ref().ok_or_else(missing)?),
        ScenarioKind::Torus => torus(cfg.torus.as_ref().ok_or_else(missing)?),
        ScenarioKind::Lie => lie(cfg.lie.as_ref().ok_or_else(missing)?),
    }
}

fn renormalize(spec: &RenormalizeSpec) -> Result<Outcome, ScenarioError> {
    let f = harmonic(&spec.expr, spec.dim, "renormalize.expr")?;
    let run = renormalize_entire(&f, &spec.point, &spec.options)?;
    let pts = spec.options.rescale.probe(spec.dim)?.points();
    let mut header = vec!["n".to_string()];
    header.extend((1..=spec.dim).map(|i| format!("x{i}")));
    header.push("g".into());
    let mut rows = Vec::new();
    for (step, chart) in run.trace.steps.iter().zip(&run.charts) {
        if !run.report.window.contains(&step.n) {
            continue;
        }
        let g = f.clone().compose(chart)?;
        for x in &pts {
            let mut row = vec![step.n as f64];
            row.extend(x);
            row.push(g.eval(x)?);
            rows.push(row);
        }
    }
    let status = if run.report.class == LimitClass::Undecided {
        Status::Undecided
    } else {
        Status::Ok
    };
    Ok(Outcome {
        status,
        report: to_json(&run)?,
        csv: Some(CsvTable { header, rows }),
    })
}

fn normality(spec: &NormalitySpec) -> Result<Outcome, ScenarioError> {
    let members = spec
        .members
        .iter()
        .enumerate()
        .map(|(i, m)| harmonic(m, spec.dim, &format!("normality.members[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let fam = FamilySample::new(members, probe_box(&spec.domain)?)?;
    let k = probe_box(&spec.compact)?;
    let grid = GridSpec::new(k.clone(), spec.points)?;
    let report = match &spec.test {
        NormalityTest::Marty { m_big } => to_json(&marty_bound(&fam, &k, &grid, *m_big)?)?,
        NormalityTest::Levelset { a, m_k, delta } => to_json(&criterion_levelset(&fam, *a, &k, *m_k, &grid, *delta)?)?,
    };
    Ok(Outcome {
        status: Status::Ok,
        report,
        csv: None,
    })
}

fn tube(spec: &TubeSpec, seed: u64) -> Result<Outcome, ScenarioError> {
    let d = domain(&spec.domain, &spec.catalog, "tube_classify")?;
    let mut opts = spec.options.clone();
    opts.seed = seed;
    let report = classify_tube(&d, &opts)?;
    let status = if report.brody == BrodyVerdict::Undecided && report.kobayashi == KobayashiVerdict::Undecided {
        Status::Undecided
    } else {
        Status::Ok
    };
    Ok(Outcome {
        status,
        report: json!({ "domain": d.to_string(), "classification": to_json(&report)? }),
        csv: None,
    })
}

fn map_analysis(spec: &MapSpec) -> Result<Outcome, ScenarioError> {
    let h = HarmonicMap::from_holomorphic(holomorphic(&spec.f, "map_analysis.f")?, holomorphic(&spec.g, "map_analysis.g")?);
    let grid = GridSpec::new(probe_box(&spec.grid)?, spec.points)?;
    if grid.dim() != 2 {
        return Err(ScenarioError::Precondition("map_analysis grid must be planar".into()));
    }
    let jacobians = spec
        .jacobian_points
        .iter()
        .map(|z| Ok(json!({ "point": z, "jacobian": jacobian(&h, *z)? })))
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    let rank = rank_degenerate_probe(&h, &grid)?;
    let holomorphy = holomorphy_witness(&h, &grid)?;
    let pts = grid.points();
    let image = match &spec.image {
        Some(img) => {
            let d = domain(&img.domain, &img.catalog, "map_analysis.image")?;
            Some(image_probe(&h, &pts, &d, img.functional)?)
        }
        None => None,
    };
    let mut rows = Vec::with_capacity(pts.len());
    for x in &pts {
        let v = h.eval(x)?;
        rows.push(vec![x[0], x[1], v[0], v[1]]);
    }
    Ok(Outcome {
        status: Status::Ok,
        report: json!({
            "jacobians": jacobians,
            "rank": to_json(&rank)?,
            "holomorphy": to_json(&holomorphy)?,
            "image": to_json(&image)?,
        }),
        csv: Some(CsvTable {
            header: ["x", "y", "u", "v"].map(String::from).to_vec(),
            rows,
        }),
    })
}

fn dilation_check(dilation: f64) -> Result<(), ScenarioError> {
    if !(dilation > 1.0) || !dilation.is_finite() {
        return Err(ScenarioError::Precondition(format!("dilation must exceed 1, got {dilation}")));
    }
    Ok(())
}

fn torus(spec: &TorusSpec) -> Result<Outcome, ScenarioError> {
    dilation_check(spec.dilation)?;
    let comps = spec
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| harmonic(c, spec.dim, &format!("torus.components[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let lift = HarmonicMap::new(comps)?;
    if spec.point.len() != spec.dim {
        return Err(ScenarioError::Precondition("torus.point has the wrong dimension".into()));
    }
    let fseq = |n: usize| {
        let chart = AffineChart::new(spec.dilation.powi(n as i32), spec.point.clone())?;
        Ok(TorusMap::new(lift.rescaled(&chart)?))
    };
    let origin = vec![0.0; spec.dim];
    let indices: Vec<usize> = (0..spec.steps).collect();
    let dim = spec.dim;
    let (trace, report) = torus_renormalize(fseq, &origin, &move |_| vec![0.0; dim], &indices, &spec.options)?;
    let rows = report
        .steps
        .iter()
        .map(|s| vec![s.n as f64, s.constancy, s.quotient_residual])
        .collect();
    let status = if report.class == TorusClass::Undecided {
        Status::Undecided
    } else {
        Status::Ok
    };
    Ok(Outcome {
        status,
        report: json!({ "trace": to_json(&trace)?, "limit": to_json(&report)? }),
        csv: Some(CsvTable {
            header: ["n", "constancy", "quotient_residual"].map(String::from).to_vec(),
            rows,
        }),
    })
}

fn complex_rows(rows: &[Vec<[f64; 2]>]) -> Vec<Vec<Complex64>> {
    rows.iter()
        .map(|r| r.iter().map(|c| Complex64::new(c[0], c[1])).collect())
        .collect()
}

fn lie(spec: &LieSpec) -> Result<Outcome, ScenarioError> {
    dilation_check(spec.dilation)?;
    let base = match (&spec.entries, &spec.g, &spec.x) {
        (Some(entries), None, None) => {
            let n = (entries.len() as f64).sqrt().round() as usize;
            let parsed = entries
                .iter()
                .enumerate()
                .map(|(i, e)| holomorphic(e, &format!("lie.entries[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            MatrixHoloMap::entrywise(n, parsed)?
        }
        (None, Some(g), Some(x)) => MatrixHoloMap::group_exp(from_rows(&complex_rows(g))?, from_rows(&complex_rows(x))?)?,
        _ => {
            return Err(ScenarioError::Parse(
                "`lie` needs either `entries` or both `g` and `X`".into(),
            ))
        }
    };
    let p = Complex64::new(spec.point[0], spec.point[1]);
    let fseq = |n: usize| Ok(base.precompose(Complex64::new(spec.dilation.powi(n as i32), 0.0), p));
    let indices: Vec<usize> = (0..spec.steps).collect();
    let (trace, report) = lie_renormalize(fseq, &[0.0, 0.0], &|_| vec![0.0, 0.0], &indices, &spec.options)?;
    let rows = report
        .steps
        .iter()
        .map(|s| vec![s.n as f64, s.x_norm, s.residual, s.df_constancy])
        .collect();
    let status = if report.nonconstant { Status::Ok } else { Status::Undecided };
    Ok(Outcome {
        status,
        report: json!({ "trace": to_json(&trace)?, "limit": to_json(&report)? }),
        csv: Some(CsvTable {
            header: ["n", "x_norm", "residual", "df_constancy"].map(String::from).to_vec(),
            rows,
        }),
    })
}

/// The report document: scenario echo, status, payload and provenance.
pub fn report_doc(cfg: &ScenarioConfig, outcome: &Outcome, provenance: &Provenance) -> Result<Value, ScenarioError> {
    let mut echo = cfg.clone();
    echo.seed = Some(provenance.seed);
    echo.output.dir = None;
    Ok(json!({
        "scenario": to_json(&echo)?,
        "status": outcome.status,
        "report": outcome.report,
        "provenance": to_json(provenance)?,
    }))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ScenarioError> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| ScenarioError::Io(format!("invalid output path {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_bytes(table: &CsvTable) -> Result<Vec<u8>, ScenarioError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| ScenarioError::Io(e.to_string());
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
    }
    w.into_inner().map_err(|e| ScenarioError::Io(e.to_string()))
}

/// Writes `<name>.json` and, when given, `<name>.csv` by write-then-rename.
pub fn write_outputs(dir: &Path, name: &str, doc: &Value, csv: Option<&CsvTable>) -> Result<Vec<PathBuf>, ScenarioError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let json_path = dir.join(format!("{name}.json"));
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| ScenarioError::Numeric(e.to_string()))?;
    text.push('\n');
    write_atomic(&json_path, text.as_bytes())?;
    written.push(json_path);
    if let Some(table) = csv {
        let csv_path = dir.join(format!("{name}.csv"));
        write_atomic(&csv_path, &csv_bytes(table)?)?;
        written.push(csv_path);
    }
    Ok(written)
}

/// Runs a scenario and writes its outputs. The seed defaults to the config
/// seed, then zero; the directory defaults to the config directory, then `.`.
pub fn execute(
    cfg: &ScenarioConfig,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<(Outcome, Vec<PathBuf>), ScenarioError> {
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let start = Instant::now();
    let outcome = run_scenario(cfg, seed)?;
    let provenance = Provenance {
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        wall_time: start.elapsed().as_secs_f64(),
    };
    let doc = report_doc(cfg, &outcome, &provenance)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let csv = if cfg.output.csv { outcome.csv.as_ref() } else { None };
    let written = write_outputs(&dir, &cfg.output.name, &doc, csv)?;
    Ok((outcome, written))
}
