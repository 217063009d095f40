use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use log::{info, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use valshare_core::battery::{run_battery, BatteryFixtures, BatteryOptions};
use valshare_core::dsl::expsum_to_json_pretty;
use valshare_core::expr::{check_identity, parse, Env, IdentityError, IdentityMode, IdentityOptions, Verdict};
use valshare_core::families::{
    classify_cubic, derive_family_constants, fixtures, question_probe, CubicCurve, CurveClass, DerivationStep,
    ProbeGrid, ProbeOptions, ProbeReport,
};
use valshare_core::nevanlinna::{profile, NevanlinnaProfile};
use valshare_core::roots::{locate, APoint, Region, RootError};
use valshare_core::sharing::{PairClass, SharingAudit, SharingCondition, SharingReport};
use valshare_core::{ExpSum, Mode, Scalar};

use crate::config::*;
use crate::{ConditionArg, Expect};

pub fn verify(cfg: &RunConfig, expr: &str, bindings: &[String], expect: Option<Expect>) -> Result<ExitCode, CliError> {
    cfg.require_json()?;
    let e = parse(expr).map_err(|err| usage(format!("{err}")))?;
    let mut env = Env::new();
    for b in bindings {
        let (name, path) = b.split_once('=').ok_or_else(|| usage(format!("--fn expects name=path, got `{b}`")))?;
        env.insert(name.trim().to_string(), load_function(Path::new(path.trim()))?);
    }
    if let Some(missing) = e.idents().into_iter().find(|n| !env.contains_key(n)) {
        return Err(usage(format!("`{missing}` is not bound; pass --fn {missing}=path")));
    }
    let exact = env.values().all(ExpSum::is_exact);
    let mode = cfg.effective_mode(exact)?;
    let opts = IdentityOptions {
        mode: match mode {
            Mode::Exact => IdentityMode::Exact,
            Mode::Float => IdentityMode::Sampled,
        },
        ..Default::default()
    };
    let env: Env = env.into_iter().map(|(k, f)| (k, coerce(f, mode))).collect();
    let rep = check_identity(&e, &env, &opts).map_err(|err| match err {
        IdentityError::Eval(_) => usage(err),
        _ => numeric(err),
    })?;
    let matched = match expect {
        None => true,
        Some(Expect::Zero) => rep.verdict == Verdict::IdenticallyZero,
        Some(Expect::Constant) => matches!(rep.verdict, Verdict::IdenticallyZero | Verdict::Constant(_)),
        Some(Expect::Nonconstant) => rep.verdict == Verdict::NonConstant,
    };

    #[derive(Serialize)]
    struct Witness {
        z: Complex64,
        value: Complex64,
    }
    #[derive(Serialize)]
    struct Out<'a> {
        expression: &'a str,
        verdict: &'static str,
        constant: Option<String>,
        expected: Option<Expect>,
        matches_expectation: bool,
        witness: Option<Witness>,
        samples_used: usize,
    }
    let constant = match &rep.verdict {
        Verdict::Constant(c) => Some(c.to_string()),
        _ => None,
    };
    let out = Out {
        expression: expr,
        verdict: rep.verdict.label(),
        constant,
        expected: expect,
        matches_expectation: matched,
        witness: rep.witness.map(|(z, value)| Witness { z, value }),
        samples_used: rep.samples_used,
    };
    emit_json(cfg, rep.mode, out)?;
    if matched {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verdict {} does not match the expectation", rep.verdict);
        Ok(ExitCode::from(EXIT_MISMATCH))
    }
}

pub fn locate_cmd(
    cfg: &RunConfig,
    tol: &Tolerances,
    fpath: &Path,
    value: &Scalar,
    derivative: u32,
    region: &Region,
) -> Result<ExitCode, CliError> {
    let mode = cfg.numeric_mode()?;
    let f = load_function(fpath)?.derivative(derivative);
    let found = locate(&f, value.to_complex(), region, &tol.locate()).map_err(numeric)?;
    if found.region != *region {
        warn!("boundary jittered to {}", found.region);
    }
    match cfg.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = found
                .points
                .iter()
                .map(|p| {
                    vec![
                        p.location.re.to_string(),
                        p.location.im.to_string(),
                        p.multiplicity.to_string(),
                        p.residual.to_string(),
                    ]
                })
                .collect();
            emit_csv(cfg, &["re", "im", "multiplicity", "residual"], &rows)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                value: Complex64,
                derivative: u32,
                region: &'a Region,
                region_used: Region,
                count: i64,
                points: Vec<APoint>,
            }
            let out = Out {
                value: value.to_complex(),
                derivative,
                region,
                region_used: found.region,
                count: found.count,
                points: found.points,
            };
            emit_json(cfg, mode, out)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn profile_cmd(cfg: &RunConfig, fpath: &Path, values: &[Complex64], radii: &[f64]) -> Result<ExitCode, CliError> {
    let mode = cfg.numeric_mode()?;
    let f = load_function(fpath)?;
    let prof: NevanlinnaProfile = profile(&f, values, radii).map_err(numeric)?;
    match cfg.format {
        Format::Csv if values.is_empty() => {
            let rows: Vec<Vec<String>> =
                prof.rows.iter().map(|r| vec![r.r.to_string(), r.m.to_string(), r.t.to_string()]).collect();
            emit_csv(cfg, &["r", "m", "T"], &rows)?;
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = prof.csv_rows().into_iter().map(Vec::from).collect();
            emit_csv(cfg, &NevanlinnaProfile::CSV_HEADER, &rows)?;
        }
        Format::Json => emit_json(cfg, mode, prof)?,
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ValueAudit {
    #[serde(flatten)]
    class: PairClass,
    reports: Vec<SharingReport>,
}

pub fn share(
    cfg: &RunConfig,
    tol: &Tolerances,
    fpath: &Path,
    values: &[Complex64],
    region: &Region,
    cond: ConditionArg,
) -> Result<ExitCode, CliError> {
    let mode = cfg.numeric_mode()?;
    let f = load_function(fpath)?;
    let conditions: Vec<SharingCondition> = match cond.condition() {
        Some(c) => vec![c],
        None => SharingCondition::ALL.to_vec(),
    };
    let opts = tol.sharing();
    let audits: Vec<ValueAudit> = values
        .par_iter()
        .map(|&a| {
            let audit = SharingAudit::new(&f, a, region, &opts)?;
            let reports = conditions.iter().map(|&c| audit.report(c)).collect();
            Ok::<_, RootError>(ValueAudit { class: audit.classify(), reports })
        })
        .collect::<Result<_, _>>()
        .map_err(numeric)?;
    match cfg.format {
        Format::Csv => {
            let mut rows = Vec::new();
            for v in &audits {
                for r in &v.reports {
                    rows.push(vec![
                        r.value.re.to_string(),
                        r.value.im.to_string(),
                        r.condition.label().to_string(),
                        verdict_label(r),
                        r.simple_points_f.len().to_string(),
                        r.simple_points_fprime.len().to_string(),
                        r.matches.len().to_string(),
                        r.violations.len().to_string(),
                        r.boundary_excluded.len().to_string(),
                    ]);
                }
            }
            let header = [
                "a_re",
                "a_im",
                "condition",
                "verdict",
                "simple_f",
                "simple_fprime",
                "matches",
                "violations",
                "boundary_excluded",
            ];
            emit_csv(cfg, &header, &rows)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                region: &'a Region,
                /// Verdicts hold relative to the region only.
                scope: &'static str,
                values: Vec<ValueAudit>,
            }
            emit_json(cfg, mode, Out { region, scope: "region", values: audits })?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn verdict_label(r: &SharingReport) -> String {
    serde_json::to_value(r.verdict).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

pub fn derive(cfg: &RunConfig, delta: &Scalar) -> Result<ExitCode, CliError> {
    cfg.require_json()?;
    let mode = cfg.effective_mode(delta.is_exact())?;
    let delta = match mode {
        Mode::Exact => delta.clone(),
        Mode::Float => Scalar::from(delta.to_complex()),
    };
    let d = derive_family_constants(&delta).map_err(numeric)?;

    #[derive(Serialize)]
    struct Out<'a> {
        delta: String,
        alpha: String,
        gamma: String,
        b2: String,
        b1: String,
        b0: String,
        c2: String,
        c1: String,
        c0: String,
        residuals: BTreeMap<i64, String>,
        steps: &'a [DerivationStep],
        notes: &'a [String],
    }
    let out = Out {
        delta: delta.to_string(),
        alpha: d.alpha.to_string(),
        gamma: d.gamma.to_string(),
        b2: d.b2.to_string(),
        b1: d.b1.to_string(),
        b0: d.b0.to_string(),
        c2: d.c2.to_string(),
        c1: d.c1.to_string(),
        c0: d.c0.to_string(),
        residuals: d.residuals.iter().map(|(k, v)| (*k, v.to_string())).collect(),
        steps: &d.steps,
        notes: &d.notes,
    };
    emit_json(cfg, mode, out)?;
    Ok(ExitCode::SUCCESS)
}

pub fn classify_curve(cfg: &RunConfig, params: [Scalar; 4]) -> Result<ExitCode, CliError> {
    cfg.require_json()?;
    let mode = cfg.effective_mode(params.iter().all(Scalar::is_exact))?;
    let [gamma, c2, c1, c0] = params.map(|s| match mode {
        Mode::Exact => s,
        Mode::Float => Scalar::from(s.to_complex()),
    });
    let curve = CubicCurve::new(gamma, c2, c1, c0);
    let class = classify_cubic(&curve).map_err(numeric)?;

    #[derive(Serialize)]
    struct Out {
        curve: String,
        summary: String,
        classification: CurveClass,
    }
    emit_json(cfg, mode, Out { curve: curve.to_string(), summary: class.to_string(), classification: class })?;
    Ok(ExitCode::SUCCESS)
}

pub fn probe(
    cfg: &RunConfig,
    tol: &Tolerances,
    a: &Scalar,
    b: &Scalar,
    grid: Option<&Path>,
    region: &Region,
    cond: SharingCondition,
) -> Result<ExitCode, CliError> {
    cfg.require_json()?;
    let mode = cfg.numeric_mode()?;
    let grid = match grid {
        Some(p) => ProbeGrid::from_json(&read_file(p)?).map_err(usage)?,
        None => ProbeGrid::default_grid(),
    };
    let opts = ProbeOptions { condition: cond, sharing: tol.sharing() };
    let rep: ProbeReport =
        question_probe(a.to_complex(), b.to_complex(), &grid, region, &opts).map_err(|e| match e {
            valshare_core::families::ProbeError::Roots(_) => numeric(e),
            _ => usage(e),
        })?;
    eprintln!(
        "{}: {} candidates ({} non-vacuous) among {} functions; evidence only, not a proof",
        rep.tag,
        rep.candidates.len(),
        rep.non_vacuous().count(),
        rep.grid_size
    );
    emit_json(cfg, mode, rep)?;
    Ok(ExitCode::SUCCESS)
}

/// Replaces battery fixtures with the files found in `dir`, by file stem.
fn load_fixture_dir(dir: &Path) -> Result<BatteryFixtures, CliError> {
    let mut fx = BatteryFixtures::default();
    let entries = fs::read_dir(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    for p in paths.iter().filter(|p| p.extension().is_some_and(|x| x == "json")) {
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let f = load_function(p)?;
        if fx.set(stem, f) {
            info!("fixture {stem} loaded from {}", p.display());
        } else {
            warn!("ignoring {}: unknown fixture name", p.display());
        }
    }
    Ok(fx)
}

pub fn reproduce(cfg: &RunConfig, tol: Option<f64>, fixture_dir: Option<&Path>) -> Result<ExitCode, CliError> {
    if let Some(t) = tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(usage(format!("--tol must be positive, got {t}")));
        }
    }
    let fixtures = match fixture_dir {
        Some(d) => load_fixture_dir(d)?,
        None => BatteryFixtures::default(),
    };
    let report = run_battery(&BatteryOptions { tol, fixtures });
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{:>3} {status} {:<42} {:>7.3}s  {}  [\"{}\"]", c.id, c.name, c.seconds, c.detail, c.citation);
    }
    if cfg.output.is_some() {
        match cfg.format {
            Format::Json => emit_json(cfg, Mode::Float, &report)?,
            Format::Csv => {
                let rows: Vec<Vec<String>> = report
                    .checks
                    .iter()
                    .map(|c| {
                        vec![c.id.to_string(), c.passed.to_string(), c.name.to_string(), format!("{:.3}", c.seconds)]
                    })
                    .collect();
                emit_csv(cfg, &["id", "passed", "name", "seconds"], &rows)?;
            }
        }
    }
    let failed = report.failed_ids();
    if failed.is_empty() {
        println!("all {} checks pass", report.checks.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("failed checks: {failed:?}");
        eprintln!("failed checks: {failed:?}");
        Ok(ExitCode::from(EXIT_BATTERY))
    }
}

pub fn export_fixtures(dir: &Path) -> Result<ExitCode, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for (stem, f) in fixtures() {
        let path = dir.join(format!("{stem}.json"));
        let mut text = expsum_to_json_pretty(&f);
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}
