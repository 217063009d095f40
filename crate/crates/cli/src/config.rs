//! Run configuration, input loading and exit codes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use valshare_core::roots::{LocateOptions, Region};
use valshare_core::sharing::SharingOptions;
use valshare_core::{expsum_from_json, ExpSum, Mode, Scalar};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_MISMATCH: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;
pub const EXIT_BATTERY: u8 = 5;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) | CliError::Io(_) => ExitCode::from(EXIT_USAGE),
            CliError::Numeric(_) => ExitCode::from(EXIT_NUMERIC),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

pub fn usage(msg: impl fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

pub fn numeric(msg: impl fmt::Display) -> CliError {
    CliError::Numeric(msg.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Exact,
    Float,
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, Args)]
pub struct OutputArgs {
    /// exact, float, or auto (exact iff every input is an exact rational)
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct Tolerances {
    /// Newton residual tolerance, relative to the term magnitude
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Largest distance at which two located points are identified
    #[arg(long, default_value_t = 1e-8)]
    pub match_tol: f64,
    /// Largest |f'(z) − a| (or |f'(z)|) accepted as a value match
    #[arg(long, default_value_t = 1e-8)]
    pub value_tol: f64,
    /// Box size below which subdivision stops and Newton takes over
    #[arg(long, default_value_t = 1e-3)]
    pub isolation_size: f64,
    /// Radius of the circle used to confirm multiplicities
    #[arg(long, default_value_t = 1e-4)]
    pub mult_radius: f64,
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), CliError> {
        let all = [
            ("tol", self.tol),
            ("match-tol", self.match_tol),
            ("value-tol", self.value_tol),
            ("isolation-size", self.isolation_size),
            ("mult-radius", self.mult_radius),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(usage(format!("--{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn locate(&self) -> LocateOptions {
        LocateOptions { tol: self.tol, isolation_size: self.isolation_size, mult_radius: self.mult_radius }
    }

    pub fn sharing(&self) -> SharingOptions {
        SharingOptions {
            match_tol: self.match_tol,
            value_tol: self.value_tol,
            locate: self.locate(),
            ..Default::default()
        }
    }
}

/// Everything needed to rerun a command; embedded in every report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub inputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    pub mode: ModeArg,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn new(command: &'static str, out: &OutputArgs, threads: Option<usize>) -> Self {
        RunConfig {
            command,
            inputs: Vec::new(),
            tolerances: None,
            mode: out.mode,
            format: out.format,
            output: out.output.clone(),
            threads,
        }
    }

    pub fn input(mut self, name: &str, value: impl fmt::Display) -> Self {
        self.inputs.push(format!("{name}={value}"));
        self
    }

    pub fn with_tolerances(mut self, t: &Tolerances) -> Self {
        self.tolerances = Some(t.clone());
        self
    }

    /// Resolves the requested mode against the exactness of the inputs.
    pub fn effective_mode(&self, inputs_exact: bool) -> Result<Mode, CliError> {
        match self.mode {
            ModeArg::Exact if !inputs_exact => Err(usage("exact mode requires exact rational inputs")),
            ModeArg::Exact => Ok(Mode::Exact),
            ModeArg::Float => Ok(Mode::Float),
            ModeArg::Auto => Ok(if inputs_exact { Mode::Exact } else { Mode::Float }),
        }
    }

    /// Commands whose results are floating-point evidence only.
    pub fn numeric_mode(&self) -> Result<Mode, CliError> {
        if self.mode == ModeArg::Exact {
            return Err(usage(format!("`{}` is a numeric command; exact mode is unavailable", self.command)));
        }
        Ok(Mode::Float)
    }

    pub fn require_json(&self) -> Result<(), CliError> {
        if self.format == Format::Csv {
            return Err(usage(format!("`{}` has no CSV output", self.command)));
        }
        Ok(())
    }
}

#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub command: &'static str,
    pub mode: Mode,
    pub config: &'a RunConfig,
    #[serde(flatten)]
    pub result: T,
}

pub fn write_output(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.output {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn emit_json<T: Serialize>(cfg: &RunConfig, mode: Mode, result: T) -> Result<(), CliError> {
    let report = Report { command: cfg.command, mode, config: cfg, result };
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_output(cfg, &text)
}

pub fn emit_csv(cfg: &RunConfig, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_output(cfg, &text)
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn load_function(path: &Path) -> Result<ExpSum, CliError> {
    expsum_from_json(&read_file(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Applies the mode to a loaded function: float mode discards exactness.
pub fn coerce(f: ExpSum, mode: Mode) -> ExpSum {
    match mode {
        Mode::Exact => f,
        Mode::Float => f.to_float(),
    }
}

/// Inline JSON, or the contents of the named file.
fn json_arg<T: for<'de> Deserialize<'de>>(arg: &str, what: &str) -> Result<T, CliError> {
    let path = Path::new(arg);
    let text = if path.is_file() { read_file(path)? } else { arg.to_string() };
    serde_json::from_str(&text).map_err(|e| usage(format!("{what} `{arg}`: {e}")))
}

pub fn parse_scalar(s: &str) -> Result<Scalar, CliError> {
    s.trim().parse().map_err(|e| usage(format!("`{s}`: {e}")))
}

pub fn parse_values(arg: &str) -> Result<Vec<Complex64>, CliError> {
    let values: Vec<Scalar> = json_arg(arg, "values")?;
    Ok(values.iter().map(Scalar::to_complex).collect())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RegionDoc {
    Bounds([f64; 4]),
    Named(Region),
}

pub fn parse_region(arg: &str) -> Result<Region, CliError> {
    let r = match json_arg(arg, "region")? {
        RegionDoc::Bounds([a, b, c, d]) => Region { re_min: a, re_max: b, im_min: c, im_max: d },
        RegionDoc::Named(r) => r,
    };
    r.validate().map_err(usage)?;
    Ok(r)
}

pub fn parse_radii(arg: &str) -> Result<Vec<f64>, CliError> {
    let radii = arg
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| usage(format!("radius `{s}`: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(usage(format!("radii must be positive, got {r}")));
    }
    Ok(radii)
}
