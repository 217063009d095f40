//! `valshare`: command-line front end for valshare-core.
//!
//! Exit codes: 0 success, 2 usage, 3 expectation mismatch, 4 numeric
//! failure, 5 battery failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use valshare_core::sharing::SharingCondition;

use config::{
    parse_radii, parse_region, parse_scalar, parse_values, usage, CliError, OutputArgs, RunConfig, Tolerances,
    EXIT_USAGE,
};

#[derive(Parser, Debug)]
#[command(name = "valshare", version, about = "Value sharing between an entire function and its derivative")]
struct Cli {
    /// Worker threads; VALSHARE_THREADS overrides this
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Zero,
    Constant,
    Nonconstant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConditionArg {
    All,
    ShareSimple,
    S2s,
    S2a,
}

impl ConditionArg {
    pub fn condition(self) -> Option<SharingCondition> {
        match self {
            ConditionArg::All => None,
            ConditionArg::ShareSimple => Some(SharingCondition::ShareSimple),
            ConditionArg::S2s => Some(SharingCondition::SimpleToSimple),
            ConditionArg::S2a => Some(SharingCondition::SimpleToAny),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether an expression in bound functions is zero or constant
    Verify {
        #[arg(long)]
        expr: String,
        /// Binding name=path to an exponential-sum JSON file; repeatable
        #[arg(long = "fn", value_name = "NAME=PATH")]
        bindings: Vec<String>,
        #[arg(long, value_enum)]
        expect: Option<Expect>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Locate the a-points of f (or of a derivative) in a rectangle
    Locate {
        #[arg(long = "fn", value_name = "PATH")]
        function: PathBuf,
        #[arg(long, default_value = "0")]
        value: String,
        /// Locate a-points of the k-th derivative instead
        #[arg(long, default_value_t = 0)]
        derivative: u32,
        /// `[re_min,re_max,im_min,im_max]`, a region object, or a file
        #[arg(long)]
        region: String,
        #[command(flatten)]
        tol: Tolerances,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Proximity, counting and characteristic functions at several radii
    Profile {
        #[arg(long = "fn", value_name = "PATH")]
        function: PathBuf,
        /// JSON list of values, inline or in a file
        #[arg(long)]
        values: Option<String>,
        /// Comma-separated radii
        #[arg(long)]
        radii: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Audit the sharing conditions between f and f' on a region
    Share {
        #[arg(long = "fn", value_name = "PATH")]
        function: PathBuf,
        #[arg(long)]
        values: String,
        #[arg(long)]
        region: String,
        #[arg(long, value_enum, default_value_t = ConditionArg::All)]
        condition: ConditionArg,
        #[command(flatten)]
        tol: Tolerances,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Solve the coefficient matching for the cubic-ODE family with parameter delta
    Derive {
        #[arg(long, allow_hyphen_values = true)]
        delta: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Classify Y³ − XY² + γ(X³ + c₂X²Z + c₁XZ² + c₀Z³)
    ClassifyCurve {
        #[arg(long, allow_hyphen_values = true)]
        gamma: String,
        #[arg(long, allow_hyphen_values = true)]
        c2: String,
        #[arg(long, allow_hyphen_values = true)]
        c1: String,
        #[arg(long, allow_hyphen_values = true)]
        c0: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// EXPERIMENTAL: search a grid for f sharing a and b with f' but f ≢ f'
    Probe {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        /// Grid JSON file (coefficients, frequencies, functions)
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value = "[-4,4,-4,4]")]
        region: String,
        #[arg(long, value_enum, default_value_t = ConditionArg::ShareSimple)]
        condition: ConditionArg,
        #[command(flatten)]
        tol: Tolerances,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the full reproduction battery
    ReproducePaper {
        /// Loosen every tolerance to at least this value
        #[arg(long)]
        tol: Option<f64>,
        /// Directory of fixture files overriding the built-in ones by name
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Fixture files
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
}

#[derive(Subcommand, Debug)]
enum FixtureAction {
    /// Write the built-in fixtures as JSON files
    Export {
        #[arg(long, default_value = "fixtures")]
        dir: PathBuf,
    },
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    match std::env::var("VALSHARE_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| usage(format!("VALSHARE_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(flag),
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let threads = threads(cli.threads)?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| usage(e.to_string()))?;
    }
    match cli.command {
        Command::Verify { expr, bindings, expect, out } => {
            let mut cfg = RunConfig::new("verify", &out, threads).input("expr", &expr);
            for b in &bindings {
                cfg = cfg.input("fn", b);
            }
            commands::verify(&cfg, &expr, &bindings, expect)
        }
        Command::Locate { function, value, derivative, region, tol, out } => {
            tol.validate()?;
            let cfg = RunConfig::new("locate", &out, threads)
                .input("fn", function.display())
                .input("value", &value)
                .input("derivative", derivative)
                .input("region", &region)
                .with_tolerances(&tol);
            commands::locate_cmd(&cfg, &tol, &function, &parse_scalar(&value)?, derivative, &parse_region(&region)?)
        }
        Command::Profile { function, values, radii, out } => {
            let mut cfg =
                RunConfig::new("profile", &out, threads).input("fn", function.display()).input("radii", &radii);
            let vals = match &values {
                Some(v) => {
                    cfg = cfg.input("values", v);
                    parse_values(v)?
                }
                None => Vec::new(),
            };
            commands::profile_cmd(&cfg, &function, &vals, &parse_radii(&radii)?)
        }
        Command::Share { function, values, region, condition, tol, out } => {
            tol.validate()?;
            let cfg = RunConfig::new("share", &out, threads)
                .input("fn", function.display())
                .input("values", &values)
                .input("region", &region)
                .input("condition", format!("{condition:?}"))
                .with_tolerances(&tol);
            commands::share(&cfg, &tol, &function, &parse_values(&values)?, &parse_region(&region)?, condition)
        }
        Command::Derive { delta, out } => {
            let cfg = RunConfig::new("derive", &out, threads).input("delta", &delta);
            commands::derive(&cfg, &parse_scalar(&delta)?)
        }
        Command::ClassifyCurve { gamma, c2, c1, c0, out } => {
            let cfg = RunConfig::new("classify-curve", &out, threads)
                .input("gamma", &gamma)
                .input("c2", &c2)
                .input("c1", &c1)
                .input("c0", &c0);
            let params = [parse_scalar(&gamma)?, parse_scalar(&c2)?, parse_scalar(&c1)?, parse_scalar(&c0)?];
            commands::classify_curve(&cfg, params)
        }
        Command::Probe { a, b, grid, region, condition, tol, out } => {
            tol.validate()?;
            let mut cfg = RunConfig::new("probe", &out, threads)
                .input("a", &a)
                .input("b", &b)
                .input("region", &region)
                .input("condition", format!("{condition:?}"))
                .with_tolerances(&tol);
            if let Some(g) = &grid {
                cfg = cfg.input("grid", g.display());
            }
            let cond = condition.condition().ok_or_else(|| usage("probe needs a single condition"))?;
            let (a, b) = (parse_scalar(&a)?, parse_scalar(&b)?);
            commands::probe(&cfg, &tol, &a, &b, grid.as_deref(), &parse_region(&region)?, cond)
        }
        Command::ReproducePaper { tol, fixtures, out } => {
            let mut cfg = RunConfig::new("reproduce-paper", &out, threads);
            if let Some(t) = tol {
                cfg = cfg.input("tol", t);
            }
            if let Some(d) = &fixtures {
                cfg = cfg.input("fixtures", d.display());
            }
            commands::reproduce(&cfg, tol, fixtures.as_deref())
        }
        Command::Fixtures { action: FixtureAction::Export { dir } } => commands::export_fixtures(&dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("valshare: {e}");
            e.exit_code()
        }
    }
}
