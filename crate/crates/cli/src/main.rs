//! `kinbm`: simulate portfolios, fit frequency and severity models, compare
//! them and print premium tables.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{FamilyChoice, Form, Format, Layout, PriceKind, PriceModelConfig, RunConfig, CONFIG_KEYS};
use crate::error::{CliError, Result};

#[derive(Parser)]
#[command(name = "kinbm", version, about = "k-inflated negative binomial mixtures for rate-making")]
#[command(after_long_help = CONFIG_KEYS)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default kinbm-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic portfolio CSV.
    #[command(after_long_help = CONFIG_KEYS)]
    Simulate(SimulateArgs),
    /// Fit a frequency or severity model to a portfolio.
    #[command(after_long_help = CONFIG_KEYS)]
    Fit(FitArgs),
    /// Compare fitted models: simulated frequencies, pairwise tests, AIC/SBIC.
    #[command(after_long_help = CONFIG_KEYS)]
    Compare(CompareArgs),
    /// Print rate or pure premium tables.
    #[command(after_long_help = CONFIG_KEYS)]
    Price(PriceArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    policies: Option<usize>,
    #[arg(long)]
    years: Option<usize>,
    /// Published count regression to simulate from, e.g. 1INBM1.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    portfolio: Option<PathBuf>,
    #[arg(long, value_enum)]
    family: Option<FamilyChoice>,
    #[arg(long, value_enum)]
    form: Option<Form>,
    /// Component list length (inflation slot plus NB components; Pareto components).
    #[arg(long)]
    m: Option<usize>,
    /// Inflation point.
    #[arg(long)]
    k: Option<u32>,
    /// Design columns, comma separated (0 intercept, 1 gender, 2 age, 3 price, 4 area).
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<usize>>,
    /// Output name; the fit is written to NAME.fit.json.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Skip standard errors.
    #[arg(long)]
    no_standard_errors: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    portfolio: Option<PathBuf>,
    /// Fit JSON file; repeat for each model.
    #[arg(long = "fit")]
    fits: Vec<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    /// Skip the simulated-frequency comparison.
    #[arg(long)]
    no_simulation: bool,
}

#[derive(Args)]
struct PriceArgs {
    /// Published parameter set to price with; repeatable.
    #[arg(long)]
    published: Vec<String>,
    /// Frequency fit JSON to price with; repeatable.
    #[arg(long = "fit")]
    fits: Vec<PathBuf>,
    /// Severity fit JSON paired with every frequency fit.
    #[arg(long)]
    severity_fit: Option<PathBuf>,
    #[arg(long, value_enum)]
    kind: Option<PriceKind>,
    #[arg(long, value_enum)]
    layout: Option<Layout>,
    #[arg(long)]
    max_years: Option<usize>,
    #[arg(long)]
    max_claims: Option<u64>,
    #[arg(long)]
    total_severity: Option<f64>,
}

fn apply_overrides(cli: &Cli, cfg: &mut RunConfig) {
    if cli.out.is_some() {
        cfg.out.clone_from(&cli.out);
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if cli.format.is_some() {
        cfg.format = cli.format;
    }
    match &cli.command {
        Command::Simulate(a) => {
            let s = &mut cfg.simulate;
            if let Some(v) = a.policies {
                s.policies = v;
            }
            if let Some(v) = a.years {
                s.years = v;
            }
            if let Some(v) = &a.preset {
                s.preset.clone_from(v);
            }
        }
        Command::Fit(a) => {
            let f = &mut cfg.fit;
            if a.portfolio.is_some() {
                f.portfolio.clone_from(&a.portfolio);
            }
            if let Some(v) = a.family {
                f.family = v;
            }
            if let Some(v) = a.form {
                f.form = v;
            }
            if let Some(v) = a.m {
                f.m = v;
            }
            if let Some(v) = a.k {
                f.k = v;
            }
            if a.columns.is_some() {
                f.columns.clone_from(&a.columns);
            }
            if a.name.is_some() {
                f.name.clone_from(&a.name);
            }
            if let Some(v) = a.restarts {
                f.em.n_restarts = v;
            }
            if a.no_standard_errors {
                f.em.standard_errors = false;
            }
        }
        Command::Compare(a) => {
            let c = &mut cfg.compare;
            if a.portfolio.is_some() {
                c.portfolio.clone_from(&a.portfolio);
            }
            if !a.fits.is_empty() {
                c.fits.clone_from(&a.fits);
            }
            if let Some(v) = a.reps {
                c.reps = v;
            }
            if a.no_simulation {
                c.simulation = false;
            }
        }
        Command::Price(a) => {
            let p = &mut cfg.price;
            if !a.published.is_empty() || !a.fits.is_empty() {
                p.models = a
                    .published
                    .iter()
                    .map(|n| PriceModelConfig {
                        name: n.clone(),
                        published: Some(n.clone()),
                        ..Default::default()
                    })
                    .chain(a.fits.iter().map(|f| PriceModelConfig {
                        frequency_fit: Some(f.clone()),
                        severity_fit: a.severity_fit.clone(),
                        ..Default::default()
                    }))
                    .collect();
            }
            if let Some(v) = a.kind {
                p.kind = v;
            }
            if let Some(v) = a.layout {
                p.layout = v;
            }
            if let Some(v) = a.max_years {
                p.max_years = v;
            }
            if let Some(v) = a.max_claims {
                p.max_claims = v;
            }
            if let Some(v) = a.total_severity {
                p.total_severity = v;
            }
        }
    }
}

fn run(cli: &Cli) -> Result<String> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    apply_overrides(cli, &mut cfg);
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot set up {n} threads: {e}")))?;
    }
    let ctx = commands::Context::new(cfg)?;
    let (name, report) = match cli.command {
        Command::Simulate(_) => ("simulate", commands::simulate(&ctx)?),
        Command::Fit(_) => ("fit", commands::fit(&ctx)?),
        Command::Compare(_) => ("compare", commands::compare(&ctx)?),
        Command::Price(_) => ("price", commands::price(&ctx)?),
    };
    ctx.echo_config(name)?;
    Ok(report)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KINBM_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{report}");
            if !report.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.class());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
