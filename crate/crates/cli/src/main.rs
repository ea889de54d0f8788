//! `ssprofile`: exponents, critical points, connections, figure data and
//! verification reports for `u_t = Δu^m + |x|^σ u^p`.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ssprofile::phase_systems::System;
use ssprofile::verify::Level;

use commands::{ExplicitArgs, FigureId, SweepArgs};
use config::{Branch, Overrides, RunConfig};

#[derive(Parser)]
#[command(version, about = "Self-similar profiles of fast diffusion with a weighted source")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    #[arg(long, global = true, allow_negative_numbers = true)]
    m: Option<f64>,
    #[arg(long = "N", global = true)]
    n: Option<u32>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    sigma: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Distance of the first orbit point from P0.
    #[arg(long, global = true)]
    eps_seed: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `key = value` file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemArg {
    Forward,
    Extinction,
}

impl From<SystemArg> for System {
    fn from(s: SystemArg) -> Self {
        match s {
            SystemArg::Forward => System::Forward,
            SystemArg::Extinction => System::Extinction,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Critical exponents and theorem regimes, as JSON.
    Exponents,
    /// Critical points with eigenvalues and stability, as JSON.
    Points {
        #[arg(long, value_enum)]
        system: Option<SystemArg>,
        /// Include points that do not exist for these parameters.
        #[arg(long)]
        all: bool,
    },
    /// Finds a connection and writes its orbit, profile and summary.
    Shoot {
        #[arg(long, value_enum)]
        system: Option<SystemArg>,
        /// P0 → P1 connection (fast decay).
        #[arg(long, group = "branch")]
        fast: bool,
        /// P0 → P2 connection (slow decay).
        #[arg(long, group = "branch")]
        slow: bool,
        /// The orbit leaving P3 (extinction system).
        #[arg(long, group = "branch")]
        p3: bool,
    },
    /// Data behind figure 1a, 1b, 2a, 2b, 3a or 3b.
    Figure { id: String },
    /// Runs the invariant checks; exits nonzero on any failure.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
    },
    /// Evaluates an explicit family: sobolev, singular, cylinder, curve, p0.
    Explicit {
        family: String,
        /// Constant of the sobolev and curve families.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        c: f64,
        #[arg(long, allow_negative_numbers = true)]
        lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        hi: Option<f64>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Classifies P0 orbits over a log grid of C or K, or estimates p0.
    Sweep {
        #[arg(long, value_enum)]
        system: Option<SystemArg>,
        #[arg(long, default_value_t = 1e-8)]
        lo: f64,
        #[arg(long, default_value_t = 1e12)]
        hi: f64,
        #[arg(long, default_value_t = 41)]
        samples: usize,
        /// Estimate p0, the lower end of the fast extinction range, instead.
        #[arg(long)]
        p0: bool,
        #[arg(long, default_value_t = 32)]
        p_grid: usize,
        #[arg(long, default_value_t = 6)]
        refine: usize,
    },
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            m: self.m,
            n: self.n,
            sigma: self.sigma,
            p: self.p,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            eps_seed: self.eps_seed,
            out: self.out.clone(),
            system: None,
            branch: None,
        }
    }
}

fn build_config(cli: &Cli, base: RunConfig) -> Result<RunConfig> {
    let file = match &cli.global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Overrides::parse(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => Overrides::default(),
    };
    let mut flags = cli.global.overrides();
    match &cli.command {
        Command::Points { system, .. } | Command::Sweep { system, .. } => flags.system = system.map(Into::into),
        Command::Shoot { system, fast, slow, p3 } => {
            flags.system = system.map(Into::into);
            flags.branch = match (fast, slow, p3) {
                (true, _, _) => Some(Branch::Fast),
                (_, true, _) => Some(Branch::Slow),
                (_, _, true) => Some(Branch::P3),
                _ => None,
            };
        }
        _ => {}
    }
    Ok(base.apply(&file).apply(&flags))
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SSPROFILE_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("SSPROFILE_THREADS = '{v}'"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    if let Command::Figure { id } = &cli.command {
        let id = FigureId::parse(id)?;
        let cfg = build_config(&cli, id.defaults())?;
        commands::figure(id, &cfg)?;
        return Ok(true);
    }
    let cfg = build_config(&cli, RunConfig::default())?;
    match cli.command {
        Command::Exponents => commands::exponents(&cfg)?,
        Command::Points { all, .. } => commands::points(&cfg, all)?,
        Command::Shoot { .. } => commands::shoot(&cfg)?,
        Command::Figure { .. } => unreachable!(),
        Command::Verify { level } => {
            return commands::verify(match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            })
        }
        Command::Explicit { family, c, lo, hi, samples } => {
            commands::explicit(&cfg, &ExplicitArgs { family, c, lo, hi, n: samples })?
        }
        Command::Sweep { lo, hi, samples, p0, p_grid, refine, .. } => {
            commands::sweep_cmd(&cfg, &SweepArgs { lo, hi, n: samples, p0, p_grid, refine })?
        }
    }
    Ok(true)
}

/// 2 for invalid input, 3 for a regime refusal, 4 when no bracket exists.
fn exit_code(err: &anyhow::Error) -> u8 {
    use ssprofile::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::InvalidParameters(_) | E::InvalidArgument(_)) => 2,
        Some(E::Regime(_) | E::Branch(_)) => 3,
        Some(E::NoBracket(_)) => 4,
        Some(_) => 1,
        None if err.downcast_ref::<std::io::Error>().is_some() => 1,
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
