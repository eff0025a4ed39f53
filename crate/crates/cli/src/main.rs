//! `autores`: batch front end for the autoresonance laboratory.
//!
//! Every subcommand reads an optional TOML configuration, applies its flags on
//! top, and writes CSV/JSON files into the output directory. Exit codes:
//! 0 ok, 2 configuration error, 3 step budget exhausted, 4 precondition violated.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use autores_core::model::MuSpec;
use clap::{Args, Parser, Subcommand};

use commands::Kind;
use config::ExperimentConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "autores", version, about = "Autoresonance capture laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Validate the configuration and exit without computing.
    #[arg(long)]
    dry_run: bool,
    /// Worker threads for parallel sweeps; outputs do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; overrides AUTORES_OUT_DIR and the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Roots of the phase equation and the parameter region.
    #[command(allow_negative_numbers = true)]
    Equilibria {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        mu0: Option<f64>,
    },
    /// Region and root census over a (delta, nu) grid.
    BifurcationScan {
        #[command(flatten)]
        common: Common,
    },
    /// One slow-system trajectory and its capture verdict.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tau0: Option<f64>,
        #[arg(long)]
        tau_max: Option<f64>,
    },
    /// Capture verdicts over a grid of initial data.
    Basin {
        #[command(flatten)]
        common: Common,
    },
    /// Lyapunov function along a perturbed captured trajectory.
    #[command(allow_negative_numbers = true)]
    LyapunovCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        psi0: Option<f64>,
        #[arg(long)]
        d0: Option<f64>,
        #[arg(long)]
        angle: Option<f64>,
    },
    /// Frequency of closed orbits of the frozen Hamiltonian.
    FreqCheck {
        #[command(flatten)]
        common: Common,
        /// Energy levels; repeat or separate with commas.
        #[arg(long, value_delimiter = ',')]
        h: Vec<f64>,
        #[arg(long)]
        psi0: Option<f64>,
    },
    /// Algebraic against dynamic stability along a root branch.
    #[command(allow_negative_numbers = true)]
    ThresholdSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        branch_psi0: Option<f64>,
    },
    /// Full Duffing oscillator against its slow reduction.
    #[command(allow_negative_numbers = true)]
    Duffing {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "v0")]
        u0: Option<f64>,
        #[arg(long, requires = "u0")]
        v0: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Counterexample with negative frozen eigenvalues and growing solutions.
    #[command(allow_negative_numbers = true)]
    DemoEs {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a0: Option<f64>,
        #[arg(long)]
        b0: Option<f64>,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        t1: Option<f64>,
    },
    /// Series coefficients and residual decay.
    Asymptotics {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        psi0: Option<f64>,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Loads the config and applies the subcommand's flags.
fn resolve(command: Command) -> Result<(Kind, Common, ExperimentConfig, Option<f64>), CliError> {
    let (kind, common) = match &command {
        Command::Equilibria { common, .. } => (Kind::Equilibria, common),
        Command::BifurcationScan { common } => (Kind::BifurcationScan, common),
        Command::Simulate { common, .. } => (Kind::Simulate, common),
        Command::Basin { common } => (Kind::Basin, common),
        Command::LyapunovCheck { common, .. } => (Kind::LyapunovCheck, common),
        Command::FreqCheck { common, .. } => (Kind::FreqCheck, common),
        Command::ThresholdSweep { common, .. } => (Kind::ThresholdSweep, common),
        Command::Duffing { common, .. } => (Kind::Duffing, common),
        Command::DemoEs { common, .. } => (Kind::DemoEs, common),
        Command::Asymptotics { common, .. } => (Kind::Asymptotics, common),
    };
    let common = common.clone();
    let mut cfg = config::load(common.config.as_deref())?;
    let mut delta = None;
    match command {
        Command::Equilibria { delta: d, nu, lambda, mu0, .. } => {
            delta = d;
            set(&mut cfg.model.nu, nu);
            set(&mut cfg.model.lambda, lambda);
            set(&mut cfg.model.mu, mu0.map(MuSpec::leading));
        }
        Command::Simulate { tau0, tau_max, .. } => {
            set(&mut cfg.run.tau0, tau0);
            set(&mut cfg.run.tau_max, tau_max);
        }
        Command::LyapunovCheck { psi0, d0, angle, .. } => {
            set(&mut cfg.lyapunov.psi0, psi0);
            set(&mut cfg.lyapunov.d0, d0);
            set(&mut cfg.lyapunov.angle, angle);
        }
        Command::FreqCheck { h, psi0, .. } => {
            if !h.is_empty() {
                cfg.freq.h = h;
            }
            set(&mut cfg.freq.psi0, psi0);
        }
        Command::ThresholdSweep { nu, branch_psi0, .. } => {
            set(&mut cfg.model.nu, nu);
            set(&mut cfg.threshold.branch_psi0, branch_psi0);
        }
        Command::Duffing { u0, v0, t_max, .. } => {
            if let (Some(u), Some(v)) = (u0, v0) {
                cfg.duffing.data = vec![[u, v]];
            }
            set(&mut cfg.duffing.t_max, t_max);
        }
        Command::DemoEs { a0, b0, t0, t1, .. } => {
            set(&mut cfg.demo_es.a0, a0);
            set(&mut cfg.demo_es.b0, b0);
            set(&mut cfg.demo_es.t0, t0);
            set(&mut cfg.demo_es.t1, t1);
        }
        Command::Asymptotics { psi0, .. } => set(&mut cfg.asymptotics.psi0, psi0),
        Command::BifurcationScan { .. } | Command::Basin { .. } => {}
    }
    Ok((kind, common, cfg, delta))
}

fn execute(command: Command) -> Result<(), CliError> {
    let (kind, common, cfg, delta) = resolve(command)?;
    if let Some(n) = common.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Precondition(format!("cannot start worker pool: {e}")))?;
    }
    let env = std::env::var("AUTORES_OUT_DIR").ok();
    let dir = config::resolve_out_dir(common.out_dir.as_deref(), env.as_deref(), &cfg.output);
    match commands::run(kind, &cfg, delta, common.dry_run)? {
        None => println!("{}: configuration ok", kind.name()),
        Some(out) => {
            out.write_to(&dir)?;
            print!("{}", out.stdout);
            for f in &out.files {
                println!("wrote {}", dir.join(&f.name).display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("autores: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
