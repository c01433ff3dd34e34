mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

/// Discrete prestrained lattices and their continuum limits.
#[derive(Parser, Debug)]
#[command(name = "prestrain", version)]
struct Cli {
    /// Worker threads; overrides the config file and the PRESTRAIN_WORKERS variable.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write the CSV here instead of the configured path or stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Shells, orbits and lattice families of one interaction length.
    Lattices {
        #[arg(long)]
        radius_sq: u64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// One row per family, with its basis and translations.
        #[arg(long)]
        families: bool,
    },
    /// The density and its quasiconvex envelope at one matrix.
    Qw {
        /// Row-major entries, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        matrix: String,
    },
    /// Gaussian curvature of the metric and of its diagonal part on a grid.
    Curvature {
        #[arg(long)]
        config: PathBuf,
    },
    /// Discrete energy of a prescribed deformation.
    Energy {
        #[arg(long)]
        config: PathBuf,
    },
    /// Discrete energy beside its integral representation and the boundary bound.
    Represent {
        #[arg(long)]
        config: PathBuf,
    },
    /// Minimises the discrete energy at each ε.
    Minimize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Minima along an ε ladder against the continuum minimum.
    Study {
        #[arg(long)]
        config: PathBuf,
        /// Also write an SVG plot here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn load(path: &PathBuf, workers: Option<usize>) -> anyhow::Result<RunConfig> {
    let mut config = RunConfig::load(path)?;
    if let Some(w) = workers {
        anyhow::ensure!(w >= 1, "--workers must be at least 1");
        config.workers = Some(w);
    }
    Ok(config)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let explicit = cli.output.as_deref();
    let target = |c: &RunConfig| explicit.map(PathBuf::from).or_else(|| c.output.csv.clone());
    match &cli.command {
        Command::Lattices { radius_sq, dim, families } => commands::lattices(*radius_sq, *dim, *families, explicit),
        Command::Qw { matrix } => commands::qw_table(matrix, explicit),
        Command::Curvature { config } => {
            let c = load(config, cli.workers)?;
            commands::curvature(&c, target(&c).as_deref())
        }
        Command::Energy { config } => {
            let c = load(config, cli.workers)?;
            commands::energy(&c, target(&c).as_deref())
        }
        Command::Represent { config } => {
            let c = load(config, cli.workers)?;
            commands::represent(&c, target(&c).as_deref())
        }
        Command::Minimize { config } => {
            let c = load(config, cli.workers)?;
            commands::minimize(&c, target(&c).as_deref())
        }
        Command::Study { config, svg } => {
            let c = load(config, cli.workers)?;
            let svg = svg.clone().or_else(|| c.output.svg.clone());
            commands::study(&c, target(&c).as_deref(), svg.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
