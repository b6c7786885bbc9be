use bmbound::cli;
use bmbound::engine::{EvaluatorPath, MfStart};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

/// Provable lower bounds of arbitrary odd polynomial order on the
/// log-partition function of Boltzmann machines.
#[derive(Parser)]
#[command(name = "bmbound", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Graph,
    Brute,
}

impl From<PathArg> for EvaluatorPath {
    fn from(value: PathArg) -> Self {
        match value {
            PathArg::Graph => EvaluatorPath::Graph,
            PathArg::Brute => EvaluatorPath::BruteForce,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MfStartArg {
    Standard,
    Zero,
}

impl From<MfStartArg> for MfStart {
    fn from(value: MfStartArg) -> Self {
        match value {
            MfStartArg::Standard => MfStart::Standard,
            MfStartArg::Zero => MfStart::Zero,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate partition graphs and write one catalog file per order.
    Catalog {
        /// Highest expansion order to catalogue (2..=9).
        #[arg(long, default_value_t = 9)]
        max_order: usize,
        /// Output directory for order_N.json files.
        #[arg(long, default_value = "data/catalogs")]
        out: PathBuf,
    },
    /// Compute the optimised bound for one network file.
    Bound {
        /// Network file: JSON {"N", "theta", "weights_upper_triangle"}.
        network: PathBuf,
        /// Bound order K (even).
        #[arg(long)]
        order: usize,
        /// Moment evaluation path.
        #[arg(long, value_enum, default_value_t = PathArg::Graph)]
        path: PathArg,
        /// Mean-field starting point.
        #[arg(long, value_enum, default_value_t = MfStartArg::Standard)]
        mf_start: MfStartArg,
        /// Directory holding catalog files (graph path only).
        #[arg(long, default_value = "data/catalogs")]
        catalogs: PathBuf,
    },
    /// Run an ensemble sweep from a JSON configuration.
    Sweep {
        /// Sweep configuration file.
        config: PathBuf,
        /// Output prefix; writes <out>.rows.csv and <out>.agg.csv.
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Generate a random SK network file.
    GenNetwork {
        /// Output network file.
        out: PathBuf,
        #[arg(long, default_value_t = 14)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma_w: f64,
        #[arg(long, default_value_t = 0.2)]
        sigma_theta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run() -> bmbound::Result<()> {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout();
    match cli.command {
        Command::Catalog { max_order, out } => cli::run_catalog(max_order, &out, &mut stdout),
        Command::Bound {
            network,
            order,
            path,
            mf_start,
            catalogs,
        } => cli::run_bound(
            &network,
            order,
            path.into(),
            mf_start.into(),
            &catalogs,
            &mut stdout,
        ),
        Command::Sweep { config, out } => {
            let config = cli::SweepConfig::load(&config)?;
            let output = cli::run_sweep(&config, &out)?;
            println!("rows: {}", output.rows_path.display());
            println!("aggregate: {}", output.aggregate_path.display());
            Ok(())
        }
        Command::GenNetwork {
            out,
            n,
            sigma_w,
            sigma_theta,
            seed,
        } => {
            cli::write_sk_network(n, sigma_w, sigma_theta, seed, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
