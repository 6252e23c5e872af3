use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mimo_cc::app::{self, Overrides, RunConfig};
use mimo_cc::evaluator::Scheme;
use mimo_cc::Result;

#[derive(Parser)]
#[command(
    name = "mimo-cc",
    version,
    about = "Cache-aided MIMO multicast planning, delivery checks and rate sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Ω scan, the chosen plan, Θ and the transmission count.
    Plan(Common),
    /// Encode and decode a random library bit for bit.
    VerifyDelivery(Common),
    /// Optimize one channel realization and write solver traces.
    Simulate(Common),
    /// Monte Carlo SNR sweep; writes CSV and plot data.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated SNR points in dB.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr: Option<Vec<f64>>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Comma-separated: kkt_lmmse, zf, oracle_smallscale.
    #[arg(long, value_delimiter = ',')]
    scheme: Option<Vec<Scheme>>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the machine parallelism.
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            seed: self.seed,
            snr_db: self.snr.clone(),
            realizations: self.realizations,
            schemes: self.scheme.clone(),
            out: self.out.clone(),
        })?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = match &cli.command {
        Command::Plan(c)
        | Command::VerifyDelivery(c)
        | Command::Simulate(c)
        | Command::Sweep(c) => c,
    };
    let cfg = common.load()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.workers {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| mimo_cc::Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| {
        let text = match cli.command {
            Command::Plan(_) => app::cmd_plan(&cfg)?,
            Command::VerifyDelivery(_) => app::cmd_verify_delivery(&cfg)?.1,
            Command::Simulate(_) => app::cmd_simulate(&cfg)?.1,
            Command::Sweep(_) => app::cmd_sweep(&cfg)?.1,
        };
        print!("{text}");
        Ok(())
    })
}

fn main() -> ExitCode {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Warn)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
