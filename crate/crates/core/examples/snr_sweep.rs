//! Monte Carlo sweep over SNR for KKT/LMMSE and ZF, printed as the CSV the
//! `sweep` command writes.
//!
//! `cargo run --release --example snr_sweep`

use mimo_cc::delivery::plan_transmissions;
use mimo_cc::evaluator::{monte_carlo_sweep, Scheme, SweepOptions};
use mimo_cc::NetworkConfig;

fn main() -> mimo_cc::Result<()> {
    let cfg = NetworkConfig::with_gain(4, 3, 2, 1)?;
    let plan = plan_transmissions(&cfg, 3, 2, 1)?;
    let opts = SweepOptions {
        snr_db: vec![0.0, 10.0, 20.0, 30.0],
        realizations: 8,
        seed: 3,
        // two of the four serving subsets per realization, extrapolated
        subsample: Some(2),
        ..Default::default()
    };
    let report = monte_carlo_sweep(&cfg, &plan, &[Scheme::KktLmmse, Scheme::Zf], &opts)?;
    print!("{}", report.csv_string());
    println!("# {:.1}s", report.elapsed.as_secs_f64());
    Ok(())
}
