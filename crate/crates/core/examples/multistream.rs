//! Splitting each codeword into q=2 substreams doubles the streams per
//! transmission on (K=4, L=G=2, t=1, Ω=2); compare mean rates at high SNR.
//!
//! `cargo run --release --example multistream`

use mimo_cc::delivery::plan_transmissions;
use mimo_cc::evaluator::{monte_carlo_sweep, slope_in_streams, Scheme, SweepOptions};
use mimo_cc::NetworkConfig;

fn main() -> mimo_cc::Result<()> {
    let cfg = NetworkConfig::with_gain(4, 2, 2, 1)?;
    let snr = vec![20.0, 25.0, 30.0];
    let opts = SweepOptions {
        snr_db: snr.clone(),
        realizations: 6,
        seed: 8,
        ..Default::default()
    };
    for (beta, q) in [(1, 1), (2, 2)] {
        let plan = plan_transmissions(&cfg, 2, beta, q)?;
        let report = monte_carlo_sweep(&cfg, &plan, &[Scheme::KktLmmse], &opts)?;
        let curve: Vec<f64> = report.points.iter().map(|p| p.mean_harmonic_rate).collect();
        println!(
            "q={q}: rates {:?}, slope {:.2} streams",
            curve.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>(),
            slope_in_streams(&snr, &curve)
        );
    }
    Ok(())
}
