//! One transmission of the (K=4, L=3, G=2, t=1, Ω=3) setup: the KKT/LMMSE
//! design against zero-forcing and the brute-force reference, with the
//! solver's feasibility diagnostics.
//!
//! `cargo run --release --example kkt_vs_zf`

use mimo_cc::beamformer::oracle::{maximize, OracleOptions};
use mimo_cc::beamformer::{optimize, total_power, zf_beamformers, KktOptions, StreamLayout};
use mimo_cc::channel::{sample_channels, snr_to_power};
use mimo_cc::delivery::plan_transmissions;
use mimo_cc::NetworkConfig;

fn main() -> mimo_cc::Result<()> {
    let cfg = NetworkConfig::with_gain(4, 3, 2, 1)?;
    let plan = plan_transmissions(&cfg, 3, 2, 1)?;
    let tx = &plan.transmissions[0];
    let layout = StreamLayout::from_transmission(tx, plan.substreams);
    let all = sample_channels(11, 0, cfg.users, cfg.rx_dims, cfg.tx_dims);
    let h = all.select(&tx.users.to_vec());
    println!(
        "transmission {} serves {}, {} streams",
        tx.index,
        tx.users,
        layout.num_streams()
    );

    for snr in [10.0, 20.0, 30.0] {
        let power = snr_to_power(snr, 1.0);
        let kkt = optimize(&layout, &h, power, 1.0, &KktOptions::default())?;
        let zf = zf_beamformers(&layout, &h, power, 1.0)?;
        let zf_rate = mimo_cc::beamformer::transmission_rate(&layout, &zf.w, &zf.u, &h, 1.0);
        let reference = maximize(&layout, &h, power, 1.0, &OracleOptions::default());
        let d = &kkt.diagnostics;
        println!(
            "{snr:>4} dB: kkt {:.4}  zf {:.4}  reference {:.4}",
            kkt.rate, zf_rate, reference.rate
        );
        println!(
            "         power {:.3}/{power:.1}, residual {:.1e}, normalization {:.1e}, zf leakage {:.1e}",
            total_power(&kkt.state.w),
            d.max_residual,
            d.max_normalization_error,
            zf.max_leakage
        );
    }
    Ok(())
}
