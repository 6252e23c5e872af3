//! Degenerate single-user, single-antenna link: the optimized rate must equal
//! the capacity log2(1 + SNR).
//!
//! `cargo run --release --example point_to_point`

use mimo_cc::beamformer::{optimize, CMatrix, KktOptions, StreamLayout};
use mimo_cc::channel::snr_to_power;
use mimo_cc::Complex;

fn main() -> mimo_cc::Result<()> {
    let layout = StreamLayout::new(&[0], 0, 1);
    let h = vec![CMatrix::from_element(1, 1, Complex::new(1.0, 0.0))];
    for snr in [0.0, 10.0, 20.0] {
        let power = snr_to_power(snr, 1.0);
        let out = optimize(&layout, &h, power, 1.0, &KktOptions::default())?;
        let capacity = (1.0 + power).log2();
        println!(
            "{snr:>4} dB: rate {:.6}  capacity {:.6}  gap {:.1e}  outer iterations {}",
            out.rate,
            capacity,
            (out.rate - capacity).abs(),
            out.diagnostics.outer_objectives.len()
        );
    }
    Ok(())
}
