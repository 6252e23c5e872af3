//! Draw a seeded channel realization, write it as JSON and read it back.
//!
//! `cargo run --example channel_dump`

use mimo_cc::channel::{sample_channels, ChannelSet};

fn main() -> mimo_cc::Result<()> {
    let set = sample_channels(42, 0, 3, 2, 2);
    let mut buf = Vec::new();
    set.write_json(&mut buf)?;
    println!("{}", String::from_utf8_lossy(&buf));

    let back = ChannelSet::read_json(buf.as_slice())?;
    assert_eq!(back.matrices, set.matrices);
    // user k's matrix does not depend on how many users were drawn
    assert_eq!(sample_channels(42, 0, 5, 2, 2).user(1), set.user(1));
    println!(
        "round trip ok; user 0 gain {:.4}",
        set.user(0).norm_squared()
    );
    Ok(())
}
