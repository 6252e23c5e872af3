//! Scan the serving-set size Ω for a few antenna setups and show the chosen
//! (Ω, β, q).
//!
//! `cargo run --example dof_planner`

use mimo_cc::dof::{optimize_dof, PlannerReport};

fn main() -> mimo_cc::Result<()> {
    println!("{}", PlannerReport::new(3, 2, 1, None)?);
    println!("{}", PlannerReport::new(8, 4, 1, None)?);

    // plans only: which setups need more than one substream
    for (l, g, t) in [(2, 2, 1), (4, 2, 2), (6, 3, 1), (10, 10, 4)] {
        let p = optimize_dof(l, g, t)?;
        println!(
            "L={l:<2} G={g:<2} t={t}: Ω={} β={} q={} DoF={}",
            p.omega, p.beta, p.substreams, p.dof
        );
    }
    Ok(())
}
