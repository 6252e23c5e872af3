//! Choice of serving-set size `Ω`, per-user stream count `β` and substream
//! factor `q` maximizing the degrees of freedom `Ω·β`.

use std::fmt;

use serde::Serialize;

use crate::combinatorics::binomial;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DofPlan {
    pub omega: usize,
    pub beta: usize,
    pub substreams: usize,
    pub dof: usize,
    /// Stream bound before integer truncation.
    pub beta_bound_real: f64,
    /// `β` is a multiple of `C(Ω-1, t)`, so no DoF is lost to the substream split.
    pub exact: bool,
}

/// `min(G, L·C(Ω-1,t) / (1 + (Ω-t-1)·C(Ω-1,t)))`.
pub fn beta_bound(tx_dims: usize, rx_dims: usize, gain: usize, omega: usize) -> Result<f64> {
    let (num, den) = bound_ratio(tx_dims, gain, omega)?;
    Ok((rx_dims as f64).min(num as f64 / den as f64))
}

fn bound_ratio(tx_dims: usize, gain: usize, omega: usize) -> Result<(u64, u64)> {
    if omega < gain + 1 || omega > gain + tx_dims {
        return Err(Error::Domain(format!(
            "Ω = {omega} outside [t+1, t+L] = [{}, {}]",
            gain + 1,
            gain + tx_dims
        )));
    }
    let c = binomial(omega - 1, gain);
    Ok((tx_dims as u64 * c, 1 + (omega - gain - 1) as u64 * c))
}

/// Smallest `q` with `q·C(Ω-1,t) ≥ β`.
pub fn substream_count(beta: usize, omega: usize, gain: usize) -> usize {
    let per_user = binomial(omega.saturating_sub(1), gain).max(1) as usize;
    beta.div_ceil(per_user).max(1)
}

/// Plan for a fixed `Ω`: `β` is the integer part of the bound.
pub fn plan_for_omega(
    tx_dims: usize,
    rx_dims: usize,
    gain: usize,
    omega: usize,
) -> Result<DofPlan> {
    let (num, den) = bound_ratio(tx_dims, gain, omega)?;
    // integer floor avoids rounding trouble on exact ratios like 6/3
    let beta = rx_dims.min((num / den) as usize);
    let per_user = binomial(omega - 1, gain) as usize;
    Ok(DofPlan {
        omega,
        beta,
        substreams: substream_count(beta, omega, gain),
        dof: omega * beta,
        beta_bound_real: beta_bound(tx_dims, rx_dims, gain, omega)?,
        exact: beta.is_multiple_of(per_user),
    })
}

/// Every feasible `Ω` candidate, in increasing order.
pub fn candidates(tx_dims: usize, rx_dims: usize, gain: usize) -> Vec<DofPlan> {
    (gain + 1..=gain + tx_dims)
        .map(|omega| plan_for_omega(tx_dims, rx_dims, gain, omega).expect("Ω in range"))
        .collect()
}

/// Maximize `Ω·β`; ties go to the smaller `Ω`.
pub fn optimize_dof(tx_dims: usize, rx_dims: usize, gain: usize) -> Result<DofPlan> {
    optimize_dof_capped(tx_dims, rx_dims, gain, usize::MAX)
}

/// [`optimize_dof`] restricted to `Ω ≤ max_omega`, e.g. the number of users.
pub fn optimize_dof_capped(
    tx_dims: usize,
    rx_dims: usize,
    gain: usize,
    max_omega: usize,
) -> Result<DofPlan> {
    if tx_dims == 0 || rx_dims == 0 {
        return Err(Error::Domain("L and G must be positive".into()));
    }
    if max_omega < gain + 1 {
        return Err(Error::Domain(format!(
            "no Ω in [t+1, {max_omega}] with t = {gain}"
        )));
    }
    let best = candidates(tx_dims, rx_dims, gain)
        .into_iter()
        .filter(|c| c.omega <= max_omega)
        // candidates come in increasing Ω, so keeping the first maximum
        // already prefers the smaller Ω; Ω is unique, so exactness never decides
        .reduce(|best, c| if c.dof > best.dof { c } else { best })
        .expect("at least one candidate");
    Ok(best)
}

/// Printable planner scan.
#[derive(Debug, Clone)]
pub struct PlannerReport {
    pub tx_dims: usize,
    pub rx_dims: usize,
    pub gain: usize,
    pub candidates: Vec<DofPlan>,
    pub chosen: DofPlan,
}

impl PlannerReport {
    pub fn new(
        tx_dims: usize,
        rx_dims: usize,
        gain: usize,
        omega_override: Option<usize>,
    ) -> Result<Self> {
        Self::capped(tx_dims, rx_dims, gain, usize::MAX, omega_override)
    }

    /// Scan with the choice limited to `Ω ≤ max_omega`; the table still
    /// lists every candidate.
    pub fn capped(
        tx_dims: usize,
        rx_dims: usize,
        gain: usize,
        max_omega: usize,
        omega_override: Option<usize>,
    ) -> Result<Self> {
        let chosen = match omega_override {
            Some(omega) => plan_for_omega(tx_dims, rx_dims, gain, omega)?,
            None => optimize_dof_capped(tx_dims, rx_dims, gain, max_omega)?,
        };
        Ok(PlannerReport {
            tx_dims,
            rx_dims,
            gain,
            candidates: candidates(tx_dims, rx_dims, gain),
            chosen,
        })
    }

    /// Best DoF over all `Ω`, regardless of any override.
    pub fn max_dof(&self) -> usize {
        self.candidates.iter().map(|c| c.dof).max().unwrap_or(0)
    }
}

impl fmt::Display for PlannerReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "L={} G={} t={}", self.tx_dims, self.rx_dims, self.gain)?;
        writeln!(
            f,
            "{:>5} {:>10} {:>5} {:>3} {:>5} {:>6}",
            "omega", "bound", "beta", "q", "dof", "exact"
        )?;
        for c in &self.candidates {
            writeln!(
                f,
                "{:>5} {:>10.4} {:>5} {:>3} {:>5} {:>6}",
                c.omega, c.beta_bound_real, c.beta, c.substreams, c.dof, c.exact
            )?;
        }
        write!(
            f,
            "chosen: omega={} beta={} q={} dof={} (max over omega: {})",
            self.chosen.omega,
            self.chosen.beta,
            self.chosen.substreams,
            self.chosen.dof,
            self.max_dof()
        )
    }
}
