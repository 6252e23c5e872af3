//! Transmit/receive beamformer design for one multicast transmission.
//!
//! A transmission serves `Ω` users with one stream per (group `T`, substream
//! `i`) pair. Every user decodes each stream of every group it belongs to
//! through its own receive vector; such a (user, group, substream) triple is a
//! *link*. Transmit vectors are the columns of an `L × S` matrix `W`, with
//! stream `s = group · q + i`.

mod kkt;
mod lmmse;
mod metrics;
pub mod oracle;
mod sca;
mod zf;

pub use kkt::{
    optimize, optimize_from, update_duals, update_mu, update_rates, update_tx_beamformers,
    BeamformerState, DualGradient, DualUpdate, KktOptions, KktOutcome, MuMode, SolverDiagnostics,
    TraceRecord, MU_FLOOR,
};
pub use lmmse::lmmse_receivers;
pub use metrics::{
    link_gains, link_mse, link_sinr, mses, objective_from_sinr, sinrs, transmission_rate,
};
pub use sca::{sca_coefficients, ScaCoefficients};
pub use zf::{zf_beamformers, ZfDesign};

use nalgebra::{DMatrix, DVector};

use crate::combinatorics::{subsets_of, UserSet};
use crate::delivery::Transmission;
use crate::Complex;

pub type CMatrix = DMatrix<Complex>;
pub type CVector = DVector<Complex>;

/// One received stream: `user` (local index) decodes substream `sub` of `group`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub user: usize,
    pub group: usize,
    pub sub: usize,
    pub stream: usize,
}

/// Stream and link indexing for one serving set.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamLayout {
    /// Global user ids of the serving set, increasing.
    pub users: Vec<usize>,
    pub groups: Vec<UserSet>,
    pub substreams: usize,
    pub links: Vec<Link>,
    /// Link indices per local user, in (group, substream) order.
    pub user_links: Vec<Vec<usize>>,
}

impl StreamLayout {
    pub fn new(users: &[usize], gain: usize, substreams: usize) -> Self {
        let mut sorted = users.to_vec();
        sorted.sort_unstable();
        let groups = subsets_of(&sorted, gain + 1);
        Self::with_groups(sorted, groups, substreams)
    }

    pub fn from_transmission(tx: &Transmission, substreams: usize) -> Self {
        let groups = tx.groups.iter().map(|g| g.users).collect();
        Self::with_groups(tx.users.to_vec(), groups, substreams)
    }

    fn with_groups(users: Vec<usize>, groups: Vec<UserSet>, substreams: usize) -> Self {
        assert!(substreams >= 1);
        let mut links = Vec::new();
        let mut user_links = vec![Vec::new(); users.len()];
        for (a, &k) in users.iter().enumerate() {
            for (g, set) in groups.iter().enumerate() {
                if !set.contains(k) {
                    continue;
                }
                for sub in 0..substreams {
                    user_links[a].push(links.len());
                    links.push(Link {
                        user: a,
                        group: g,
                        sub,
                        stream: g * substreams + sub,
                    });
                }
            }
        }
        StreamLayout {
            users,
            groups,
            substreams,
            links,
            user_links,
        }
    }

    pub fn num_streams(&self) -> usize {
        self.groups.len() * self.substreams
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    /// Local users that receive stream `stream`.
    pub fn stream_members(&self, stream: usize) -> Vec<usize> {
        let set = self.groups[stream / self.substreams];
        self.users
            .iter()
            .enumerate()
            .filter(|(_, &k)| set.contains(k))
            .map(|(a, _)| a)
            .collect()
    }
}

/// Total transmit power `Σ ‖w‖²`.
pub fn total_power(w: &CMatrix) -> f64 {
    w.iter().map(|z| z.norm_sqr()).sum()
}
