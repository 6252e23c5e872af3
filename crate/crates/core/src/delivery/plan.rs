use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, subsets, subsets_of, UserSet};
use crate::config::NetworkConfig;
use crate::error::{Error, Result};

use super::subpackets_per_subfile;

/// Which subpacket of which subfile a group member receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubpacketRef {
    pub user: usize,
    /// Subfile index set `P = T \ {user}`.
    pub subset: UserSet,
    /// Fresh-data index `σ`.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MulticastGroup {
    pub users: UserSet,
    /// One entry per member, in increasing user order.
    pub subpackets: Vec<SubpacketRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transmission {
    pub index: usize,
    /// Serving set `K(i)`.
    pub users: UserSet,
    /// All `(t+1)`-subsets of the serving set, lexicographic.
    pub groups: Vec<MulticastGroup>,
}

impl Transmission {
    /// Indices (into `groups`) of the groups containing `user`.
    pub fn groups_of(&self, user: usize) -> impl Iterator<Item = usize> + '_ {
        self.groups
            .iter()
            .enumerate()
            .filter(move |(_, g)| g.users.contains(user))
            .map(|(n, _)| n)
    }
}

/// Complete delivery schedule for one demand round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryPlan {
    pub users: usize,
    pub gain: usize,
    /// Users served per transmission `Ω`.
    pub omega: usize,
    /// Parallel streams per user `β`.
    pub beta: usize,
    /// Substreams per multicast signal `q`.
    pub substreams: usize,
    /// `C(K-t-1, Ω-t-1)`.
    pub subpackets_per_subfile: usize,
    pub transmissions: Vec<Transmission>,
}

/// Result of checking that every demanded subpacket is delivered exactly once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FreshnessAudit {
    pub delivered: usize,
    pub demanded: usize,
    pub duplicates: Vec<SubpacketRef>,
    pub missing: Vec<SubpacketRef>,
    /// Delivered subpackets that nobody demanded (e.g. `k ∈ P`).
    pub unexpected: Vec<SubpacketRef>,
}

impl FreshnessAudit {
    pub fn is_clean(&self) -> bool {
        self.duplicates.is_empty() && self.missing.is_empty() && self.unexpected.is_empty()
    }
}

/// Enumerate serving sets and multicast groups and assign fresh subpacket indices.
pub fn plan_transmissions(
    config: &NetworkConfig,
    omega: usize,
    beta: usize,
    substreams: usize,
) -> Result<DeliveryPlan> {
    config.validate()?;
    let users = config.users;
    let gain = config.caching_gain()?;
    if omega < gain + 1 || omega > gain + config.tx_dims || omega > users {
        return Err(Error::Planning(format!(
            "Ω = {omega} outside [t+1, min(t+L, K)] = [{}, {}]",
            gain + 1,
            (gain + config.tx_dims).min(users)
        )));
    }
    if beta == 0 || substreams == 0 {
        return Err(Error::Planning("β and q must be at least 1".into()));
    }
    let per_user = binomial(omega - 1, gain) as usize;
    if substreams * per_user < beta {
        return Err(Error::Planning(format!(
            "q·C(Ω-1,t) = {}·{per_user} < β = {beta}",
            substreams
        )));
    }

    // running fresh-data counter per (receiving user, subfile set)
    let mut counters: BTreeMap<(usize, UserSet), usize> = BTreeMap::new();
    let transmissions = subsets(users, omega)
        .into_iter()
        .enumerate()
        .map(|(index, serving)| {
            let members = serving.to_vec();
            let groups = subsets_of(&members, gain + 1)
                .into_iter()
                .map(|group| {
                    let subpackets = group
                        .iter()
                        .map(|k| {
                            let subset = group.without(k);
                            let counter = counters.entry((k, subset)).or_insert(0);
                            let index = *counter;
                            *counter += 1;
                            SubpacketRef {
                                user: k,
                                subset,
                                index,
                            }
                        })
                        .collect();
                    MulticastGroup {
                        users: group,
                        subpackets,
                    }
                })
                .collect();
            Transmission {
                index,
                users: serving,
                groups,
            }
        })
        .collect();

    Ok(DeliveryPlan {
        users,
        gain,
        omega,
        beta,
        substreams,
        subpackets_per_subfile: subpackets_per_subfile(users, gain, omega) as usize,
        transmissions,
    })
}

impl DeliveryPlan {
    /// Subpacketization `Θ`.
    pub fn subpacketization(&self) -> u64 {
        binomial(self.users, self.gain) * self.subpackets_per_subfile as u64
    }

    /// Multicast streams per transmission (`C(Ω, t+1) · q`).
    pub fn streams_per_transmission(&self) -> usize {
        binomial(self.omega, self.gain + 1) as usize * self.substreams
    }

    /// Every demanded subpacket `(k, P, σ)` with `k ∉ P`.
    pub fn demand_set(&self) -> Vec<SubpacketRef> {
        let mut out = Vec::new();
        for user in 0..self.users {
            for subset in subsets(self.users, self.gain) {
                if subset.contains(user) {
                    continue;
                }
                for index in 0..self.subpackets_per_subfile {
                    out.push(SubpacketRef {
                        user,
                        subset,
                        index,
                    });
                }
            }
        }
        out
    }

    pub fn freshness_audit(&self) -> FreshnessAudit {
        let key = |r: &SubpacketRef| (r.user, r.subset, r.index);
        let mut seen = BTreeSet::new();
        let mut duplicates = Vec::new();
        let mut delivered = 0;
        for tx in &self.transmissions {
            for g in &tx.groups {
                for r in &g.subpackets {
                    delivered += 1;
                    if !seen.insert(key(r)) {
                        duplicates.push(*r);
                    }
                }
            }
        }
        let demand = self.demand_set();
        let demand_keys: BTreeSet<_> = demand.iter().map(key).collect();
        let missing = demand
            .iter()
            .filter(|r| !seen.contains(&key(r)))
            .copied()
            .collect();
        let unexpected = seen
            .iter()
            .filter(|k| !demand_keys.contains(k))
            .map(|&(user, subset, index)| SubpacketRef {
                user,
                subset,
                index,
            })
            .collect();
        FreshnessAudit {
            delivered,
            demanded: demand.len(),
            duplicates,
            missing,
            unexpected,
        }
    }
}
