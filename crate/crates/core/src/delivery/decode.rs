use std::collections::BTreeMap;

use crate::combinatorics::UserSet;
use crate::error::{Error, Result};

use super::placement::slice_padded;
use super::{xor_into, Bits, CodewordSet, DeliveryPlan, FreshnessAudit, Library, PlacementMap};

/// Recover `user`'s requested file from the codewords it overhears.
///
/// The physical layer is assumed error-free: each codeword arrives as its
/// `q` substreams, which are rejoined before the cached terms are XORed out.
pub fn verify_decode(
    user: usize,
    codewords: &CodewordSet,
    placement: &PlacementMap,
    requests: &[usize],
) -> Result<Bits> {
    let file = *requests
        .get(user)
        .ok_or_else(|| Error::Input(format!("no request for user {user}")))?;
    let piece_bits = codewords.subpacket_bits;

    let mut recovered: BTreeMap<(UserSet, usize), Bits> = BTreeMap::new();
    for cw in codewords
        .codewords
        .iter()
        .filter(|c| c.group.contains(user))
    {
        let mut data = cw.join_substreams();
        let mut own = None;
        for part in &cw.parts {
            if part.user == user {
                own = Some((part.subset, part.index));
                continue;
            }
            let cached = placement
                .cached_subfile(user, part.file, part.subset)
                .ok_or_else(|| {
                    Error::Input(format!(
                        "user {user} lacks cached subfile {}/{}",
                        part.file, part.subset
                    ))
                })?;
            let piece = slice_padded(cached, part.index * piece_bits, piece_bits);
            xor_into(&mut data, &piece);
        }
        if let Some(key) = own {
            recovered.insert(key, data);
        }
    }

    let subfile_bits = placement.subfile_bits();
    let mut out = Bits::with_capacity(subfile_bits * placement.subfile_sets().len());
    for &subset in placement.subfile_sets() {
        if let Some(cached) = placement.cached_subfile(user, file, subset) {
            out.extend_from_bitslice(cached);
            continue;
        }
        let mut sub = Bits::with_capacity(piece_bits * codewords.subpackets_per_subfile);
        for index in 0..codewords.subpackets_per_subfile {
            let piece = recovered
                .get(&(subset, index))
                .ok_or(Error::IncompleteDelivery {
                    user,
                    subset,
                    index,
                })?;
            sub.extend_from_bitslice(piece);
        }
        sub.truncate(subfile_bits);
        out.extend_from_bitslice(&sub);
    }
    out.truncate(placement.file_bits());
    Ok(out)
}

/// Summary of an end-to-end delivery check.
#[derive(Debug, Clone)]
pub struct DeliveryAudit {
    pub freshness: FreshnessAudit,
    pub cache_bits: Vec<usize>,
    pub expected_cache_bits: usize,
    pub transmissions: usize,
    pub users_verified: usize,
}

/// Decode every user's file and compare with the library bit for bit.
///
/// Fails with [`Error::Verification`] naming the first differing subpacket.
pub fn audit_delivery(
    plan: &DeliveryPlan,
    codewords: &CodewordSet,
    placement: &PlacementMap,
    requests: &[usize],
    library: &Library,
) -> Result<DeliveryAudit> {
    let freshness = plan.freshness_audit();
    let cache_bits: Vec<usize> = (0..plan.users).map(|k| placement.cached_bits(k)).collect();
    let subfile_bits = placement.subfile_bits();
    let subfiles_per_user = placement
        .subfile_sets()
        .iter()
        .filter(|p| p.contains(0))
        .count();
    let expected_cache_bits = subfiles_per_user * subfile_bits * placement.file_count();

    for user in 0..plan.users {
        let got = verify_decode(user, codewords, placement, requests)?;
        let want = library
            .file(requests[user])
            .ok_or_else(|| Error::Input(format!("unknown file {}", requests[user])))?;
        if let Some(bit) = got.iter().zip(want.iter()).position(|(a, b)| *a != *b) {
            let subset = placement.subfile_sets()[bit / subfile_bits];
            let index = (bit % subfile_bits) / codewords.subpacket_bits;
            return Err(Error::Verification {
                user,
                subset,
                index,
            });
        }
    }
    Ok(DeliveryAudit {
        freshness,
        cache_bits,
        expected_cache_bits,
        transmissions: plan.transmissions.len(),
        users_verified: plan.users,
    })
}
