use crate::combinatorics::UserSet;
use crate::error::{Error, Result};

use super::placement::slice_padded;
use super::{xor_into, Bits, DeliveryPlan, PlacementMap};

/// One XOR term of a codeword: subpacket `index` of subfile `W(user)_subset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodewordPart {
    pub user: usize,
    pub file: usize,
    pub subset: UserSet,
    pub index: usize,
}

/// Multicast payload `X_T` of one group in one transmission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword {
    pub transmission: usize,
    pub group: UserSet,
    pub parts: Vec<CodewordPart>,
    pub payload: Bits,
    /// `payload` cut into `q` contiguous equal slices `X_T^1..X_T^q`.
    pub substreams: Vec<Bits>,
}

impl Codeword {
    /// Reassemble the payload from the substreams (drops split padding).
    pub fn join_substreams(&self) -> Bits {
        let mut out = Bits::with_capacity(self.payload.len());
        for s in &self.substreams {
            out.extend_from_bitslice(s);
        }
        out.truncate(self.payload.len());
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodewordSet {
    pub subpacket_bits: usize,
    pub subpackets_per_subfile: usize,
    pub substreams: usize,
    /// Zero bits appended to each codeword so it splits evenly into `q` slices.
    pub substream_padding: usize,
    pub codewords: Vec<Codeword>,
}

pub fn build_codewords(
    plan: &DeliveryPlan,
    requests: &[usize],
    placement: &PlacementMap,
) -> Result<CodewordSet> {
    if requests.len() != plan.users {
        return Err(Error::Input(format!(
            "{} requests for {} users",
            requests.len(),
            plan.users
        )));
    }
    if placement.users() != plan.users || placement.gain() != plan.gain {
        return Err(Error::Input("placement and plan disagree on K or t".into()));
    }
    if let Some((k, &f)) = requests
        .iter()
        .enumerate()
        .find(|(_, &f)| f >= placement.file_count())
    {
        return Err(Error::Input(format!("user {k} requests unknown file {f}")));
    }

    let pieces = plan.subpackets_per_subfile;
    let subpacket_bits = placement.subfile_bits().div_ceil(pieces);
    let q = plan.substreams;
    let slice_bits = subpacket_bits.div_ceil(q);
    let substream_padding = slice_bits * q - subpacket_bits;

    let mut codewords = Vec::new();
    for tx in &plan.transmissions {
        for group in &tx.groups {
            let mut payload = Bits::repeat(false, subpacket_bits);
            let mut parts = Vec::with_capacity(group.subpackets.len());
            for r in &group.subpackets {
                let file = requests[r.user];
                let piece = placement
                    .subpacket(file, r.subset, r.index, subpacket_bits)
                    .ok_or_else(|| Error::Input(format!("no subfile {file}/{}", r.subset)))?;
                xor_into(&mut payload, &piece);
                parts.push(CodewordPart {
                    user: r.user,
                    file,
                    subset: r.subset,
                    index: r.index,
                });
            }
            let substreams = (0..q)
                .map(|i| slice_padded(&payload, i * slice_bits, slice_bits))
                .collect();
            codewords.push(Codeword {
                transmission: tx.index,
                group: group.users,
                parts,
                payload,
                substreams,
            });
        }
    }
    Ok(CodewordSet {
        subpacket_bits,
        subpackets_per_subfile: pieces,
        substreams: q,
        substream_padding,
        codewords,
    })
}
