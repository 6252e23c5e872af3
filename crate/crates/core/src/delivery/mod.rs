//! Cache placement, delivery planning, XOR codeword construction and
//! bit-exact decode verification.
//!
//! Users are indexed from 0. A file is split into `C(K, t)` subfiles
//! `W_P`, one per `t`-subset `P` of users (lexicographic order), and every
//! subfile is further split into `C(K-t-1, Ω-t-1)` subpackets so that each
//! transmission carries fresh data.

mod codeword;
mod decode;
mod dump;
mod placement;
mod plan;

pub use codeword::{build_codewords, Codeword, CodewordPart, CodewordSet};
pub use decode::{audit_delivery, verify_decode, DeliveryAudit};
pub use dump::{read_plan_dump, write_codeword_dump, write_plan_dump, TransmissionRecord};
pub use placement::{build_placement, PlacementMap};
pub use plan::{
    plan_transmissions, DeliveryPlan, FreshnessAudit, MulticastGroup, SubpacketRef, Transmission,
};

use bitvec::prelude::*;
use rand::Rng;

use crate::combinatorics::binomial;
use crate::error::{Error, Result};

/// Bit payload container used for files, subfiles, subpackets and codewords.
pub type Bits = BitVec<u8, Msb0>;

/// Subpacketization level `Θ = C(K,t) · C(K-t-1, Ω-t-1)`.
pub fn subpacketization(users: usize, gain: usize, omega: usize) -> Result<u64> {
    if omega < gain + 1 || omega > users {
        return Err(Error::Domain(format!(
            "Ω = {omega} outside [t+1, K] = [{}, {users}]",
            gain + 1
        )));
    }
    Ok(binomial(users, gain) * subpackets_per_subfile(users, gain, omega))
}

/// `C(K-t-1, Ω-t-1)`: how many fresh pieces each subfile is cut into.
pub(crate) fn subpackets_per_subfile(users: usize, gain: usize, omega: usize) -> u64 {
    binomial(users - gain - 1, omega - gain - 1)
}

/// The file library held by the server.
#[derive(Debug, Clone, PartialEq)]
pub struct Library {
    files: Vec<Bits>,
}

impl Library {
    pub fn new(files: Vec<Bits>) -> Result<Self> {
        if files.is_empty() {
            return Err(Error::Input("library is empty".into()));
        }
        let len = files[0].len();
        if let Some((i, f)) = files.iter().enumerate().find(|(_, f)| f.len() != len) {
            return Err(Error::Input(format!(
                "file {i} has {} bits, expected {len}",
                f.len()
            )));
        }
        Ok(Library { files })
    }

    pub fn from_bytes(files: Vec<Vec<u8>>) -> Result<Self> {
        Self::new(files.into_iter().map(Bits::from_vec).collect())
    }

    /// `count` files of `bits` uniformly random bits each.
    pub fn random<R: Rng + ?Sized>(count: usize, bits: usize, rng: &mut R) -> Self {
        let files = (0..count)
            .map(|_| (0..bits).map(|_| rng.random::<bool>()).collect::<Bits>())
            .collect();
        Library { files }
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn file_bits(&self) -> usize {
        self.files[0].len()
    }

    pub fn file(&self, id: usize) -> Option<&Bits> {
        self.files.get(id)
    }
}

pub(crate) fn xor_into(dst: &mut BitSlice<u8, Msb0>, src: &BitSlice<u8, Msb0>) {
    debug_assert_eq!(dst.len(), src.len());
    for (mut d, s) in dst.iter_mut().zip(src.iter().by_vals()) {
        *d ^= s;
    }
}
