use std::collections::BTreeMap;

use crate::combinatorics::{subsets, UserSet};
use crate::config::NetworkConfig;
use crate::error::{Error, Result};

use super::{Bits, Library};

/// Server-side subfile store plus the per-user cache index.
///
/// User `k` caches `W_P` for every file `W` and every `P ∋ k`.
#[derive(Debug, Clone)]
pub struct PlacementMap {
    users: usize,
    gain: usize,
    file_bits: usize,
    subfile_bits: usize,
    subfile_sets: Vec<UserSet>,
    subfiles: BTreeMap<(usize, UserSet), Bits>,
}

/// Split every file into `C(K,t)` subfiles and fill the caches.
///
/// Files whose length is not a multiple of `C(K,t)` are zero-padded at the end.
pub fn build_placement(config: &NetworkConfig, library: &Library) -> Result<PlacementMap> {
    config.validate()?;
    let gain = config.caching_gain()?;
    if library.len() != config.library_size {
        return Err(Error::Input(format!(
            "library holds {} files, config expects N = {}",
            library.len(),
            config.library_size
        )));
    }
    let subfile_sets = subsets(config.users, gain);
    let file_bits = library.file_bits();
    let subfile_bits = file_bits.div_ceil(subfile_sets.len());

    let mut subfiles = BTreeMap::new();
    for file in 0..library.len() {
        let mut padded = library.file(file).expect("file id in range").clone();
        padded.resize(subfile_bits * subfile_sets.len(), false);
        for (n, &p) in subfile_sets.iter().enumerate() {
            let piece = padded[n * subfile_bits..(n + 1) * subfile_bits].to_bitvec();
            subfiles.insert((file, p), piece);
        }
    }
    Ok(PlacementMap {
        users: config.users,
        gain,
        file_bits,
        subfile_bits,
        subfile_sets,
        subfiles,
    })
}

impl PlacementMap {
    pub fn users(&self) -> usize {
        self.users
    }

    pub fn gain(&self) -> usize {
        self.gain
    }

    pub fn file_bits(&self) -> usize {
        self.file_bits
    }

    pub fn subfile_bits(&self) -> usize {
        self.subfile_bits
    }

    pub fn file_count(&self) -> usize {
        self.subfiles.len() / self.subfile_sets.len()
    }

    /// Subfile index sets `P` in lexicographic order.
    pub fn subfile_sets(&self) -> &[UserSet] {
        &self.subfile_sets
    }

    /// Identifiers `(file, P)` of everything user `user` holds in cache.
    pub fn cached_by(&self, user: usize) -> impl Iterator<Item = (usize, UserSet)> + '_ {
        self.subfiles
            .keys()
            .copied()
            .filter(move |(_, p)| p.contains(user))
    }

    pub fn is_cached(&self, user: usize, file: usize, subset: UserSet) -> bool {
        subset.contains(user) && self.subfiles.contains_key(&(file, subset))
    }

    /// Total cached bits at `user`.
    pub fn cached_bits(&self, user: usize) -> usize {
        self.cached_by(user).count() * self.subfile_bits
    }

    /// Server-side subfile payload.
    pub fn subfile(&self, file: usize, subset: UserSet) -> Option<&Bits> {
        self.subfiles.get(&(file, subset))
    }

    /// Subfile payload as seen from `user`'s cache; `None` if not cached there.
    pub fn cached_subfile(&self, user: usize, file: usize, subset: UserSet) -> Option<&Bits> {
        if subset.contains(user) {
            self.subfiles.get(&(file, subset))
        } else {
            None
        }
    }

    /// Subpacket `index` of subfile `(file, subset)` when each subfile is cut
    /// into `pieces` parts of `piece_bits` bits (the tail is zero-padded).
    pub(crate) fn subpacket(
        &self,
        file: usize,
        subset: UserSet,
        index: usize,
        piece_bits: usize,
    ) -> Option<Bits> {
        let sub = self.subfiles.get(&(file, subset))?;
        Some(slice_padded(sub, index * piece_bits, piece_bits))
    }
}

pub(crate) fn slice_padded(src: &Bits, start: usize, len: usize) -> Bits {
    let end = (start + len).min(src.len());
    let mut out = if start < end {
        src[start..end].to_bitvec()
    } else {
        Bits::new()
    };
    out.resize(len, false);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::binomial;
    use bitvec::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(users: usize, lib: usize, cache: usize, bits: usize) -> NetworkConfig {
        NetworkConfig {
            users,
            tx_dims: 2,
            rx_dims: 2,
            library_size: lib,
            cache_size: cache,
            file_size_bits: bits,
            power: 1.0,
            noise: 1.0,
        }
    }

    #[test]
    fn two_user_example() {
        // files A, B split in halves; user 0 keeps the "0" halves, user 1 the "1" halves
        let lib = Library::from_bytes(vec![vec![0xAA, 0x11], vec![0xBB, 0x22]]).unwrap();
        let pm = build_placement(&cfg(2, 2, 1, 16), &lib).unwrap();
        let u0: Vec<_> = pm.cached_by(0).collect();
        assert_eq!(
            u0,
            vec![(0, UserSet::singleton(0)), (1, UserSet::singleton(0))]
        );
        let u1: Vec<_> = pm.cached_by(1).collect();
        assert_eq!(
            u1,
            vec![(0, UserSet::singleton(1)), (1, UserSet::singleton(1))]
        );
        assert_eq!(
            pm.cached_subfile(0, 0, UserSet::singleton(0)).unwrap(),
            &bitvec![u8, Msb0; 1,0,1,0,1,0,1,0]
        );
        assert!(pm.cached_subfile(0, 0, UserSet::singleton(1)).is_none());
    }

    #[test]
    fn zero_gain_leaves_caches_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lib = Library::random(3, 30, &mut rng);
        let pm = build_placement(&cfg(3, 3, 0, 30), &lib).unwrap();
        for k in 0..3 {
            assert_eq!(pm.cached_by(k).count(), 0);
            assert_eq!(pm.cached_bits(k), 0);
        }
    }

    #[test]
    fn four_user_gain_two_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bits = 6 * 8;
        let lib = Library::random(4, bits, &mut rng);
        let pm = build_placement(&cfg(4, 4, 2, bits), &lib).unwrap();
        assert_eq!(pm.subfile_sets().len(), 6);
        for k in 0..4 {
            // enumerate subsets containing k directly
            let containing = subsets(4, 2).into_iter().filter(|p| p.contains(k)).count();
            assert_eq!(containing as u64, binomial(3, 1));
            for f in 0..4 {
                assert_eq!(pm.cached_by(k).filter(|(ff, _)| *ff == f).count(), 3);
            }
            assert_eq!(pm.cached_bits(k), 2 * bits);
        }
    }

    #[test]
    fn subfiles_reassemble_the_file() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lib = Library::random(4, 40, &mut rng);
        let pm = build_placement(&cfg(4, 4, 1, 40), &lib).unwrap();
        let mut joined = Bits::new();
        for &p in pm.subfile_sets() {
            joined.extend_from_bitslice(pm.subfile(1, p).unwrap());
        }
        assert_eq!(&joined, lib.file(1).unwrap());
    }

    #[test]
    fn library_size_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let lib = Library::random(3, 8, &mut rng);
        assert!(matches!(
            build_placement(&cfg(2, 2, 1, 8), &lib),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn non_integer_gain_is_config_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lib = Library::random(3, 8, &mut rng);
        assert!(matches!(
            build_placement(&cfg(2, 3, 1, 8), &lib),
            Err(Error::Config(_))
        ));
    }
}
