//! Binomial coefficients and lexicographic subset enumeration over user indices.

use std::fmt;

use serde::{Deserialize, Serialize};

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// A set of user indices (0-based), stored as a bitmask. Supports up to 64 users.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct UserSet(u64);

pub const MAX_USERS: usize = 64;

impl UserSet {
    pub const EMPTY: UserSet = UserSet(0);

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut mask = 0u64;
        for i in indices {
            assert!(i < MAX_USERS, "user index {i} exceeds {MAX_USERS}");
            mask |= 1 << i;
        }
        UserSet(mask)
    }

    pub fn singleton(user: usize) -> Self {
        Self::from_indices([user])
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, user: usize) -> bool {
        user < MAX_USERS && self.0 & (1 << user) != 0
    }

    pub fn is_subset_of(self, other: UserSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn without(self, user: usize) -> Self {
        UserSet(self.0 & !(1 << user))
    }

    pub fn with(self, user: usize) -> Self {
        UserSet(self.0 | (1 << user))
    }

    /// Members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl PartialOrd for UserSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic order of the sorted member lists.
impl Ord for UserSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.iter().cmp(other.iter())
    }
}

impl fmt::Debug for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, u) in self.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{u}")?;
        }
        f.write_str("}")
    }
}

impl From<UserSet> for Vec<usize> {
    fn from(s: UserSet) -> Self {
        s.to_vec()
    }
}

impl TryFrom<Vec<usize>> for UserSet {
    type Error = String;

    fn try_from(v: Vec<usize>) -> Result<Self, Self::Error> {
        if let Some(bad) = v.iter().find(|&&i| i >= MAX_USERS) {
            return Err(format!("user index {bad} exceeds {MAX_USERS}"));
        }
        Ok(UserSet::from_indices(v))
    }
}

/// All `size`-subsets of the given (sorted) universe in lexicographic order.
pub fn subsets_of(universe: &[usize], size: usize) -> Vec<UserSet> {
    let n = universe.len();
    if size > n {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(binomial(n, size) as usize);
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(UserSet::from_indices(idx.iter().map(|&i| universe[i])));
        // advance the rightmost index that still has room
        let Some(pos) = (0..size).rev().find(|&p| idx[p] < p + n - size) else {
            return out;
        };
        idx[pos] += 1;
        for j in pos + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// All `size`-subsets of `{0, .., n-1}` in lexicographic order.
pub fn subsets(n: usize, size: usize) -> Vec<UserSet> {
    let universe: Vec<usize> = (0..n).collect();
    subsets_of(&universe, size)
}
