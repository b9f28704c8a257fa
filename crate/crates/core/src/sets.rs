//! Compact set types shared by every layer of the miner.
//!
//! Activities are addressed by their index in a log's alphabet, so a set of
//! activities is a 64-bit mask. Trace multisets are represented as sets of
//! *variants*: every sub-multiset the algorithms need (fitting, underfed,
//! activated, ...) contains a variant either with its full log multiplicity or
//! not at all, so a bitset over variant indices plus the log's counts is exact.

use std::fmt;

/// Index of an activity inside an [`crate::log::EventLog`] alphabet.
pub type ActivityId = usize;

/// Largest alphabet supported by [`ActivitySet`].
pub const MAX_ACTIVITIES: usize = 64;

/// Set of activities, stored as a bitmask over alphabet indices.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivitySet(u64);

impl ActivitySet {
    pub const EMPTY: ActivitySet = ActivitySet(0);

    pub fn from_bits(bits: u64) -> Self {
        ActivitySet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(a: ActivityId) -> Self {
        debug_assert!(a < MAX_ACTIVITIES);
        ActivitySet(1 << a)
    }

    /// All activities `0..n`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_ACTIVITIES);
        if n == MAX_ACTIVITIES {
            ActivitySet(u64::MAX)
        } else {
            ActivitySet((1u64 << n) - 1)
        }
    }

    #[inline]
    pub fn contains(self, a: ActivityId) -> bool {
        self.0 >> a & 1 == 1
    }

    #[inline]
    pub fn with(self, a: ActivityId) -> Self {
        ActivitySet(self.0 | 1 << a)
    }

    #[inline]
    pub fn without(self, a: ActivityId) -> Self {
        ActivitySet(self.0 & !(1 << a))
    }

    pub fn insert(&mut self, a: ActivityId) {
        self.0 |= 1 << a;
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        ActivitySet(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        ActivitySet(self.0 & other.0)
    }

    #[inline]
    pub fn difference(self, other: Self) -> Self {
        ActivitySet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = ActivityId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let a = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(a)
            }
        })
    }
}

impl FromIterator<ActivityId> for ActivitySet {
    fn from_iter<T: IntoIterator<Item = ActivityId>>(iter: T) -> Self {
        let mut set = ActivitySet::EMPTY;
        for a in iter {
            set.insert(a);
        }
        set
    }
}

impl fmt::Debug for ActivitySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Set of trace variants of one log; a trace multiset once paired with the
/// log's variant counts.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct VariantSet {
    words: Vec<u64>,
    len: usize,
}

impl VariantSet {
    pub fn empty(len: usize) -> Self {
        VariantSet { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn full(len: usize) -> Self {
        let mut set = Self::empty(len);
        for (i, w) in set.words.iter_mut().enumerate() {
            let remaining = len - i * 64;
            *w = if remaining >= 64 { u64::MAX } else { (1u64 << remaining) - 1 };
        }
        set
    }

    /// Number of variants of the underlying log (the universe size).
    pub fn universe(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn insert(&mut self, v: usize) {
        debug_assert!(v < self.len);
        self.words[v / 64] |= 1 << (v % 64);
    }

    #[inline]
    pub fn remove(&mut self, v: usize) {
        self.words[v / 64] &= !(1 << (v % 64));
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.words[v / 64] >> (v % 64) & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Number of distinct variants in the set.
    pub fn variant_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn intersection(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len, other.len);
        VariantSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
            len: self.len,
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len, other.len);
        VariantSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
            len: self.len,
        }
    }

    pub fn intersect_with(&mut self, other: &Self) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn union_with(&mut self, other: &Self) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(i * 64 + b)
                }
            })
        })
    }

    /// Total multiplicity of the set given per-variant counts.
    #[inline]
    pub fn weight(&self, counts: &[u64]) -> u64 {
        self.iter().map(|v| counts[v]).sum()
    }

    /// Multiplicity of `self ⊓ other` without allocating.
    #[inline]
    pub fn intersection_weight(&self, other: &Self, counts: &[u64]) -> u64 {
        let mut total = 0;
        for (i, (a, b)) in self.words.iter().zip(&other.words).enumerate() {
            let mut bits = a & b;
            while bits != 0 {
                total += counts[i * 64 + bits.trailing_zeros() as usize];
                bits &= bits - 1;
            }
        }
        total
    }
}

impl fmt::Debug for VariantSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
