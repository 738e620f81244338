use std::fmt;

use fixedbitset::FixedBitSet;

/// Subset of a finite state space, stored as a bitset over state indices.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EventSet {
    bits: FixedBitSet,
}

impl EventSet {
    pub fn empty(n: usize) -> Self {
        Self {
            bits: FixedBitSet::with_capacity(n),
        }
    }

    pub fn full(n: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(n);
        bits.insert_range(..);
        Self { bits }
    }

    /// Builds an event from state indices; indices out of range are an error.
    pub fn from_indices(n: usize, idx: impl IntoIterator<Item = usize>) -> crate::Result<Self> {
        let mut e = Self::empty(n);
        for i in idx {
            if i >= n {
                return Err(crate::Error::Invalid(format!(
                    "state index {i} outside a space of {n} states"
                )));
            }
            e.bits.insert(i);
        }
        Ok(e)
    }

    pub fn universe_size(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits.contains(i)
    }

    pub fn insert(&mut self, i: usize) {
        self.bits.insert(i);
    }

    pub fn remove(&mut self, i: usize) {
        self.bits.set(i, false);
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut bits = self.bits.clone();
        bits.intersect_with(&other.bits);
        Self { bits }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        Self { bits }
    }

    pub fn complement(&self) -> Self {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        Self { bits }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn contains_all(&self, idx: &[usize]) -> bool {
        idx.iter().all(|&i| self.contains(i))
    }
}

impl fmt::Debug for EventSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        let a = EventSet::from_indices(6, [2, 3, 4, 5]).unwrap();
        let b = EventSet::from_indices(6, [0, 3]).unwrap();
        assert_eq!(a.intersection(&b).to_vec(), vec![3]);
        assert_eq!(a.union(&b).len(), 5);
        assert_eq!(a.complement().to_vec(), vec![0, 1]);
        assert!(a.intersection(&b).is_subset(&a));
        assert!(EventSet::from_indices(3, [3]).is_err());
        assert_eq!(EventSet::full(4).len(), 4);
    }
}
