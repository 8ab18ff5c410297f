//! Finite multisets kept as sorted `(element, count)` vectors.
//!
//! The sorted representation gives structural equality, a total order and a
//! stable hash, which the explorers rely on for deduplication and for
//! reproducible successor ordering.

use std::fmt;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multiset<T> {
    // Sorted by element, every count > 0.
    items: Vec<(T, u32)>,
}

impl<T> Default for Multiset<T> {
    fn default() -> Self {
        Multiset { items: Vec::new() }
    }
}

impl<T: Ord + Clone> Multiset<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(x: T) -> Self {
        Multiset { items: vec![(x, 1)] }
    }

    pub fn from_counts<I: IntoIterator<Item = (T, u32)>>(iter: I) -> Self {
        let mut m = Self::new();
        for (x, n) in iter {
            m.insert_n(x, n);
        }
        m
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Total number of occurrences.
    pub fn len(&self) -> usize {
        self.items.iter().map(|(_, n)| *n as usize).sum()
    }

    pub fn distinct_len(&self) -> usize {
        self.items.len()
    }

    pub fn count(&self, x: &T) -> u32 {
        match self.items.binary_search_by(|(y, _)| y.cmp(x)) {
            Ok(i) => self.items[i].1,
            Err(_) => 0,
        }
    }

    pub fn contains(&self, x: &T) -> bool {
        self.count(x) > 0
    }

    pub fn insert(&mut self, x: T) {
        self.insert_n(x, 1)
    }

    pub fn insert_n(&mut self, x: T, n: u32) {
        if n == 0 {
            return;
        }
        match self.items.binary_search_by(|(y, _)| y.cmp(&x)) {
            Ok(i) => self.items[i].1 += n,
            Err(i) => self.items.insert(i, (x, n)),
        }
    }

    /// Removes one occurrence; returns false if `x` was absent.
    pub fn remove_one(&mut self, x: &T) -> bool {
        match self.items.binary_search_by(|(y, _)| y.cmp(x)) {
            Ok(i) => {
                if self.items[i].1 == 1 {
                    self.items.remove(i);
                } else {
                    self.items[i].1 -= 1;
                }
                true
            }
            Err(_) => false,
        }
    }

    pub fn with(&self, x: T) -> Self {
        let mut m = self.clone();
        m.insert(x);
        m
    }

    pub fn without(&self, x: &T) -> Option<Self> {
        let mut m = self.clone();
        if m.remove_one(x) {
            Some(m)
        } else {
            None
        }
    }

    /// Distinct elements with their multiplicities, in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (&T, u32)> + '_ {
        self.items.iter().map(|(x, n)| (x, *n))
    }

    /// Every occurrence, repeated according to its multiplicity.
    pub fn elements(&self) -> impl Iterator<Item = &T> + '_ {
        self.items
            .iter()
            .flat_map(|(x, n)| std::iter::repeat_n(x, *n as usize))
    }

    pub fn distinct(&self) -> impl Iterator<Item = &T> + '_ {
        self.items.iter().map(|(x, _)| x)
    }

    /// Multiset union (`⊕`).
    pub fn sum(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.items.len() + other.items.len());
        let (mut i, mut j) = (0, 0);
        while i < self.items.len() && j < other.items.len() {
            let (a, n) = &self.items[i];
            let (b, m) = &other.items[j];
            match a.cmp(b) {
                std::cmp::Ordering::Less => {
                    out.push((a.clone(), *n));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((b.clone(), *m));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a.clone(), n + m));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.items[i..]);
        out.extend_from_slice(&other.items[j..]);
        Multiset { items: out }
    }

    /// Truncated difference (`⊖`): counts never drop below zero.
    pub fn monus(&self, other: &Self) -> Self {
        let items = self
            .items
            .iter()
            .filter_map(|(x, n)| {
                let left = n.saturating_sub(other.count(x));
                (left > 0).then(|| (x.clone(), left))
            })
            .collect();
        Multiset { items }
    }

    /// Pointwise minimum.
    pub fn meet(&self, other: &Self) -> Self {
        let items = self
            .items
            .iter()
            .filter_map(|(x, n)| {
                let m = (*n).min(other.count(x));
                (m > 0).then(|| (x.clone(), m))
            })
            .collect();
        Multiset { items }
    }

    /// Multiset inclusion `≤𝕄`.
    pub fn is_subset(&self, other: &Self) -> bool {
        if self.items.len() > other.items.len() {
            return false;
        }
        let mut j = 0;
        for (x, n) in &self.items {
            loop {
                match other.items.get(j) {
                    None => return false,
                    Some((y, m)) => match y.cmp(x) {
                        std::cmp::Ordering::Less => j += 1,
                        std::cmp::Ordering::Equal => {
                            if m < n {
                                return false;
                            }
                            j += 1;
                            break;
                        }
                        std::cmp::Ordering::Greater => return false,
                    },
                }
            }
        }
        true
    }

    /// Restriction `M ↾ U`.
    pub fn restrict(&self, mut keep: impl FnMut(&T) -> bool) -> Self {
        Multiset {
            items: self.items.iter().filter(|(x, _)| keep(x)).cloned().collect(),
        }
    }

    pub fn any(&self, mut pred: impl FnMut(&T) -> bool) -> bool {
        self.items.iter().any(|(x, _)| pred(x))
    }

    pub fn all(&self, mut pred: impl FnMut(&T) -> bool) -> bool {
        self.items.iter().all(|(x, _)| pred(x))
    }

    pub fn map<U: Ord + Clone>(&self, mut f: impl FnMut(&T) -> U) -> Multiset<U> {
        Multiset::from_counts(self.items.iter().map(|(x, n)| (f(x), *n)))
    }

    /// All sub-multisets, largest first (by total size), ties in a fixed order.
    pub fn sub_multisets(&self) -> Vec<Self> {
        let mut out: Vec<Self> = vec![Self::new()];
        for (x, n) in &self.items {
            let mut next = Vec::with_capacity(out.len() * (*n as usize + 1));
            for base in &out {
                for k in 0..=*n {
                    let mut m = base.clone();
                    if k > 0 {
                        m.items.push((x.clone(), k));
                    }
                    next.push(m);
                }
            }
            out = next;
        }
        out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        out
    }
}

impl<T: Ord + Clone> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut v: Vec<T> = iter.into_iter().collect();
        v.sort();
        let mut items: Vec<(T, u32)> = Vec::new();
        for x in v {
            match items.last_mut() {
                Some((y, n)) if *y == x => *n += 1,
                _ => items.push((x, 1)),
            }
        }
        Multiset { items }
    }
}

impl<T: fmt::Debug> fmt::Debug for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (x, n)) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if *n == 1 {
                write!(f, "{:?}", x)?;
            } else {
                write!(f, "{:?}:{}", x, n)?;
            }
        }
        f.write_str("}")
    }
}

/// Parikh image of a word.
pub fn parikh<T: Ord + Clone>(word: &[T]) -> Multiset<T> {
    word.iter().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parikh_counts_occurrences() {
        let m = parikh(&['a', 'b', 'a']);
        assert_eq!(m.count(&'a'), 2);
        assert_eq!(m.count(&'b'), 1);
        assert_eq!(m.len(), 3);
        assert!(parikh::<char>(&[]).is_empty());
    }

    #[test]
    fn monus_truncates() {
        let a: Multiset<u8> = [1, 1, 2].into_iter().collect();
        let b: Multiset<u8> = [1, 2, 2, 3].into_iter().collect();
        assert_eq!(a.monus(&b), Multiset::singleton(1));
        assert!(b.monus(&a).is_subset(&b));
    }

    #[test]
    fn sub_multisets_cover_the_lattice() {
        let a: Multiset<u8> = [1, 1, 2].into_iter().collect();
        let subs = a.sub_multisets();
        assert_eq!(subs.len(), 6);
        assert_eq!(subs[0], a);
        assert!(subs.last().unwrap().is_empty());
        assert!(subs.iter().all(|s| s.is_subset(&a)));
    }

    #[test]
    fn subset_is_pointwise() {
        let a: Multiset<u8> = [1, 3].into_iter().collect();
        let b: Multiset<u8> = [1, 2, 3, 3].into_iter().collect();
        assert!(a.is_subset(&b));
        assert!(!b.is_subset(&a));
        assert!(Multiset::<u8>::new().is_subset(&a));
    }
}
