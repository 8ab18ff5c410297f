//! Well-quasi-orders on caches, controls and configurations, and antichain
//! bases of upward-closed sets.

use crate::multiset::Multiset;
use crate::semantics::{AltConfig, Cache, CacheSort, Control, Head};

/// Size of a maximum matching in a bipartite graph (augmenting paths).
pub fn bipartite_matching(left: usize, right: usize, edge: impl Fn(usize, usize) -> bool) -> usize {
    matching(left, right, edge, false)
}

/// Whether some matching saturates every left vertex.
pub fn saturates_left(left: usize, right: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    left <= right && matching(left, right, edge, true) == left
}

fn matching(left: usize, right: usize, edge: impl Fn(usize, usize) -> bool, stop_early: bool) -> usize {
    let adj: Vec<Vec<usize>> = (0..left).map(|i| (0..right).filter(|&j| edge(i, j)).collect()).collect();
    let mut owner: Vec<Option<usize>> = vec![None; right];
    fn augment(i: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|o| augment(o, adj, owner, seen)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    let mut size = 0;
    for i in 0..left {
        let mut seen = vec![false; right];
        if augment(i, &adj, &mut owner, &mut seen) {
            size += 1;
        } else if stop_early {
            return size;
        }
    }
    size
}

/// Injective embedding of every occurrence of `m1` into a distinct,
/// larger-or-equal occurrence of `m2`.
pub fn multiset_embeds<T: Ord + Clone>(leq: impl Fn(&T, &T) -> bool, m1: &Multiset<T>, m2: &Multiset<T>) -> bool {
    if m1.len() > m2.len() {
        return false;
    }
    let a: Vec<&T> = m1.elements().collect();
    let b: Vec<&T> = m2.elements().collect();
    saturates_left(a.len(), b.len(), |i, j| leq(a[i], b[j]))
}

/// Same sort and multiset inclusion. An `Any` cache is also below Term and
/// Mixed caches.
pub fn leq_cache(c1: &Cache, c2: &Cache) -> bool {
    let sorts = c1.sort() == c2.sort()
        || (c1.sort() == CacheSort::Any && matches!(c2.sort(), CacheSort::Term | CacheSort::Mixed));
    sorts && c1.items().is_subset(c2.items())
}

fn leq_head(h1: &Head, h2: &Head) -> bool {
    match (h1, h2) {
        (Head::Nt(a, m1), Head::Nt(b, m2)) => a == b && leq_cache(m1, m2),
        (Head::ActNt(a, x, m1), Head::ActNt(b, y, m2)) => a == b && x == y && leq_cache(m1, m2),
        (Head::Act(a, m1), Head::Act(b, m2)) => a == b && leq_cache(m1, m2),
        (Head::Delayed(m1), Head::Delayed(m2)) => leq_cache(m1, m2),
        _ => false,
    }
}

/// Heads compare by shape, symbols and cache; the stack of `g1` must be a
/// top-aligned prefix of the stack of `g2`, frame caches compared pointwise.
pub fn leq_control(g1: &Control, g2: &Control) -> bool {
    g1.stack.len() <= g2.stack.len()
        && leq_head(&g1.head, &g2.head)
        && g1.stack.iter().zip(&g2.stack).all(|((x, m1), (y, m2))| x == y && leq_cache(m1, m2))
}

/// Process embedding plus channel-wise inclusion.
pub fn leq_config(c1: &AltConfig, c2: &AltConfig) -> bool {
    c1.chans.len() == c2.chans.len()
        && c1.chans.iter().zip(&c2.chans).all(|(q1, q2)| q1.is_subset(q2))
        && multiset_embeds(leq_control, &c1.procs, &c2.procs)
}

/// A decidable quasi-order.
pub trait QuasiOrder {
    fn leq(&self, other: &Self) -> bool;
}

impl QuasiOrder for AltConfig {
    fn leq(&self, other: &Self) -> bool {
        leq_config(self, other)
    }
}

/// Finite antichain standing for its upward closure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Basis<T> {
    elems: Vec<T>,
}

impl<T> Default for Basis<T> {
    fn default() -> Self {
        Basis { elems: Vec::new() }
    }
}

impl<T: QuasiOrder> Basis<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Membership in the upward closure.
    pub fn covers(&self, x: &T) -> bool {
        self.elems.iter().any(|b| b.leq(x))
    }

    /// Adds `x` unless subsumed, dropping elements it subsumes. Returns
    /// whether the upward closure grew.
    pub fn insert(&mut self, x: T) -> bool {
        if self.covers(&x) {
            return false;
        }
        self.elems.retain(|b| !x.leq(b));
        self.elems.push(x);
        true
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.elems.iter()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.elems
    }
}

/// Functional form of [`Basis::insert`].
pub fn basis_insert<T: QuasiOrder + Clone>(b: &Basis<T>, x: T) -> Basis<T> {
    let mut out = b.clone();
    out.insert(x);
    out
}

impl<T: QuasiOrder> FromIterator<T> for Basis<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut b = Basis::new();
        for x in iter {
            b.insert(x);
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Action, ChanId, MsgId, NtId, Symbol};

    fn ms(v: &[u32]) -> Multiset<u32> {
        v.iter().copied().collect()
    }

    #[test]
    fn embedding_examples() {
        let le = |a: &u32, b: &u32| a <= b;
        assert!(multiset_embeds(le, &ms(&[1, 2]), &ms(&[2, 3])));
        assert!(!multiset_embeds(le, &ms(&[2, 2]), &ms(&[3, 1])));
        assert!(multiset_embeds(le, &ms(&[]), &ms(&[5])));
    }

    fn send() -> Symbol {
        Symbol::Act(Action::Send(ChanId(0), MsgId(0)))
    }

    fn cache(v: &[Symbol]) -> Cache {
        Cache::of(v.iter().copied().collect())
    }

    #[test]
    fn cache_order_is_sorted_inclusion() {
        let b = Symbol::Nt(NtId(1));
        assert!(leq_cache(&cache(&[send()]), &cache(&[send(), send()])));
        assert!(!leq_cache(&cache(&[send()]), &cache(&[send(), b])));
        assert!(leq_cache(&Cache::empty(), &Cache::empty()));
    }

    #[test]
    fn control_order() {
        let (a, b, x, y) = (NtId(0), NtId(1), NtId(2), NtId(3));
        let g = |h: NtId, m: &[Symbol], st: Vec<(NtId, Cache)>| Control { head: Head::Nt(h, cache(m)), stack: st };
        assert!(leq_control(&g(a, &[send()], vec![]), &g(a, &[send(), send()], vec![])));
        assert!(!leq_control(&g(a, &[], vec![]), &g(b, &[], vec![])));
        let s1 = vec![(x, cache(&[send()])), (y, Cache::empty())];
        let s2 = vec![(x, cache(&[send(), send()])), (y, cache(&[send()]))];
        assert!(leq_control(&g(a, &[], s1.clone()), &g(a, &[], s2.clone())));
        assert!(!leq_control(&g(a, &[], s2), &g(a, &[], s1)));
    }

    #[test]
    fn config_order() {
        let (a, b) = (NtId(0), NtId(1));
        let c1 = AltConfig { procs: Multiset::singleton(Control::fresh(a)), chans: vec![Multiset::new()] };
        let c2 = AltConfig {
            procs: [Control::fresh(a), Control::fresh(b)].into_iter().collect(),
            chans: vec![Multiset::singleton(MsgId(0))],
        };
        assert!(leq_config(&c1, &c1));
        assert!(leq_config(&c1, &c2));
        let c3 = AltConfig {
            procs: Multiset::singleton(Control { head: Head::Nt(a, cache(&[send()])), stack: vec![] }),
            chans: vec![Multiset::new()],
        };
        let c4 = AltConfig {
            procs: Multiset::singleton(Control::fresh(a)),
            chans: vec![[MsgId(0), MsgId(0)].into_iter().collect()],
        };
        assert!(!leq_config(&c3, &c4));
    }

    #[test]
    fn basis_insertion() {
        let x = AltConfig { procs: Multiset::singleton(Control::fresh(NtId(0))), chans: vec![Multiset::singleton(MsgId(0))] };
        let smaller = AltConfig { procs: x.procs.clone(), chans: vec![Multiset::new()] };
        let mut b = Basis::new();
        assert!(b.insert(x.clone()));
        assert!(!b.insert(x.clone()));
        assert_eq!(b.len(), 1);
        assert!(b.insert(smaller.clone()));
        assert_eq!(b.into_vec(), vec![smaller]);
    }
}
