//! Brute-force oracles and sampling helpers shared by the property and
//! acceptance tests.
#![allow(dead_code)]

use apcps::gen::sample_alt_run;
use apcps::model::{classify, is_independent, parse_spec, Action, ApcpsSpec, Classification, MsgId, NtId, Symbol};
use apcps::semantics::{is_abstraction_of, AltConfig, AltOptions, AltSystem, Cache, CacheSort, Control, StdConfig};
use apcps::Multiset;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::{BTreeSet, HashSet, VecDeque};

pub const CORPUS: &[&str] =
    &["send", "recv", "mix", "loop", "lab", "dead", "spawn", "cachedlab", "lock", "lock_twice", "replicated_workers"];

pub fn load(name: &str) -> ApcpsSpec {
    let path = format!("{}/corpus/{name}.apcps", env!("CARGO_MANIFEST_DIR"));
    parse_spec(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Non-terminals from which a receive occurs in some right-hand side
/// reachable through non-terminal occurrences.
pub fn recv_reachable(spec: &ApcpsSpec) -> BTreeSet<NtId> {
    let mut out = BTreeSet::new();
    for a in spec.nt_ids() {
        let mut seen = HashSet::from([a]);
        let mut todo = vec![a];
        let mut found = false;
        while let Some(x) = todo.pop() {
            for &r in spec.rules_for(x) {
                for s in spec.rule(r).rhs() {
                    match s {
                        Symbol::Act(Action::Recv(..)) => found = true,
                        Symbol::Nt(y) if seen.insert(y) => todo.push(y),
                        _ => {}
                    }
                }
            }
        }
        if found {
            out.insert(a);
        }
    }
    out
}

/// Tries every injection of `m1`'s occurrences into `m2`'s.
pub fn brute_embeds<T: Ord + Clone>(leq: &impl Fn(&T, &T) -> bool, m1: &Multiset<T>, m2: &Multiset<T>) -> bool {
    fn go<T>(leq: &impl Fn(&T, &T) -> bool, a: &[&T], b: &[&T], used: &mut Vec<bool>) -> bool {
        let Some((x, rest)) = a.split_first() else { return true };
        for j in 0..b.len() {
            if !used[j] && leq(x, b[j]) {
                used[j] = true;
                let ok = go(leq, rest, b, used);
                used[j] = false;
                if ok {
                    return true;
                }
            }
        }
        false
    }
    let a: Vec<&T> = m1.elements().collect();
    let b: Vec<&T> = m2.elements().collect();
    go(leq, &a, &b, &mut vec![false; b.len()])
}

/// Words reachable from `w` by swapping adjacent independent symbols.
pub fn swap_closure(cl: &Classification, w: &[Symbol]) -> HashSet<Vec<Symbol>> {
    let mut seen = HashSet::from([w.to_vec()]);
    let mut todo = VecDeque::from([w.to_vec()]);
    while let Some(u) = todo.pop_front() {
        for i in 1..u.len() {
            if is_independent(cl, u[i - 1], u[i]).unwrap() {
                let mut v = u.clone();
                v.swap(i - 1, i);
                if seen.insert(v.clone()) {
                    todo.push_back(v);
                }
            }
        }
    }
    seen
}

/// Every word of length at most `n` over `alphabet`.
pub fn all_words(alphabet: &[Symbol], n: usize) -> Vec<Vec<Symbol>> {
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..n {
        layer = layer
            .iter()
            .flat_map(|w: &Vec<Symbol>| {
                alphabet.iter().map(move |s| {
                    let mut v = w.clone();
                    v.push(*s);
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Configurations met on seeded random runs of a shaped spec.
pub fn alt_samples(spec: &ApcpsSpec, k: usize, seeds: std::ops::Range<u64>, steps: usize) -> Vec<AltConfig> {
    let cl = classify(spec);
    let sys = AltSystem::new(spec, &cl, k, AltOptions::default());
    let mut out: Vec<AltConfig> = vec![];
    for s in seeds {
        out.extend(sample_alt_run(&sys, &mut apcps::gen::rng(s), steps).unwrap());
    }
    out.sort();
    out.dedup();
    out
}

/// A random configuration below `c`: drop processes, messages, cache items
/// and bottom frames, keeping every cache's sort meaningful.
pub fn weaken(rng: &mut impl Rng, c: &AltConfig) -> AltConfig {
    let shrink = |rng: &mut dyn rand::RngCore, m: &Cache| {
        let mut items = m.items().clone();
        for s in m.items().elements().cloned().collect::<Vec<_>>() {
            if rng.gen_bool(0.3) {
                items.remove_one(&s);
            }
        }
        if m.sort() == CacheSort::Mixed && !items.any(|s| s.is_nt()) {
            return m.clone();
        }
        Cache::with_sort(m.sort(), items)
    };
    let mut procs = Multiset::new();
    for g in c.procs.elements() {
        if rng.gen_bool(0.2) {
            continue;
        }
        let head = g.head.with_cache(shrink(rng, g.head.cache()));
        let keep = if g.stack.is_empty() || rng.gen_bool(0.7) { g.stack.len() } else { rng.gen_range(0..g.stack.len()) };
        let stack = g.stack[..keep].iter().map(|(x, m)| (*x, shrink(rng, m))).collect();
        procs.insert(Control { head, stack });
    }
    let chans = c
        .chans
        .iter()
        .map(|q| q.elements().filter(|_| rng.gen_bool(0.7)).cloned().collect())
        .collect();
    AltConfig { procs, chans }
}

/// Whether every successor of `c1` is below some successor of `c2`.
pub fn monotone_at(sys: &AltSystem, c1: &AltConfig, c2: &AltConfig) -> bool {
    let s2 = sys.step(c2).unwrap();
    sys.step(c1).unwrap().iter().all(|a| s2.iter().any(|b| apcps::order::leq_config(a, b)))
}

pub fn pick<'a, T>(rng: &mut impl Rng, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("non-empty")
}

/// Heads, caches and stacks of a control, for structural checks.
pub fn caches(g: &Control) -> Vec<&Cache> {
    std::iter::once(g.head.cache()).chain(g.stack.iter().map(|(_, m)| m)).collect()
}

/// Breadth-first search of the cache semantics for a configuration that
/// abstracts `c`. Processes never disappear and unreceived messages never
/// drain, so successors holding more of either than `c` are cut.
pub fn reaches_abstraction(sys: &AltSystem, c: &StdConfig, max_configs: usize) -> bool {
    let spec = sys.spec;
    let received: HashSet<(usize, MsgId)> = spec
        .all_actions()
        .into_iter()
        .filter_map(|a| match a {
            Action::Recv(ch, m) => Some((ch.index(), m)),
            _ => None,
        })
        .collect();
    let hopeless = |a: &AltConfig| {
        a.procs.len() > c.procs.len()
            || a.chans.iter().enumerate().any(|(ch, q)| {
                q.iter().any(|(m, n)| !received.contains(&(ch, *m)) && n > c.chans[ch].count(m))
            })
    };
    let init = AltConfig::initial(spec);
    let mut seen = HashSet::from([init.clone()]);
    let mut todo = VecDeque::from([init]);
    while let Some(a) = todo.pop_front() {
        if is_abstraction_of(sys.cl, c, &a).unwrap() {
            return true;
        }
        for n in sys.step(&a).unwrap() {
            if seen.len() < max_configs && !hopeless(&n) && seen.insert(n.clone()) {
                todo.push_back(n);
            }
        }
    }
    false
}
