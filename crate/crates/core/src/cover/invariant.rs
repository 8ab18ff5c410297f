//! Nonnegative weightings that no step of the cache semantics can increase.
//!
//! A weighting gives every head shape, stack frame, cache symbol and pending
//! message a weight. When every local step is non-increasing, no reachable
//! configuration outweighs the initial one, and neither does anything below
//! it. A basis element heavier than the initial configuration can therefore
//! be dropped.

use super::{Skel, SkelNode};
use crate::model::{Action, ApcpsSpec, ChanId, Classification, MsgId, NtId, Rule, Symbol};
use crate::semantics::{AltConfig, Cache};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use std::collections::HashMap;

/// Head shapes are told apart by the frame right below them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Key {
    Head(Skel, Option<NtId>),
    Frame(NtId),
    Sym(Symbol),
    Msg(ChanId, MsgId),
}

/// `post <= pre`, as sparse coefficients of `post - pre`.
type Constraint = HashMap<Key, f64>;

#[derive(Debug)]
struct Weighting {
    w: HashMap<Key, f64>,
    /// Lightest reading of each head shape over an unknown stack.
    floor: HashMap<Skel, f64>,
    init: f64,
}

#[derive(Debug, Default)]
pub(super) struct Invariants {
    all: Vec<Weighting>,
}

const EPS: f64 = 1e-7;

impl Invariants {
    /// `nodes` are the control skeletons, with full stacks, that any process
    /// can reach.
    pub(super) fn new(spec: &ApcpsSpec, cl: &Classification, nodes: &[SkelNode]) -> Invariants {
        let cons = constraints(spec, cl, nodes);
        let start = Key::Head(Skel::Nt(spec.start()), None);
        let mut keys: Vec<Key> = cons.iter().flat_map(|c| c.keys().copied()).collect();
        keys.push(start);
        keys.sort_by_key(|k| format!("{k:?}"));
        keys.dedup();
        let mut out = Invariants::default();
        for &goal in &keys {
            if out.all.iter().any(|w| w.w.get(&goal).is_some_and(|&x| x > EPS)) {
                continue;
            }
            let mut lp = Problem::new(OptimizationDirection::Maximize);
            let vars: HashMap<Key, _> =
                keys.iter().map(|&k| (k, lp.add_var(if k == goal { 1.0 } else { 0.0 }, (0.0, 1.0)))).collect();
            for c in &cons {
                let row: Vec<_> = c.iter().filter(|(_, &x)| x != 0.0).map(|(k, &x)| (vars[k], x)).collect();
                if !row.is_empty() {
                    lp.add_constraint(&row[..], ComparisonOp::Le, 0.0);
                }
            }
            lp.add_constraint([(vars[&start], 1.0)], ComparisonOp::Le, 1.0);
            let Ok(sol) = lp.solve() else { continue };
            if sol.objective() <= EPS {
                continue;
            }
            let w: HashMap<Key, f64> = keys.iter().map(|k| (*k, sol[vars[k]])).collect();
            let mut floor: HashMap<Skel, f64> = HashMap::new();
            for (k, &x) in &w {
                if let Key::Head(h, _) = k {
                    let f = floor.entry(*h).or_insert(x);
                    *f = f.min(x);
                }
            }
            let init = w[&start];
            out.all.push(Weighting { w: w.into_iter().filter(|(_, x)| *x > EPS).collect(), floor, init });
        }
        out
    }

    /// Whether some weighting shows that nothing at or above `c` is reachable.
    pub(super) fn excludes(&self, c: &AltConfig) -> bool {
        self.all.iter().any(|w| w.weigh(c) > w.init + EPS)
    }
}

impl Weighting {
    fn weigh(&self, c: &AltConfig) -> f64 {
        let get = |k: Key| self.w.get(&k).copied().unwrap_or(0.0);
        let cache = |m: &Cache| m.items().iter().map(|(s, n)| get(Key::Sym(*s)) * f64::from(n)).sum::<f64>();
        let mut total = 0.0;
        for (g, n) in c.procs.iter() {
            let h = Skel::of(&g.head);
            // A stack cut down to nothing may stand for any stack.
            let mut one = match g.stack.first() {
                Some((x, _)) => get(Key::Head(h, Some(*x))),
                None => self.floor.get(&h).copied().unwrap_or(0.0),
            };
            one += cache(g.head.cache());
            for (x, m) in &g.stack {
                one += get(Key::Frame(*x)) + cache(m);
            }
            total += one * f64::from(n);
        }
        for (ci, q) in c.chans.iter().enumerate() {
            for (m, n) in q.iter() {
                total += get(Key::Msg(ChanId(ci as u16), *m)) * f64::from(n);
            }
        }
        total
    }
}

/// One constraint per local step of each skeleton, with caches as sums of
/// their symbols.
fn constraints(spec: &ApcpsSpec, cl: &Classification, nodes: &[SkelNode]) -> Vec<Constraint> {
    let mut out = vec![];
    let mut le = |post: &[Key], pre: &[Key]| {
        let mut c = Constraint::new();
        for k in post {
            *c.entry(*k).or_default() += 1.0;
        }
        for k in pre {
            *c.entry(*k).or_default() -= 1.0;
        }
        out.push(c);
    };
    // What firing an action consumes and produces besides the head.
    let effect = |a: Action| -> (Vec<Key>, Vec<Key>) {
        match a {
            Action::Send(c, m) => (vec![Key::Msg(c, m)], vec![]),
            Action::Recv(c, m) => (vec![], vec![Key::Msg(c, m)]),
            Action::Spawn(x) => (vec![Key::Head(Skel::Nt(x), None)], vec![]),
            Action::Label(_) => (vec![], vec![]),
        }
    };
    for r in spec.rules() {
        let a = r.lhs();
        if cl.is_com_nt(a) {
            // Derivation inside a cache.
            let rhs: Vec<Key> = r.rhs().into_iter().map(Key::Sym).collect();
            le(&rhs, &[Key::Sym(Symbol::Nt(a))]);
        }
        for s in r.rhs() {
            if let Symbol::Act(act @ (Action::Send(..) | Action::Spawn(_))) = s {
                le(&effect(act).0, &[Key::Sym(s)]);
            }
        }
    }
    for (h, st) in nodes {
        let top = st.first().copied();
        let here = Key::Head(*h, top);
        let at = |s: Skel| Key::Head(s, top);
        match *h {
            Skel::Nt(a) => {
                for &i in spec.rules_for(a) {
                    match *spec.rule(i) {
                        Rule::Call { first, second, .. } if cl.is_com_nt(second) => {
                            le(&[at(Skel::Nt(first)), Key::Sym(Symbol::Nt(second))], &[here])
                        }
                        Rule::Call { first, second, .. } => {
                            le(&[Key::Head(Skel::Nt(first), Some(second)), Key::Frame(second)], &[here])
                        }
                        Rule::TailCall { action, next, .. } => le(&[at(Skel::ActNt(action, next))], &[here]),
                        Rule::Simple { body: Some(action), .. } => le(&[at(Skel::Act(action))], &[here]),
                        Rule::Simple { body: None, .. } => le(&[at(Skel::Delayed)], &[here]),
                    }
                }
                if cl.is_com_nt(a) {
                    le(&[at(Skel::Delayed), Key::Sym(Symbol::Nt(a))], &[here]);
                }
            }
            Skel::ActNt(action, _) | Skel::Act(action) => {
                let next = match *h {
                    Skel::ActNt(_, b) => Skel::Nt(b),
                    _ => Skel::Delayed,
                };
                let (mut post, mut pre) = effect(action);
                post.push(at(next));
                pre.push(here);
                le(&post, &pre);
            }
            Skel::Delayed => {
                if let Some(x) = top {
                    le(&[Key::Head(Skel::Nt(x), st.get(1).copied())], &[here, Key::Frame(x)]);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{classify, parse_spec};
    use crate::semantics::Control;

    #[test]
    fn a_single_spawn_is_counted() {
        let spec = parse_spec(
            "channels c\nmessages m\nlabels l\nstart S\nrule S -> spawn R T\nrule T -> eps\nrule R -> label l R\n",
        )
        .unwrap();
        let cl = classify(&spec);
        let threads = super::super::Threads::new(&spec, &cl, 2, true);
        let inv = Invariants::new(&spec, &cl, &threads.nodes);
        assert!(!inv.all.is_empty());
        let r = spec.nt_id("R").unwrap();
        let one = AltConfig { procs: [Control::fresh(r)].into_iter().collect(), chans: vec![Default::default()] };
        let two = AltConfig { procs: one.procs.with(Control::fresh(r)), chans: one.chans.clone() };
        assert!(!inv.excludes(&one));
        assert!(inv.excludes(&two));
    }
}
