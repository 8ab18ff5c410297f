//! Place/transition nets for the commutative fragment of a spec, a backward
//! coverability engine, and the derivation oracle used by the cover module.

use crate::model::{ApcpsSpec, Classification, NtId, Rule, Symbol};
use crate::multiset::Multiset;
use crate::order::QuasiOrder;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PetriError {
    #[error("commutative non-terminal {0} has a non-commutative right-hand side")]
    Classification(String),
}

/// Dense marking indexed by place.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Marking(pub Vec<u32>);

impl Marking {
    pub fn zero(places: usize) -> Self {
        Marking(vec![0; places])
    }

    pub fn from_pairs(places: usize, pairs: &[(usize, u32)]) -> Self {
        let mut m = Self::zero(places);
        for &(p, n) in pairs {
            m.0[p] += n;
        }
        m
    }

    pub fn leq(&self, other: &Marking) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn sum(&self, other: &Marking) -> Marking {
        Marking(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn monus(&self, other: &Marking) -> Marking {
        Marking(self.0.iter().zip(&other.0).map(|(a, b)| a.saturating_sub(*b)).collect())
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl QuasiOrder for Marking {
    fn leq(&self, other: &Self) -> bool {
        Marking::leq(self, other)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub pre: Marking,
    pub post: Marking,
    pub tag: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PetriNet {
    pub places: Vec<String>,
    pub transitions: Vec<Transition>,
}

impl PetriNet {
    pub fn enabled(&self, m: &Marking, t: usize) -> bool {
        self.transitions[t].pre.leq(m)
    }

    pub fn fire(&self, m: &Marking, t: usize) -> Option<Marking> {
        let tr = &self.transitions[t];
        tr.pre.leq(m).then(|| m.monus(&tr.pre).sum(&tr.post))
    }

    /// Fires a sequence, failing on the first disabled transition.
    pub fn replay(&self, init: &Marking, seq: &[usize]) -> Option<Marking> {
        seq.iter().try_fold(init.clone(), |m, &t| self.fire(&m, t))
    }

    pub fn show_marking(&self, m: &Marking) -> String {
        let parts: Vec<String> = m
            .0
            .iter()
            .enumerate()
            .filter(|(_, n)| **n > 0)
            .map(|(p, n)| if *n == 1 { self.places[p].clone() } else { format!("{}:{}", self.places[p], n) })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

impl fmt::Display for PetriNet {
    /// Plain place/transition listing.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "places {}", self.places.join(" "))?;
        for t in &self.transitions {
            writeln!(f, "trans {} : {} -> {}", t.tag, self.show_marking(&t.pre), self.show_marking(&t.post))?;
        }
        Ok(())
    }
}

/// For each transition, the least marking from which one firing covers `target`.
pub fn petri_pre(net: &PetriNet, target: &Marking) -> Vec<Marking> {
    let mut out: Vec<Marking> = net.transitions.iter().map(|t| t.pre.sum(&target.monus(&t.post))).collect();
    out.sort();
    out.dedup();
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coverability {
    pub coverable: bool,
    /// Transition indices, replayable from the initial marking.
    pub witness: Option<Vec<usize>>,
}

/// Backward basis from `target`, kept as an arena with parent pointers.
struct BackwardRun {
    arena: Vec<(Marking, Option<(usize, usize)>)>,
    live: Vec<usize>,
}

impl BackwardRun {
    fn new(net: &PetriNet, target: &Marking) -> Self {
        let mut run = BackwardRun { arena: vec![(target.clone(), None)], live: vec![0] };
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            if !run.live.contains(&i) {
                continue;
            }
            let u = run.arena[i].0.clone();
            for (t, tr) in net.transitions.iter().enumerate() {
                let p = tr.pre.sum(&u.monus(&tr.post));
                if u.leq(&p) {
                    continue;
                }
                if run.live.iter().any(|&j| run.arena[j].0.leq(&p)) {
                    continue;
                }
                run.live.retain(|&j| !p.leq(&run.arena[j].0));
                run.arena.push((p, Some((t, i))));
                let id = run.arena.len() - 1;
                run.live.push(id);
                queue.push_back(id);
            }
        }
        run
    }

    /// Firing sequence from `init` if some basis element lies below it.
    fn witness(&self, init: &Marking) -> Option<Vec<usize>> {
        let &start = self.live.iter().find(|&&j| self.arena[j].0.leq(init))?;
        let mut seq = Vec::new();
        let mut i = start;
        while let Some((t, next)) = self.arena[i].1 {
            seq.push(t);
            i = next;
        }
        Some(seq)
    }
}

/// Backward coverability with forward witness replay.
pub fn petri_coverable(net: &PetriNet, init: &Marking, target: &Marking) -> Coverability {
    let run = BackwardRun::new(net, target);
    match run.witness(init) {
        Some(seq) => {
            let end = net.replay(init, &seq).expect("backward chain replays forward");
            debug_assert!(target.leq(&end));
            Coverability { coverable: true, witness: Some(seq) }
        }
        None => Coverability { coverable: false, witness: None },
    }
}

/// A net over the commutative symbols of a spec.
#[derive(Clone, Debug)]
pub struct CcfgNet {
    pub net: PetriNet,
    pub symbols: Vec<Symbol>,
    /// Rule index per transition; `None` for the termination detector.
    pub rule_of: Vec<Option<usize>>,
    place: HashMap<Symbol, usize>,
    pub budget: Option<usize>,
    pub done: Option<usize>,
    pub k_idx: usize,
}

impl CcfgNet {
    pub fn place_of(&self, s: Symbol) -> Option<usize> {
        self.place.get(&s).copied()
    }

    /// `None` when the multiset mentions a symbol without a place.
    pub fn marking_of(&self, m: &Multiset<Symbol>) -> Option<Marking> {
        let mut out = Marking::zero(self.net.places.len());
        for (s, n) in m.iter() {
            out.0[self.place_of(*s)?] += n;
        }
        Some(out)
    }

    pub fn multiset_of(&self, m: &Marking) -> Multiset<Symbol> {
        Multiset::from_counts(
            m.0.iter().enumerate().take(self.symbols.len()).filter(|(_, n)| **n > 0).map(|(p, n)| (self.symbols[p], *n)),
        )
    }

    /// `{C:1}`, plus `k_idx - 1` budget tokens in the bounded encoding.
    pub fn initial(&self, c: NtId) -> Marking {
        let mut m = Marking::zero(self.net.places.len());
        m.0[self.place[&Symbol::Nt(c)]] = 1;
        if let Some(b) = self.budget {
            m.0[b] = self.k_idx as u32 - 1;
        }
        m
    }
}

fn build(spec: &ApcpsSpec, cl: &Classification, keep: impl Fn(NtId) -> bool) -> Result<(Vec<Symbol>, Vec<(usize, Rule)>), PetriError> {
    let mut symbols: Vec<Symbol> = cl.com_nonterminals.iter().filter(|a| keep(**a)).map(|a| Symbol::Nt(*a)).collect();
    symbols.extend(cl.com_terminals.iter().map(|a| Symbol::Act(*a)));
    let mut rules = Vec::new();
    for (i, r) in spec.rules().iter().enumerate() {
        if !cl.is_com_nt(r.lhs()) || !keep(r.lhs()) {
            continue;
        }
        if r.rhs().into_iter().any(|s| !cl.is_com(s)) {
            return Err(PetriError::Classification(spec.nt_name(r.lhs()).to_string()));
        }
        if r.rhs_nonterminals().all(&keep) {
            rules.push((i, *r));
        }
    }
    Ok((symbols, rules))
}

fn assemble(spec: &ApcpsSpec, symbols: Vec<Symbol>, rules: Vec<(usize, Rule)>, k_idx: Option<usize>) -> CcfgNet {
    let mut places: Vec<String> = symbols.iter().map(|s| spec.show_symbol(*s)).collect();
    let place: HashMap<Symbol, usize> = symbols.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let (budget, done) = match k_idx {
        Some(_) => {
            places.push("budget".into());
            places.push("done".into());
            (Some(places.len() - 2), Some(places.len() - 1))
        }
        None => (None, None),
    };
    let n = places.len();
    let mut transitions = Vec::new();
    let mut rule_of = Vec::new();
    for (i, r) in rules {
        let mut pre = Marking::zero(n);
        pre.0[place[&Symbol::Nt(r.lhs())]] += 1;
        let mut post = Marking::zero(n);
        for s in r.rhs() {
            post.0[place[&s]] += 1;
        }
        if let Some(b) = budget {
            match r {
                Rule::Call { .. } => pre.0[b] += 1,
                Rule::Simple { .. } => post.0[b] += 1,
                Rule::TailCall { .. } => {}
            }
        }
        transitions.push(Transition { pre, post, tag: spec.show_rule(&r) });
        rule_of.push(Some(i));
    }
    if let (Some(k), Some(b), Some(d)) = (k_idx, budget, done) {
        let pre = Marking::from_pairs(n, &[(b, k as u32)]);
        let post = Marking::from_pairs(n, &[(b, k as u32), (d, 1)]);
        transitions.push(Transition { pre, post, tag: "done".into() });
        rule_of.push(None);
    }
    CcfgNet {
        net: PetriNet { places, transitions },
        symbols,
        rule_of,
        place,
        budget,
        done,
        k_idx: k_idx.unwrap_or(0),
    }
}

/// One transition per rule with a commutative left-hand side; reachable
/// markings are exactly the Parikh images of sentential forms.
pub fn encode_ccfg(spec: &ApcpsSpec, cl: &Classification) -> Result<CcfgNet, PetriError> {
    let (symbols, rules) = build(spec, cl, |_| true)?;
    Ok(assemble(spec, symbols, rules, None))
}

/// The same net with a budget counter bounding the number of non-terminal
/// tokens by `k_idx`, and a `done` place markable once none remain.
pub fn encode_ccfg_bounded(spec: &ApcpsSpec, cl: &Classification, k_idx: usize) -> Result<CcfgNet, PetriError> {
    assert!(k_idx >= 1, "index bound must be positive");
    let (symbols, rules) = build(spec, cl, |_| true)?;
    Ok(assemble(spec, symbols, rules, Some(k_idx)))
}

/// Default index bound for the bounded encoding.
pub fn default_k_idx(cl: &Classification) -> usize {
    cl.com_nonterminals.len() + 1
}

/// Commutative non-terminals that derive some terminal word.
pub fn productive(spec: &ApcpsSpec, cl: &Classification) -> Vec<bool> {
    let mut prod = vec![false; spec.nonterminals().len()];
    let mut changed = true;
    while changed {
        changed = false;
        for r in spec.rules() {
            let a = r.lhs();
            if cl.is_com_nt(a) && !prod[a.index()] && r.rhs_nonterminals().all(|b| prod[b.index()]) {
                prod[a.index()] = true;
                changed = true;
            }
        }
    }
    prod
}

/// The plain encoding restricted to productive non-terminals. Every
/// remaining non-terminal token can be completed to terminals, so covering
/// a terminal-only target here means some complete derivation covers it.
pub fn encode_ccfg_productive(spec: &ApcpsSpec, cl: &Classification) -> Result<CcfgNet, PetriError> {
    let prod = productive(spec, cl);
    let (symbols, rules) = build(spec, cl, |a| prod[a.index()])?;
    Ok(assemble(spec, symbols, rules, None))
}

/// Minimal pair of the derivation oracle: `C` together with the part of
/// the demand its derivation does not cover.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OraclePair {
    pub c: NtId,
    pub residual: Multiset<Symbol>,
    /// What the derivation covers, `demand ⊖ residual`.
    pub covered: Multiset<Symbol>,
}

/// Answers "which `C` derive a sentential form covering `t`", memoised per `t`.
#[derive(Debug)]
pub struct DerivationOracle {
    pub partial: CcfgNet,
    pub complete: CcfgNet,
    terminating: Vec<Option<Vec<usize>>>,
    memo: HashMap<(Multiset<Symbol>, bool), Vec<Option<Vec<usize>>>>,
    pub queries: usize,
}

impl DerivationOracle {
    pub fn new(spec: &ApcpsSpec, cl: &Classification) -> Result<Self, PetriError> {
        let partial = encode_ccfg(spec, cl)?;
        let complete = encode_ccfg_productive(spec, cl)?;
        let terminating = shortest_terminations(spec, cl, &complete);
        Ok(DerivationOracle { partial, complete, terminating, memo: HashMap::new(), queries: 0 })
    }

    fn net(&self, terminal_only: bool) -> &CcfgNet {
        if terminal_only {
            &self.complete
        } else {
            &self.partial
        }
    }

    /// Witness firing sequences from `{C:1}` covering `t`, per non-terminal.
    fn cover_all(&mut self, t: &Multiset<Symbol>, terminal_only: bool) -> &Vec<Option<Vec<usize>>> {
        let key = (t.clone(), terminal_only);
        if !self.memo.contains_key(&key) {
            self.queries += 1;
            let cn = self.net(terminal_only);
            let n = cn.symbols.len();
            let mut res = vec![None; self.terminating.len()];
            if let Some(target) = cn.marking_of(t) {
                let run = BackwardRun::new(&cn.net, &target);
                for (a, slot) in res.iter_mut().enumerate() {
                    if let Some(p) = cn.place_of(Symbol::Nt(NtId(a as u16))) {
                        *slot = run.witness(&Marking::from_pairs(n, &[(p, 1)]));
                    }
                }
            }
            self.memo.insert(key.clone(), res);
        }
        &self.memo[&key]
    }

    /// Minimal pairs `(C, residual)` with `C ⇒* w` and `residual ⊕ 𝕄(w) ≥ demand`,
    /// over every commutative `C`. With `terminal_only`, `w` must be terminal
    /// and the covered part is drawn from the terminal symbols of the demand.
    pub fn pairs(&mut self, demand: &Multiset<Symbol>, terminal_only: bool) -> Vec<OraclePair> {
        let coverable_part = if terminal_only { demand.restrict(|s| !s.is_nt()) } else { demand.clone() };
        let mut found: Vec<OraclePair> = Vec::new();
        for t in coverable_part.sub_multisets() {
            let hits: Vec<NtId> = self
                .cover_all(&t, terminal_only)
                .iter()
                .enumerate()
                .filter(|(_, w)| w.is_some())
                .map(|(a, _)| NtId(a as u16))
                .collect();
            for c in hits {
                // Sub-multisets come largest first, so a covered superset means t is not maximal.
                if found.iter().any(|p| p.c == c && t.is_subset(&p.covered)) {
                    continue;
                }
                found.push(OraclePair { c, residual: demand.monus(&t), covered: t.clone() });
            }
        }
        found.sort();
        found
    }

    /// A derivation from `C` whose Parikh image covers `t`, as rule indices,
    /// together with that image. Complete when `terminal_only`.
    pub fn derivation(&mut self, c: NtId, t: &Multiset<Symbol>, terminal_only: bool) -> Option<(Vec<usize>, Multiset<Symbol>)> {
        let seq = self.cover_all(t, terminal_only).get(c.index())?.clone()?;
        let cn = self.net(terminal_only);
        let mut m = cn.net.replay(&cn.initial(c), &seq)?;
        let mut rules: Vec<usize> = seq.iter().map(|&i| cn.rule_of[i].expect("rule transition")).collect();
        if terminal_only {
            // Finish every leftover non-terminal along its shortest termination.
            loop {
                let Some(a) = m.0.iter().enumerate().take(cn.symbols.len()).find(|(p, n)| **n > 0 && cn.symbols[*p].is_nt()).map(|(p, _)| cn.symbols[p].as_nt().unwrap()) else { break };
                let fin = self.terminating[a.index()].as_ref()?;
                for &tr in fin {
                    m = cn.net.fire(&m, tr)?;
                    rules.push(cn.rule_of[tr].expect("rule transition"));
                }
            }
        }
        Some((rules, cn.multiset_of(&m)))
    }
}

/// For each productive commutative non-terminal, a firing sequence from
/// `{A:1}` to a marking without non-terminal tokens.
fn shortest_terminations(spec: &ApcpsSpec, cl: &Classification, cn: &CcfgNet) -> Vec<Option<Vec<usize>>> {
    let n = spec.nonterminals().len();
    let mut best: Vec<Option<Vec<usize>>> = vec![None; n];
    let mut changed = true;
    while changed {
        changed = false;
        for (t, rule) in cn.rule_of.iter().enumerate() {
            let Some(i) = rule else { continue };
            let r = spec.rule(*i);
            let a = r.lhs();
            if !cl.is_com_nt(a) {
                continue;
            }
            let mut seq = vec![t];
            let mut ok = true;
            for b in r.rhs_nonterminals() {
                match &best[b.index()] {
                    Some(s) => seq.extend(s),
                    None => ok = false,
                }
            }
            if ok && best[a.index()].as_ref().is_none_or(|s| seq.len() < s.len()) {
                best[a.index()] = Some(seq);
                changed = true;
            }
        }
    }
    best
}

/// Forward breadth-first coverability, exploring markings bounded
/// componentwise by `cap`. Test oracle only.
pub fn forward_coverable(net: &PetriNet, init: &Marking, target: &Marking, cap: &Marking) -> bool {
    let mut seen = HashSet::from([init.clone()]);
    let mut queue = VecDeque::from([init.clone()]);
    while let Some(m) = queue.pop_front() {
        if target.leq(&m) {
            return true;
        }
        for t in 0..net.transitions.len() {
            if let Some(next) = net.fire(&m, t) {
                if next.leq(cap) && seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{classify, parse_spec, Action};

    const R_NET: &str = "channels c\nmessages m\nstart R\nrule R -> send c m R\nrule R -> eps";

    fn send(spec: &ApcpsSpec) -> Symbol {
        Symbol::Act(Action::Send(spec.chan_id("c").unwrap(), spec.msg_id("m").unwrap()))
    }

    #[test]
    fn encoding_of_the_send_loop() {
        let spec = parse_spec(R_NET).unwrap();
        let cl = classify(&spec);
        let cn = encode_ccfg(&spec, &cl).unwrap();
        assert_eq!(cn.net.transitions.len(), 2);
        let r = spec.nt_id("R").unwrap();
        let init = cn.initial(r);
        let three = cn.marking_of(&Multiset::from_counts([(send(&spec), 3)])).unwrap();
        let res = petri_coverable(&cn.net, &init, &three);
        assert!(res.coverable);
        assert_eq!(res.witness.as_ref().unwrap().iter().filter(|&&t| t == 0).count(), 3);
        let two_r = cn.marking_of(&Multiset::from_counts([(Symbol::Nt(r), 2)])).unwrap();
        assert!(!petri_coverable(&cn.net, &init, &two_r).coverable);
        let empty = Marking::zero(cn.net.places.len());
        assert_eq!(petri_coverable(&cn.net, &init, &empty).witness, Some(vec![]));
    }

    #[test]
    fn pre_examples() {
        let net = PetriNet {
            places: vec!["A".into(), "a".into()],
            transitions: vec![Transition {
                pre: Marking(vec![1, 0]),
                post: Marking(vec![0, 1]),
                tag: "A -> a".into(),
            }],
        };
        assert_eq!(petri_pre(&net, &Marking(vec![0, 1])), vec![Marking(vec![1, 0])]);
        assert_eq!(petri_pre(&net, &Marking(vec![0, 2])), vec![Marking(vec![1, 1])]);
        assert_eq!(petri_pre(&net, &Marking(vec![0, 0])), vec![Marking(vec![1, 0])]);
    }

    #[test]
    fn budget_limits_index() {
        let spec = parse_spec(R_NET).unwrap();
        let cl = classify(&spec);
        let cn = encode_ccfg_bounded(&spec, &cl, 1).unwrap();
        let done = Marking::from_pairs(cn.net.places.len(), &[(cn.done.unwrap(), 1)]);
        assert!(petri_coverable(&cn.net, &cn.initial(spec.nt_id("R").unwrap()), &done).coverable);

        let spec = parse_spec("start A\nrule A -> B B'\nrule B -> eps\nrule B' -> eps").unwrap();
        let cl = classify(&spec);
        let a = spec.nt_id("A").unwrap();
        let cn = encode_ccfg_bounded(&spec, &cl, 1).unwrap();
        let done = Marking::from_pairs(cn.net.places.len(), &[(cn.done.unwrap(), 1)]);
        assert!(!petri_coverable(&cn.net, &cn.initial(a), &done).coverable);
        let cn = encode_ccfg_bounded(&spec, &cl, 2).unwrap();
        assert!(petri_coverable(&cn.net, &cn.initial(a), &done).coverable);
    }

    #[test]
    fn oracle_examples() {
        let spec = parse_spec(&format!("{R_NET}\nrule Q -> eps\nlabels x\nrule Z -> label x")).unwrap();
        let cl = classify(&spec);
        let mut o = DerivationOracle::new(&spec, &cl).unwrap();
        let r = spec.nt_id("R").unwrap();
        let demand = Multiset::from_counts([(send(&spec), 2)]);
        let pairs = o.pairs(&demand, false);
        assert!(pairs.contains(&OraclePair { c: r, residual: Multiset::new(), covered: demand.clone() }));
        let q = spec.nt_id("Q").unwrap();
        assert!(pairs.iter().any(|p| p.c == q && p.residual == demand));
        let empty = o.pairs(&Multiset::new(), false);
        assert_eq!(empty.len(), cl.com_nonterminals.len());
        let (rules, image) = o.derivation(r, &demand, true).unwrap();
        assert_eq!(image, demand);
        assert_eq!(rules.len(), 3);
    }
}
