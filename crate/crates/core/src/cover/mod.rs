//! Backward coverability over the cache semantics.
//!
//! Upward-closed sets of configurations are kept as antichains of minimal
//! elements. Starting from the minimal configurations exposing the query, the
//! procedure saturates under minimal predecessors until the initial
//! configuration is covered or nothing new appears.

use crate::model::{check_shaped, Action, ApcpsSpec, Classification, LabelId, MsgId, NtId, Rule, Symbol};
use crate::multiset::Multiset;
use crate::order::leq_config;
use crate::petri::{DerivationOracle, OraclePair, PetriError};
use crate::semantics::{
    digest, AltConfig, AltMove, AltOptions, AltSystem, Bounds, Cache, CacheSort, Control, Exploration, Head,
    SemanticsError, TraceStep,
};
use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};
use thiserror::Error;

mod invariant;

use invariant::Invariants;

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("spec is not shaped: {0}")]
    NotShaped(String),
    #[error("empty query")]
    EmptyQuery,
    #[error("unknown label {0}")]
    UnknownLabel(String),
    #[error("stack bound must be at least 1")]
    ZeroBound,
    #[error(transparent)]
    Petri(#[from] PetriError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("unsound predecessor: {0}")]
    Unsound(String),
    #[error("basis grew past {0} elements")]
    BasisLimit(usize),
}

/// Parses a comma- or space-separated list of label names.
pub fn parse_query(spec: &ApcpsSpec, text: &str) -> Result<Vec<LabelId>, CoverError> {
    let q = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| spec.label_id(s).ok_or_else(|| CoverError::UnknownLabel(s.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    if q.is_empty() {
        return Err(CoverError::EmptyQuery);
    }
    Ok(q)
}

#[derive(Clone, Copy, Debug)]
pub struct CoverOptions {
    pub alt: AltOptions,
    /// Overrides the stack bound derived from the shape check.
    pub k: Option<usize>,
    /// Replays every predecessor forward before it enters the basis.
    pub check_soundness: bool,
    pub witness: bool,
    pub max_basis: usize,
}

impl Default for CoverOptions {
    fn default() -> Self {
        CoverOptions { alt: AltOptions::default(), k: None, check_soundness: false, witness: true, max_basis: 200_000 }
    }
}

/// A run of the cache semantics from the initial configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub trace: Vec<TraceStep>,
    /// Configurations along the run, the initial one first.
    pub configs: Vec<AltConfig>,
}

#[derive(Clone, Debug)]
pub struct Decision {
    pub covered: bool,
    pub k: usize,
    /// Saturation rounds performed.
    pub iterations: usize,
    /// Size of the antichain when the procedure stopped.
    pub basis_size: usize,
    pub predecessors: usize,
    pub soundness_checks: usize,
    pub oracle_queries: usize,
    pub witness: Option<Witness>,
}

/// Symbols and shapes a reachable control can carry at all.
#[derive(Debug)]
struct Plausible {
    act: BTreeSet<Action>,
    actnt: BTreeSet<(Action, NtId)>,
    frames: BTreeSet<NtId>,
    head_items: BTreeSet<Symbol>,
    delayed_items: BTreeSet<Symbol>,
    /// Whether some non-terminal can sit in a head or frame cache.
    head_mixed: bool,
    delayed_mixed: bool,
    /// Cache content possible over each head and frame.
    nt_cache: Vec<BTreeSet<Symbol>>,
    frame_cache: Vec<BTreeSet<Symbol>>,
    actnt_cache: HashMap<(Action, NtId), BTreeSet<Symbol>>,
    act_cache: HashMap<Action, BTreeSet<Symbol>>,
    /// Head shapes with every top-aligned frame prefix they occur over.
    skeletons: HashSet<(Skel, Vec<NtId>)>,
    threads: Threads,
    invariants: Invariants,
}

/// A head with its cache forgotten.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Skel {
    Nt(NtId),
    ActNt(Action, NtId),
    Act(Action),
    Delayed,
}

impl Skel {
    fn of(h: &Head) -> Skel {
        match *h {
            Head::Nt(a, _) => Skel::Nt(a),
            Head::ActNt(a, b, _) => Skel::ActNt(a, b),
            Head::Act(a, _) => Skel::Act(a),
            Head::Delayed(_) => Skel::Delayed,
        }
    }
}

type SkelNode = (Skel, Vec<NtId>);

/// Controls of a single process started at `root`, with caches and channels
/// forgotten: receives always succeed and delayed heads may always pop.
/// Finite because of the stack bound. Returned as a successor map.
fn skeleton_graph(spec: &ApcpsSpec, cl: &Classification, k: usize, fold: bool, root: NtId) -> HashMap<SkelNode, Vec<SkelNode>> {
    let mut graph: HashMap<SkelNode, Vec<SkelNode>> = HashMap::new();
    let mut todo = vec![(Skel::Nt(root), vec![])];
    while let Some((h, st)) = todo.pop() {
        if graph.contains_key(&(h, st.clone())) {
            continue;
        }
        let mut next = vec![];
        match h {
            Skel::Nt(a) => {
                for &i in spec.rules_for(a) {
                    match *spec.rule(i) {
                        Rule::Call { first, second, .. } if cl.is_com_nt(second) => next.push((Skel::Nt(first), st.clone())),
                        Rule::Call { first, second, .. } => {
                            if st.len() + 2 <= k {
                                let mut s2 = vec![second];
                                s2.extend(&st);
                                next.push((Skel::Nt(first), s2));
                            }
                        }
                        Rule::TailCall { action, next: b, .. } => next.push((Skel::ActNt(action, b), st.clone())),
                        Rule::Simple { body: Some(x), .. } => next.push((Skel::Act(x), st.clone())),
                        Rule::Simple { body: None, .. } => next.push((Skel::Delayed, st.clone())),
                    }
                }
                if fold && cl.is_com_nt(a) {
                    next.push((Skel::Delayed, st.clone()));
                }
            }
            Skel::ActNt(_, b) => next.push((Skel::Nt(b), st.clone())),
            Skel::Act(_) => next.push((Skel::Delayed, st.clone())),
            Skel::Delayed => {
                if let Some((x, rest)) = st.split_first() {
                    next.push((Skel::Nt(*x), rest.to_vec()));
                }
            }
        }
        todo.extend(next.iter().cloned());
        graph.insert((h, st), next);
    }
    graph
}

/// Whether `n` lies on a cycle of `graph`.
fn on_cycle(graph: &HashMap<SkelNode, Vec<SkelNode>>, n: &SkelNode) -> bool {
    let mut seen = HashSet::new();
    let mut todo: Vec<&SkelNode> = graph[n].iter().collect();
    while let Some(m) = todo.pop() {
        if m == n {
            return true;
        }
        if seen.insert(m) {
            todo.extend(graph[m].iter());
        }
    }
    false
}

/// Process roots (the start symbol and spawn targets), which roots each
/// skeleton can belong to, and how many processes each root can ever have.
/// `None` is unbounded.
#[derive(Debug)]
struct Threads {
    roots: Vec<NtId>,
    /// Every reachable skeleton with its full stack.
    nodes: Vec<SkelNode>,
    owners: HashMap<SkelNode, u64>,
    bound: Vec<Option<u64>>,
}

impl Threads {
    fn new(spec: &ApcpsSpec, cl: &Classification, k: usize, fold: bool) -> Threads {
        let mut roots = vec![spec.start()];
        for r in spec.rules() {
            if let Rule::TailCall { action: Action::Spawn(x), .. } | Rule::Simple { body: Some(Action::Spawn(x)), .. } = *r {
                if !roots.contains(&x) {
                    roots.push(x);
                }
            }
        }
        let n = roots.len();
        let graphs: Vec<_> = roots.iter().map(|&r| skeleton_graph(spec, cl, k, fold, r)).collect();
        let mut owners: HashMap<SkelNode, u64> = HashMap::new();
        for (i, g) in graphs.iter().enumerate() {
            for (h, st) in g.keys() {
                for j in 0..=st.len() {
                    *owners.entry((*h, st[..j].to_vec())).or_default() |= 1u64.checked_shl(i as u32).unwrap_or(0);
                }
            }
        }
        // Spawns hidden in commutative caches may repeat without bound.
        let cached = derivable(spec, cl.com_nonterminals.iter().copied());
        // occ[p][r]: spawns of root r by one process of root p.
        let occ: Vec<Vec<Option<u64>>> = graphs
            .iter()
            .map(|g| {
                roots
                    .iter()
                    .map(|&r| {
                        let spawn = Action::Spawn(r);
                        let mut count = Some(0u64);
                        for node in g.keys() {
                            if matches!(node.0, Skel::Act(a) | Skel::ActNt(a, _) if a == spawn) {
                                count = if on_cycle(g, node) { None } else { count.map(|c| c + 1) };
                                if count.is_none() {
                                    break;
                                }
                            }
                        }
                        if cached.contains(&Symbol::Act(spawn)) {
                            None
                        } else {
                            count
                        }
                    })
                    .collect()
            })
            .collect();
        // Least fixpoint from below; anything still growing after n rounds is
        // on a spawn cycle.
        let mut bound: Vec<Option<u64>> = (0..n).map(|i| Some(u64::from(i == 0))).collect();
        let step = |b: &[Option<u64>]| -> Vec<Option<u64>> {
            (0..n)
                .map(|r| {
                    let mut t = Some(u64::from(r == 0));
                    for p in 0..n {
                        let add = match (b[p], occ[p][r]) {
                            (Some(0), _) | (_, Some(0)) => Some(0),
                            (Some(x), Some(y)) => x.checked_mul(y),
                            _ => None,
                        };
                        t = t.zip(add).and_then(|(t, a)| t.checked_add(a));
                    }
                    t
                })
                .collect()
        };
        for _ in 0..=n {
            bound = step(&bound);
        }
        let again = step(&bound);
        for r in 0..n {
            if again[r] != bound[r] {
                bound[r] = None;
            }
        }
        // Unboundedness flows to everything a root spawns.
        for _ in 0..n {
            let b2 = step(&bound);
            for r in 0..n {
                if b2[r].is_none() {
                    bound[r] = None;
                }
            }
        }
        if n > 64 {
            bound = vec![None; n];
        }
        let mut nodes: Vec<SkelNode> = graphs.iter().flat_map(|g| g.keys().cloned()).collect();
        nodes.sort();
        nodes.dedup();
        Threads { roots, nodes, owners, bound }
    }

    fn skeletons(&self) -> HashSet<SkelNode> {
        self.owners.keys().cloned().collect()
    }

    /// A necessary condition for some assignment of processes to roots within
    /// their bounds: every group of bounded roots holds at most its total.
    fn fits(&self, procs: &Multiset<Control>) -> bool {
        let bounded: u64 = self.bound.iter().enumerate().filter(|(_, b)| b.is_some()).map(|(i, _)| 1u64 << i).sum();
        let mut masks: Vec<(u64, u64)> = vec![];
        for (g, n) in procs.iter() {
            let frames: Vec<NtId> = g.stack.iter().map(|(x, _)| *x).collect();
            let Some(&m) = self.owners.get(&(Skel::of(&g.head), frames)) else { continue };
            if m & !bounded != 0 || m == 0 {
                continue;
            }
            match masks.iter_mut().find(|(mm, _)| *mm == m) {
                Some(e) => e.1 += u64::from(n),
                None => masks.push((m, u64::from(n))),
            }
        }
        masks.iter().all(|&(m, _)| {
            let held: u64 = masks.iter().filter(|&&(m2, _)| m2 & !m == 0).map(|&(_, c)| c).sum();
            let cap: u64 = (0..self.roots.len()).filter(|&i| m >> i & 1 == 1).map(|i| self.bound[i].unwrap_or(u64::MAX)).fold(0, u64::saturating_add);
            held <= cap
        })
    }
}

fn derivable(spec: &ApcpsSpec, seeds: impl IntoIterator<Item = NtId>) -> BTreeSet<Symbol> {
    let mut todo: Vec<NtId> = seeds.into_iter().collect();
    let mut seen: BTreeSet<Symbol> = todo.iter().map(|&a| Symbol::Nt(a)).collect();
    while let Some(a) = todo.pop() {
        for &i in spec.rules_for(a) {
            for s in spec.rule(i).rhs() {
                if seen.insert(s) {
                    if let Symbol::Nt(b) = s {
                        todo.push(b);
                    }
                }
            }
        }
    }
    seen
}

impl Plausible {
    fn new(spec: &ApcpsSpec, cl: &Classification, k: usize, opts: AltOptions) -> Self {
        let mut p = Plausible {
            nt_cache: vec![],
            frame_cache: vec![],
            actnt_cache: HashMap::new(),
            act_cache: HashMap::new(),
            threads: Threads::new(spec, cl, k, opts.fold_commutative_heads),
            invariants: Invariants::default(),
            skeletons: HashSet::new(),
            act: BTreeSet::new(),
            actnt: BTreeSet::new(),
            frames: BTreeSet::new(),
            head_items: BTreeSet::new(),
            delayed_items: BTreeSet::new(),
            head_mixed: false,
            delayed_mixed: false,
        };
        let mut seeds = vec![];
        for r in spec.rules() {
            match *r {
                Rule::Simple { body: Some(a), .. } => {
                    p.act.insert(a);
                }
                Rule::TailCall { action, next, .. } => {
                    p.actnt.insert((action, next));
                }
                Rule::Call { second, .. } if cl.is_com_nt(second) => seeds.push(second),
                Rule::Call { second, .. } => {
                    p.frames.insert(second);
                }
                Rule::Simple { body: None, .. } => {}
            }
        }
        p.skeletons = p.threads.skeletons();
        p.invariants = Invariants::new(spec, cl, &p.threads.nodes);
        p.head_items = derivable(spec, seeds);
        p.delayed_items = p.head_items.clone();
        if opts.fold_commutative_heads {
            p.delayed_items.extend(derivable(spec, cl.com_nonterminals.iter().copied()));
        }
        p.cache_flow(spec, cl, opts);
        p.head_mixed = p.head_items.iter().any(|s| s.is_nt());
        p.delayed_mixed = p.delayed_items.iter().any(|s| s.is_nt());
        p
    }
}

impl Plausible {
    /// Propagates possible cache content along the steps that carry a cache
    /// from one head to the next.
    fn cache_flow(&mut self, spec: &ApcpsSpec, cl: &Classification, opts: AltOptions) {
        let n = spec.nonterminals().len();
        let images: Vec<BTreeSet<Symbol>> =
            spec.nt_ids().map(|c| if cl.is_com_nt(c) { derivable(spec, [c]) } else { BTreeSet::new() }).collect();
        let mut nt: Vec<BTreeSet<Symbol>> = vec![BTreeSet::new(); n];
        let mut frame: Vec<BTreeSet<Symbol>> = vec![BTreeSet::new(); n];
        let mut actnt: HashMap<(Action, NtId), BTreeSet<Symbol>> = HashMap::new();
        let mut act: HashMap<Action, BTreeSet<Symbol>> = HashMap::new();
        let grow = |dst: &mut BTreeSet<Symbol>, src: &BTreeSet<Symbol>| {
            let before = dst.len();
            dst.extend(src.iter().copied());
            dst.len() != before
        };
        let mut changed = true;
        while changed {
            changed = false;
            for r in spec.rules() {
                let here = nt[r.lhs().index()].clone();
                match *r {
                    Rule::Call { first, second, .. } if cl.is_com_nt(second) => {
                        let mut m = here;
                        m.extend(images[second.index()].iter().copied());
                        changed |= grow(&mut nt[first.index()], &m);
                    }
                    Rule::Call { second, .. } => changed |= grow(&mut frame[second.index()], &here),
                    Rule::TailCall { action, next, .. } => {
                        changed |= grow(actnt.entry((action, next)).or_default(), &here);
                        changed |= grow(&mut nt[next.index()], &here);
                    }
                    Rule::Simple { body: Some(a), .. } => changed |= grow(act.entry(a).or_default(), &here),
                    Rule::Simple { body: None, .. } => {}
                }
            }
            for x in 0..n {
                let f = frame[x].clone();
                changed |= grow(&mut nt[x], &f);
            }
        }
        if !opts.fold_commutative_heads {
            // Without folding, only the content reaching some delayed head matters.
            self.delayed_items = nt.iter().flatten().copied().collect();
        }
        self.nt_cache = nt;
        self.frame_cache = frame;
        self.actnt_cache = actnt;
        self.act_cache = act;
    }
}

/// Minimal caches whose content includes `r`: Mixed when `r` already has a
/// non-terminal, otherwise the `Any` pattern if some non-terminal could join.
fn min_caches(r: &Multiset<Symbol>, mixed: bool, non_term: bool) -> Vec<Cache> {
    let mut out = vec![if mixed && !r.any(|s| s.is_nt()) {
        Cache::with_sort(CacheSort::Any, r.clone())
    } else {
        Cache::of(r.clone())
    }];
    if non_term && r.all(|s| matches!(s, Symbol::Nt(_) | Symbol::Act(Action::Label(_)))) {
        out.push(Cache::non_term(r.clone()));
    }
    out
}

/// Whether `g` is below a freshly spawned process, and of which non-terminal.
fn fresh_target(g: &Control) -> Option<NtId> {
    match &g.head {
        Head::Nt(x, m) if g.stack.is_empty() && m.is_empty() && m.sort() != CacheSort::Mixed && m.sort() != CacheSort::NonTerm => {
            Some(*x)
        }
        _ => None,
    }
}

fn with_head(head: Head, stack: &[(NtId, Cache)]) -> Control {
    Control { head, stack: stack.to_vec() }
}

/// Candidate predecessor before plausibility filtering: other processes, the
/// acting control, channels and rule tag.
type Cand = (Multiset<Control>, Control, Vec<Multiset<MsgId>>, u8);

struct Node {
    cfg: AltConfig,
    sig: Sig,
    /// The element this one is a predecessor of.
    next: Option<usize>,
}

/// Necessary condition for `leq_config`: head shapes and channel contents
/// hashed into a bit set, plus the process and message counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Sig(u128, usize, usize);

impl Sig {
    fn of(c: &AltConfig) -> Sig {
        use std::hash::{Hash, Hasher};
        fn bit(x: impl Hash, lo: u64, span: u64) -> u128 {
            let mut h = std::collections::hash_map::DefaultHasher::new();
            x.hash(&mut h);
            1u128 << (lo + h.finish() % span)
        }
        let mut m = 0;
        for g in c.procs.distinct() {
            m |= bit(Skel::of(&g.head), 0, 96);
        }
        for (ci, q) in c.chans.iter().enumerate() {
            for msg in q.distinct() {
                m |= bit((ci, msg), 96, 32);
            }
        }
        Sig(m, c.procs.len(), c.chans.iter().map(|q| q.len()).sum())
    }

    fn below(self, other: Sig) -> bool {
        self.0 & !other.0 == 0 && self.1 <= other.1 && self.2 <= other.2
    }
}

/// Every element ever inserted, with the indices of the current minimal ones.
#[derive(Default)]
struct Antichain {
    arena: Vec<Node>,
    alive: Vec<bool>,
    live: Vec<usize>,
}

impl Antichain {
    fn insert(&mut self, cfg: AltConfig, next: Option<usize>) -> Option<usize> {
        let sig = Sig::of(&cfg);
        let arena = &self.arena;
        if self.live.iter().any(|&j| arena[j].sig.below(sig) && leq_config(&arena[j].cfg, &cfg)) {
            return None;
        }
        let alive = &mut self.alive;
        self.live.retain(|&j| {
            let keep = !(sig.below(arena[j].sig) && leq_config(&cfg, &arena[j].cfg));
            alive[j] &= keep;
            keep
        });
        self.arena.push(Node { cfg, sig, next });
        self.alive.push(true);
        self.live.push(self.arena.len() - 1);
        Some(self.arena.len() - 1)
    }
}

/// The backward procedure for one spec and stack bound.
pub struct Cover<'a> {
    sys: AltSystem<'a>,
    oracle: RefCell<DerivationOracle>,
    pair_memo: RefCell<HashMap<(Multiset<Symbol>, bool), Vec<OraclePair>>>,
    plaus: Plausible,
    calls_by_first: HashMap<NtId, Vec<(NtId, NtId)>>,
    tails: HashMap<(Action, NtId), Vec<NtId>>,
    simples: HashMap<Option<Action>, Vec<NtId>>,
}

impl<'a> Cover<'a> {
    pub fn new(spec: &'a ApcpsSpec, cl: &'a Classification, k: usize, opts: AltOptions) -> Result<Self, CoverError> {
        if k == 0 {
            return Err(CoverError::ZeroBound);
        }
        let mut calls_by_first: HashMap<NtId, Vec<(NtId, NtId)>> = HashMap::new();
        let mut tails: HashMap<(Action, NtId), Vec<NtId>> = HashMap::new();
        let mut simples: HashMap<Option<Action>, Vec<NtId>> = HashMap::new();
        for r in spec.rules() {
            match *r {
                Rule::Call { lhs, first, second } => calls_by_first.entry(first).or_default().push((lhs, second)),
                Rule::TailCall { lhs, action, next } => tails.entry((action, next)).or_default().push(lhs),
                Rule::Simple { lhs, body } => simples.entry(body).or_default().push(lhs),
            }
        }
        Ok(Cover {
            sys: AltSystem::new(spec, cl, k, opts),
            oracle: RefCell::new(DerivationOracle::new(spec, cl)?),
            pair_memo: RefCell::new(HashMap::new()),
            plaus: Plausible::new(spec, cl, k, opts),
            calls_by_first,
            tails,
            simples,
        })
    }

    pub fn system(&self) -> &AltSystem<'a> {
        &self.sys
    }

    pub fn oracle_queries(&self) -> usize {
        self.oracle.borrow().queries
    }

    fn pairs(&self, demand: &Multiset<Symbol>, terminal_only: bool, c: NtId) -> Vec<OraclePair> {
        let key = (demand.clone(), terminal_only);
        let mut memo = self.pair_memo.borrow_mut();
        let all = memo.entry(key).or_insert_with(|| self.oracle.borrow_mut().pairs(demand, terminal_only));
        all.iter().filter(|p| p.c == c).cloned().collect()
    }

    fn plausible(&self, g: &Control) -> bool {
        let p = &self.plaus;
        // A Mixed cache needs some non-terminal to be possible there.
        let fits = |m: &Cache, set: &BTreeSet<Symbol>| {
            m.items().distinct().all(|s| set.contains(s))
                && (m.sort() != CacheSort::Mixed || set.iter().any(|s| s.is_nt()))
        };
        let empty = BTreeSet::new();
        let head_ok = match &g.head {
            Head::Nt(a, m) => fits(m, &p.nt_cache[a.index()]),
            Head::ActNt(a, b, m) => p.actnt.contains(&(*a, *b)) && fits(m, p.actnt_cache.get(&(*a, *b)).unwrap_or(&empty)),
            Head::Act(a, m) => p.act.contains(a) && fits(m, p.act_cache.get(a).unwrap_or(&empty)),
            Head::Delayed(m) => fits(m, &p.delayed_items),
        };
        let frames: Vec<NtId> = g.stack.iter().map(|(x, _)| *x).collect();
        head_ok
            && g.depth() <= self.sys.k
            && p.skeletons.contains(&(Skel::of(&g.head), frames))
            && g.stack
                .iter()
                .all(|(x, m)| p.frames.contains(x) && m.sort() != CacheSort::NonTerm && fits(m, &p.frame_cache[x.index()]))
    }

    /// Minimal controls exposing `l`, each on its own.
    fn exposing(&self, l: LabelId) -> Vec<Control> {
        let a = Action::Label(l);
        let p = &self.plaus;
        let mut out = vec![];
        let empty = Multiset::new();
        for c in min_caches(&empty, p.head_mixed, false) {
            if p.act.contains(&a) {
                out.push(with_head(Head::Act(a, c.clone()), &[]));
            }
            for &(_, b) in p.actnt.range((a, NtId(0))..=(a, NtId(u16::MAX))) {
                out.push(with_head(Head::ActNt(a, b, c.clone()), &[]));
            }
        }
        for c in min_caches(&Multiset::singleton(Symbol::Act(a)), p.delayed_mixed, true) {
            out.push(with_head(Head::Delayed(c), &[]));
        }
        out.retain(|g| self.plausible(g));
        out
    }

    /// Minimal configurations exposing every queried label on distinct processes.
    pub fn target_basis(&self, query: &[LabelId]) -> Vec<AltConfig> {
        let chans = vec![Multiset::new(); self.sys.spec.channels().len()];
        let mut partial: Vec<Multiset<Control>> = vec![Multiset::new()];
        for &l in query {
            let forms = self.exposing(l);
            partial = partial.iter().flat_map(|m| forms.iter().map(move |g| m.with(g.clone()))).collect();
            partial.sort();
            partial.dedup();
        }
        let mut out: Vec<AltConfig> = Vec::new();
        for procs in partial {
            let c = AltConfig { procs, chans: chans.clone() };
            if !out.iter().any(|b| leq_config(b, &c)) {
                out.retain(|b| !leq_config(&c, b));
                out.push(c);
            }
        }
        out
    }

    /// Minimal predecessors of the upward closure of `b`, tagged with the rule
    /// that leads from each back into it.
    pub fn pred_basis(&self, b: &AltConfig) -> Vec<(AltConfig, u8)> {
        let mut cands: Vec<Cand> = vec![];
        for g_b in b.procs.distinct() {
            let rest = b.procs.without(g_b).expect("present");
            for (g, tag) in self.seq_pre(g_b) {
                cands.push((rest.clone(), g, b.chans.clone(), tag));
            }
            for (g, a) in self.fire_pre(g_b) {
                self.effect_pre(&rest, g, a, &b.chans, true, &mut cands);
            }
            self.dispatch_pre(Some(g_b), &rest, &b.chans, &mut cands);
        }
        for g in self.free_actors() {
            let a = match g.head {
                Head::Act(a, _) | Head::ActNt(a, _, _) => a,
                _ => unreachable!(),
            };
            self.effect_pre(&b.procs, g, a, &b.chans, false, &mut cands);
        }
        self.dispatch_pre(None, &b.procs, &b.chans, &mut cands);

        let mut seen = HashSet::new();
        let mut out = vec![];
        for (mut procs, g, chans, tag) in cands {
            if !self.plausible(&g) {
                continue;
            }
            procs.insert(g);
            if !self.plaus.threads.fits(&procs) {
                continue;
            }
            let p = AltConfig { procs, chans };
            if self.plaus.invariants.excludes(&p) {
                continue;
            }
            if leq_config(b, &p) || !seen.insert(p.clone()) {
                continue;
            }
            out.push((p, tag));
        }
        out
    }

    /// Controls `g` with a sequential step to something at least `g_b`.
    fn seq_pre(&self, g_b: &Control) -> Vec<(Control, u8)> {
        let cl = self.sys.cl;
        let st = &g_b.stack;
        let mut out = vec![];
        match &g_b.head {
            Head::Nt(bb, mb) => {
                for &(a, c) in self.calls_by_first.get(bb).into_iter().flatten() {
                    if cl.is_com_nt(c) {
                        for (m, _) in self.cache_pre(mb, c, self.plaus.head_mixed) {
                            out.push((with_head(Head::Nt(a, m), st), 7));
                        }
                    } else if mb.is_empty() && matches!(mb.sort(), CacheSort::Term | CacheSort::Any) {
                        match st.split_first() {
                            None => {
                                for m in min_caches(&Multiset::new(), self.plaus.head_mixed, false) {
                                    out.push((with_head(Head::Nt(a, m), &[]), 8));
                                }
                            }
                            Some(((x, mc), below)) if *x == c => out.push((with_head(Head::Nt(a, mc.clone()), below), 8)),
                            _ => {}
                        }
                    }
                }
            }
            Head::ActNt(act, bb, mb) => {
                for &a in self.tails.get(&(*act, *bb)).into_iter().flatten() {
                    out.push((with_head(Head::Nt(a, mb.clone()), st), 9));
                }
            }
            Head::Act(act, mb) => {
                for &a in self.simples.get(&Some(*act)).into_iter().flatten() {
                    out.push((with_head(Head::Nt(a, mb.clone()), st), 10));
                }
            }
            Head::Delayed(mb) if mb.sort() != CacheSort::NonTerm => {
                for &a in self.simples.get(&None).into_iter().flatten() {
                    out.push((with_head(Head::Nt(a, mb.clone()), st), 10));
                }
                if self.sys.opts.fold_commutative_heads {
                    for &a in &cl.com_nonterminals {
                        for (m, _) in self.cache_pre(mb, a, self.plaus.head_mixed) {
                            out.push((with_head(Head::Nt(a, m), st), 7));
                        }
                    }
                }
            }
            Head::Delayed(_) => {}
        }
        out
    }

    /// Minimal caches `M` such that `M ⊕ w ≥ target` for a derivation `c ⇒* w`.
    fn cache_pre(&self, target: &Cache, c: NtId, mixed: bool) -> Vec<(Cache, OraclePair)> {
        let items = target.items();
        let mut out = vec![];
        match target.sort() {
            CacheSort::NonTerm => {}
            CacheSort::Term => {
                for p in self.pairs(items, true, c) {
                    out.push((Cache::of(p.residual.clone()), p));
                }
            }
            CacheSort::Any => {
                for p in self.pairs(items, false, c) {
                    out.extend(min_caches(&p.residual, mixed, false).into_iter().map(|m| (m, p.clone())));
                }
            }
            // Some non-terminal of the target is covered by w, so any M will do.
            CacheSort::Mixed if items.any(|s| s.is_nt()) => {
                for p in self.pairs(items, false, c) {
                    out.extend(min_caches(&p.residual, mixed, false).into_iter().map(|m| (m, p.clone())));
                }
            }
            // A Mixed pattern: the non-terminal comes from M or from w.
            CacheSort::Mixed => {
                for p in self.pairs(items, false, c) {
                    out.push((Cache::with_sort(CacheSort::Mixed, p.residual.clone()), p));
                }
                for &y in &self.sys.cl.com_nonterminals {
                    for p in self.pairs(&items.with(Symbol::Nt(y)), false, c) {
                        if !p.residual.any(|s| s.is_nt()) {
                            out.push((Cache::of(p.residual.clone()), p));
                        }
                    }
                }
            }
        }
        out
    }

    /// Pending-action controls that fire into something at least `g_b`.
    fn fire_pre(&self, g_b: &Control) -> Vec<(Control, Action)> {
        let mut out = vec![];
        match &g_b.head {
            Head::Delayed(mb) if mb.sort() != CacheSort::NonTerm => {
                for &a in &self.plaus.act {
                    out.push((with_head(Head::Act(a, mb.clone()), &g_b.stack), a));
                }
            }
            Head::Nt(bb, mb) => {
                for &(a, b) in &self.plaus.actnt {
                    if b == *bb {
                        out.push((with_head(Head::ActNt(a, b, mb.clone()), &g_b.stack), a));
                    }
                }
            }
            _ => {}
        }
        out
    }

    /// Minimal pending sends and spawns whose result need not be matched.
    fn free_actors(&self) -> Vec<Control> {
        let useful = |a: &Action| matches!(a, Action::Send(..) | Action::Spawn(_));
        let mut out = vec![];
        for c in min_caches(&Multiset::new(), self.plaus.head_mixed, false) {
            for &a in self.plaus.act.iter().filter(|a| useful(a)) {
                out.push(with_head(Head::Act(a, c.clone()), &[]));
            }
            for &(a, b) in self.plaus.actnt.iter().filter(|(a, _)| useful(a)) {
                out.push(with_head(Head::ActNt(a, b, c.clone()), &[]));
            }
        }
        out
    }

    fn effect_pre(
        &self,
        rest: &Multiset<Control>,
        g: Control,
        a: Action,
        chans: &[Multiset<MsgId>],
        matched: bool,
        out: &mut Vec<Cand>,
    ) {
        match a {
            Action::Recv(c, m) if matched => {
                let mut ch = chans.to_vec();
                ch[c.index()].insert(m);
                out.push((rest.clone(), g, ch, 12));
            }
            Action::Label(_) if matched => out.push((rest.clone(), g, chans.to_vec(), 15)),
            Action::Send(c, m) => {
                let mut ch = chans.to_vec();
                let had = ch[c.index()].remove_one(&m);
                if matched || had {
                    out.push((rest.clone(), g, ch, 14));
                }
            }
            Action::Spawn(x) => {
                if matched {
                    out.push((rest.clone(), g.clone(), chans.to_vec(), 13));
                }
                for q in rest.distinct().filter(|q| fresh_target(q) == Some(x)) {
                    out.push((rest.without(q).expect("present"), g.clone(), chans.to_vec(), 13));
                }
            }
            _ => {}
        }
    }

    /// Ways a dispatched cache can account for part of `rest ◁ chans`: the
    /// cache content, the processes and channels left to explain.
    fn attributions(
        &self,
        rest: &Multiset<Control>,
        chans: &[Multiset<MsgId>],
    ) -> Vec<(Multiset<Symbol>, Multiset<Control>, Vec<Multiset<MsgId>>)> {
        let items = &self.plaus.delayed_items;
        let mut acc: Vec<(Multiset<Symbol>, Vec<Multiset<MsgId>>)> = vec![(Multiset::new(), chans.to_vec())];
        for (ci, q) in chans.iter().enumerate() {
            let c = crate::model::ChanId(ci as u16);
            let sendable = q.restrict(|m| items.contains(&Symbol::Act(Action::Send(c, *m))));
            if sendable.is_empty() {
                continue;
            }
            let subs = sendable.sub_multisets();
            acc = acc
                .iter()
                .flat_map(|(its, ch)| {
                    subs.iter().map(move |s| {
                        let mut ch = ch.clone();
                        ch[ci] = ch[ci].monus(s);
                        (its.sum(&s.map(|m| Symbol::Act(Action::Send(c, *m)))), ch)
                    })
                })
                .collect();
        }
        let spawnable = rest.restrict(|g| fresh_target(g).is_some_and(|x| items.contains(&Symbol::Act(Action::Spawn(x)))));
        let mut out = vec![];
        for sp in spawnable.sub_multisets() {
            let spawned = sp.map(|g| Symbol::Act(Action::Spawn(fresh_target(g).expect("fresh"))));
            let left = rest.monus(&sp);
            for (its, ch) in &acc {
                out.push((its.sum(&spawned), left.clone(), ch.clone()));
            }
        }
        out
    }

    fn dispatch_pre(&self, g_b: Option<&Control>, rest: &Multiset<Control>, chans: &[Multiset<MsgId>], out: &mut Vec<Cand>) {
        let ext = self.sys.opts.dispatch_term_caches;
        let is_label = |s: &Symbol| matches!(s, Symbol::Act(Action::Label(_)));
        match g_b.map(|g| (&g.head, &g.stack)) {
            Some((Head::Nt(x, m1), stack)) if self.plaus.frames.contains(x) => {
                for (its, left, ch) in self.attributions(rest, chans) {
                    let mut st = vec![(*x, m1.clone())];
                    st.extend(stack.iter().cloned());
                    out.push((left, Control { head: Head::Delayed(Cache::of(its)), stack: st }, ch, 16));
                }
            }
            Some((Head::Delayed(mb), stack)) if mb.sort() == CacheSort::NonTerm => {
                for (its, left, ch) in self.attributions(rest, chans) {
                    let content = mb.items().sum(&its);
                    let term_too = ext && mb.items().all(is_label);
                    let sort = match (term_too, self.plaus.delayed_mixed) {
                        (true, true) => Some(CacheSort::Any),
                        (true, false) => Some(CacheSort::Term),
                        (false, true) => Some(CacheSort::Mixed),
                        (false, false) => None,
                    };
                    if let Some(sort) = sort {
                        out.push((left, with_head(Head::Delayed(Cache::with_sort(sort, content)), stack), ch, 17));
                    }
                }
            }
            Some(_) => {}
            None => {
                for (its, left, ch) in self.attributions(rest, chans) {
                    if its.is_empty() {
                        continue;
                    }
                    if ext {
                        let sort = if self.plaus.delayed_mixed { CacheSort::Any } else { CacheSort::Term };
                        out.push((left, with_head(Head::Delayed(Cache::with_sort(sort, its)), &[]), ch, 17));
                    } else {
                        if self.plaus.delayed_mixed {
                            let c = Cache::with_sort(CacheSort::Mixed, its.clone());
                            out.push((left.clone(), with_head(Head::Delayed(c), &[]), ch.clone(), 17));
                        }
                        for &x in &self.plaus.frames {
                            for m in min_caches(&Multiset::new(), self.plaus.head_mixed, false) {
                                let g = Control { head: Head::Delayed(Cache::of(its.clone())), stack: vec![(x, m)] };
                                out.push((left.clone(), g, ch.clone(), 16));
                            }
                        }
                    }
                }
            }
        }
    }

    /// Derivation images that let heads of `x` grow caches towards `target`.
    fn targeted_images(&self, x: &AltConfig, target: &AltConfig) -> HashMap<NtId, Vec<Multiset<Symbol>>> {
        let cl = self.sys.cl;
        let mut wanted: BTreeSet<(NtId, Multiset<Symbol>, bool)> = BTreeSet::new();
        for g in x.procs.distinct() {
            let Head::Nt(a, m) = &g.head else { continue };
            let mut want = |c: NtId, mt: &Cache| match mt.sort() {
                CacheSort::Term if m.sort() == CacheSort::Term => {
                    wanted.insert((c, mt.items().monus(m.items()), true));
                }
                CacheSort::Any => {
                    wanted.insert((c, mt.items().monus(m.items()), false));
                }
                CacheSort::Mixed => {
                    let t = mt.items().monus(m.items());
                    if m.sort() == CacheSort::Term && !t.any(|s| s.is_nt()) {
                        for &y in &cl.com_nonterminals {
                            wanted.insert((c, t.with(Symbol::Nt(y)), false));
                        }
                    }
                    wanted.insert((c, t, false));
                }
                _ => {}
            };
            for h in target.procs.distinct() {
                match &h.head {
                    Head::Nt(bb, mt) => {
                        for &i in self.sys.spec.rules_for(*a) {
                            if let Rule::Call { first, second, .. } = *self.sys.spec.rule(i) {
                                if first == *bb && cl.is_com_nt(second) {
                                    want(second, mt);
                                }
                            }
                        }
                    }
                    Head::Delayed(mt) if self.sys.opts.fold_commutative_heads && cl.is_com_nt(*a) => want(*a, mt),
                    _ => {}
                }
            }
        }
        let mut out: HashMap<NtId, Vec<Multiset<Symbol>>> = HashMap::new();
        let mut oracle = self.oracle.borrow_mut();
        for (c, t, term) in wanted {
            if let Some((_, w)) = oracle.derivation(c, &t, term) {
                out.entry(c).or_default().push(w);
            }
        }
        out
    }

    /// A single step from `x` to a configuration at least `target`, if any.
    /// Targeted derivation images are tried before the enumerated ones.
    pub fn step_towards(&self, x: &AltConfig, target: &AltConfig) -> Option<(AltMove, AltConfig)> {
        let extra = self.targeted_images(x, target);
        let targeted = |c: NtId| extra.get(&c).cloned().unwrap_or_default();
        let enumerated = |c: NtId| self.sys.images(c).to_vec();
        let passes: [&dyn Fn(NtId) -> Vec<Multiset<Symbol>>; 2] = [&targeted, &enumerated];
        for images in passes {
            let mut base = 0;
            for (g, n) in x.procs.iter() {
                for s in self.sys.local_steps_capped(g, &x.chans, images) {
                    let rule = s.rule;
                    let next = AltSystem::apply(x, g, s);
                    if leq_config(target, &next) {
                        return Some((AltMove { rule, process: base }, next));
                    }
                }
                base += n as usize;
            }
        }
        None
    }

    /// Saturates backwards from the query until the initial configuration is
    /// covered or the basis is stable.
    pub fn run(&self, query: &[LabelId], opts: &CoverOptions) -> Result<Decision, CoverError> {
        if query.is_empty() {
            return Err(CoverError::EmptyQuery);
        }
        let init = AltConfig::initial(self.sys.spec);
        let mut ac = Antichain::default();
        let mut frontier = vec![];
        let mut found = None;
        for t in self.target_basis(query) {
            if let Some(i) = ac.insert(t, None) {
                frontier.push(i);
                if found.is_none() && leq_config(&ac.arena[i].cfg, &init) {
                    found = Some(i);
                }
            }
        }
        let (mut iterations, mut predecessors, mut checks) = (0, 0, 0);
        'saturate: while found.is_none() && !frontier.is_empty() {
            iterations += 1;
            let mut next = vec![];
            for i in std::mem::take(&mut frontier) {
                if !ac.alive[i] {
                    continue;
                }
                let b = ac.arena[i].cfg.clone();
                for (p, _) in self.pred_basis(&b) {
                    predecessors += 1;
                    if opts.check_soundness {
                        checks += 1;
                        if instantiations(&p).iter().any(|x| self.step_towards(x, &b).is_none()) {
                            return Err(CoverError::Unsound(format!(
                                "{} does not step above {}",
                                p.show(self.sys.spec),
                                b.show(self.sys.spec)
                            )));
                        }
                    }
                    if let Some(j) = ac.insert(p, Some(i)) {
                        next.push(j);
                        if leq_config(&ac.arena[j].cfg, &init) {
                            found = Some(j);
                            break 'saturate;
                        }
                    }
                }
                if ac.live.len() > opts.max_basis {
                    return Err(CoverError::BasisLimit(opts.max_basis));
                }
            }
            frontier = next;
        }
        let arena = &ac.arena;
        let basis_size = ac.live.len();
        let witness = match found {
            Some(j) if opts.witness => Some(self.replay(arena, j, query)?),
            _ => None,
        };
        Ok(Decision {
            covered: found.is_some(),
            k: self.sys.k,
            iterations,
            basis_size,
            predecessors,
            soundness_checks: checks,
            oracle_queries: self.oracle_queries(),
            witness,
        })
    }

    fn replay(&self, arena: &[Node], start: usize, query: &[LabelId]) -> Result<Witness, CoverError> {
        let mut x = AltConfig::initial(self.sys.spec);
        let mut configs = vec![x.clone()];
        let mut trace = vec![];
        let mut at = arena[start].next;
        while let Some(i) = at {
            let (mv, next) = self
                .step_towards(&x, &arena[i].cfg)
                .ok_or_else(|| CoverError::Unsound(format!("no step from {}", x.show(self.sys.spec))))?;
            trace.push(TraceStep { rule: mv.rule, process: mv.process, digest: digest(&next) });
            configs.push(next.clone());
            x = next;
            at = arena[i].next;
        }
        if !x.exposes(query) {
            return Err(CoverError::Unsound("witness does not expose the query".into()));
        }
        Ok(Witness { trace, configs })
    }
}

/// Term and Mixed readings of every `Any` cache in `p`.
fn instantiations(p: &AltConfig) -> Vec<AltConfig> {
    let read = |m: &Cache| -> Vec<Cache> {
        if m.sort() == CacheSort::Any {
            vec![Cache::of(m.items().clone()), Cache::with_sort(CacheSort::Mixed, m.items().clone())]
        } else {
            vec![m.clone()]
        }
    };
    let control = |g: &Control| -> Vec<Control> {
        let mut out: Vec<Control> = read(g.head.cache()).into_iter().map(|m| Control { head: g.head.with_cache(m), stack: vec![] }).collect();
        for (x, m) in &g.stack {
            out = out
                .iter()
                .flat_map(|h| read(m).into_iter().map(move |m| {
                    let mut h = h.clone();
                    h.stack.push((*x, m));
                    h
                }))
                .collect();
        }
        out
    };
    let mut out = vec![AltConfig { procs: Multiset::new(), chans: p.chans.clone() }];
    for g in p.procs.elements() {
        let gs = control(g);
        out = out.iter().flat_map(|c| gs.iter().map(move |g| AltConfig { procs: c.procs.with(g.clone()), chans: c.chans.clone() })).collect();
    }
    out
}

/// Shape check, bound selection and backward search in one call.
pub fn backward_cover(
    spec: &ApcpsSpec,
    cl: &Classification,
    query: &[LabelId],
    opts: &CoverOptions,
) -> Result<Decision, CoverError> {
    let k = shaped_bound(spec, cl, opts.k)?;
    Cover::new(spec, cl, k, opts.alt)?.run(query, opts)
}

/// Forward breadth-first search of the cache semantics for the query.
pub fn forward_witness(
    spec: &ApcpsSpec,
    cl: &Classification,
    query: &[LabelId],
    opts: &CoverOptions,
    bounds: Bounds,
) -> Result<Exploration<AltConfig>, CoverError> {
    let k = shaped_bound(spec, cl, opts.k)?;
    Ok(AltSystem::new(spec, cl, k, opts.alt).explore(bounds, query)?)
}

/// The stack bound to run with: the override if given, else the derived one.
/// Refuses unshaped specs.
pub fn shaped_bound(spec: &ApcpsSpec, cl: &Classification, k: Option<usize>) -> Result<usize, CoverError> {
    let report = check_shaped(spec, cl);
    if !report.shaped {
        return Err(CoverError::NotShaped(report.describe_violation(spec).unwrap_or_default()));
    }
    let k = k.or(report.k).expect("shaped specs have a bound");
    if k == 0 {
        return Err(CoverError::ZeroBound);
    }
    Ok(k)
}
