use super::standard::show_chans;
use super::{bfs, labels_matched, Bounds, Exploration};
use crate::model::{Action, ApcpsSpec, Classification, LabelId, MsgId, NtId, Rule, Symbol};
use crate::multiset::Multiset;
use serde::Serialize;
use std::collections::{HashSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("stack bound k={k} exceeded (depth {depth})")]
    StackBoundExceeded { k: usize, depth: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CacheSort {
    Term,
    Mixed,
    NonTerm,
    /// Only in bases of upward-closed sets: every Term or Mixed cache
    /// containing the content. No step applies to it.
    Any,
}

/// A multiset of precomputed commutative effects, tagged with its sort.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cache {
    sort: CacheSort,
    items: Multiset<Symbol>,
}

impl Default for Cache {
    fn default() -> Self {
        Cache::empty()
    }
}

impl Cache {
    pub fn empty() -> Self {
        Cache { sort: CacheSort::Term, items: Multiset::new() }
    }

    /// Term when the content has no non-terminal, Mixed otherwise.
    pub fn of(items: Multiset<Symbol>) -> Self {
        let sort = if items.any(|s| s.is_nt()) { CacheSort::Mixed } else { CacheSort::Term };
        Cache { sort, items }
    }

    /// A cache that has already dispatched its actions. It may be empty.
    pub fn non_term(items: Multiset<Symbol>) -> Self {
        Cache { sort: CacheSort::NonTerm, items }
    }

    /// Builds a cache of the given sort as is. A Mixed cache without a
    /// non-terminal stands for every Mixed cache containing its content.
    pub fn with_sort(sort: CacheSort, items: Multiset<Symbol>) -> Self {
        if sort == CacheSort::NonTerm {
            Cache::non_term(items)
        } else {
            Cache { sort, items }
        }
    }

    /// `M ⊕ w`. A Mixed cache stays Mixed.
    pub fn extend(&self, w: &Multiset<Symbol>) -> Self {
        let items = self.items.sum(w);
        if matches!(self.sort, CacheSort::Mixed | CacheSort::Any) {
            Cache { sort: self.sort, items }
        } else {
            Cache::of(items)
        }
    }

    pub fn sort(&self) -> CacheSort {
        self.sort
    }

    pub fn items(&self) -> &Multiset<Symbol> {
        &self.items
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Sort/content invariants.
    pub fn is_well_formed(&self, cl: &Classification) -> bool {
        if !self.items.all(|s| cl.is_com(*s)) {
            return false;
        }
        match self.sort {
            CacheSort::Term => !self.items.any(|s| s.is_nt()),
            CacheSort::Mixed => self.items.any(|s| s.is_nt()),
            CacheSort::NonTerm => {
                self.items.all(|s| matches!(s, Symbol::Nt(_) | Symbol::Act(Action::Label(_))))
            }
            CacheSort::Any => false,
        }
    }

    pub fn contains_label(&self, l: LabelId) -> bool {
        self.items.contains(&Symbol::Act(Action::Label(l)))
    }

    pub fn show(&self, spec: &ApcpsSpec) -> String {
        let items: Vec<String> = self.items.elements().map(|s| spec.show_symbol(*s)).collect();
        format!("{{{}}}:{:?}", items.join(","), self.sort)
    }
}

/// The control-state part of a process.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Head {
    Nt(NtId, Cache),
    ActNt(Action, NtId, Cache),
    Act(Action, Cache),
    Delayed(Cache),
}

impl Head {
    pub fn cache(&self) -> &Cache {
        match self {
            Head::Nt(_, c) | Head::ActNt(_, _, c) | Head::Act(_, c) | Head::Delayed(c) => c,
        }
    }

    pub fn with_cache(&self, cache: Cache) -> Head {
        match *self {
            Head::Nt(a, _) => Head::Nt(a, cache),
            Head::ActNt(a, b, _) => Head::ActNt(a, b, cache),
            Head::Act(a, _) => Head::Act(a, cache),
            Head::Delayed(_) => Head::Delayed(cache),
        }
    }
}

/// A head over a call stack of non-commutative frames, top frame first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Control {
    pub head: Head,
    pub stack: Vec<(NtId, Cache)>,
}

impl Control {
    /// A freshly spawned process `X`.
    pub fn fresh(x: NtId) -> Self {
        Control { head: Head::Nt(x, Cache::empty()), stack: vec![] }
    }

    /// Non-commutative frames including the control position.
    pub fn depth(&self) -> usize {
        self.stack.len() + 1
    }

    /// The label is the pending action, or sits in a delayed cache.
    pub fn exposes(&self, l: LabelId) -> bool {
        match &self.head {
            Head::Act(a, _) | Head::ActNt(a, _, _) => *a == Action::Label(l),
            Head::Delayed(c) => c.contains_label(l),
            Head::Nt(..) => false,
        }
    }

    pub fn show(&self, spec: &ApcpsSpec) -> String {
        let head = match &self.head {
            Head::Nt(a, c) => format!("NT({},{})", spec.nt_name(*a), c.show(spec)),
            Head::ActNt(a, b, c) => format!("ActNT({},{},{})", spec.show_action(*a), spec.nt_name(*b), c.show(spec)),
            Head::Act(a, c) => format!("Act({},{})", spec.show_action(*a), c.show(spec)),
            Head::Delayed(c) => format!("Delayed({})", c.show(spec)),
        };
        if self.stack.is_empty() {
            format!("<{head}>")
        } else {
            let frames: Vec<String> =
                self.stack.iter().map(|(x, c)| format!("({},{})", spec.nt_name(*x), c.show(spec))).collect();
            format!("<{head} {}>", frames.join(" "))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AltConfig {
    pub procs: Multiset<Control>,
    pub chans: Vec<Multiset<MsgId>>,
}

impl AltConfig {
    /// `NT(S,∅) ◁ ∅`.
    pub fn initial(spec: &ApcpsSpec) -> Self {
        AltConfig {
            procs: Multiset::singleton(Control::fresh(spec.start())),
            chans: vec![Multiset::new(); spec.channels().len()],
        }
    }

    pub fn exposes(&self, query: &[LabelId]) -> bool {
        let procs: Vec<&Control> = self.procs.elements().collect();
        labels_matched(&procs, query, |g, l| g.exposes(l))
    }

    pub fn max_depth(&self) -> usize {
        self.procs.distinct().map(Control::depth).max().unwrap_or(0)
    }

    pub fn show(&self, spec: &ApcpsSpec) -> String {
        let procs: Vec<String> = self.procs.elements().map(|g| g.show(spec)).collect();
        format!("{} |> {}", procs.join(" || "), show_chans(spec, &self.chans))
    }
}

/// Switches for the two rules added on top of the literal rule set, and the
/// bounds on forward enumeration of commutative derivations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AltOptions {
    /// `Delayed(M:Term)γ → Delayed(M↾L:NonTerm)γ`, dispatching sends and
    /// spawns, whether or not a frame lies below.
    pub dispatch_term_caches: bool,
    /// `NT(A,M)γ → Delayed(M ⊕ 𝕄(w))γ` for commutative `A` deriving `w`.
    pub fold_commutative_heads: bool,
    /// Derivation steps explored per commutative non-terminal.
    pub derivation_bound: usize,
    /// Maximum number of Parikh images kept per commutative non-terminal.
    pub max_images: usize,
}

impl Default for AltOptions {
    fn default() -> Self {
        AltOptions { dispatch_term_caches: true, fold_commutative_heads: true, derivation_bound: 64, max_images: 256 }
    }
}

impl AltOptions {
    /// Only the rules as originally stated.
    pub fn literal() -> Self {
        AltOptions { dispatch_term_caches: false, fold_commutative_heads: false, ..Self::default() }
    }
}

/// A move of the concurrent semantics, by rule tag and acting process.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AltMove {
    pub rule: u8,
    pub process: usize,
}

/// Result of one local step of a single control.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalStep {
    pub rule: u8,
    pub next: Control,
    pub chans: Vec<Multiset<MsgId>>,
    pub spawned: Vec<Control>,
}

/// The cache semantics for one spec at a fixed stack bound.
#[derive(Clone, Debug)]
pub struct AltSystem<'a> {
    pub spec: &'a ApcpsSpec,
    pub cl: &'a Classification,
    pub k: usize,
    pub opts: AltOptions,
    images: Vec<Vec<Multiset<Symbol>>>,
}

impl<'a> AltSystem<'a> {
    pub fn new(spec: &'a ApcpsSpec, cl: &'a Classification, k: usize, opts: AltOptions) -> Self {
        let images = spec
            .nt_ids()
            .map(|c| if cl.is_com_nt(c) { derive_images(spec, c, opts) } else { vec![] })
            .collect();
        AltSystem { spec, cl, k, opts, images }
    }

    /// Enumerated Parikh images of sentential forms derivable from `c`.
    pub fn images(&self, c: NtId) -> &[Multiset<Symbol>] {
        self.images.get(c.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Local steps of `g`, with commutative derivations drawn from `images`.
    pub fn local_steps_with(
        &self,
        g: &Control,
        chans: &[Multiset<MsgId>],
        images: &dyn Fn(NtId) -> Vec<Multiset<Symbol>>,
    ) -> Result<Vec<LocalStep>, SemanticsError> {
        self.local_steps_inner(g, chans, images, true)
    }

    /// Like [`Self::local_steps_with`], but a push past the bound is simply
    /// not offered.
    pub(crate) fn local_steps_capped(
        &self,
        g: &Control,
        chans: &[Multiset<MsgId>],
        images: &dyn Fn(NtId) -> Vec<Multiset<Symbol>>,
    ) -> Vec<LocalStep> {
        self.local_steps_inner(g, chans, images, false).expect("capped steps never fail")
    }

    fn local_steps_inner(
        &self,
        g: &Control,
        chans: &[Multiset<MsgId>],
        images: &dyn Fn(NtId) -> Vec<Multiset<Symbol>>,
        strict: bool,
    ) -> Result<Vec<LocalStep>, SemanticsError> {
        let mut out = Vec::new();
        let same = |rule, head: Head, stack: Vec<(NtId, Cache)>| LocalStep {
            rule,
            next: Control { head, stack },
            chans: chans.to_vec(),
            spawned: vec![],
        };
        match &g.head {
            Head::Nt(a, m) => {
                for &i in self.spec.rules_for(*a) {
                    match *self.spec.rule(i) {
                        Rule::Call { first, second, .. } if self.cl.is_com_nt(second) => {
                            for w in images(second) {
                                let cache = m.extend(&w);
                                out.push(same(7, Head::Nt(first, cache), g.stack.clone()));
                            }
                        }
                        Rule::Call { first, second, .. } => {
                            let mut stack = Vec::with_capacity(g.stack.len() + 1);
                            stack.push((second, m.clone()));
                            stack.extend(g.stack.iter().cloned());
                            if stack.len() + 1 > self.k {
                                if !strict {
                                    continue;
                                }
                                return Err(SemanticsError::StackBoundExceeded { k: self.k, depth: stack.len() + 1 });
                            }
                            out.push(same(8, Head::Nt(first, Cache::empty()), stack));
                        }
                        Rule::TailCall { action, next, .. } => {
                            out.push(same(9, Head::ActNt(action, next, m.clone()), g.stack.clone()))
                        }
                        Rule::Simple { body: Some(action), .. } => {
                            out.push(same(10, Head::Act(action, m.clone()), g.stack.clone()))
                        }
                        Rule::Simple { body: None, .. } => {
                            out.push(same(10, Head::Delayed(m.clone()), g.stack.clone()))
                        }
                    }
                }
                if self.opts.fold_commutative_heads && self.cl.is_com_nt(*a) {
                    for w in images(*a) {
                        out.push(same(7, Head::Delayed(m.extend(&w)), g.stack.clone()));
                    }
                }
            }
            Head::ActNt(action, b, m) => {
                let next = Control { head: Head::Nt(*b, m.clone()), stack: g.stack.clone() };
                out.extend(fire(*action, next, chans));
            }
            Head::Act(action, m) => {
                let next = Control { head: Head::Delayed(m.clone()), stack: g.stack.clone() };
                out.extend(fire(*action, next, chans));
            }
            Head::Delayed(m) => match m.sort {
                CacheSort::Term => {
                    if let Some(((x, m1), rest)) = g.stack.split_first() {
                        let mut chans = chans.to_vec();
                        let mut spawned = vec![];
                        dispatch(&m.items, &mut chans, &mut spawned);
                        out.push(LocalStep {
                            rule: 16,
                            next: Control { head: Head::Nt(*x, m1.clone()), stack: rest.to_vec() },
                            chans,
                            spawned,
                        });
                    }
                    if self.opts.dispatch_term_caches {
                        let mut chans = chans.to_vec();
                        let mut spawned = vec![];
                        dispatch(&m.items, &mut chans, &mut spawned);
                        let kept = m.items.restrict(|s| matches!(s, Symbol::Act(Action::Label(_))));
                        out.push(LocalStep {
                            rule: 17,
                            next: Control { head: Head::Delayed(Cache::non_term(kept)), stack: g.stack.clone() },
                            chans,
                            spawned,
                        });
                    }
                }
                CacheSort::Mixed => {
                    let mut chans = chans.to_vec();
                    let mut spawned = vec![];
                    dispatch(&m.items, &mut chans, &mut spawned);
                    let kept = m.items.restrict(|s| matches!(s, Symbol::Nt(_) | Symbol::Act(Action::Label(_))));
                    out.push(LocalStep {
                        rule: 17,
                        next: Control { head: Head::Delayed(Cache::non_term(kept)), stack: g.stack.clone() },
                        chans,
                        spawned,
                    });
                }
                CacheSort::NonTerm | CacheSort::Any => {}
            },
        }
        Ok(out)
    }

    pub fn local_steps(&self, g: &Control, chans: &[Multiset<MsgId>]) -> Result<Vec<LocalStep>, SemanticsError> {
        self.local_steps_with(g, chans, &|c| self.images(c).to_vec())
    }

    /// Successor configurations of `cfg` when process `g` takes local step `s`.
    pub fn apply(cfg: &AltConfig, g: &Control, s: LocalStep) -> AltConfig {
        let mut procs = cfg.procs.without(g).expect("acting process present");
        procs.insert(s.next);
        for x in s.spawned {
            procs.insert(x);
        }
        AltConfig { procs, chans: s.chans }
    }

    pub fn successors(&self, cfg: &AltConfig) -> Result<Vec<(AltMove, AltConfig)>, SemanticsError> {
        let mut out = Vec::new();
        let mut base = 0;
        for (g, n) in cfg.procs.iter() {
            for s in self.local_steps(g, &cfg.chans)? {
                let rule = s.rule;
                out.push((AltMove { rule, process: base }, Self::apply(cfg, g, s)));
            }
            base += n as usize;
        }
        out.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.rule.cmp(&b.0.rule)));
        out.dedup_by(|a, b| a.1 == b.1);
        Ok(out)
    }

    /// All one-step successors, sorted and without duplicates.
    pub fn step(&self, cfg: &AltConfig) -> Result<Vec<AltConfig>, SemanticsError> {
        Ok(self.successors(cfg)?.into_iter().map(|(_, c)| c).collect())
    }

    pub fn explore(&self, bounds: Bounds, query: &[LabelId]) -> Result<Exploration<AltConfig>, SemanticsError> {
        self.explore_from(AltConfig::initial(self.spec), bounds, |c| c.exposes(query))
    }

    pub fn explore_from(
        &self,
        init: AltConfig,
        bounds: Bounds,
        goal: impl FnMut(&AltConfig) -> bool,
    ) -> Result<Exploration<AltConfig>, SemanticsError> {
        bfs(
            init,
            bounds,
            |c| Ok(self.successors(c)?.into_iter().map(|(m, c)| ((m.rule, m.process), c)).collect()),
            goal,
        )
    }
}

/// Makes the sends and spawns of a cache effective.
pub(crate) fn dispatch(items: &Multiset<Symbol>, chans: &mut [Multiset<MsgId>], spawned: &mut Vec<Control>) {
    for (s, n) in items.iter() {
        match s {
            Symbol::Act(Action::Send(c, m)) => chans[c.index()].insert_n(*m, n),
            Symbol::Act(Action::Spawn(x)) => spawned.extend(std::iter::repeat_n(Control::fresh(*x), n as usize)),
            _ => {}
        }
    }
}

fn fire(action: Action, next: Control, chans: &[Multiset<MsgId>]) -> Option<LocalStep> {
    let mut chans = chans.to_vec();
    let mut spawned = vec![];
    let rule = match action {
        Action::Recv(c, m) => {
            if !chans[c.index()].remove_one(&m) {
                return None;
            }
            12
        }
        Action::Spawn(x) => {
            spawned.push(Control::fresh(x));
            13
        }
        Action::Send(c, m) => {
            chans[c.index()].insert(m);
            14
        }
        Action::Label(_) => 15,
    };
    Some(LocalStep { rule, next, chans, spawned })
}

/// Breadth-first enumeration of Parikh images of sentential forms of `c`.
fn derive_images(spec: &ApcpsSpec, c: NtId, opts: AltOptions) -> Vec<Multiset<Symbol>> {
    let start = Multiset::singleton(Symbol::Nt(c));
    let mut seen = HashSet::from([start.clone()]);
    let mut out = vec![start.clone()];
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some((m, d)) = queue.pop_front() {
        if d >= opts.derivation_bound {
            continue;
        }
        for a in m.distinct().filter_map(|s| s.as_nt()) {
            let rest = m.without(&Symbol::Nt(a)).expect("present");
            for &i in spec.rules_for(a) {
                let next = rest.sum(&spec.rule(i).rhs().into_iter().collect());
                if seen.insert(next.clone()) {
                    if out.len() >= opts.max_images {
                        return out;
                    }
                    out.push(next.clone());
                    queue.push_back((next, d + 1));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_shaped, classify, parse_spec};

    fn sys_for(text: &str) -> (ApcpsSpec, Classification, usize) {
        let spec = parse_spec(text).unwrap();
        let cl = classify(&spec);
        let k = check_shaped(&spec, &cl).k.unwrap();
        (spec, cl, k)
    }

    #[test]
    fn term_cache_dispatches_into_the_frame_below() {
        let (spec, cl, _) = sys_for("channels c\nmessages m\nstart X\nrule X -> recv c m");
        let sys = AltSystem::new(&spec, &cl, 2, AltOptions::literal());
        let (c, m, x) = (spec.chan_id("c").unwrap(), spec.msg_id("m").unwrap(), spec.nt_id("X").unwrap());
        let send = Symbol::Act(Action::Send(c, m));
        let g = Control { head: Head::Delayed(Cache::of(Multiset::singleton(send))), stack: vec![(x, Cache::empty())] };
        let cfg = AltConfig { procs: Multiset::singleton(g), chans: vec![Multiset::new()] };
        let want = AltConfig { procs: Multiset::singleton(Control::fresh(x)), chans: vec![Multiset::singleton(m)] };
        assert_eq!(sys.step(&cfg).unwrap(), vec![want]);
    }

    #[test]
    fn mixed_cache_dispatches_and_blocks() {
        let (spec, cl, _) = sys_for("labels t\nstart Y\nrule Y -> eps\nrule B -> label t B");
        let sys = AltSystem::new(&spec, &cl, 1, AltOptions::literal());
        let (y, b) = (spec.nt_id("Y").unwrap(), spec.nt_id("B").unwrap());
        let items: Multiset<Symbol> = [Symbol::Act(Action::Spawn(y)), Symbol::Nt(b)].into_iter().collect();
        let g = Control { head: Head::Delayed(Cache::of(items)), stack: vec![] };
        let cfg = AltConfig { procs: Multiset::singleton(g), chans: vec![] };
        let blocked = Control { head: Head::Delayed(Cache::non_term(Multiset::singleton(Symbol::Nt(b)))), stack: vec![] };
        let want = AltConfig { procs: [blocked.clone(), Control::fresh(y)].into_iter().collect(), chans: vec![] };
        assert_eq!(sys.step(&cfg).unwrap(), vec![want.clone()]);
        let after: Vec<_> = sys.step(&want).unwrap();
        assert!(after.iter().all(|c| c.procs.contains(&blocked)));
    }

    #[test]
    fn non_commutative_call_pushes_a_frame() {
        let (spec, cl, k) =
            sys_for("channels c\nmessages m\nstart A\nrule A -> B C\nrule B -> send c m\nrule C -> recv c m");
        assert_eq!(k, 2);
        let sys = AltSystem::new(&spec, &cl, k, AltOptions::default());
        let (b, c) = (spec.nt_id("B").unwrap(), spec.nt_id("C").unwrap());
        let want = Control { head: Head::Nt(b, Cache::empty()), stack: vec![(c, Cache::empty())] };
        let succ = sys.step(&AltConfig::initial(&spec)).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].procs, Multiset::singleton(want));
        let tight = AltSystem::new(&spec, &cl, 1, AltOptions::default());
        assert!(matches!(
            tight.step(&AltConfig::initial(&spec)),
            Err(SemanticsError::StackBoundExceeded { k: 1, depth: 2 })
        ));
    }

    #[test]
    fn labels_reach_a_cache() {
        let (spec, cl, k) =
            sys_for("labels l t\nstart S\nrule S -> T R\nrule R -> label l R'\nrule R' -> eps\nrule T -> label t");
        let l = spec.label_id("l").unwrap();
        let sys = AltSystem::new(&spec, &cl, k, AltOptions::literal());
        let r = sys.explore(Bounds::default(), &[l]).unwrap();
        assert!(r.hit);
        let last = r.path.unwrap().pop().unwrap();
        assert!(last.procs.distinct().any(|g| matches!(&g.head, Head::Delayed(c) if c.contains_label(l))));
    }

    #[test]
    fn caches_stay_well_formed() {
        let (spec, cl, k) = sys_for(
            "channels c\nmessages m\nlabels l\nstart S\nrule S -> A B\nrule A -> recv c m\nrule B -> send c m B\nrule B -> label l\nrule B -> spawn A",
        );
        let sys = AltSystem::new(&spec, &cl, k, AltOptions::default());
        let r = sys.explore(Bounds { max_steps: 6, max_configs: 5000 }, &[]).unwrap();
        assert!(r.hit);
        let r = sys.explore(Bounds { max_steps: 6, max_configs: 5000 }, &[spec.label_id("l").unwrap(); 3]).unwrap();
        for cfg in &r.visited {
            for g in cfg.procs.distinct() {
                assert!(g.head.cache().is_well_formed(&cl));
                assert!(g.stack.iter().all(|(x, c)| cl.is_ncom_nt(*x) && c.is_well_formed(&cl)));
            }
        }
    }
}
