use super::word::{canon, CanonicalWord};
use super::{bfs, labels_matched, Bounds, Exploration};
use crate::model::{Action, ApcpsSpec, Classification, LabelId, MsgId, Symbol};
use crate::multiset::Multiset;
use std::convert::Infallible;

/// A configuration of the standard semantics: process words modulo
/// commutation, and one unordered queue per channel.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StdConfig {
    pub procs: Multiset<CanonicalWord>,
    pub chans: Vec<Multiset<MsgId>>,
}

impl StdConfig {
    /// `S ◁ ∅`.
    pub fn initial(spec: &ApcpsSpec) -> Self {
        let start = CanonicalWord { block: Multiset::singleton(Symbol::Nt(spec.start())), spine: vec![] };
        StdConfig { procs: Multiset::singleton(start), chans: vec![Multiset::new(); spec.channels().len()] }
    }

    /// Every queried label exposed by a distinct process.
    pub fn exposes(&self, query: &[LabelId]) -> bool {
        let procs: Vec<&CanonicalWord> = self.procs.elements().collect();
        labels_matched(&procs, query, |w, l| w.block.contains(&Symbol::Act(Action::Label(l))))
    }

    pub fn show(&self, spec: &ApcpsSpec) -> String {
        let show_block = |b: &Multiset<Symbol>| {
            b.elements().map(|s| spec.show_symbol(*s)).collect::<Vec<_>>().join(" ")
        };
        let procs: Vec<String> = self
            .procs
            .elements()
            .map(|w| {
                let mut parts = vec![];
                if !w.block.is_empty() {
                    parts.push(format!("{{{}}}", show_block(&w.block)));
                }
                for (s, b) in &w.spine {
                    parts.push(spec.show_symbol(*s));
                    if !b.is_empty() {
                        parts.push(format!("{{{}}}", show_block(b)));
                    }
                }
                if parts.is_empty() {
                    "<eps>".to_string()
                } else {
                    format!("<{}>", parts.join(" "))
                }
            })
            .collect();
        format!("{} |> {}", procs.join(" || "), show_chans(spec, &self.chans))
    }
}

pub(crate) fn show_chans(spec: &ApcpsSpec, chans: &[Multiset<MsgId>]) -> String {
    let parts: Vec<String> = chans
        .iter()
        .enumerate()
        .filter(|(_, q)| !q.is_empty())
        .map(|(c, q)| {
            let msgs: Vec<&str> = q.elements().map(|m| spec.msg_name(*m)).collect();
            format!("{}:{{{}}}", spec.channels()[c], msgs.join(","))
        })
        .collect();
    if parts.is_empty() {
        "{}".to_string()
    } else {
        parts.join(" ")
    }
}

/// Acting process index (in element order) and the rule tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StdMove {
    pub rule: u8,
    pub process: usize,
}

/// All one-step successors together with the move producing them.
pub fn std_successors(spec: &ApcpsSpec, cl: &Classification, cfg: &StdConfig) -> Vec<(StdMove, StdConfig)> {
    let mut out = Vec::new();
    let mut base = 0;
    for (w, n) in cfg.procs.iter() {
        let others = cfg.procs.without(w).expect("present");
        for h in w.heads() {
            let rest = w.without_head(h).expect("head");
            let mut emit = |rule: u8, word: CanonicalWord, chans: Vec<Multiset<MsgId>>, spawn: Option<CanonicalWord>| {
                let mut procs = others.with(word);
                if let Some(x) = spawn {
                    procs.insert(x);
                }
                out.push((StdMove { rule, process: base }, StdConfig { procs, chans }));
            };
            match h {
                Symbol::Nt(a) => {
                    for &i in spec.rules_for(a) {
                        let rhs = canon(cl, &spec.rule(i).rhs()).expect("validated spec");
                        emit(2, rhs.concat(&rest), cfg.chans.clone(), None);
                    }
                }
                Symbol::Act(Action::Recv(c, m)) => {
                    let mut chans = cfg.chans.clone();
                    if chans[c.index()].remove_one(&m) {
                        emit(3, rest, chans, None);
                    }
                }
                Symbol::Act(Action::Send(c, m)) => {
                    let mut chans = cfg.chans.clone();
                    chans[c.index()].insert(m);
                    emit(4, rest, chans, None);
                }
                Symbol::Act(Action::Label(_)) => emit(5, rest, cfg.chans.clone(), None),
                Symbol::Act(Action::Spawn(x)) => {
                    let child = CanonicalWord { block: Multiset::singleton(Symbol::Nt(x)), spine: vec![] };
                    emit(6, rest, cfg.chans.clone(), Some(child));
                }
            }
        }
        base += n as usize;
    }
    out.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.rule.cmp(&b.0.rule)));
    out.dedup_by(|a, b| a.1 == b.1);
    out
}

/// All one-step successors, sorted and without duplicates.
pub fn std_step(spec: &ApcpsSpec, cl: &Classification, cfg: &StdConfig) -> Vec<StdConfig> {
    std_successors(spec, cl, cfg).into_iter().map(|(_, c)| c).collect()
}

/// Breadth-first search from `S ◁ ∅` for a configuration exposing the query.
pub fn std_explore(
    spec: &ApcpsSpec,
    cl: &Classification,
    bounds: Bounds,
    query: &[LabelId],
) -> Exploration<StdConfig> {
    let res: Result<_, Infallible> = bfs(
        StdConfig::initial(spec),
        bounds,
        |c| Ok(std_successors(spec, cl, c).into_iter().map(|(m, c)| ((m.rule, m.process), c)).collect()),
        |c| c.exposes(query),
    );
    match res {
        Ok(e) => e,
        Err(e) => match e {},
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{classify, parse_spec, Action, NtId};

    fn word(cl: &Classification, w: &[Symbol]) -> CanonicalWord {
        canon(cl, w).unwrap()
    }

    #[test]
    fn send_receive_spawn_instances() {
        let spec = parse_spec("channels c\nmessages m\nstart L\nrule L -> eps\nrule X -> eps").unwrap();
        let cl = classify(&spec);
        let (c, m) = (spec.chan_id("c").unwrap(), spec.msg_id("m").unwrap());
        let send = Symbol::Act(Action::Send(c, m));
        let cfg = StdConfig { procs: Multiset::singleton(word(&cl, &[send])), chans: vec![Multiset::new()] };
        let succ = std_step(&spec, &cl, &cfg);
        assert_eq!(
            succ,
            vec![StdConfig { procs: Multiset::singleton(CanonicalWord::default()), chans: vec![Multiset::singleton(m)] }]
        );

        let recv = Symbol::Act(Action::Recv(c, m));
        let cfg = StdConfig { procs: Multiset::singleton(word(&cl, &[recv])), chans: vec![Multiset::new()] };
        assert!(std_step(&spec, &cl, &cfg).is_empty());

        let (l, x) = (spec.nt_id("L").unwrap(), spec.nt_id("X").unwrap());
        let spawn = Symbol::Act(Action::Spawn(x));
        let cfg = StdConfig { procs: Multiset::singleton(word(&cl, &[spawn, Symbol::Nt(l)])), chans: vec![Multiset::new()] };
        let expect: Multiset<CanonicalWord> =
            [word(&cl, &[Symbol::Nt(l)]), word(&cl, &[Symbol::Nt(x)])].into_iter().collect();
        assert!(std_step(&spec, &cl, &cfg).iter().any(|s| s.procs == expect));
        let _ = NtId(0);
    }

    #[test]
    fn explore_examples() {
        let lab = parse_spec("labels l\nstart S\nrule S -> label l").unwrap();
        let cl = classify(&lab);
        let l = lab.label_id("l").unwrap();
        let r = std_explore(&lab, &cl, Bounds::default(), &[l]);
        assert!(r.hit);
        assert_eq!(r.trace.unwrap().len(), 1);

        let dead = parse_spec("channels c\nmessages m\nlabels l\nstart S\nrule S -> recv c m L\nrule L -> label l").unwrap();
        let cl = classify(&dead);
        let r = std_explore(&dead, &cl, Bounds::default(), &[l]);
        assert!(!r.hit && !r.truncated);

        let spawn = parse_spec(
            "channels c\nmessages m\nlabels l\nstart S\nrule S -> spawn X T\nrule T -> recv c m L\nrule L -> label l\nrule X -> send c m",
        )
        .unwrap();
        let cl = classify(&spawn);
        let r = std_explore(&spawn, &cl, Bounds::default(), &[l]);
        assert!(r.hit);
        assert_eq!(r.trace.unwrap().len(), 7);
    }
}
