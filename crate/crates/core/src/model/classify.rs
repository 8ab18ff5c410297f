use super::{Action, ApcpsSpec, NtId, Symbol};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown symbol {0:?}")]
pub struct UnknownSymbol(pub Symbol);

/// Partition of the alphabet and the non-terminals into commutative and
/// non-commutative symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    ncom: Vec<bool>,
    pub com_terminals: BTreeSet<Action>,
    pub ncom_terminals: BTreeSet<Action>,
    pub com_nonterminals: BTreeSet<NtId>,
    pub ncom_nonterminals: BTreeSet<NtId>,
}

impl Classification {
    pub fn is_com_nt(&self, a: NtId) -> bool {
        !self.ncom.get(a.index()).copied().unwrap_or(true)
    }

    pub fn is_ncom_nt(&self, a: NtId) -> bool {
        !self.is_com_nt(a)
    }

    pub fn is_com(&self, s: Symbol) -> bool {
        match s {
            Symbol::Nt(a) => self.is_com_nt(a),
            Symbol::Act(a) => a.is_commutative(),
        }
    }

    /// Whether `s` belongs to the declared alphabet or non-terminals.
    pub fn declares(&self, s: Symbol) -> bool {
        match s {
            Symbol::Nt(a) => a.index() < self.ncom.len(),
            Symbol::Act(a) => self.com_terminals.contains(&a) || self.ncom_terminals.contains(&a),
        }
    }
}

/// Least fixpoint of "some rule of A has a receive or a non-commutative
/// non-terminal on its right-hand side".
pub fn classify(spec: &ApcpsSpec) -> Classification {
    let n = spec.nonterminals().len();
    let mut ncom = vec![false; n];
    let mut changed = true;
    while changed {
        changed = false;
        for r in spec.rules() {
            let a = r.lhs().index();
            if a >= n || ncom[a] {
                continue;
            }
            let hit = r.rhs().into_iter().any(|s| match s {
                Symbol::Act(act) => !act.is_commutative(),
                Symbol::Nt(b) => ncom.get(b.index()).copied().unwrap_or(false),
            });
            if hit {
                ncom[a] = true;
                changed = true;
            }
        }
    }
    let (mut com_t, mut ncom_t) = (BTreeSet::new(), BTreeSet::new());
    for a in spec.all_actions() {
        if a.is_commutative() {
            com_t.insert(a);
        } else {
            ncom_t.insert(a);
        }
    }
    let (com_n, ncom_n) = spec.nt_ids().partition(|a| !ncom[a.index()]);
    Classification {
        ncom,
        com_terminals: com_t,
        ncom_terminals: ncom_t,
        com_nonterminals: com_n,
        ncom_nonterminals: ncom_n,
    }
}

/// The induced independence relation: distinct and both commutative.
pub fn is_independent(cl: &Classification, x: Symbol, y: Symbol) -> Result<bool, UnknownSymbol> {
    for s in [x, y] {
        if !cl.declares(s) {
            return Err(UnknownSymbol(s));
        }
    }
    Ok(x != y && cl.is_com(x) && cl.is_com(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_spec;

    const G_MIX: &str = "channels c\nmessages m\nstart A\nrule A -> B C\nrule B -> send c m\nrule C -> recv c m";

    #[test]
    fn send_only_is_commutative() {
        let spec = parse_spec("channels c\nmessages m\nstart S\nrule S -> send c m").unwrap();
        let cl = classify(&spec);
        assert_eq!(cl.com_nonterminals, [NtId(0)].into());
        assert!(cl.ncom_nonterminals.is_empty());
    }

    #[test]
    fn direct_receive_is_not() {
        let spec = parse_spec("channels c\nmessages m\nstart S\nrule S -> recv c m").unwrap();
        assert_eq!(classify(&spec).ncom_nonterminals, [NtId(0)].into());
    }

    #[test]
    fn mixed_grammar() {
        let spec = parse_spec(G_MIX).unwrap();
        let cl = classify(&spec);
        let names = |s: &BTreeSet<NtId>| s.iter().map(|a| spec.nt_name(*a).to_string()).collect::<Vec<_>>();
        assert_eq!(names(&cl.com_nonterminals), ["B"]);
        assert_eq!(names(&cl.ncom_nonterminals), ["A", "C"]);
        let (b, c) = (spec.nt_id("B").unwrap(), spec.nt_id("C").unwrap());
        assert!(!is_independent(&cl, Symbol::Nt(b), Symbol::Nt(c)).unwrap());
    }

    #[test]
    fn independence_on_terminals() {
        let spec = parse_spec("channels c\nmessages m\nlabels l\nstart S\nrule S -> label l").unwrap();
        let cl = classify(&spec);
        let send = Symbol::Act(Action::Send(spec.chan_id("c").unwrap(), spec.msg_id("m").unwrap()));
        let lab = Symbol::Act(Action::Label(spec.label_id("l").unwrap()));
        assert!(is_independent(&cl, send, lab).unwrap());
        assert!(!is_independent(&cl, send, send).unwrap());
        assert!(is_independent(&cl, send, Symbol::Nt(NtId(7))).is_err());
    }
}
