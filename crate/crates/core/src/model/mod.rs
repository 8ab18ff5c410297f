//! APCPS specifications: symbols, rules, parsing, validation, the
//! commutative / non-commutative classification and the shaped-stack check.

mod classify;
mod parse;
mod shape;

pub use classify::{classify, is_independent, Classification, UnknownSymbol};
pub use parse::{parse_spec, ParseError, ParseErrorKind};
pub use shape::{check_shaped, ShapeReport};

use serde::Serialize;
use std::fmt;

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
        pub struct $name(pub u16);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(
    /// Index into [`ApcpsSpec::nonterminals`].
    NtId
);
id_type!(ChanId);
id_type!(MsgId);
id_type!(LabelId);

/// A terminal symbol: a concurrency action or a program-point label.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub enum Action {
    Send(ChanId, MsgId),
    Recv(ChanId, MsgId),
    Spawn(NtId),
    Label(LabelId),
}

impl Action {
    /// Receives are the only actions that do not commute.
    pub fn is_commutative(self) -> bool {
        !matches!(self, Action::Recv(..))
    }
}

/// A grammar symbol. Non-terminals sort before terminals.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub enum Symbol {
    Nt(NtId),
    Act(Action),
}

impl Symbol {
    pub fn as_nt(self) -> Option<NtId> {
        match self {
            Symbol::Nt(a) => Some(a),
            Symbol::Act(_) => None,
        }
    }

    pub fn as_action(self) -> Option<Action> {
        match self {
            Symbol::Act(a) => Some(a),
            Symbol::Nt(_) => None,
        }
    }

    pub fn is_nt(self) -> bool {
        matches!(self, Symbol::Nt(_))
    }
}

/// The three rule shapes of a partially commutative grammar.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub enum Rule {
    /// `A -> a` or `A -> eps`.
    Simple { lhs: NtId, body: Option<Action> },
    /// `A -> a B`.
    TailCall { lhs: NtId, action: Action, next: NtId },
    /// `A -> B C`.
    Call { lhs: NtId, first: NtId, second: NtId },
}

impl Rule {
    pub fn lhs(&self) -> NtId {
        match *self {
            Rule::Simple { lhs, .. } | Rule::TailCall { lhs, .. } | Rule::Call { lhs, .. } => lhs,
        }
    }

    /// Right-hand side as a word.
    pub fn rhs(&self) -> Vec<Symbol> {
        match *self {
            Rule::Simple { body: None, .. } => vec![],
            Rule::Simple { body: Some(a), .. } => vec![Symbol::Act(a)],
            Rule::TailCall { action, next, .. } => vec![Symbol::Act(action), Symbol::Nt(next)],
            Rule::Call { first, second, .. } => vec![Symbol::Nt(first), Symbol::Nt(second)],
        }
    }

    /// Non-terminals occurring on the right-hand side (spawn targets excluded).
    pub fn rhs_nonterminals(&self) -> impl Iterator<Item = NtId> {
        self.rhs().into_iter().filter_map(Symbol::as_nt)
    }

    /// Every action occurring on the right-hand side.
    pub fn rhs_actions(&self) -> impl Iterator<Item = Action> {
        self.rhs().into_iter().filter_map(Symbol::as_action)
    }
}

/// An asynchronous partially commutative pushdown system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApcpsSpec {
    channels: Vec<String>,
    messages: Vec<String>,
    labels: Vec<String>,
    nonterminals: Vec<String>,
    start: NtId,
    rules: Vec<Rule>,
    by_lhs: Vec<Vec<usize>>,
}

impl ApcpsSpec {
    /// Builds a spec without checking it; see [`ApcpsSpec::validate`].
    pub fn new(
        channels: Vec<String>,
        messages: Vec<String>,
        labels: Vec<String>,
        nonterminals: Vec<String>,
        start: NtId,
        rules: Vec<Rule>,
    ) -> Self {
        let mut by_lhs = vec![Vec::new(); nonterminals.len()];
        for (i, r) in rules.iter().enumerate() {
            if let Some(v) = by_lhs.get_mut(r.lhs().index()) {
                v.push(i);
            }
        }
        ApcpsSpec {
            channels,
            messages,
            labels,
            nonterminals,
            start,
            rules,
            by_lhs,
        }
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn messages(&self) -> &[String] {
        &self.messages
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn start(&self) -> NtId {
        self.start
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, i: usize) -> &Rule {
        &self.rules[i]
    }

    /// Indices of the rules with left-hand side `a`.
    pub fn rules_for(&self, a: NtId) -> &[usize] {
        self.by_lhs.get(a.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn nt_ids(&self) -> impl Iterator<Item = NtId> {
        (0..self.nonterminals.len() as u16).map(NtId)
    }

    /// All terminals of the derived alphabet: labels, sends, receives, spawns.
    pub fn all_actions(&self) -> Vec<Action> {
        let mut out = Vec::new();
        for l in 0..self.labels.len() as u16 {
            out.push(Action::Label(LabelId(l)));
        }
        for c in 0..self.channels.len() as u16 {
            for m in 0..self.messages.len() as u16 {
                out.push(Action::Send(ChanId(c), MsgId(m)));
                out.push(Action::Recv(ChanId(c), MsgId(m)));
            }
        }
        for x in self.nt_ids() {
            out.push(Action::Spawn(x));
        }
        out.sort();
        out
    }

    pub fn nt_id(&self, name: &str) -> Option<NtId> {
        self.nonterminals.iter().position(|n| n == name).map(|i| NtId(i as u16))
    }

    pub fn label_id(&self, name: &str) -> Option<LabelId> {
        self.labels.iter().position(|n| n == name).map(|i| LabelId(i as u16))
    }

    pub fn chan_id(&self, name: &str) -> Option<ChanId> {
        self.channels.iter().position(|n| n == name).map(|i| ChanId(i as u16))
    }

    pub fn msg_id(&self, name: &str) -> Option<MsgId> {
        self.messages.iter().position(|n| n == name).map(|i| MsgId(i as u16))
    }

    pub fn nt_name(&self, a: NtId) -> &str {
        self.nonterminals.get(a.index()).map(String::as_str).unwrap_or("?")
    }

    pub fn label_name(&self, l: LabelId) -> &str {
        self.labels.get(l.index()).map(String::as_str).unwrap_or("?")
    }

    pub fn chan_name(&self, c: ChanId) -> &str {
        self.channels.get(c.index()).map(String::as_str).unwrap_or("?")
    }

    pub fn msg_name(&self, m: MsgId) -> &str {
        self.messages.get(m.index()).map(String::as_str).unwrap_or("?")
    }

    pub fn show_action(&self, a: Action) -> String {
        match a {
            Action::Send(c, m) => format!("send({},{})", self.chan_name(c), self.msg_name(m)),
            Action::Recv(c, m) => format!("recv({},{})", self.chan_name(c), self.msg_name(m)),
            Action::Spawn(x) => format!("spawn({})", self.nt_name(x)),
            Action::Label(l) => format!("label({})", self.label_name(l)),
        }
    }

    pub fn show_symbol(&self, s: Symbol) -> String {
        match s {
            Symbol::Nt(a) => self.nt_name(a).to_string(),
            Symbol::Act(a) => self.show_action(a),
        }
    }

    pub fn show_rule(&self, r: &Rule) -> String {
        let rhs: Vec<String> = r.rhs().into_iter().map(|s| self.show_symbol(s)).collect();
        let rhs = if rhs.is_empty() { "eps".to_string() } else { rhs.join(" ") };
        format!("{} -> {}", self.nt_name(r.lhs()), rhs)
    }

    /// Every violation of the declaration invariants; empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut diags = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for (kind, names) in [
            ("channel", &self.channels),
            ("message", &self.messages),
            ("label", &self.labels),
            ("non-terminal", &self.nonterminals),
        ] {
            seen.clear();
            for n in names {
                if !seen.insert(n.as_str()) {
                    diags.push(format!("duplicate {kind} {n}"));
                }
            }
        }
        if self.start.index() >= self.nonterminals.len() {
            diags.push("start symbol not declared".to_string());
        }
        let mut missing = std::collections::BTreeSet::new();
        for (i, r) in self.rules.iter().enumerate() {
            if r.lhs().index() >= self.nonterminals.len() {
                diags.push(format!("rule {i}: left-hand side not declared"));
            }
            for s in r.rhs() {
                match s {
                    Symbol::Nt(b) => {
                        if b.index() >= self.nonterminals.len() {
                            diags.push(format!("rule {i}: unknown non-terminal #{}", b.0));
                        } else if self.rules_for(b).is_empty() {
                            missing.insert(b);
                        }
                    }
                    Symbol::Act(a) => diags.extend(self.check_action(a).map(|e| format!("rule {i}: {e}"))),
                }
            }
        }
        for b in missing {
            diags.push(format!("non-terminal {} has no rules", self.nt_name(b)));
        }
        diags
    }

    fn check_action(&self, a: Action) -> Option<String> {
        let ok = match a {
            Action::Send(c, m) | Action::Recv(c, m) => {
                c.index() < self.channels.len() && m.index() < self.messages.len()
            }
            Action::Spawn(x) => {
                if x.index() < self.nonterminals.len() && self.rules_for(x).is_empty() {
                    return Some(format!("non-terminal {} has no rules", self.nt_name(x)));
                }
                x.index() < self.nonterminals.len()
            }
            Action::Label(l) => l.index() < self.labels.len(),
        };
        (!ok).then(|| format!("undeclared symbol in {a:?}"))
    }
}

impl fmt::Display for ApcpsSpec {
    /// Writes the spec back in the line-oriented input format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.channels.is_empty() {
            writeln!(f, "channels {}", self.channels.join(" "))?;
        }
        if !self.messages.is_empty() {
            writeln!(f, "messages {}", self.messages.join(" "))?;
        }
        if !self.labels.is_empty() {
            writeln!(f, "labels {}", self.labels.join(" "))?;
        }
        writeln!(f, "start {}", self.nt_name(self.start))?;
        for r in &self.rules {
            let rhs: Vec<String> = r
                .rhs()
                .into_iter()
                .map(|s| match s {
                    Symbol::Nt(a) => self.nt_name(a).to_string(),
                    Symbol::Act(Action::Send(c, m)) => {
                        format!("send {} {}", self.chan_name(c), self.msg_name(m))
                    }
                    Symbol::Act(Action::Recv(c, m)) => {
                        format!("recv {} {}", self.chan_name(c), self.msg_name(m))
                    }
                    Symbol::Act(Action::Spawn(x)) => format!("spawn {}", self.nt_name(x)),
                    Symbol::Act(Action::Label(l)) => format!("label {}", self.label_name(l)),
                })
                .collect();
            let rhs = if rhs.is_empty() { "eps".to_string() } else { rhs.join(" ") };
            writeln!(f, "rule {} -> {}", self.nt_name(r.lhs()), rhs)?;
        }
        Ok(())
    }
}
