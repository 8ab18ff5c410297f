use super::{Action, ApcpsSpec, Classification, NtId, Rule};
use serde::Serialize;
use std::collections::VecDeque;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShapeReport {
    pub shaped: bool,
    /// Bound on non-commutative frames, counting the control position.
    pub k: Option<usize>,
    /// Rule indices forming a cycle through a strict edge.
    pub violation: Option<Vec<usize>>,
}

impl ShapeReport {
    pub fn describe_violation(&self, spec: &ApcpsSpec) -> Option<String> {
        self.violation.as_ref().map(|rules| {
            let v: Vec<String> = rules.iter().map(|&i| spec.show_rule(spec.rule(i))).collect();
            format!("[{}]", v.join(", "))
        })
    }
}

struct Edge {
    from: usize,
    to: usize,
    strict: bool,
    rule: usize,
}

fn edges(spec: &ApcpsSpec, cl: &Classification) -> Vec<Edge> {
    let mut out = Vec::new();
    for (i, r) in spec.rules().iter().enumerate() {
        let from = r.lhs().index();
        match *r {
            Rule::Call { first, second, .. } => {
                out.push(Edge { from, to: first.index(), strict: cl.is_ncom_nt(second), rule: i });
                out.push(Edge { from, to: second.index(), strict: false, rule: i });
            }
            Rule::TailCall { next, .. } => out.push(Edge { from, to: next.index(), strict: false, rule: i }),
            Rule::Simple { .. } => {}
        }
    }
    out
}

/// Tarjan's algorithm; component ids come out in reverse topological order.
fn scc(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    struct St<'a> {
        adj: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on: Vec<bool>,
        stack: Vec<usize>,
        comp: Vec<usize>,
        next: usize,
        ncomp: usize,
    }
    fn visit(s: &mut St, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on[v] = true;
        for i in 0..s.adj[v].len() {
            let w = s.adj[v][i];
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on[w] => s.low[v] = s.low[v].min(iw),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            while let Some(w) = s.stack.pop() {
                s.on[w] = false;
                s.comp[w] = s.ncomp;
                if w == v {
                    break;
                }
            }
            s.ncomp += 1;
        }
    }
    let mut s = St {
        adj,
        index: vec![None; n],
        low: vec![0; n],
        on: vec![false; n],
        stack: Vec::new(),
        comp: vec![usize::MAX; n],
        next: 0,
        ncomp: 0,
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.comp
}

/// Decides the syntactic shaped-stack condition and derives `k`.
///
/// The bound is measured from the start symbol and from every spawn target,
/// since spawned processes begin with their own empty stack.
pub fn check_shaped(spec: &ApcpsSpec, cl: &Classification) -> ShapeReport {
    let n = spec.nonterminals().len();
    let es = edges(spec, cl);
    let mut adj = vec![Vec::new(); n];
    for e in &es {
        adj[e.from].push(e.to);
    }
    let comp = scc(n, &adj);

    if let Some(bad) = es.iter().find(|e| e.strict && comp[e.from] == comp[e.to]) {
        // Close the cycle with a path back from `to` to `from` inside the component.
        let mut prev: Vec<Option<usize>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([bad.to]);
        seen[bad.to] = true;
        while let Some(v) = queue.pop_front() {
            if v == bad.from {
                break;
            }
            for (i, e) in es.iter().enumerate() {
                if e.from == v && comp[e.to] == comp[bad.from] && !seen[e.to] {
                    seen[e.to] = true;
                    prev[e.to] = Some(i);
                    queue.push_back(e.to);
                }
            }
        }
        let mut cycle = vec![bad.rule];
        let mut back = Vec::new();
        let mut v = bad.from;
        while v != bad.to {
            let Some(i) = prev[v] else { break };
            back.push(es[i].rule);
            v = es[i].from;
        }
        cycle.extend(back.into_iter().rev());
        return ShapeReport { shaped: false, k: None, violation: Some(cycle) };
    }

    // Tarjan numbers components in reverse topological order, so successors
    // of a component always carry smaller ids.
    let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut best = vec![0usize; ncomp];
    let mut by_comp: Vec<Vec<&Edge>> = vec![Vec::new(); ncomp];
    for e in &es {
        if comp[e.from] != comp[e.to] {
            by_comp[comp[e.from]].push(e);
        }
    }
    for c in 0..ncomp {
        best[c] = by_comp[c]
            .iter()
            .map(|e| best[comp[e.to]] + e.strict as usize)
            .max()
            .unwrap_or(0);
    }
    let k = 1 + roots(spec)
        .into_iter()
        .map(|r| best[comp[r.index()]])
        .max()
        .unwrap_or(0);
    ShapeReport { shaped: true, k: Some(k), violation: None }
}

/// The start symbol plus every spawn target reachable from it.
fn roots(spec: &ApcpsSpec) -> Vec<NtId> {
    let n = spec.nonterminals().len();
    let mut seen = vec![false; n];
    let mut roots = vec![spec.start()];
    let mut stack = vec![spec.start()];
    if spec.start().index() < n {
        seen[spec.start().index()] = true;
    }
    while let Some(a) = stack.pop() {
        for &i in spec.rules_for(a) {
            let r = spec.rule(i);
            let spawned: Vec<NtId> = r
                .rhs_actions()
                .filter_map(|x| match x {
                    Action::Spawn(x) => Some(x),
                    _ => None,
                })
                .collect();
            for b in r.rhs_nonterminals().chain(spawned.iter().copied()) {
                if !seen[b.index()] {
                    seen[b.index()] = true;
                    stack.push(b);
                }
            }
            roots.extend(spawned);
        }
    }
    roots.sort();
    roots.dedup();
    roots
}
