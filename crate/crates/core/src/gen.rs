//! Seeded random instances for tests and for sampling runs.

use crate::model::{check_shaped, classify, Action, ApcpsSpec, ChanId, Classification, LabelId, MsgId, NtId, Rule, Symbol};
use crate::multiset::Multiset;
use crate::petri::{Marking, PetriNet, Transition};
use crate::semantics::{canon, AltConfig, AltSystem, CanonicalWord, SemanticsError, StdConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Size of a random spec.
#[derive(Clone, Copy, Debug)]
pub struct SpecParams {
    pub nonterminals: usize,
    pub channels: usize,
    pub messages: usize,
    pub labels: usize,
    /// Upper bound on alternatives per non-terminal.
    pub max_rules: usize,
    /// Relative weight of spawn among actions.
    pub spawn_weight: u32,
}

impl Default for SpecParams {
    fn default() -> Self {
        SpecParams { nonterminals: 4, channels: 2, messages: 2, labels: 1, max_rules: 2, spawn_weight: 1 }
    }
}

fn random_action(rng: &mut impl Rng, p: &SpecParams) -> Action {
    let c = ChanId(rng.gen_range(0..p.channels) as u16);
    let m = MsgId(rng.gen_range(0..p.messages) as u16);
    let weights = [3, 3, 2, p.spawn_weight];
    let total: u32 = weights.iter().sum();
    let mut pick = rng.gen_range(0..total);
    let kind = weights.iter().position(|&w| {
        if pick < w {
            true
        } else {
            pick -= w;
            false
        }
    });
    match kind {
        Some(0) => Action::Send(c, m),
        Some(1) => Action::Recv(c, m),
        Some(2) => Action::Label(LabelId(rng.gen_range(0..p.labels) as u16)),
        _ => Action::Spawn(NtId(rng.gen_range(0..p.nonterminals) as u16)),
    }
}

/// A valid spec with start `N0`. Every non-terminal has at least one rule.
pub fn random_spec(rng: &mut impl Rng, p: &SpecParams) -> ApcpsSpec {
    let nt = |rng: &mut dyn rand::RngCore| NtId(rng.gen_range(0..p.nonterminals) as u16);
    let mut rules = vec![];
    for a in 0..p.nonterminals {
        let lhs = NtId(a as u16);
        for _ in 0..rng.gen_range(1..=p.max_rules) {
            let r = match rng.gen_range(0..10) {
                0 => Rule::Simple { lhs, body: None },
                1..=3 => Rule::Simple { lhs, body: Some(random_action(rng, p)) },
                4..=6 => Rule::TailCall { lhs, action: random_action(rng, p), next: nt(rng) },
                _ => Rule::Call { lhs, first: nt(rng), second: nt(rng) },
            };
            rules.push(r);
        }
    }
    let names = |prefix: &str, n: usize| (0..n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>();
    ApcpsSpec::new(
        names("c", p.channels),
        names("m", p.messages),
        names("l", p.labels),
        names("N", p.nonterminals),
        NtId(0),
        rules,
    )
}

/// Draws until the spec is shaped; returns it with its classification and bound.
pub fn random_shaped_spec(rng: &mut impl Rng, p: &SpecParams) -> (ApcpsSpec, Classification, usize) {
    loop {
        let spec = random_spec(rng, p);
        let cl = classify(&spec);
        let rep = check_shaped(&spec, &cl);
        if let (true, Some(k)) = (rep.shaped, rep.k) {
            return (spec, cl, k);
        }
    }
}

/// A net with arc weights up to 2 and at least one input per transition.
pub fn random_net(rng: &mut impl Rng, places: usize, transitions: usize) -> PetriNet {
    let marking = |rng: &mut dyn rand::RngCore, min_one: bool| {
        let mut m = Marking::zero(places);
        for _ in 0..rng.gen_range(usize::from(min_one)..=2) {
            m.0[rng.gen_range(0..places)] += 1;
        }
        m
    };
    PetriNet {
        places: (0..places).map(|i| format!("p{i}")).collect(),
        transitions: (0..transitions)
            .map(|i| Transition { pre: marking(rng, true), post: marking(rng, false), tag: format!("t{i}") })
            .collect(),
    }
}

pub fn random_marking(rng: &mut impl Rng, places: usize, max_total: u32) -> Marking {
    let mut m = Marking::zero(places);
    for _ in 0..rng.gen_range(0..=max_total) {
        m.0[rng.gen_range(0..places)] += 1;
    }
    m
}

pub fn random_multiset(rng: &mut impl Rng, alphabet: usize, max_size: usize) -> Multiset<usize> {
    (0..rng.gen_range(0..=max_size)).map(|_| rng.gen_range(0..alphabet)).collect()
}

/// A standard-semantics run in which every process is a plain sequence and
/// only its leftmost symbol moves. Returns the visited configurations.
pub fn sample_std_run(spec: &ApcpsSpec, cl: &Classification, rng: &mut impl Rng, steps: usize) -> Vec<StdConfig> {
    let mut procs: Vec<Vec<Symbol>> = vec![vec![Symbol::Nt(spec.start())]];
    let mut chans = vec![Multiset::new(); spec.channels().len()];
    let snapshot = |procs: &[Vec<Symbol>], chans: &[Multiset<MsgId>]| StdConfig {
        procs: procs.iter().map(|w| canon(cl, w).expect("spec symbols")).collect::<Multiset<CanonicalWord>>(),
        chans: chans.to_vec(),
    };
    let mut out = vec![snapshot(&procs, &chans)];
    for _ in 0..steps {
        let ready: Vec<usize> = (0..procs.len())
            .filter(|&i| match procs[i].first() {
                Some(Symbol::Act(Action::Recv(c, m))) => chans[c.index()].contains(m),
                Some(_) => true,
                None => false,
            })
            .collect();
        let Some(&i) = ready.choose(rng) else { break };
        let head = procs[i].remove(0);
        match head {
            Symbol::Nt(a) => {
                let &r = spec.rules_for(a).choose(rng).expect("every non-terminal has a rule");
                let mut w = spec.rule(r).rhs();
                w.append(&mut procs[i]);
                procs[i] = w;
            }
            Symbol::Act(Action::Recv(c, m)) => {
                chans[c.index()].remove_one(&m);
            }
            Symbol::Act(Action::Send(c, m)) => chans[c.index()].insert(m),
            Symbol::Act(Action::Spawn(x)) => procs.push(vec![Symbol::Nt(x)]),
            Symbol::Act(Action::Label(_)) => {}
        }
        out.push(snapshot(&procs, &chans));
    }
    out
}

/// A uniformly random walk of the cache semantics.
pub fn sample_alt_run(sys: &AltSystem, rng: &mut impl Rng, steps: usize) -> Result<Vec<AltConfig>, SemanticsError> {
    let mut x = AltConfig::initial(sys.spec);
    let mut out = vec![x.clone()];
    for _ in 0..steps {
        let succ = sys.step(&x)?;
        let Some(next) = succ.choose(rng) else { break };
        x = next.clone();
        out.push(x.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_specs_validate() {
        let mut r = rng(7);
        for _ in 0..50 {
            let spec = random_spec(&mut r, &SpecParams::default());
            assert!(spec.validate().is_empty(), "{:?}", spec.validate());
        }
    }

    #[test]
    fn same_seed_same_spec() {
        let p = SpecParams::default();
        assert_eq!(random_spec(&mut rng(3), &p), random_spec(&mut rng(3), &p));
    }

    #[test]
    fn std_samples_start_initial() {
        let (spec, cl, _) = random_shaped_spec(&mut rng(1), &SpecParams::default());
        let run = sample_std_run(&spec, &cl, &mut rng(2), 20);
        assert_eq!(run[0], StdConfig::initial(&spec));
    }
}
