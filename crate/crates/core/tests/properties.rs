mod common;

use apcps::gen::{random_marking, random_net, random_shaped_spec, random_spec, rng, SpecParams};
use apcps::model::{check_shaped, classify, is_independent, Action, ApcpsSpec, ChanId, LabelId, MsgId, NtId, Symbol};
use apcps::order::{basis_insert, leq_cache, leq_config, leq_control, multiset_embeds, Basis};
use apcps::petri::{forward_coverable, petri_coverable, Marking};
use apcps::semantics::{canon, AltConfig, AltOptions, AltSystem, Cache, CacheSort};
use apcps::{parikh, Multiset};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn small_params() -> SpecParams {
    SpecParams { nonterminals: 4, channels: 2, messages: 2, labels: 2, max_rules: 2, spawn_weight: 1 }
}

fn symbols() -> impl Strategy<Value = Vec<Symbol>> {
    let s = prop_oneof![
        (0u16..2).prop_map(|a| Symbol::Nt(NtId(a))),
        (0u16..2).prop_map(|m| Symbol::Act(Action::Send(ChanId(0), MsgId(m)))),
        Just(Symbol::Act(Action::Recv(ChanId(0), MsgId(0)))),
        Just(Symbol::Act(Action::Label(LabelId(0)))),
    ];
    prop::collection::vec(s, 0..8)
}

fn pairs() -> impl Strategy<Value = Multiset<(u8, u8)>> {
    prop::collection::vec((0u8..3, 0u8..3), 0..=5).prop_map(|v| v.into_iter().collect())
}

fn pointwise(a: &(u8, u8), b: &(u8, u8)) -> bool {
    a.0 <= b.0 && a.1 <= b.1
}

/// Reachable configurations of a random shaped spec, from seeded walks.
fn sampled(seed: u64) -> (ApcpsSpec, usize, Vec<AltConfig>) {
    let (spec, _, k) = random_shaped_spec(&mut rng(seed), &small_params());
    let cfgs = alt_samples(&spec, k, seed..seed + 3, 12);
    (spec, k, cfgs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parikh_is_a_morphism(u in symbols(), v in symbols()) {
        let uv: Vec<Symbol> = u.iter().chain(&v).copied().collect();
        prop_assert_eq!(parikh(&uv), parikh(&u).sum(&parikh(&v)));
    }

    #[test]
    fn classify_is_stable_under_rule_order(seed: u64) {
        let spec = random_spec(&mut rng(seed), &small_params());
        let cl = classify(&spec);
        prop_assert_eq!(&classify(&spec), &cl);
        let mut rules = spec.rules().to_vec();
        rules.reverse();
        let flipped = ApcpsSpec::new(
            spec.channels().to_vec(),
            spec.messages().to_vec(),
            spec.labels().to_vec(),
            spec.nonterminals().to_vec(),
            spec.start(),
            rules,
        );
        prop_assert_eq!(classify(&flipped), cl);
    }

    #[test]
    fn receives_decide_commutativity(seed: u64) {
        let spec = random_spec(&mut rng(seed), &SpecParams { nonterminals: 6, ..small_params() });
        prop_assert_eq!(classify(&spec).ncom_nonterminals, recv_reachable(&spec));
    }

    #[test]
    fn independence_is_symmetric_and_irreflexive(seed: u64) {
        let spec = random_spec(&mut rng(seed), &small_params());
        let cl = classify(&spec);
        let syms: Vec<Symbol> =
            spec.nt_ids().map(Symbol::Nt).chain(spec.all_actions().into_iter().map(Symbol::Act)).collect();
        for &x in &syms {
            prop_assert!(!is_independent(&cl, x, x).unwrap());
            for &y in &syms {
                prop_assert_eq!(is_independent(&cl, x, y).unwrap(), is_independent(&cl, y, x).unwrap());
            }
        }
    }

    #[test]
    fn embedding_matches_injection_search(m1 in pairs(), m2 in pairs()) {
        prop_assert_eq!(multiset_embeds(pointwise, &m1, &m2), brute_embeds(&pointwise, &m1, &m2));
    }

    #[test]
    fn cache_order_is_a_preorder(a in symbols(), b in symbols(), c in symbols()) {
        let coms = |w: Vec<Symbol>| -> Multiset<Symbol> {
            w.into_iter().filter(|s| matches!(s, Symbol::Act(Action::Send(..) | Action::Label(_)))).collect()
        };
        let (a, b, c) = (Cache::of(coms(a)), Cache::of(coms(b)), Cache::of(coms(c)));
        prop_assert!(leq_cache(&a, &a));
        if leq_cache(&a, &b) && leq_cache(&b, &c) {
            prop_assert!(leq_cache(&a, &c));
        }
        prop_assert_eq!(a.sort(), CacheSort::Term);
    }

    #[test]
    fn config_order_is_a_preorder(seed: u64) {
        let (_, _, cfgs) = sampled(seed);
        let mut r = rng(seed);
        for _ in 0..20 {
            let c = pick(&mut r, &cfgs);
            let b = weaken(&mut r, c);
            let a = weaken(&mut r, &b);
            prop_assert!(leq_config(c, c));
            prop_assert!(leq_config(&b, c) && leq_config(&a, &b));
            prop_assert!(leq_config(&a, c));
            for (g, h) in a.procs.elements().zip(c.procs.elements()) {
                prop_assert!(leq_control(g, g) && leq_control(h, h));
            }
        }
    }

    #[test]
    fn steps_are_monotone(seed: u64) {
        let (spec, k, cfgs) = sampled(seed);
        let cl = classify(&spec);
        let sys = AltSystem::new(&spec, &cl, k, AltOptions::default());
        let mut r = rng(seed ^ 1);
        for _ in 0..10 {
            let c2 = pick(&mut r, &cfgs);
            let c1 = weaken(&mut r, c2);
            prop_assert!(monotone_at(&sys, &c1, c2), "{} <= {}", c1.show(&spec), c2.show(&spec));
        }
    }

    #[test]
    fn more_messages_never_remove_successors(seed: u64) {
        let (spec, k, cfgs) = sampled(seed);
        let cl = classify(&spec);
        let sys = AltSystem::new(&spec, &cl, k, AltOptions::default());
        let mut r = rng(seed ^ 2);
        for _ in 0..10 {
            let c = pick(&mut r, &cfgs).clone();
            let mut more = c.clone();
            let ch = r.gen_range(0..more.chans.len());
            more.chans[ch].insert(MsgId(r.gen_range(0..2)));
            prop_assert!(sys.step(&c).unwrap().len() <= sys.step(&more).unwrap().len());
            prop_assert!(monotone_at(&sys, &c, &more));
        }
    }

    #[test]
    fn caches_stay_well_formed(seed: u64) {
        let (spec, _, cfgs) = sampled(seed);
        let cl = classify(&spec);
        for c in &cfgs {
            for g in c.procs.distinct() {
                for m in caches(g) {
                    prop_assert!(m.is_well_formed(&cl), "{}", g.show(&spec));
                }
            }
        }
    }

    #[test]
    fn shaped_runs_respect_the_bound(seed: u64) {
        let (spec, k, cfgs) = sampled(seed);
        prop_assert!(check_shaped(&spec, &classify(&spec)).shaped);
        prop_assert!(cfgs.iter().all(|c| c.max_depth() <= k));
    }

    #[test]
    fn canon_identifies_swaps(w in symbols()) {
        let spec = random_spec(&mut rng(0), &SpecParams { nonterminals: 2, channels: 1, messages: 2, labels: 1, ..small_params() });
        let cl = classify(&spec);
        let c = canon(&cl, &w).unwrap();
        for v in swap_closure(&cl, &w) {
            prop_assert_eq!(&canon(&cl, &v).unwrap(), &c);
        }
    }

    #[test]
    fn basis_is_an_antichain_and_order_free(seed: u64) {
        let (_, _, cfgs) = sampled(seed);
        let mut r = rng(seed);
        let xs: Vec<AltConfig> = (0..12)
            .map(|_| {
                let c = pick(&mut r, &cfgs).clone();
                weaken(&mut r, &c)
            })
            .collect();
        let fwd = xs.iter().cloned().fold(Basis::new(), |b, x| basis_insert(&b, x));
        let bwd = xs.iter().rev().cloned().fold(Basis::new(), |b, x| basis_insert(&b, x));
        let els: Vec<&AltConfig> = fwd.iter().collect();
        for (i, a) in els.iter().enumerate() {
            for (j, b) in els.iter().enumerate() {
                prop_assert!(i == j || !leq_config(a, b));
            }
        }
        for x in &xs {
            prop_assert!(fwd.covers(x) && bwd.covers(x));
        }
        prop_assert!(fwd.iter().all(|x| bwd.covers(x)) && bwd.iter().all(|x| fwd.covers(x)));
    }

    #[test]
    fn petri_backward_matches_forward(seed: u64) {
        let mut r = rng(seed);
        let places = r.gen_range(1..=6);
        let transitions = r.gen_range(1..=8);
        let net = random_net(&mut r, places, transitions);
        let init = random_marking(&mut r, places, 3);
        let target = random_marking(&mut r, places, 3);
        let cap = Marking(init.sum(&target).0.iter().map(|x| x + 8).collect());
        let back = petri_coverable(&net, &init, &target);
        prop_assert_eq!(back.coverable, forward_coverable(&net, &init, &target, &cap));
        if let Some(w) = back.witness {
            prop_assert!(target.leq(&net.replay(&init, &w).unwrap()));
        }
    }
}
