use super::alt::{AltConfig, Cache, Control, Head};
use super::standard::StdConfig;
use super::word::CanonicalWord;
use crate::model::{Action, Classification, NtId, Symbol};
use crate::multiset::Multiset;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbstractionError {
    #[error("process word not in shaped form: {0}")]
    NotShaped(String),
}

fn frames(cl: &Classification, spine: &[(Symbol, Multiset<Symbol>)]) -> Result<Vec<(NtId, Cache)>, AbstractionError> {
    spine
        .iter()
        .map(|(s, b)| match s {
            Symbol::Nt(x) if cl.is_ncom_nt(*x) => Ok((*x, Cache::of(b.clone()))),
            _ => Err(AbstractionError::NotShaped(format!("{s:?} below the head"))),
        })
        .collect()
}

fn delayed_forms(block: &Multiset<Symbol>, stack: &[(NtId, Cache)], out: &mut Vec<Control>) {
    out.push(Control { head: Head::Delayed(Cache::of(block.clone())), stack: stack.to_vec() });
    if block.all(|s| matches!(s, Symbol::Nt(_) | Symbol::Act(Action::Label(_)))) {
        out.push(Control { head: Head::Delayed(Cache::non_term(block.clone())), stack: stack.to_vec() });
    }
}

/// Every cache-semantics control that a process word may correspond to.
///
/// The quotient by commutation forgets which leading symbol is the head, so
/// the abstraction is a relation. The first candidate is the canonical one:
/// the least non-terminal of the leading block as head, the rest as cache.
pub fn abstraction_candidates(cl: &Classification, w: &CanonicalWord) -> Result<Vec<Control>, AbstractionError> {
    let mut out = Vec::new();
    if !w.block.is_empty() {
        let stack = frames(cl, &w.spine)?;
        let nts: Vec<NtId> = w.block.distinct().filter_map(|s| s.as_nt()).collect();
        let acts: Vec<Action> = w.block.distinct().filter_map(|s| s.as_action()).collect();
        for &a in &nts {
            let rest = w.block.without(&Symbol::Nt(a)).expect("present");
            out.push(Control { head: Head::Nt(a, Cache::of(rest)), stack: stack.clone() });
        }
        for &a in &acts {
            let rest = w.block.without(&Symbol::Act(a)).expect("present");
            out.push(Control { head: Head::Act(a, Cache::of(rest.clone())), stack: stack.clone() });
            for &b in &nts {
                let rest = rest.without(&Symbol::Nt(b)).expect("present");
                out.push(Control { head: Head::ActNt(a, b, Cache::of(rest)), stack: stack.clone() });
            }
            // A lone action before a frame may be a tail call into it.
            if rest.is_empty() {
                if let Some(((x, bx), deeper)) = stack.split_first() {
                    out.push(Control { head: Head::ActNt(a, *x, bx.clone()), stack: deeper.to_vec() });
                }
            }
        }
        delayed_forms(&w.block, &stack, &mut out);
        return Ok(out);
    }
    let Some(((first, b1), rest)) = w.spine.split_first() else {
        out.push(Control { head: Head::Delayed(Cache::empty()), stack: vec![] });
        out.push(Control { head: Head::Delayed(Cache::non_term(Multiset::new())), stack: vec![] });
        return Ok(out);
    };
    match *first {
        Symbol::Nt(x) if cl.is_ncom_nt(x) => {
            let below = frames(cl, rest)?;
            out.push(Control { head: Head::Nt(x, Cache::of(b1.clone())), stack: below });
            let all = frames(cl, &w.spine)?;
            delayed_forms(&Multiset::new(), &all, &mut out);
        }
        Symbol::Act(a @ Action::Recv(..)) => {
            let below = frames(cl, rest)?;
            out.push(Control { head: Head::Act(a, Cache::of(b1.clone())), stack: below.clone() });
            for b in b1.distinct().filter_map(|s| s.as_nt()) {
                let cache = b1.without(&Symbol::Nt(b)).expect("present");
                out.push(Control { head: Head::ActNt(a, b, Cache::of(cache)), stack: below.clone() });
            }
            if b1.is_empty() {
                if let Some(((x, bx), deeper)) = below.split_first() {
                    out.push(Control { head: Head::ActNt(a, *x, bx.clone()), stack: deeper.to_vec() });
                }
            }
        }
        s => return Err(AbstractionError::NotShaped(format!("{s:?} heads the spine"))),
    }
    Ok(out)
}

/// The canonical abstraction: first candidate per process, channels copied.
pub fn abstract_config(cl: &Classification, c: &StdConfig) -> Result<AltConfig, AbstractionError> {
    let mut procs = Multiset::new();
    for w in c.procs.elements() {
        procs.insert(abstraction_candidates(cl, w)?.swap_remove(0));
    }
    Ok(AltConfig { procs, chans: c.chans.clone() })
}

/// Whether `alt` is one of the configurations `c` abstracts to.
pub fn is_abstraction_of(cl: &Classification, c: &StdConfig, alt: &AltConfig) -> Result<bool, AbstractionError> {
    if alt.chans != c.chans || alt.procs.len() != c.procs.len() {
        return Ok(false);
    }
    let words: Vec<&CanonicalWord> = c.procs.elements().collect();
    let cands = words
        .iter()
        .map(|w| abstraction_candidates(cl, w))
        .collect::<Result<Vec<_>, _>>()?;
    let gs: Vec<&Control> = alt.procs.elements().collect();
    Ok(crate::order::saturates_left(words.len(), gs.len(), |i, j| cands[i].contains(gs[j])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{classify, parse_spec};
    use crate::semantics::canon;

    #[test]
    fn start_maps_to_fresh_control() {
        let spec = parse_spec("start S\nrule S -> eps").unwrap();
        let cl = classify(&spec);
        let a = abstract_config(&cl, &StdConfig::initial(&spec)).unwrap();
        assert_eq!(a, AltConfig::initial(&spec));
    }

    #[test]
    fn commutative_prefix_becomes_head_and_cache() {
        let spec = parse_spec(
            "channels c\nmessages m\nstart S\nrule S -> B X\nrule B -> eps\nrule B' -> eps\nrule X -> recv c m",
        )
        .unwrap();
        let cl = classify(&spec);
        let (b, b2, x) = (spec.nt_id("B").unwrap(), spec.nt_id("B'").unwrap(), spec.nt_id("X").unwrap());
        let w = canon(&cl, &[Symbol::Nt(b), Symbol::Nt(b2), Symbol::Nt(x)]).unwrap();
        let cands = abstraction_candidates(&cl, &w).unwrap();
        assert_eq!(
            cands[0],
            Control {
                head: Head::Nt(b, Cache::of(Multiset::singleton(Symbol::Nt(b2)))),
                stack: vec![(x, Cache::empty())]
            }
        );
        let cm = Symbol::Act(Action::Recv(spec.chan_id("c").unwrap(), spec.msg_id("m").unwrap()));
        let bad = canon(&cl, &[Symbol::Nt(b), cm]).unwrap();
        assert!(abstraction_candidates(&cl, &bad).is_err());
    }

    #[test]
    fn tail_call_into_a_frame_is_a_reading() {
        let spec = parse_spec("channels c\nmessages m\nlabels l\nstart S\nrule S -> label l X\nrule X -> recv c m").unwrap();
        let cl = classify(&spec);
        let (l, x) = (Action::Label(spec.label_id("l").unwrap()), spec.nt_id("X").unwrap());
        let w = canon(&cl, &[Symbol::Act(l), Symbol::Nt(x)]).unwrap();
        let cands = abstraction_candidates(&cl, &w).unwrap();
        assert!(cands.contains(&Control { head: Head::ActNt(l, x, Cache::empty()), stack: vec![] }));
    }
}
