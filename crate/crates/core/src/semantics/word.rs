use crate::model::{Classification, Symbol, UnknownSymbol};
use crate::multiset::Multiset;

/// Normal form of a word modulo the commutation congruence: a leading
/// commutative block followed by non-commutative symbols, each trailed by
/// the commutative block that follows it.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalWord {
    pub block: Multiset<Symbol>,
    pub spine: Vec<(Symbol, Multiset<Symbol>)>,
}

impl CanonicalWord {
    pub fn is_empty(&self) -> bool {
        self.block.is_empty() && self.spine.is_empty()
    }

    pub fn len(&self) -> usize {
        self.block.len() + self.spine.iter().map(|(_, b)| 1 + b.len()).sum::<usize>()
    }

    /// Canonical form of `self · other`.
    pub fn concat(&self, other: &CanonicalWord) -> CanonicalWord {
        let mut out = self.clone();
        match out.spine.last_mut() {
            None => out.block = out.block.sum(&other.block),
            Some((_, tail)) => *tail = tail.sum(&other.block),
        }
        out.spine.extend(other.spine.iter().cloned());
        out
    }

    /// Symbols that may be rewritten or fired next.
    pub fn heads(&self) -> Vec<Symbol> {
        if self.block.is_empty() {
            self.spine.first().map(|(s, _)| *s).into_iter().collect()
        } else {
            self.block.distinct().copied().collect()
        }
    }

    /// Removes one head occurrence of `s`.
    pub fn without_head(&self, s: Symbol) -> Option<CanonicalWord> {
        if let Some(block) = self.block.without(&s) {
            return Some(CanonicalWord { block, spine: self.spine.clone() });
        }
        match self.spine.first() {
            Some((h, b)) if self.block.is_empty() && *h == s => Some(CanonicalWord {
                block: b.clone(),
                spine: self.spine[1..].to_vec(),
            }),
            _ => None,
        }
    }

    /// One representative word.
    pub fn to_word(&self) -> Vec<Symbol> {
        let mut w: Vec<Symbol> = self.block.elements().copied().collect();
        for (s, b) in &self.spine {
            w.push(*s);
            w.extend(b.elements().copied());
        }
        w
    }
}

/// Canonical form of a word.
pub fn canon(cl: &Classification, word: &[Symbol]) -> Result<CanonicalWord, UnknownSymbol> {
    let mut out = CanonicalWord::default();
    for &s in word {
        if !cl.declares(s) {
            return Err(UnknownSymbol(s));
        }
        if cl.is_com(s) {
            match out.spine.last_mut() {
                None => out.block.insert(s),
                Some((_, b)) => b.insert(s),
            }
        } else {
            out.spine.push((s, Multiset::new()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{classify, parse_spec, Action};

    #[test]
    fn blocks_and_spine() {
        let spec =
            parse_spec("channels c\nmessages m\nlabels l\nstart S\nrule S -> recv c m").unwrap();
        let cl = classify(&spec);
        let (c, m, l) = (spec.chan_id("c").unwrap(), spec.msg_id("m").unwrap(), spec.label_id("l").unwrap());
        let send = Symbol::Act(Action::Send(c, m));
        let lab = Symbol::Act(Action::Label(l));
        let recv = Symbol::Act(Action::Recv(c, m));
        let w = canon(&cl, &[send, lab]).unwrap();
        assert_eq!(w.block.len(), 2);
        assert!(w.spine.is_empty());
        let w = canon(&cl, &[recv]).unwrap();
        assert!(w.block.is_empty());
        assert_eq!(w.spine, vec![(recv, Multiset::new())]);
        assert_eq!(canon(&cl, &[send, lab]), canon(&cl, &[lab, send]));
        assert_ne!(canon(&cl, &[send, recv]), canon(&cl, &[recv, send]));
        let w = canon(&cl, &[lab, recv, send, recv]).unwrap();
        assert_eq!(w.to_word(), vec![lab, recv, send, recv]);
        assert_eq!(w.heads(), vec![lab]);
        assert_eq!(w.without_head(lab).unwrap().heads(), vec![recv]);
    }
}
