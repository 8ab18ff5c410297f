//! Petri nets: backward coverability, and the net of a commutative grammar.

use apcps::model::{classify, parse_spec, Symbol};
use apcps::petri::{encode_ccfg, petri_coverable, Marking, PetriNet, Transition};
use apcps::Multiset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // p0 -> p1 + p1, then p1 + p1 -> p2.
    let net = PetriNet {
        places: vec!["p0".into(), "p1".into(), "p2".into()],
        transitions: vec![
            Transition { pre: Marking(vec![1, 0, 0]), post: Marking(vec![0, 2, 0]), tag: "split".into() },
            Transition { pre: Marking(vec![0, 2, 0]), post: Marking(vec![0, 0, 1]), tag: "join".into() },
        ],
    };
    let init = Marking(vec![2, 0, 0]);
    let target = Marking(vec![0, 1, 1]);
    let res = petri_coverable(&net, &init, &target);
    println!("cover {} from {}: {}", net.show_marking(&target), net.show_marking(&init), res.coverable);
    if let Some(w) = &res.witness {
        let tags: Vec<&str> = w.iter().map(|&t| net.transitions[t].tag.as_str()).collect();
        println!("  firing {}", tags.join(", "));
    }

    // Every commutative derivation is a firing sequence of this net.
    let spec = parse_spec("channels c\nmessages m\nstart R\nrule R -> send c m R\nrule R -> eps\n")?;
    let cl = classify(&spec);
    let enc = encode_ccfg(&spec, &cl)?;
    print!("{}", enc.net);
    let r = spec.nt_id("R").unwrap();
    let send = Symbol::Act(apcps::model::Action::Send(spec.chan_id("c").unwrap(), spec.msg_id("m").unwrap()));
    let three: Multiset<Symbol> = std::iter::repeat_n(send, 3).collect();
    let target = enc.marking_of(&three).ok_or("symbol without a place")?;
    println!("R derives three sends: {}", petri_coverable(&enc.net, &enc.initial(r), &target).coverable);
    Ok(())
}
