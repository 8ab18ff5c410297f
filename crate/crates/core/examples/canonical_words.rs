//! Words equal up to commuting symbols share one canonical form.

use apcps::model::{classify, parse_spec, Symbol};
use apcps::semantics::canon;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = parse_spec("channels c\nmessages m n\nlabels l\nstart S\nrule S -> recv c m\n")?;
    let cl = classify(&spec);
    let parse = |w: &str| -> Vec<Symbol> {
        w.split_whitespace()
            .map(|t| match t {
                "S" => Symbol::Nt(spec.nt_id("S").unwrap()),
                "l" => Symbol::Act(apcps::model::Action::Label(spec.label_id("l").unwrap())),
                "!m" | "!n" => Symbol::Act(apcps::model::Action::Send(spec.chan_id("c").unwrap(), spec.msg_id(&t[1..]).unwrap())),
                _ => Symbol::Act(apcps::model::Action::Recv(spec.chan_id("c").unwrap(), spec.msg_id(&t[1..]).unwrap())),
            })
            .collect()
    };
    let words = ["!m l ?m !n", "l !m ?m !n", "!m l ?m S", "?m !m l"];
    for w in words {
        println!("{w:<12} => {:?}", canon(&cl, &parse(w))?);
    }
    Ok(())
}
