//! Parse a spec and split its non-terminals by commutativity.

use apcps::model::{classify, parse_spec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = parse_spec(include_str!("../corpus/mix.apcps"))?;
    let cl = classify(&spec);
    for a in spec.nt_ids() {
        let class = if cl.is_com_nt(a) { "commutative" } else { "non-commutative" };
        println!("{:>4}  {class}", spec.nt_name(a));
    }
    for r in spec.rules() {
        println!("rule {}", spec.show_rule(r));
    }
    Ok(())
}
