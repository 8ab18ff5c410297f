//! Decide whether stacks stay shaped, and report the bound or the cycle.

use apcps::model::{check_shaped, classify, parse_spec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (name, text) in [
        ("mix", include_str!("../corpus/mix.apcps")),
        ("loop", include_str!("../corpus/loop.apcps")),
        ("replicated_workers", include_str!("../corpus/replicated_workers.apcps")),
    ] {
        let spec = parse_spec(text)?;
        let rep = check_shaped(&spec, &classify(&spec));
        match rep.k {
            Some(k) if rep.shaped => println!("{name}: shaped, k = {k}"),
            _ => println!("{name}: unshaped, {}", rep.describe_violation(&spec).unwrap_or_default()),
        }
    }
    Ok(())
}
