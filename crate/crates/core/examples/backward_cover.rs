//! Decide coverability with the backward search and replay the witness.

use apcps::cover::{backward_cover, parse_query, CoverOptions};
use apcps::model::{classify, parse_spec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (name, text, query) in [
        ("spawn", include_str!("../corpus/spawn.apcps"), "l"),
        ("dead", include_str!("../corpus/dead.apcps"), "l"),
        ("lock", include_str!("../corpus/lock.apcps"), "crit crit"),
        ("lock_twice", include_str!("../corpus/lock_twice.apcps"), "crit crit"),
    ] {
        let spec = parse_spec(text)?;
        let cl = classify(&spec);
        let q = parse_query(&spec, query)?;
        let d = backward_cover(&spec, &cl, &q, &CoverOptions::default())?;
        println!(
            "{name} [{query}]: covered={} k={} iterations={} basis={}",
            d.covered, d.k, d.iterations, d.basis_size
        );
        if let Some(w) = d.witness {
            for (s, c) in w.trace.iter().zip(&w.configs[1..]) {
                println!("  ({}) p{}  {}", s.rule, s.process, c.show(&spec));
            }
        }
    }
    Ok(())
}
