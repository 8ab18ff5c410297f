//! Bounded breadth-first search in both semantics, printing the witness.

use apcps::model::{check_shaped, classify, parse_spec};
use apcps::semantics::{std_explore, AltOptions, AltSystem, Bounds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = parse_spec(include_str!("../corpus/spawn.apcps"))?;
    let cl = classify(&spec);
    let q = [spec.label_id("l").ok_or("no label l")?];
    let bounds = Bounds { max_steps: 50, max_configs: 10_000 };

    let std = std_explore(&spec, &cl, bounds, &q);
    println!("standard: hit={} visited={} depth={}", std.hit, std.visited.len(), std.depth);
    for c in std.path.iter().flatten() {
        println!("  {}", c.show(&spec));
    }

    let k = check_shaped(&spec, &cl).k.ok_or("unshaped")?;
    let alt = AltSystem::new(&spec, &cl, k, AltOptions::default()).explore(bounds, &q)?;
    println!("cache semantics: hit={} visited={} depth={}", alt.hit, alt.visited.len(), alt.depth);
    for (s, c) in alt.trace.iter().flatten().zip(alt.path.iter().flatten().skip(1)) {
        println!("  ({}) p{}  {}", s.rule, s.process, c.show(&spec));
    }
    Ok(())
}
