//! The order on configurations and antichain bases of upward-closed sets.

use apcps::model::{classify, parse_spec};
use apcps::order::{basis_insert, leq_config, Basis};
use apcps::semantics::{AltConfig, AltOptions, AltSystem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = parse_spec(include_str!("../corpus/lock.apcps"))?;
    let cl = classify(&spec);
    let sys = AltSystem::new(&spec, &cl, 1, AltOptions::default());
    let mut frontier = vec![AltConfig::initial(&spec)];
    let mut seen = vec![];
    let mut basis: Basis<AltConfig> = Basis::new();
    for _ in 0..6 {
        frontier = frontier.iter().flat_map(|c| sys.step(c).unwrap()).collect();
        for c in &frontier {
            basis = basis_insert(&basis, c.clone());
        }
        seen.extend(frontier.iter().cloned());
    }
    println!("{} configurations seen, {} minimal", seen.len(), basis.len());
    for b in basis.iter().take(5) {
        println!("  {}", b.show(&spec));
    }
    let covered = seen.iter().all(|c| basis.iter().any(|b| leq_config(b, c)));
    println!("every configuration seen lies above the basis: {covered}");
    Ok(())
}
