//! The replicated-workers model: can two workers hold the lock at once?

use apcps::cover::{backward_cover, parse_query, CoverOptions};
use apcps::model::{check_shaped, classify, parse_spec};
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = parse_spec(include_str!("../corpus/replicated_workers.apcps"))?;
    let cl = classify(&spec);
    let shape = check_shaped(&spec, &cl);
    println!("shaped={} k={:?}", shape.shaped, shape.k);
    for query in ["critical", "critical critical"] {
        let t = Instant::now();
        let q = parse_query(&spec, query)?;
        let opts = CoverOptions { check_soundness: true, ..CoverOptions::default() };
        let d = backward_cover(&spec, &cl, &q, &opts)?;
        let steps = d.witness.as_ref().map_or(0, |w| w.trace.len());
        println!(
            "[{query}] covered={} iterations={} predecessors={} witness steps={steps} in {:?}",
            d.covered,
            d.iterations,
            d.predecessors,
            t.elapsed()
        );
    }
    Ok(())
}
