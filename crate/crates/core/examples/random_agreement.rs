//! Random shaped specs: the backward verdict against bounded forward search.

use apcps::cover::{backward_cover, CoverOptions};
use apcps::gen::{random_shaped_spec, rng, SpecParams};
use apcps::model::LabelId;
use apcps::semantics::{std_explore, Bounds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let mut r = rng(seed);
    let bounds = Bounds { max_steps: 40, max_configs: 10_000 };
    for i in 0..10 {
        let (spec, cl, k) = random_shaped_spec(&mut r, &SpecParams::default());
        let q = [LabelId(0)];
        let d = backward_cover(&spec, &cl, &q, &CoverOptions::default())?;
        let f = std_explore(&spec, &cl, bounds, &q);
        let forward = match (f.hit, f.truncated) {
            (true, _) => "hit",
            (false, true) => "no hit (bounded)",
            (false, false) => "no hit (exhaustive)",
        };
        println!("spec {i}: k={k} backward covered={} forward {forward}", d.covered);
        assert!(!f.hit || d.covered);
    }
    Ok(())
}
