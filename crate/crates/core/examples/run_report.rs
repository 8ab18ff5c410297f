//! Build a command report in-process and print both output formats.

use apcps::cli::{run, Command, RunReport, SemFlags};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let file = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/spawn.apcps"));
    let rep = run(&Command::Cover {
        file,
        labels: vec!["l".into()],
        sem: SemFlags { k: None, dispatch_term_caches: true, fold_commutative_heads: true },
        witness: true,
        check_soundness: false,
        max_basis: 200_000,
    });
    let lines = rep.to_lines();
    print!("{lines}");
    println!("{}", rep.to_json_like());
    assert_eq!(RunReport::from_lines(&lines)?, rep);
    println!("exit code {}", rep.exit_code);
    Ok(())
}
