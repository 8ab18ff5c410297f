use apcps::cli::{run, Command, RunReport, SemFlags, Semantics, EXIT_ERROR, EXIT_NOT_COVERED, EXIT_OK, EXIT_UNSHAPED};
use apcps::model::{check_shaped, classify, parse_spec};
use std::path::PathBuf;
use std::process::Command as Proc;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(format!("{}/corpus/{name}.apcps", env!("CARGO_MANIFEST_DIR")))
}

/// Runs the binary and parses what it printed.
fn cli(args: &[&str]) -> (i32, RunReport) {
    let out = Proc::new(env!("CARGO_BIN_EXE_apcps-cover")).args(args).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let rep = if args.contains(&"--json-like") {
        serde_json::from_str(&text).unwrap()
    } else {
        RunReport::from_lines(&text).unwrap()
    };
    let code = out.status.code().unwrap();
    assert_eq!(code, rep.exit_code);
    (code, rep)
}

fn path(name: &str) -> String {
    corpus(name).display().to_string()
}

#[test]
fn check_mix_prints_classes_and_bound() {
    let (code, rep) = cli(&["check", &path("mix")]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(rep.com_n, ["B"]);
    assert_eq!(rep.ncom_n, ["A", "C"]);
    assert_eq!(rep.shaped, Some(true));
    assert_eq!(rep.k, Some(2));
}

#[test]
fn check_loop_is_unshaped_with_cycle() {
    let (code, rep) = cli(&["check", &path("loop")]);
    assert_eq!(code, EXIT_UNSHAPED);
    assert_eq!(rep.shaped, Some(false));
    assert!(rep.violation.unwrap().contains("A -> A C"));
}

#[test]
fn missing_file_is_an_error() {
    let (code, rep) = cli(&["check", "/nonexistent/x.apcps"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(rep.error.is_some());
}

#[test]
fn malformed_spec_is_an_error() {
    let dir = std::env::temp_dir().join("apcps-cli-bad.apcps");
    std::fs::write(&dir, "rule -> ->\n").unwrap();
    let (code, _) = cli(&["check", dir.to_str().unwrap()]);
    assert_eq!(code, EXIT_ERROR);
}

#[test]
fn cover_spawn_is_covered_with_witness() {
    let (code, rep) = cli(&["cover", &path("spawn"), "l", "--witness"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(rep.verdict.as_deref(), Some("COVERED"));
    assert!(!rep.witness.is_empty());
}

#[test]
fn cover_dead_is_not_covered() {
    let (code, rep) = cli(&["cover", &path("dead"), "l"]);
    assert_eq!(code, EXIT_NOT_COVERED);
    assert_eq!(rep.verdict.as_deref(), Some("NOT_COVERED"));
    assert!(rep.iterations.is_some() && rep.basis_size.is_some());
}

#[test]
fn cover_unknown_label_is_an_error() {
    let (code, rep) = cli(&["cover", &path("dead"), "nope"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(rep.error.unwrap().contains("nope"));
}

#[test]
fn cover_unshaped_exits_three() {
    let (code, _) = cli(&["cover", &path("loop"), "l"]);
    assert_eq!(code, EXIT_UNSHAPED);
}

#[test]
fn cover_replicated_workers_is_definite() {
    let (code, rep) = cli(&["cover", &path("replicated_workers"), "critical", "critical"]);
    assert_eq!(code, EXIT_NOT_COVERED);
    assert!(rep.basis_size.is_some());
}

#[test]
fn explore_lab_std_hits_with_trace() {
    let (code, rep) = cli(&["explore", &path("lab"), "l", "--semantics", "std"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(rep.hit, Some(true));
    assert!(!rep.witness.is_empty());
}

#[test]
fn explore_dead_alt_misses_without_truncation() {
    let (code, rep) = cli(&["explore", &path("dead"), "l", "--semantics", "alt"]);
    assert_eq!(code, EXIT_NOT_COVERED);
    assert_eq!(rep.hit, Some(false));
    assert_eq!(rep.truncated, Some(false));
}

#[test]
fn explore_with_tiny_bounds_is_truncated() {
    let (_, rep) = cli(&["explore", &path("lock"), "crit", "--max-steps", "2"]);
    assert_eq!(rep.truncated, Some(true));
}

#[test]
fn explore_rejects_zero_bounds() {
    let (code, _) = cli(&["explore", &path("lab"), "l", "--max-configs", "0"]);
    assert_eq!(code, EXIT_ERROR);
}

#[test]
fn seeded_walks_repeat() {
    let a = cli(&["explore", &path("lock"), "crit", "--seed", "11", "--max-steps", "100"]).1;
    let b = cli(&["explore", &path("lock"), "crit", "--seed", "11", "--max-steps", "100"]).1;
    assert_eq!(a.witness, b.witness);
    assert_eq!(a.seed, Some(11));
}

#[test]
fn json_like_matches_lines() {
    let (_, lines) = cli(&["check", &path("mix")]);
    let (_, json) = cli(&["--json-like", "check", &path("mix")]);
    assert_eq!(RunReport { elapsed_ms: 0, ..lines }, RunReport { elapsed_ms: 0, ..json });
}

#[test]
fn every_report_round_trips() {
    for name in ["send", "recv", "mix", "loop", "lab", "dead", "spawn", "cachedlab", "lock"] {
        let spec = parse_spec(&std::fs::read_to_string(corpus(name)).unwrap()).unwrap();
        for label in spec.labels() {
            let rep = run(&Command::Cover {
                file: corpus(name),
                labels: vec![label.clone()],
                sem: flags(),
                witness: true,
                check_soundness: false,
                max_basis: 200_000,
            });
            assert!([EXIT_OK, EXIT_NOT_COVERED, EXIT_UNSHAPED].contains(&rep.exit_code), "{name}: {rep:?}");
            assert_eq!(RunReport::from_lines(&rep.to_lines()).unwrap(), rep);
            assert_eq!(serde_json::from_str::<RunReport>(&rep.to_json_like()).unwrap(), rep);
        }
    }
}

fn flags() -> SemFlags {
    SemFlags { k: None, dispatch_term_caches: true, fold_commutative_heads: true }
}

#[test]
fn cover_agrees_with_alt_explore_hits() {
    for name in ["send", "recv", "mix", "lab", "dead", "spawn", "cachedlab", "lock", "lock_twice"] {
        let spec = parse_spec(&std::fs::read_to_string(corpus(name)).unwrap()).unwrap();
        if !check_shaped(&spec, &classify(&spec)).shaped {
            continue;
        }
        for label in spec.labels() {
            for query in [vec![label.clone()], vec![label.clone(), label.clone()]] {
                let explored = run(&Command::Explore {
                    file: corpus(name),
                    labels: query.clone(),
                    semantics: Semantics::Alt,
                    sem: flags(),
                    max_steps: 40,
                    max_configs: 20_000,
                    seed: None,
                });
                if explored.hit != Some(true) {
                    continue;
                }
                let covered = run(&Command::Cover {
                    file: corpus(name),
                    labels: query.clone(),
                    sem: flags(),
                    witness: false,
                    check_soundness: false,
                    max_basis: 200_000,
                });
                assert_eq!(covered.verdict.as_deref(), Some("COVERED"), "{name} {query:?}");
            }
        }
    }
}
