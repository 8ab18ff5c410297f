//! The `apcps-cover` command line: argument definitions, run reports and
//! exit codes. The binary only parses arguments and prints.

use crate::cover::{backward_cover, parse_query, shaped_bound, CoverError, CoverOptions};
use crate::gen::{rng, sample_alt_run, sample_std_run};
use crate::model::{check_shaped, classify, parse_spec, ApcpsSpec, Classification, LabelId};
use crate::semantics::{std_explore, AltOptions, AltSystem, Bounds, Exploration, TraceStep};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::PathBuf;
use std::time::Instant;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_COVERED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_UNSHAPED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "apcps-cover", version, about = "Coverability for asynchronous partially commutative pushdown systems")]
pub struct Cli {
    /// Print one structured document instead of `key: value` lines.
    #[arg(long, global = true)]
    pub json_like: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify non-terminals and check that stacks are shaped.
    Check { file: PathBuf },
    /// Decide whether the labels can be exposed at once.
    Cover {
        file: PathBuf,
        #[arg(required = true)]
        labels: Vec<String>,
        #[command(flatten)]
        sem: SemFlags,
        /// Include the replayed witness.
        #[arg(long)]
        witness: bool,
        /// Check every predecessor against a forward step while saturating.
        #[arg(long)]
        check_soundness: bool,
        #[arg(long, default_value_t = 200_000)]
        max_basis: usize,
    },
    /// Bounded forward search, or a seeded random run with `--seed`.
    Explore {
        file: PathBuf,
        #[arg(required = true)]
        labels: Vec<String>,
        #[arg(long, value_enum, default_value_t = Semantics::Alt)]
        semantics: Semantics,
        #[command(flatten)]
        sem: SemFlags,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        #[arg(long, default_value_t = 100_000)]
        max_configs: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SemFlags {
    /// Override the derived stack bound. The shape check still applies.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub dispatch_term_caches: bool,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub fold_commutative_heads: bool,
}

impl SemFlags {
    fn alt(&self) -> AltOptions {
        AltOptions {
            dispatch_term_caches: self.dispatch_term_caches,
            fold_commutative_heads: self.fold_commutative_heads,
            ..AltOptions::default()
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Semantics {
    Std,
    Alt,
}

/// Everything a run reports. Absent values print as `-`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub file: String,
    #[serde(rename = "ComN")]
    pub com_n: Vec<String>,
    #[serde(rename = "NComN")]
    pub ncom_n: Vec<String>,
    pub shaped: Option<bool>,
    pub k: Option<usize>,
    pub violation: Option<String>,
    pub query: Vec<String>,
    pub verdict: Option<String>,
    pub iterations: Option<usize>,
    pub basis_size: Option<usize>,
    pub predecessors: Option<usize>,
    pub soundness_checks: Option<usize>,
    pub oracle_queries: Option<usize>,
    pub semantics: Option<String>,
    pub seed: Option<u64>,
    pub hit: Option<bool>,
    pub truncated: Option<bool>,
    pub visited: Option<usize>,
    pub depth: Option<usize>,
    pub witness: Vec<String>,
    pub elapsed_ms: u64,
    pub error: Option<String>,
    pub exit_code: i32,
}

const BOOL_KEYS: &[&str] = &["shaped", "hit", "truncated"];
const LIST_KEYS: &[&str] = &["ComN", "NComN", "query"];
/// Keys written once per element.
const REPEATED_KEYS: &[&str] = &["witness"];
const NUMBER_KEYS: &[&str] = &[
    "k",
    "iterations",
    "basis_size",
    "predecessors",
    "soundness_checks",
    "oracle_queries",
    "seed",
    "visited",
    "depth",
    "elapsed_ms",
    "exit_code",
];

#[derive(Debug, Error)]
pub enum ReportParseError {
    #[error("line {0}: expected `key: value`")]
    Line(usize),
    #[error("{key}: bad value {value:?}")]
    Value { key: String, value: String },
    #[error(transparent)]
    Shape(#[from] serde_json::Error),
}

impl RunReport {
    /// `key: value` lines in field order.
    pub fn to_lines(&self) -> String {
        let Value::Object(map) = serde_json::to_value(self).expect("plain data") else { unreachable!() };
        let mut out = String::new();
        for (key, v) in map {
            let mut line = |text: &str| {
                out.push_str(&key);
                out.push_str(": ");
                out.push_str(text);
                out.push('\n');
            };
            match v {
                Value::Array(items) if REPEATED_KEYS.contains(&key.as_str()) => {
                    if items.is_empty() {
                        line("-");
                    }
                    for i in items {
                        line(i.as_str().unwrap_or_default());
                    }
                }
                Value::Array(items) if items.is_empty() => line("-"),
                Value::Array(items) => {
                    line(&items.iter().map(|i| i.as_str().unwrap_or_default()).collect::<Vec<_>>().join(", "))
                }
                Value::Null => line("-"),
                Value::Bool(b) => line(if b { "yes" } else { "no" }),
                Value::String(s) => line(&s),
                other => line(&other.to_string()),
            }
        }
        out
    }

    pub fn from_lines(text: &str) -> Result<RunReport, ReportParseError> {
        let mut map = Map::new();
        for (n, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let (key, value) = raw.split_once(": ").ok_or(ReportParseError::Line(n + 1))?;
            let bad = || ReportParseError::Value { key: key.into(), value: value.into() };
            let v = if REPEATED_KEYS.contains(&key) {
                let entry = map.entry(key.to_string()).or_insert_with(|| Value::Array(vec![]));
                if value != "-" {
                    entry.as_array_mut().ok_or_else(bad)?.push(Value::String(value.into()));
                }
                continue;
            } else if value == "-" && LIST_KEYS.contains(&key) {
                Value::Array(vec![])
            } else if value == "-" {
                Value::Null
            } else if LIST_KEYS.contains(&key) {
                Value::Array(value.split(", ").map(|s| Value::String(s.into())).collect())
            } else if BOOL_KEYS.contains(&key) {
                Value::Bool(match value {
                    "yes" => true,
                    "no" => false,
                    _ => return Err(bad()),
                })
            } else if NUMBER_KEYS.contains(&key) {
                serde_json::from_str(value).map_err(|_| bad())?
            } else {
                Value::String(value.into())
            };
            map.insert(key.to_string(), v);
        }
        Ok(serde_json::from_value(Value::Object(map))?)
    }

    pub fn to_json_like(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    pub fn render(&self, json_like: bool) -> String {
        if json_like {
            self.to_json_like() + "\n"
        } else {
            self.to_lines()
        }
    }
}

/// Runs one command. Failures are reported, never returned.
pub fn run(cmd: &Command) -> RunReport {
    let start = Instant::now();
    let (name, file) = match cmd {
        Command::Check { file } => ("check", file),
        Command::Cover { file, .. } => ("cover", file),
        Command::Explore { file, .. } => ("explore", file),
    };
    let mut rep = RunReport { command: name.into(), file: file.display().to_string(), ..RunReport::default() };
    let result = load(file).and_then(|(spec, cl)| {
        describe(&spec, &cl, &mut rep);
        match cmd {
            Command::Check { .. } => {
                rep.verdict = Some(if rep.shaped == Some(true) { "SHAPED" } else { "UNSHAPED" }.into());
                Ok(if rep.shaped == Some(true) { EXIT_OK } else { EXIT_UNSHAPED })
            }
            Command::Cover { labels, sem, witness, check_soundness, max_basis, .. } => {
                unshaped(&rep)?;
                let q = query(&spec, labels, &mut rep)?;
                let opts = CoverOptions {
                    alt: sem.alt(),
                    k: sem.k,
                    check_soundness: *check_soundness,
                    witness: *witness,
                    max_basis: *max_basis,
                };
                cover(&spec, &cl, &q, &opts, &mut rep)
            }
            Command::Explore { labels, semantics, sem, max_steps, max_configs, seed, .. } => {
                if *semantics == Semantics::Alt {
                    unshaped(&rep)?;
                }
                let q = query(&spec, labels, &mut rep)?;
                let bounds = Bounds { max_steps: *max_steps, max_configs: *max_configs };
                explore(&spec, &cl, &q, *semantics, sem, bounds, *seed, &mut rep)
            }
        }
    });
    rep.exit_code = match result {
        Ok(code) => code,
        Err(Failure::Unshaped(v)) => {
            rep.violation = Some(v);
            EXIT_UNSHAPED
        }
        Err(Failure::Error(e)) => {
            rep.error = Some(e);
            EXIT_ERROR
        }
    };
    rep.elapsed_ms = start.elapsed().as_millis() as u64;
    rep
}

enum Failure {
    Unshaped(String),
    Error(String),
}

impl From<CoverError> for Failure {
    fn from(e: CoverError) -> Self {
        match e {
            CoverError::NotShaped(v) => Failure::Unshaped(v),
            e => Failure::Error(e.to_string()),
        }
    }
}

/// The cache semantics and the backward search need a shaped spec.
fn unshaped(rep: &RunReport) -> Result<(), Failure> {
    match rep.shaped {
        Some(false) => Err(Failure::Unshaped(rep.violation.clone().unwrap_or_default())),
        _ => Ok(()),
    }
}

fn load(file: &PathBuf) -> Result<(ApcpsSpec, Classification), Failure> {
    let text = std::fs::read_to_string(file).map_err(|e| Failure::Error(format!("{}: {e}", file.display())))?;
    let spec = parse_spec(&text).map_err(|e| Failure::Error(format!("{}: {e}", file.display())))?;
    let cl = classify(&spec);
    Ok((spec, cl))
}

fn describe(spec: &ApcpsSpec, cl: &Classification, rep: &mut RunReport) {
    let names = |set: &std::collections::BTreeSet<_>| set.iter().map(|&a| spec.nt_name(a).to_string()).collect();
    rep.com_n = names(&cl.com_nonterminals);
    rep.ncom_n = names(&cl.ncom_nonterminals);
    let shape = check_shaped(spec, cl);
    rep.shaped = Some(shape.shaped);
    rep.k = shape.k;
    rep.violation = shape.describe_violation(spec);
}

fn query(spec: &ApcpsSpec, labels: &[String], rep: &mut RunReport) -> Result<Vec<LabelId>, Failure> {
    rep.query = labels.to_vec();
    Ok(parse_query(spec, &labels.join(" "))?)
}

fn cover(spec: &ApcpsSpec, cl: &Classification, q: &[LabelId], opts: &CoverOptions, rep: &mut RunReport) -> Result<i32, Failure> {
    let d = backward_cover(spec, cl, q, opts)?;
    rep.k = Some(d.k);
    rep.verdict = Some(if d.covered { "COVERED" } else { "NOT_COVERED" }.into());
    rep.iterations = Some(d.iterations);
    rep.basis_size = Some(d.basis_size);
    rep.predecessors = Some(d.predecessors);
    rep.soundness_checks = Some(d.soundness_checks);
    rep.oracle_queries = Some(d.oracle_queries);
    if let Some(w) = d.witness {
        rep.witness = w
            .trace
            .iter()
            .zip(&w.configs[1..])
            .map(|(s, c)| format!("rule {} on process {}: {}", s.rule, s.process, c.show(spec)))
            .collect();
    }
    Ok(if d.covered { EXIT_OK } else { EXIT_NOT_COVERED })
}

#[allow(clippy::too_many_arguments)]
fn explore(
    spec: &ApcpsSpec,
    cl: &Classification,
    q: &[LabelId],
    semantics: Semantics,
    sem: &SemFlags,
    bounds: Bounds,
    seed: Option<u64>,
    rep: &mut RunReport,
) -> Result<i32, Failure> {
    if bounds.max_steps == 0 || bounds.max_configs == 0 {
        return Err(Failure::Error("bounds must be positive".into()));
    }
    rep.semantics = Some(format!("{semantics:?}").to_lowercase());
    rep.seed = seed;
    let trace = |t: &[TraceStep]| t.iter().map(|s| format!("rule {} on process {}: {}", s.rule, s.process, s.digest)).collect();
    let hit = match (semantics, seed) {
        (Semantics::Std, None) => {
            let e = std_explore(spec, cl, bounds, q);
            summarize(&e, rep);
            if let Some(p) = &e.path {
                rep.witness = e.trace.as_deref().unwrap_or_default().iter().zip(&p[1..]).map(|(s, c)| format!("rule {} on process {}: {}", s.rule, s.process, c.show(spec))).collect();
            }
            e.hit
        }
        (Semantics::Alt, None) => {
            let k = shaped_bound(spec, cl, sem.k)?;
            rep.k = Some(k);
            let e = AltSystem::new(spec, cl, k, sem.alt()).explore(bounds, q).map_err(CoverError::from)?;
            summarize(&e, rep);
            if let Some(p) = &e.path {
                rep.witness = e.trace.as_deref().unwrap_or_default().iter().zip(&p[1..]).map(|(s, c)| format!("rule {} on process {}: {}", s.rule, s.process, c.show(spec))).collect();
            } else if let Some(t) = &e.trace {
                rep.witness = trace(t);
            }
            e.hit
        }
        (Semantics::Std, Some(s)) => {
            let run = sample_std_run(spec, cl, &mut rng(s), bounds.max_steps);
            walk(run.iter().map(|c| (c.exposes(q), c.show(spec))), bounds, rep)
        }
        (Semantics::Alt, Some(s)) => {
            let k = shaped_bound(spec, cl, sem.k)?;
            rep.k = Some(k);
            let run = sample_alt_run(&AltSystem::new(spec, cl, k, sem.alt()), &mut rng(s), bounds.max_steps).map_err(CoverError::from)?;
            walk(run.iter().map(|c| (c.exposes(q), c.show(spec))), bounds, rep)
        }
    };
    rep.verdict = Some(if hit { "HIT" } else { "NO_HIT" }.into());
    Ok(if hit { EXIT_OK } else { EXIT_NOT_COVERED })
}

fn summarize<C>(e: &Exploration<C>, rep: &mut RunReport) {
    rep.hit = Some(e.hit);
    rep.truncated = Some(e.truncated);
    rep.visited = Some(e.visited.len());
    rep.depth = Some(e.depth);
}

/// Reports a sampled run up to its first configuration exposing the query.
fn walk(run: impl Iterator<Item = (bool, String)>, bounds: Bounds, rep: &mut RunReport) -> bool {
    let mut seen = 0;
    let mut hit = false;
    for (exposed, shown) in run {
        if seen > 0 {
            rep.witness.push(shown);
        }
        seen += 1;
        if exposed {
            hit = true;
            break;
        }
    }
    rep.hit = Some(hit);
    rep.truncated = Some(!hit && seen > bounds.max_steps);
    rep.visited = Some(seen);
    rep.depth = Some(seen - 1);
    if !hit {
        rep.witness.clear();
    }
    hit
}
