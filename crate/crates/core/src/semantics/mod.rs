//! Small-step interpreters for the standard and the cache-based semantics,
//! bounded breadth-first explorers over both, and the abstraction relating
//! them.

mod abstraction;
mod alt;
mod standard;
mod word;

pub use abstraction::{abstract_config, abstraction_candidates, is_abstraction_of, AbstractionError};
pub use alt::{
    AltConfig, AltMove, AltOptions, AltSystem, Cache, CacheSort, Control, Head, LocalStep,
    SemanticsError,
};
pub use standard::{std_explore, std_step, std_successors, StdConfig, StdMove};
pub use word::{canon, CanonicalWord};

use serde::Serialize;
use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

/// Limits for forward exploration. `max_steps` bounds the BFS depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub max_steps: usize,
    pub max_configs: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { max_steps: 10_000, max_configs: 100_000 }
    }
}

/// One witness step: rule tag, acting process index and resulting config digest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub rule: u8,
    pub process: usize,
    pub digest: String,
}

#[derive(Clone, Debug)]
pub struct Exploration<C> {
    pub hit: bool,
    pub trace: Option<Vec<TraceStep>>,
    /// Configurations along the witness, starting with the initial one.
    pub path: Option<Vec<C>>,
    pub truncated: bool,
    /// Every configuration discovered, in BFS order.
    pub visited: Vec<C>,
    pub depth: usize,
}

pub fn digest<C: Hash>(c: &C) -> String {
    let mut h = DefaultHasher::new();
    c.hash(&mut h);
    format!("{:016x}", h.finish())
}

/// Generic breadth-first search with parent pointers.
pub(crate) fn bfs<C, E>(
    init: C,
    bounds: Bounds,
    mut succ: impl FnMut(&C) -> Result<Vec<((u8, usize), C)>, E>,
    mut goal: impl FnMut(&C) -> bool,
) -> Result<Exploration<C>, E>
where
    C: Clone + Eq + Hash,
{
    let mut arena: Vec<C> = vec![init.clone()];
    let mut parent: Vec<Option<(usize, (u8, usize))>> = vec![None];
    let mut depth_of: Vec<usize> = vec![0];
    let mut index: HashMap<C, usize> = HashMap::from([(init, 0)]);
    let mut truncated = false;
    let mut found = None;
    let mut next = 0;
    let mut depth = 0;
    while next < arena.len() {
        let i = next;
        next += 1;
        depth = depth.max(depth_of[i]);
        if goal(&arena[i]) {
            found = Some(i);
            break;
        }
        if depth_of[i] >= bounds.max_steps {
            if !succ(&arena[i])?.is_empty() {
                truncated = true;
            }
            continue;
        }
        for (mv, c) in succ(&arena[i])? {
            if index.contains_key(&c) {
                continue;
            }
            if arena.len() >= bounds.max_configs {
                truncated = true;
                continue;
            }
            index.insert(c.clone(), arena.len());
            arena.push(c);
            parent.push(Some((i, mv)));
            depth_of.push(depth_of[i] + 1);
        }
    }
    let (trace, path) = match found {
        None => (None, None),
        Some(mut i) => {
            let mut steps = Vec::new();
            let mut path = vec![arena[i].clone()];
            while let Some((p, (rule, process))) = parent[i] {
                steps.push(TraceStep { rule, process, digest: digest(&arena[i]) });
                i = p;
                path.push(arena[i].clone());
            }
            steps.reverse();
            path.reverse();
            (Some(steps), Some(path))
        }
    };
    Ok(Exploration { hit: found.is_some(), trace, path, truncated: truncated && found.is_none(), visited: arena, depth })
}

/// Whether every queried label can be assigned a distinct process that exposes it.
pub(crate) fn labels_matched<P>(
    procs: &[&P],
    query: &[crate::model::LabelId],
    exposes: impl Fn(&P, crate::model::LabelId) -> bool,
) -> bool {
    crate::order::saturates_left(query.len(), procs.len(), |i, j| exposes(procs[j], query[i]))
}
