//! Coverability checking for asynchronous partially commutative pushdown
//! systems with shaped stacks.

pub mod model;
pub mod multiset;
pub mod order;
pub mod petri;
pub mod semantics;
pub mod cli;
pub mod cover;
pub mod gen;

pub use multiset::{parikh, Multiset};
