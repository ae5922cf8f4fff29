//! Deterministic CSP over lazy interaction trees, a compiler from
//! state-machine robot models into that algebra, and an animator.

pub mod animator;
pub mod event;
pub mod finmap;
pub mod itree;
pub mod laws;
pub mod model;
pub mod ops;
pub mod semantics;
pub mod service;
pub mod value;

pub use event::{Chan, Event, EventSet, HideList};
pub use finmap::{FinMap, Rel, RenSeq};
pub use itree::{approx_eq, observe, ITree, Lazy, Observation};
pub use value::{Dir, Value};
