//! Channels, events, and the event collections used by the CSP operators.

use std::fmt;
use std::sync::Arc;

use rustc_hash::{FxBuildHasher, FxHashSet};

use crate::value::Value;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chan(Arc<str>);

impl Chan {
    pub fn new(name: &str) -> Chan {
        Chan(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// Name with the first letter upper-cased, as printed in menus.
    pub fn display_name(&self) -> String {
        let mut cs = self.0.chars();
        match cs.next() {
            Some(c) => c.to_uppercase().chain(cs).collect(),
            None => String::new(),
        }
    }
}

impl fmt::Debug for Chan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Chan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A channel paired with a payload.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Event {
    pub chan: Chan,
    pub payload: Value,
}

impl Event {
    pub fn new(chan: &Chan, payload: Value) -> Event {
        Event { chan: chan.clone(), payload }
    }

    /// Menu rendering, e.g. `Gas (Din,[(0,0)])`.
    pub fn display(&self) -> String {
        format!("{} {}", self.chan.display_name(), self.payload)
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.chan, self.payload)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.chan, self.payload)
    }
}

/// A set of events given by whole channels plus individual events.
#[derive(Clone, Default, Debug)]
pub struct EventSet {
    chans: FxHashSet<Chan>,
    events: FxHashSet<Event>,
}

impl EventSet {
    pub fn empty() -> EventSet {
        EventSet::default()
    }

    pub fn of_events(events: impl IntoIterator<Item = Event>) -> EventSet {
        EventSet { chans: FxHashSet::default(), events: events.into_iter().collect() }
    }

    pub fn of_chans<'a>(chans: impl IntoIterator<Item = &'a Chan>) -> EventSet {
        EventSet { chans: chans.into_iter().cloned().collect(), events: FxHashSet::default() }
    }

    pub fn add_chan(&mut self, c: &Chan) {
        self.chans.insert(c.clone());
    }

    pub fn add_event(&mut self, e: Event) {
        self.events.insert(e);
    }

    pub fn union(mut self, other: &EventSet) -> EventSet {
        self.chans.extend(other.chans.iter().cloned());
        self.events.extend(other.events.iter().cloned());
        self
    }

    pub fn contains(&self, e: &Event) -> bool {
        self.chans.contains(&e.chan) || self.events.contains(e)
    }

    pub fn is_empty(&self) -> bool {
        self.chans.is_empty() && self.events.is_empty()
    }
}

/// Ordered list of events to hide; earlier entries have higher priority.
#[derive(Clone, Default, Debug)]
pub struct HideList {
    order: indexmap::IndexSet<Event, FxBuildHasher>,
}

impl HideList {
    pub fn new(events: impl IntoIterator<Item = Event>) -> HideList {
        HideList { order: events.into_iter().collect() }
    }

    pub fn push(&mut self, e: Event) {
        self.order.insert(e);
    }

    pub fn extend(&mut self, es: impl IntoIterator<Item = Event>) {
        self.order.extend(es);
    }

    /// Priority rank of `e`, or `None` when `e` is not hidden.
    pub fn rank(&self, e: &Event) -> Option<usize> {
        self.order.get_index_of(e)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.order.iter()
    }
}
