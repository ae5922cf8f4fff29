//! Deterministic CSP operators over interaction trees.
//!
//! Silent steps are consumed before visible choices are combined, so
//! internal progress always has priority over the environment.

use std::sync::Arc;

use crate::event::{Chan, Event, EventSet, HideList};
use rustc_hash::FxHashMap;

use crate::finmap::{FinMap, Map, Rel, RenSeq};
use crate::itree::{bind, kont, ret, skip, stop, Choices, ITree, Lazy};
use crate::value::Value;

/// `c?x:V`, returning the received payload.
pub fn inp(c: &Chan, values: impl IntoIterator<Item = Value>) -> ITree {
    ITree::vis(FinMap::from_pairs(values.into_iter().map(|v| {
        let r = v.clone();
        (Event::new(c, v), Lazy::now(ret(r)))
    })))
}

/// `c!v`.
pub fn outp(c: &Chan, v: Value) -> ITree {
    ITree::vis(FinMap::from_pairs([(Event::new(c, v), Lazy::now(skip()))]))
}

/// Event prefix `e → P`.
pub fn prefix(e: Event, p: impl Fn() -> ITree + Send + Sync + 'static) -> ITree {
    ITree::vis(FinMap::from_pairs([(e, Lazy::new(p))]))
}

pub fn guard(b: bool) -> ITree {
    if b {
        skip()
    } else {
        stop()
    }
}

/// Merge of two choice functions used by [`genchoice`].
pub type Merge = Arc<dyn Fn(&Choices, &Choices) -> Choices + Send + Sync>;

pub fn merge_excl() -> Merge {
    Arc::new(|f, g| f.merge_excl(g))
}

pub fn merge_override() -> Merge {
    Arc::new(|f, g| f.override_with(g))
}

/// `M˘(F, G) = M(G, F)`.
pub fn converse(m: Merge) -> Merge {
    Arc::new(move |f, g| m(g, f))
}

/// Generalised choice `P ⟨M⟩ Q`.
pub fn genchoice(p: ITree, m: Merge, q: ITree) -> ITree {
    match (&p, &q) {
        (ITree::Vis(f), ITree::Vis(g)) => ITree::vis(m(f, g)),
        (ITree::Ret(x), ITree::Ret(y)) => {
            if x == y {
                p.clone()
            } else {
                stop()
            }
        }
        (ITree::Sil(p1), _) => {
            let p1 = p1.clone();
            ITree::sil(move || genchoice(p1.force(), m.clone(), q.clone()))
        }
        (_, ITree::Sil(q1)) => {
            let q1 = q1.clone();
            ITree::sil(move || genchoice(p.clone(), m.clone(), q1.force()))
        }
        (ITree::Ret(_), ITree::Vis(_)) => p,
        (ITree::Vis(_), ITree::Ret(_)) => q,
    }
}

/// External choice: events offered by both sides are withdrawn.
pub fn extchoice(p: ITree, q: ITree) -> ITree {
    genchoice(p, merge_excl(), q)
}

/// Biased choice `P ⊞ Q`: `P` wins on shared events.
pub fn extchoice_biased(p: ITree, q: ITree) -> ITree {
    genchoice(q, merge_override(), p)
}

/// External choice over many branches, folded from the right.
pub fn extchoice_all(mut branches: Vec<ITree>) -> ITree {
    let Some(mut acc) = branches.pop() else { return stop() };
    while let Some(b) = branches.pop() {
        acc = extchoice(b, acc);
    }
    acc
}

/// Parallel composition synchronising on `sync`.
///
/// A non-synchronised event offered by both sides is withdrawn. In the merged
/// menu the right operand's independent events come first, then the left
/// operand's, then synchronised events.
pub fn parallel(p: ITree, q: ITree, sync: Arc<EventSet>) -> ITree {
    match (&p, &q) {
        (ITree::Sil(p1), _) => {
            let p1 = p1.clone();
            ITree::sil(move || parallel(p1.force(), q.clone(), sync.clone()))
        }
        (_, ITree::Sil(q1)) => {
            let q1 = q1.clone();
            ITree::sil(move || parallel(p.clone(), q1.force(), sync.clone()))
        }
        (ITree::Ret(x), ITree::Ret(y)) => ret(Value::tuple([x.clone(), y.clone()])),
        (ITree::Ret(_), ITree::Vis(g)) => ITree::vis(FinMap::from_pairs(
            g.iter().filter(|(e, _)| !sync.contains(e)).map(|(e, q1)| {
                let (p, q1, sync) = (p.clone(), q1.clone(), sync.clone());
                (e.clone(), Lazy::new(move || parallel(p.clone(), q1.force(), sync.clone())))
            }),
        )),
        (ITree::Vis(f), ITree::Ret(_)) => ITree::vis(FinMap::from_pairs(
            f.iter().filter(|(e, _)| !sync.contains(e)).map(|(e, p1)| {
                let (q, p1, sync) = (q.clone(), p1.clone(), sync.clone());
                (e.clone(), Lazy::new(move || parallel(p1.force(), q.clone(), sync.clone())))
            }),
        )),
        (ITree::Vis(f), ITree::Vis(g)) => {
            let mut out = FinMap::new();
            for (e, q1) in g.iter() {
                if !sync.contains(e) && !f.contains_key(e) {
                    let (p, q1, sync) = (p.clone(), q1.clone(), sync.clone());
                    out.insert(e.clone(), Lazy::new(move || parallel(p.clone(), q1.force(), sync.clone())));
                }
            }
            for (e, p1) in f.iter() {
                if !sync.contains(e) && !g.contains_key(e) {
                    let (q, p1, sync) = (q.clone(), p1.clone(), sync.clone());
                    out.insert(e.clone(), Lazy::new(move || parallel(p1.force(), q.clone(), sync.clone())));
                }
            }
            for (e, p1) in f.iter() {
                if sync.contains(e) {
                    if let Some(q1) = g.get(e) {
                        let (p1, q1, sync) = (p1.clone(), q1.clone(), sync.clone());
                        out.insert(e.clone(), Lazy::new(move || parallel(p1.force(), q1.force(), sync.clone())));
                    }
                }
            }
            ITree::vis(out)
        }
    }
}

pub fn interleave(p: ITree, q: ITree) -> ITree {
    parallel(p, q, Arc::new(EventSet::empty()))
}

/// Parallel composition whose result is `()` once both sides return.
pub fn parallel_unit(p: ITree, q: ITree, sync: Arc<EventSet>) -> ITree {
    bind(parallel(p, q, sync), kont(|_| skip()))
}

/// `P \ A`: one hidden initial event becomes a silent step; two or more
/// hidden initial events deadlock.
pub fn hide(p: ITree, a: Arc<EventSet>) -> ITree {
    match p {
        ITree::Ret(_) => p,
        ITree::Sil(p1) => ITree::sil(move || hide(p1.force(), a.clone())),
        ITree::Vis(f) => {
            let hidden: Vec<&Event> = f.keys().filter(|e| a.contains(e)).collect();
            match hidden.len() {
                0 => ITree::vis(f.map(|_, p1| {
                    let (p1, a) = (p1.clone(), a.clone());
                    Lazy::new(move || hide(p1.force(), a.clone()))
                })),
                1 => {
                    let p1 = f.get(hidden[0]).expect("key").clone();
                    ITree::sil(move || hide(p1.force(), a.clone()))
                }
                _ => stop(),
            }
        }
    }
}

/// `P \\ₚ el`, equal to hiding each event of `el` in turn: the hidden initial
/// event listed first is taken silently.
pub fn hidep(p: ITree, el: Arc<HideList>) -> ITree {
    match p {
        ITree::Ret(_) => p,
        ITree::Sil(p1) => ITree::sil(move || hidep(p1.force(), el.clone())),
        ITree::Vis(f) => {
            let first = f.iter().filter_map(|(e, p1)| el.rank(e).map(|r| (r, p1))).min_by_key(|(r, _)| *r);
            match first {
                Some((_, p1)) => {
                    let p1 = p1.clone();
                    ITree::sil(move || hidep(p1.force(), el.clone()))
                }
                None => ITree::vis(f.map(|_, p1| {
                    let (p1, el) = (p1.clone(), el.clone());
                    Lazy::new(move || hidep(p1.force(), el.clone()))
                })),
            }
        }
    }
}

/// Reference form of [`hidep`] as a left fold of single-event hiding.
pub fn hidep_fold(p: ITree, el: &[Event]) -> ITree {
    el.iter().fold(p, |q, e| hide(q, Arc::new(EventSet::of_events([e.clone()]))))
}

/// Renaming relation indexed by source event.
#[derive(Debug, Default)]
pub struct RenRel {
    by_source: FxHashMap<Event, Vec<Event>>,
}

impl RenRel {
    pub fn new(rel: &Rel<Event, Event>) -> RenRel {
        let mut by_source: FxHashMap<Event, Vec<Event>> = FxHashMap::default();
        for (a, b) in rel.pairs() {
            by_source.entry(a.clone()).or_default().push(b.clone());
        }
        RenRel { by_source }
    }
}

/// `P⟦ρ⟧`: targets reachable from two or more initial events are blocked.
pub fn rename(p: ITree, rho: Arc<RenRel>) -> ITree {
    match p {
        ITree::Ret(_) => p,
        ITree::Sil(p1) => ITree::sil(move || rename(p1.force(), rho.clone())),
        ITree::Vis(f) => {
            let mut sources: Map<Event, Vec<&Event>> = Map::default();
            for src in f.keys() {
                for tgt in rho.by_source.get(src).into_iter().flatten() {
                    sources.entry(tgt.clone()).or_default().push(src);
                }
            }
            ITree::vis(FinMap::from_pairs(sources.into_iter().filter(|(_, s)| s.len() == 1).map(|(tgt, s)| {
                let (p1, rho) = (f.get(s[0]).expect("key").clone(), rho.clone());
                (tgt, Lazy::new(move || rename(p1.force(), rho.clone())))
            })))
        }
    }
}

/// Renaming sequence indexed by source event, keeping sequence positions.
#[derive(Debug, Default)]
pub struct RenIndex {
    by_source: FxHashMap<Event, Vec<(usize, Event)>>,
    len: usize,
}

impl RenIndex {
    pub fn new(seq: &RenSeq<Event, Event>) -> RenIndex {
        let mut by_source: FxHashMap<Event, Vec<(usize, Event)>> = FxHashMap::default();
        for (i, (a, b)) in seq.items().iter().enumerate() {
            by_source.entry(a.clone()).or_default().push((i, b.clone()));
        }
        RenIndex { by_source, len: seq.len() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The renamed choice function for the domain of `f`.
    fn apply<'a>(&self, f: &'a Choices) -> Vec<(Event, &'a Lazy)> {
        let mut cands: Vec<(usize, &Event, &Event)> = Vec::new();
        for src in f.keys() {
            for (i, tgt) in self.by_source.get(src).into_iter().flatten() {
                cands.push((*i, src, tgt));
            }
        }
        cands.sort_by_key(|(i, _, _)| *i);
        let mut best: Map<&Event, &Event> = Map::default();
        for (_, src, tgt) in &cands {
            best.entry(*tgt).or_insert(*src);
        }
        // Menu order follows the source menu, then sequence order.
        let mut out: Map<Event, &'a Lazy> = Map::default();
        for src in f.keys() {
            for (_, tgt) in self.by_source.get(src).into_iter().flatten() {
                if best.get(tgt) == Some(&src) && !out.contains_key(tgt) {
                    out.insert(tgt.clone(), f.get(src).expect("key"));
                }
            }
        }
        out.into_iter().collect()
    }
}

/// `P⟦ϱ⟧ₚ`: among initial events renamed to the same target, the pair listed
/// first in `ϱ` wins; unlisted events are blocked.
pub fn renamep(p: ITree, rho: Arc<RenIndex>) -> ITree {
    match p {
        ITree::Ret(_) => p,
        ITree::Sil(p1) => ITree::sil(move || renamep(p1.force(), rho.clone())),
        ITree::Vis(f) => {
            let renamed = rho.apply(&f);
            ITree::vis(FinMap::from_pairs(renamed.into_iter().map(|(tgt, p1)| {
                let (p1, rho) = (p1.clone(), rho.clone());
                (tgt, Lazy::new(move || renamep(p1.force(), rho.clone())))
            })))
        }
    }
}

/// Reference form of one [`renamep`] step on a choice function, written
/// directly from the relational definition.
pub fn renamep_choices_reference(f: &Choices, rho: &RenSeq<Event, Event>) -> Vec<(Event, Event)> {
    let restricted = rho.dresl(|a| f.contains_key(a)).drop_dup();
    let inv = restricted.ran().inverse().mk_functional();
    inv.iter().map(|(t, s)| (t.clone(), s.clone())).collect()
}

/// `P △ Q`: `Q`'s initial events take `Q` over; others continue `P`.
pub fn interrupt(p: ITree, q: ITree) -> ITree {
    match (&p, &q) {
        (ITree::Sil(p1), _) => {
            let p1 = p1.clone();
            ITree::sil(move || interrupt(p1.force(), q.clone()))
        }
        (_, ITree::Sil(q1)) => {
            let q1 = q1.clone();
            ITree::sil(move || interrupt(p.clone(), q1.force()))
        }
        (ITree::Ret(_), _) => p,
        (_, ITree::Ret(_)) => q,
        (ITree::Vis(f), ITree::Vis(g)) => {
            let left = f.anti_restrict(|e| g.contains_key(e)).map(|_, p1| {
                let (p1, q) = (p1.clone(), q.clone());
                Lazy::new(move || interrupt(p1.force(), q.clone()))
            });
            ITree::vis(left.override_with(g))
        }
    }
}

/// `P [A⟩ Q`: any event of `A` switches to `Q`.
pub fn exception(p: ITree, a: Arc<EventSet>, q: Lazy) -> ITree {
    match p {
        ITree::Ret(_) => p,
        ITree::Sil(p1) => ITree::sil(move || exception(p1.force(), a.clone(), q.clone())),
        ITree::Vis(f) => ITree::vis(f.map(|e, p1| {
            if a.contains(e) {
                q.clone()
            } else {
                let (p1, a, q) = (p1.clone(), a.clone(), q.clone());
                Lazy::new(move || exception(p1.force(), a.clone(), q.clone()))
            }
        })),
    }
}
