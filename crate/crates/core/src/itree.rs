//! Lazy interaction trees.
//!
//! A tree is a return value, a silent step, or a finite choice of visible
//! events. Children are suspended behind [`Lazy`] so infinite behaviours are
//! built without forcing them.

use std::fmt;
use std::sync::Arc;

use crate::event::Event;
use crate::finmap::FinMap;
use crate::value::Value;

/// Suspended subtree. Forcing is pure; repeated forcing rebuilds the node.
#[derive(Clone)]
pub struct Lazy(Arc<dyn Fn() -> ITree + Send + Sync>);

impl Lazy {
    pub fn new(f: impl Fn() -> ITree + Send + Sync + 'static) -> Lazy {
        Lazy(Arc::new(f))
    }

    pub fn now(t: ITree) -> Lazy {
        Lazy::new(move || t.clone())
    }

    pub fn force(&self) -> ITree {
        (self.0)()
    }
}

impl fmt::Debug for Lazy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Lazy(..)")
    }
}

pub type Choices = FinMap<Event, Lazy>;

#[derive(Clone)]
pub enum ITree {
    Ret(Value),
    Sil(Lazy),
    Vis(Arc<Choices>),
}

/// Continuation from a return value to a tree.
pub type Kont = Arc<dyn Fn(Value) -> ITree + Send + Sync>;

pub fn kont(f: impl Fn(Value) -> ITree + Send + Sync + 'static) -> Kont {
    Arc::new(f)
}

impl ITree {
    pub fn vis(choices: Choices) -> ITree {
        ITree::Vis(Arc::new(choices))
    }

    pub fn sil(f: impl Fn() -> ITree + Send + Sync + 'static) -> ITree {
        ITree::Sil(Lazy::new(f))
    }

    pub fn is_stop(&self) -> bool {
        matches!(self, ITree::Vis(m) if m.is_empty())
    }
}

impl fmt::Debug for ITree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ITree::Ret(v) => write!(f, "Ret({v})"),
            ITree::Sil(_) => f.write_str("Sil(..)"),
            ITree::Vis(m) => {
                f.write_str("Vis{")?;
                for (i, e) in m.keys().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{e:?}")?;
                }
                f.write_str("}")
            }
        }
    }
}

pub fn ret(v: Value) -> ITree {
    ITree::Ret(v)
}

pub fn skip() -> ITree {
    ITree::Ret(Value::Unit)
}

pub fn stop() -> ITree {
    ITree::vis(FinMap::new())
}

/// Unbounded silent divergence.
pub fn div() -> ITree {
    ITree::sil(div)
}

/// Offers every event of `events` forever.
pub fn run(events: Arc<Vec<Event>>) -> ITree {
    let evs = events.clone();
    ITree::vis(FinMap::from_pairs(evs.iter().map(|e| {
        let events = events.clone();
        (e.clone(), Lazy::new(move || run(events.clone())))
    })))
}

/// Monadic sequencing: `p >>= k`.
pub fn bind(p: ITree, k: Kont) -> ITree {
    match p {
        ITree::Ret(v) => k(v),
        ITree::Sil(t) => ITree::sil(move || bind(t.force(), k.clone())),
        ITree::Vis(m) => ITree::vis(m.map(|_, t| {
            let t = t.clone();
            let k = k.clone();
            Lazy::new(move || bind(t.force(), k.clone()))
        })),
    }
}

/// `p ; q` for unit-returning `p`.
pub fn seq(p: ITree, q: impl Fn() -> ITree + Send + Sync + 'static) -> ITree {
    bind(p, kont(move |_| q()))
}

pub type Cond = Arc<dyn Fn(&Value) -> bool + Send + Sync>;

/// `iterate b body s`: one silent step per round while `b` holds.
pub fn iterate(b: Cond, body: Kont, s: Value) -> ITree {
    if b(&s) {
        ITree::sil(move || {
            let (b, body2) = (b.clone(), body.clone());
            bind(body(s.clone()), kont(move |s2| iterate(b.clone(), body2.clone(), s2)))
        })
    } else {
        ITree::Ret(s)
    }
}

/// Unconditional iteration; never returns.
pub fn loop_(body: Kont, s: Value) -> ITree {
    iterate(Arc::new(|_| true), body, s)
}

/// Outcome of stripping leading silent steps.
#[derive(Clone, Debug)]
pub enum Observation {
    Terminated(Value),
    Choices(Arc<Choices>),
    Stuck,
    TauBudgetExceeded(usize),
}

/// Strips up to `budget` silent steps. Forces at most `budget + 1` nodes.
pub fn observe(t: &ITree, budget: usize) -> (Observation, usize) {
    let mut cur = t.clone();
    let mut taus = 0;
    loop {
        match cur {
            ITree::Ret(v) => return (Observation::Terminated(v), taus),
            ITree::Vis(m) if m.is_empty() => return (Observation::Stuck, taus),
            ITree::Vis(m) => return (Observation::Choices(m), taus),
            ITree::Sil(next) => {
                if taus >= budget {
                    return (Observation::TauBudgetExceeded(taus), taus);
                }
                taus += 1;
                cur = next.force();
            }
        }
    }
}

/// Bounded structural equality. Visible domains compare as sets.
pub fn approx_eq(a: &ITree, b: &ITree, depth: usize) -> bool {
    if depth == 0 {
        return true;
    }
    match (a, b) {
        (ITree::Ret(x), ITree::Ret(y)) => x == y,
        (ITree::Sil(p), ITree::Sil(q)) => approx_eq(&p.force(), &q.force(), depth - 1),
        (ITree::Vis(f), ITree::Vis(g)) => {
            f.same_domain(g)
                && f.iter().all(|(e, p)| {
                    let q = g.get(e).expect("same domain");
                    approx_eq(&p.force(), &q.force(), depth - 1)
                })
        }
        _ => false,
    }
}

/// True when every reachable visible node within `depth` has distinct keys.
pub fn keys_distinct(t: &ITree, depth: usize) -> bool {
    if depth == 0 {
        return true;
    }
    match t {
        ITree::Ret(_) => true,
        ITree::Sil(p) => keys_distinct(&p.force(), depth - 1),
        ITree::Vis(m) => {
            let set: std::collections::HashSet<&Event> = m.keys().collect();
            set.len() == m.len() && m.iter().all(|(_, p)| keys_distinct(&p.force(), depth - 1))
        }
    }
}
