//! Algebraic laws of the operators, checked on generated finite trees, and
//! the small worked equations every operator must reproduce.

use std::fmt;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestError, TestRng, TestRunner};

use crate::event::{Chan, Event, EventSet, HideList};
use crate::finmap::{FinMap, Rel, RenSeq};
use crate::itree::{approx_eq, bind, div, kont, ret, stop, ITree, Kont, Lazy};
use crate::ops::{
    converse, exception, extchoice, extchoice_biased, genchoice, hide, hidep, hidep_fold, interrupt, merge_excl,
    merge_override, parallel, prefix, rename, renamep, renamep_choices_reference, Merge, RenIndex, RenRel,
};
use crate::value::Value;

/// Shape of a finite tree; `Div` is the only infinite leaf.
#[derive(Clone, PartialEq, Eq)]
pub enum Spec {
    Ret(u8),
    Div,
    Sil(Box<Spec>),
    Vis(Vec<(u8, Spec)>),
}

pub const EVENTS: [&str; 4] = ["a", "b", "c", "d"];

pub fn event(i: u8) -> Event {
    Event::new(&Chan::new(EVENTS[i as usize % EVENTS.len()]), Value::Unit)
}

impl Spec {
    pub fn tree(&self) -> ITree {
        match self {
            Spec::Ret(v) => ret(Value::Int(*v as i64)),
            Spec::Div => div(),
            Spec::Sil(p) => {
                let p = p.clone();
                ITree::sil(move || p.tree())
            }
            Spec::Vis(bs) => {
                let mut m = FinMap::new();
                for (e, p) in bs {
                    let e = event(*e);
                    // First branch on an event wins, as in a choice function.
                    if !m.contains_key(&e) {
                        m.insert(e, Lazy::now(p.tree()));
                    }
                }
                ITree::vis(m)
            }
        }
    }
}

impl fmt::Debug for Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spec::Ret(v) => write!(f, "Ret {v}"),
            Spec::Div => f.write_str("div"),
            Spec::Sil(p) => write!(f, "τ({p:?})"),
            Spec::Vis(bs) if bs.is_empty() => f.write_str("stop"),
            Spec::Vis(bs) => {
                f.write_str("(")?;
                for (i, (e, p)) in bs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" □ ")?;
                    }
                    write!(f, "{} → {p:?}", EVENTS[*e as usize % EVENTS.len()])?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Trees of depth at most `depth`.
pub fn spec(depth: u32) -> impl Strategy<Value = Spec> {
    let leaf = prop_oneof![
        4 => (0u8..3).prop_map(Spec::Ret),
        2 => Just(Spec::Vis(Vec::new())),
        1 => Just(Spec::Div),
    ];
    leaf.prop_recursive(depth, 64, 4, |inner| {
        prop_oneof![
            1 => inner.clone().prop_map(|s| Spec::Sil(Box::new(s))),
            3 => prop::collection::vec((0u8..4, inner), 0..4).prop_map(Spec::Vis),
        ]
    })
}

#[derive(Clone, Debug)]
pub struct LawConfig {
    pub cases: u32,
    pub seed: u64,
    pub tree_depth: u32,
    pub eq_depth: usize,
    /// Replaces external choice's merge with one that is not well formed,
    /// so that the unit law must fail.
    pub broken_merge: bool,
}

impl Default for LawConfig {
    fn default() -> Self {
        LawConfig { cases: 1000, seed: 0, tree_depth: 5, eq_depth: 10, broken_merge: false }
    }
}

impl LawConfig {
    fn merge(&self) -> Merge {
        if self.broken_merge {
            // Forgets the left operand whenever the right one is empty.
            Arc::new(|f: &FinMap<Event, Lazy>, g: &FinMap<Event, Lazy>| {
                if g.is_empty() {
                    FinMap::new()
                } else {
                    f.merge_excl(g)
                }
            })
        } else {
            merge_excl()
        }
    }

    fn runner(&self) -> TestRunner {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        let cfg = Config { cases: self.cases, failure_persistence: None, ..Config::default() };
        TestRunner::new_with_rng(cfg, TestRng::from_seed(RngAlgorithm::ChaCha, &key))
    }
}

#[derive(Clone, Debug)]
pub struct LawOutcome {
    pub name: &'static str,
    /// The minimal counterexample found, if any.
    pub failure: Option<String>,
}

impl LawOutcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

fn check<S: Strategy>(
    cfg: &LawConfig,
    name: &'static str,
    strat: S,
    law: impl Fn(&S::Value) -> bool,
) -> LawOutcome
where
    S::Value: fmt::Debug,
{
    let result = cfg.runner().run(&strat, |input| {
        if law(&input) {
            Ok(())
        } else {
            Err(TestCaseError::fail(name))
        }
    });
    let failure = match result {
        Ok(()) => None,
        Err(TestError::Fail(_, input)) => Some(format!("{input:?}")),
        Err(TestError::Abort(why)) => Some(format!("aborted: {why}")),
    };
    LawOutcome { name, failure }
}

fn kont_of(ks: &[Spec]) -> Kont {
    let ks: Vec<Spec> = ks.to_vec();
    kont(move |v| ks[v.as_int().unwrap_or(0) as usize % ks.len()].tree())
}

/// Runs every law with `cfg`.
pub fn check_laws(cfg: &LawConfig) -> Vec<LawOutcome> {
    let d = cfg.tree_depth;
    let n = cfg.eq_depth;
    let m = cfg.merge();
    let eq = move |a: &ITree, b: &ITree| approx_eq(a, b, n);
    let sync = || Arc::new(EventSet::of_events([event(0), event(1)]));
    let mut out = Vec::new();

    let m1 = m.clone();
    out.push(check(cfg, "stop is a unit of generalised choice", spec(d), move |p| {
        eq(&genchoice(stop(), m1.clone(), p.tree()), &p.tree()) && eq(&genchoice(p.tree(), m1.clone(), stop()), &p.tree())
    }));
    let m1 = m.clone();
    out.push(check(cfg, "div is a zero of generalised choice", spec(d), move |p| {
        eq(&genchoice(div(), m1.clone(), p.tree()), &div()) && eq(&genchoice(p.tree(), m1.clone(), div()), &div())
    }));
    let m1 = m.clone();
    out.push(check(cfg, "external choice commutes", (spec(d), spec(d)), move |(p, q)| {
        eq(&genchoice(p.tree(), m1.clone(), q.tree()), &genchoice(q.tree(), m1.clone(), p.tree()))
    }));
    out.push(check(cfg, "the converse merge swaps operands", (spec(d), spec(d)), move |(p, q)| {
        let m = merge_override();
        eq(&genchoice(p.tree(), converse(m.clone()), q.tree()), &genchoice(q.tree(), m, p.tree()))
    }));
    out.push(check(
        cfg,
        "bind: left identity",
        (0u8..3, prop::collection::vec(spec(d), 1..4)),
        move |(v, ks)| eq(&bind(ret(Value::Int(*v as i64)), kont_of(ks)), &kont_of(ks)(Value::Int(*v as i64))),
    ));
    out.push(check(cfg, "bind: right identity", spec(d), move |p| eq(&bind(p.tree(), kont(ret)), &p.tree())));
    out.push(check(
        cfg,
        "bind: associativity",
        (spec(d), prop::collection::vec(spec(d), 1..4), prop::collection::vec(spec(d), 1..4)),
        move |(p, k1, k2)| {
            let (f, g) = (kont_of(k1), kont_of(k2));
            let lhs = bind(bind(p.tree(), f.clone()), g.clone());
            let rhs = bind(p.tree(), kont(move |x| bind(f(x), g.clone())));
            eq(&lhs, &rhs)
        },
    ));
    let m1 = m.clone();
    out.push(check(cfg, "silent steps precede choice", (spec(d), spec(d)), move |(p, q)| {
        let pt = p.tree();
        let lhs = genchoice(ITree::sil(move || pt.clone()), m1.clone(), q.tree());
        let rhs = ITree::sil({
            let (p, q, m) = (p.tree(), q.tree(), m1.clone());
            move || genchoice(p.clone(), m.clone(), q.clone())
        });
        eq(&lhs, &rhs)
    }));
    out.push(check(cfg, "silent steps precede parallel composition", (spec(d), spec(d)), move |(p, q)| {
        let pt = p.tree();
        let lhs = parallel(ITree::sil(move || pt.clone()), q.tree(), sync());
        let rhs = ITree::sil({
            let (p, q) = (p.tree(), q.tree());
            move || parallel(p.clone(), q.clone(), sync())
        });
        eq(&lhs, &rhs)
    }));
    out.push(check(
        cfg,
        "prioritised hiding equals the fold of single hiding",
        (spec(d), prop::collection::vec(0u8..4, 0..4)),
        move |(p, el)| {
            let es: Vec<Event> = el.iter().map(|i| event(*i)).collect();
            eq(&hidep(p.tree(), Arc::new(HideList::new(es.clone()))), &hidep_fold(p.tree(), &es))
        },
    ));
    out.push(check(
        cfg,
        "prioritised renaming agrees with its relational definition",
        (prop::collection::vec((0u8..4, spec(d.min(3))), 0..4), prop::collection::vec((0u8..4, 0u8..4), 0..6)),
        move |(bs, rho)| {
            let p = Spec::Vis(bs.clone()).tree();
            let ITree::Vis(f) = &p else { return false };
            let seq = RenSeq::new(rho.iter().map(|(a, b)| (event(*a), event(*b))));
            let expect = renamep_choices_reference(f, &seq);
            let got = renamep(p.clone(), Arc::new(RenIndex::new(&seq)));
            let ITree::Vis(g) = &got else { return false };
            g.len() == expect.len()
                && expect.iter().all(|(tgt, src)| {
                    g.get(tgt).is_some_and(|k| {
                        let want = renamep(f.get(src).expect("source").force(), Arc::new(RenIndex::new(&seq)));
                        eq(&k.force(), &want)
                    })
                })
        },
    ));
    out
}

fn ev(name: &str) -> Event {
    Event::new(&Chan::new(name), Value::Unit)
}

fn leaf(v: i64) -> ITree {
    ret(Value::Int(v))
}

fn pre(e: &str, t: ITree) -> ITree {
    prefix(ev(e), move || t.clone())
}

fn menu(pairs: &[(&str, i64)]) -> ITree {
    ITree::vis(FinMap::from_pairs(pairs.iter().map(|(e, v)| (ev(e), Lazy::now(leaf(*v))))))
}

fn same(a: &ITree, b: &ITree) -> bool {
    approx_eq(a, b, 12)
}

/// The small worked equations for choice, renaming, hiding, interrupt and
/// exception, each with whether it holds.
pub fn worked_examples() -> Vec<(&'static str, bool)> {
    let (p, q, r) = (1, 2, 3);
    let three = || extchoice(pre("e1", leaf(p)), extchoice(pre("e2", leaf(q)), pre("e3", leaf(r))));
    let rel = Rel::from_pairs([(ev("e1"), ev("e")), (ev("e2"), ev("e")), (ev("e3"), ev("ea")), (ev("e4"), ev("eb"))]);
    let seq = RenSeq::new(rel.pairs().cloned());
    let hide_list = |names: &[&str]| Arc::new(HideList::new(names.iter().map(|n| ev(n))));
    vec![
        (
            "external choice drops shared events",
            same(
                &extchoice(menu(&[("e1", 1), ("e2", 2)]), menu(&[("e3", 3), ("e2", 4)])),
                &menu(&[("e1", 1), ("e3", 3)]),
            ),
        ),
        (
            "biased choice keeps the left event",
            same(&extchoice_biased(pre("a", leaf(p)), pre("a", leaf(q))), &pre("a", leaf(p))),
        ),
        ("renaming blocks many-to-one targets", same(&rename(three(), Arc::new(RenRel::new(&rel))), &pre("ea", leaf(r)))),
        (
            "prioritised renaming keeps the first pair",
            same(
                &renamep(three(), Arc::new(RenIndex::new(&seq))),
                &extchoice(pre("e", leaf(p)), pre("ea", leaf(r))),
            ),
        ),
        (
            "prioritised renaming with the first two pairs swapped",
            same(
                &renamep(
                    three(),
                    Arc::new(RenIndex::new(&RenSeq::new([
                        (ev("e2"), ev("e")),
                        (ev("e1"), ev("e")),
                        (ev("e3"), ev("ea")),
                        (ev("e4"), ev("eb")),
                    ]))),
                ),
                &extchoice(pre("e", leaf(q)), pre("ea", leaf(r))),
            ),
        ),
        (
            "hiding two initial events deadlocks",
            same(&hide(menu(&[("a", p), ("b", q)]), Arc::new(EventSet::of_events([ev("a"), ev("b")]))), &stop()),
        ),
        (
            "prioritised hiding [a, b] takes a",
            same(&hidep(menu(&[("a", p), ("b", q)]), hide_list(&["a", "b"])), &ITree::sil(move || leaf(p))),
        ),
        (
            "prioritised hiding [b, a] takes b",
            same(&hidep(menu(&[("a", p), ("b", q)]), hide_list(&["b", "a"])), &ITree::sil(move || leaf(q))),
        ),
        (
            "interrupt: a shared initial event belongs to the interrupting side",
            same(&interrupt(menu(&[("a", p), ("b", q)]), menu(&[("a", r)])), &menu(&[("b", q), ("a", r)])),
        ),
        (
            "exception switches on an event of the set",
            same(
                &exception(
                    menu(&[("a", p), ("b", q)]),
                    Arc::new(EventSet::of_events([ev("a")])),
                    Lazy::new(move || leaf(r)),
                ),
                &menu(&[("a", r), ("b", q)]),
            ),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples_hold() {
        for (name, ok) in worked_examples() {
            assert!(ok, "{name}");
        }
    }

    #[test]
    fn laws_hold() {
        let cfg = LawConfig { cases: 200, seed: 7, ..LawConfig::default() };
        for o in check_laws(&cfg) {
            assert!(o.passed(), "{}: {:?}", o.name, o.failure);
        }
    }

    #[test]
    fn broken_merge_is_caught() {
        let cfg = LawConfig { cases: 200, seed: 7, broken_merge: true, ..LawConfig::default() };
        let out = check_laws(&cfg);
        let unit = out.iter().find(|o| o.name.starts_with("stop is a unit")).unwrap();
        assert!(!unit.passed());
    }
}
