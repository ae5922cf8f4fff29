//! Workloads shared by the benchmarks. Each builder returns a fresh tree so
//! that no lazily forced state carries over between iterations.

use std::path::PathBuf;
use std::sync::Arc;

use itcsp::animator::{Menu, Scenario, Session};
use itcsp::model::Model;
use itcsp::ops::{extchoice, hidep, interleave, parallel_unit, prefix, renamep, RenIndex};
use itcsp::semantics::module_alphabet;
use itcsp::{itree::ret, observe, Chan, Event, EventSet, HideList, ITree, Observation, RenSeq, Value};

pub const BUDGET: usize = 1_000_000;

pub fn events(prefix: &str, n: usize) -> Vec<Event> {
    (0..n).map(|i| Event::new(&Chan::new(&format!("{prefix}{i}")), Value::Unit)).collect()
}

/// Performs `es` in order, then terminates.
pub fn chain(es: Arc<Vec<Event>>, from: usize) -> ITree {
    if from == es.len() {
        return ret(Value::Unit);
    }
    let e = es[from].clone();
    prefix(e, move || chain(es.clone(), from + 1))
}

/// Offers `n` events, each leading straight to termination.
pub fn wide(name: &str, n: usize) -> ITree {
    events(name, n).into_iter().fold(itcsp::itree::stop(), |acc, e| {
        extchoice(acc, prefix(e, || ret(Value::Unit)))
    })
}

/// Picks the first offered event until the tree stops offering any;
/// returns the number of events performed.
pub fn run_first(tree: ITree) -> usize {
    let mut s = Session::start(tree, BUDGET);
    while s.choose(1).is_ok() {}
    s.history().len()
}

/// Two copies of a chain synchronised on every event.
pub fn sync_pair(n: usize) -> ITree {
    let es = Arc::new(events("s", n));
    let sync = Arc::new(EventSet::of_events(es.iter().cloned()));
    parallel_unit(chain(es.clone(), 0), chain(es, 0), sync)
}

/// Two disjoint chains run side by side.
pub fn interleaved_pair(n: usize) -> ITree {
    interleave(chain(Arc::new(events("l", n)), 0), chain(Arc::new(events("r", n)), 0))
}

/// A chain with every event hidden; all its steps become silent.
pub fn hidden_chain(n: usize) -> ITree {
    let es = events("h", n);
    let hide = Arc::new(HideList::new(es.iter().cloned()));
    hidep(chain(Arc::new(es), 0), hide)
}

/// A chain renamed so that every event has two images.
pub fn renamed_chain(n: usize) -> ITree {
    let es = events("p", n);
    let seq = RenSeq::new(es.iter().flat_map(|e| {
        let name = e.chan.name().to_string();
        [
            (e.clone(), Event::new(&Chan::new(&format!("{name}x")), Value::Unit)),
            (e.clone(), Event::new(&Chan::new(&format!("{name}y")), Value::Unit)),
        ]
    }));
    renamep(chain(Arc::new(es), 0), Arc::new(RenIndex::new(&seq)))
}

/// Silent steps taken before the tree settles.
pub fn settle(tree: &ITree) -> usize {
    match observe(tree, BUDGET) {
        (Observation::TauBudgetExceeded(_), _) => panic!("did not settle"),
        (_, taus) => taus,
    }
}

pub fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

pub fn load(name: &str) -> Model {
    Model::load(&model_path(&format!("{name}.json")), &[]).expect("model")
}

pub fn scenario(model: &Model, file: &str) -> Scenario {
    let text = std::fs::read_to_string(model_path("scenarios").join(file)).expect("scenario");
    Scenario::parse(file, &text, &module_alphabet(model)).expect("parse")
}

/// Follows `sc` for `steps` events; returns the size of the final menu.
pub fn animate_scenario(tree: ITree, sc: &Scenario, steps: usize) -> usize {
    let mut s = Session::start(tree, BUDGET);
    for i in 0..steps {
        let e = sc.event_at(i).expect("scenario event");
        s.choose_event(e).expect("enabled");
    }
    match s.menu() {
        Menu::Choices(c) => c.len(),
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use itcsp::semantics::compile;

    #[test]
    fn workloads_do_what_they_say() {
        assert_eq!(run_first(chain(Arc::new(events("c", 7)), 0)), 7);
        assert_eq!(run_first(sync_pair(9)), 9);
        assert_eq!(run_first(interleaved_pair(5)), 10);
        assert_eq!(settle(&hidden_chain(12)), 12);
        assert_eq!(run_first(renamed_chain(6)), 6);
        match observe(&wide("w", 30), 0).0 {
            Observation::Choices(c) => assert_eq!(c.len(), 30),
            _ => panic!("expected a menu"),
        }
        let patrol = load("patrol");
        let sc = scenario(&patrol, "patrol-scenario1.txt");
        assert_eq!(animate_scenario(compile(&patrol), &sc, 42), 8);
        let chem = load("chemical");
        let sc = scenario(&chem, "chemical-acd2-prefix.txt");
        assert!(animate_scenario(compile(&chem), &sc, 6) > 1);
    }
}
