//! Shared fixtures and the checks behind each acceptance criterion. Every
//! check returns `Err` with a reason instead of panicking, so the acceptance
//! binary can report all of them.

#![allow(dead_code)]

use std::path::PathBuf;

use itcsp::animator::{replay, Menu, Outcome, Scenario, Session, DEFAULT_TAU_BUDGET};
use itcsp::finmap::{Rel, RenSeq};
use itcsp::laws::{check_laws, worked_examples, LawConfig};
use itcsp::model::expr::EvalError;
use itcsp::model::types::TypeRef;
use itcsp::model::Model;
use itcsp::semantics::{compile, module_alphabet};
use itcsp::{Event, ITree, Value};

pub type Check = Result<(), String>;

pub fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

pub fn load(name: &str) -> Model {
    Model::load(&models_dir().join(format!("{name}.json")), &[]).expect("model loads")
}

pub fn module(name: &str) -> (Model, ITree) {
    let m = load(name);
    let t = compile(&m);
    (m, t)
}

pub fn scenario(model: &Model, file: &str) -> Scenario {
    let path = models_dir().join("scenarios").join(file);
    let text = std::fs::read_to_string(&path).expect("scenario file");
    Scenario::parse(file, &text, &module_alphabet(model)).expect("scenario parses")
}

pub fn squash(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

pub fn names(menu: &Menu) -> Vec<String> {
    menu.events().iter().map(Event::display).collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Compares a menu with the expected event texts, ignoring whitespace.
pub fn menu_is(menu: &Menu, expected: &[String], at: &str) -> Check {
    let got: Vec<String> = names(menu).iter().map(|s| squash(s)).collect();
    let want: Vec<String> = expected.iter().map(|s| squash(s)).collect();
    ensure(got == want, || format!("{at}: expected {want:?}, got {got:?}"))
}

pub fn choose_named(s: &mut Session, text: &str) -> Check {
    let Some(k) = names(s.menu()).iter().position(|n| squash(n) == squash(text)) else {
        return Err(format!("`{text}` not offered; menu: {}", s.menu().render()));
    };
    s.choose(k + 1).map(|_| ()).map_err(|e| e.to_string())
}

// Finite relations.

type Seq = Vec<(u8, u8)>;

/// Calls `f` on every sequence of at most `max_len` pairs over `n` sources
/// and targets, shortest first.
pub fn for_all_seqs(n: u8, max_len: usize, mut f: impl FnMut(&Seq) -> Check) -> Check {
    let pairs: Vec<(u8, u8)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    for len in 0..=max_len {
        let mut idx = vec![0usize; len];
        let mut s: Seq = vec![pairs[0]; len];
        loop {
            f(&s)?;
            let mut k = len;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < pairs.len() {
                    s[k] = pairs[idx[k]];
                    break;
                }
                idx[k] = 0;
                s[k] = pairs[0];
            }
            if idx.iter().all(|i| *i == 0) {
                break;
            }
        }
    }
    Ok(())
}

/// Pair `i` survives iff no earlier pair has its target.
pub fn oracle_drop_dup(s: &Seq) -> impl Iterator<Item = (u8, u8)> + '_ {
    (0..s.len()).filter(|&i| (0..i).all(|j| s[j].1 != s[i].1)).map(|i| s[i])
}

pub fn oracle_dresl(keep: u8, s: &Seq) -> impl Iterator<Item = (u8, u8)> + '_ {
    s.iter().filter(move |(a, _)| keep & (1 << a) != 0).copied()
}

pub fn finite_relations() -> Check {
    let e = |s: &str| s.to_string();
    let f = Rel::from_pairs([(e("e1"), e("e2")), (e("e1"), e("e3")), (e("e2"), e("e3"))]).mk_functional();
    let got: Vec<(String, String)> = f.iter().map(|(a, b)| (a.clone(), b.clone())).collect();
    ensure(got == [(e("e2"), e("e3"))], || format!("mk_functional example gave {got:?}"))?;

    let seq = RenSeq::new([("e1", "e"), ("e2", "e"), ("e3", "ea"), ("e4", "eb")]);
    let r = seq.dresl(|a| ["e1", "e2", "e4"].contains(a));
    ensure(r.items() == [("e1", "e"), ("e2", "e"), ("e4", "eb")], || format!("dresl example gave {:?}", r.items()))?;
    let d = r.drop_dup();
    ensure(d.items() == [("e1", "e"), ("e4", "eb")], || format!("drop_dup example gave {:?}", d.items()))?;

    let mut count = 0usize;
    for_all_seqs(4, 5, |s| {
        let rs = RenSeq::new(s.iter().copied());
        ensure(rs.drop_dup().items().iter().copied().eq(oracle_drop_dup(s)), || format!("drop_dup differs on {s:?}"))?;
        let mf = rs.ran().mk_functional();
        let mut distinct = 0;
        for (i, (a, b)) in s.iter().enumerate() {
            let survives = s.iter().all(|(a2, b2)| a2 != a || b2 == b);
            if survives && !s[..i].contains(&(*a, *b)) {
                ensure(mf.get(a) == Some(b), || format!("mk_functional misses {a} -> {b} on {s:?}"))?;
                distinct += 1;
            }
        }
        ensure(mf.len() == distinct, || format!("mk_functional has extra pairs on {s:?}"))?;
        let keep = (count % 16) as u8;
        count += 1;
        let dr = rs.dresl(|a| keep & (1 << a) != 0);
        ensure(dr.items().iter().copied().eq(oracle_dresl(keep, s)), || format!("dresl {keep:04b} differs on {s:?}"))
    })?;
    // 16^0 + 16^1 + ... + 16^5
    ensure(count == 1_118_481, || format!("enumerated {count} sequences"))
}

// Operator laws.

pub fn operator_laws(cases: u32) -> Check {
    for (name, ok) in worked_examples() {
        ensure(ok, || format!("worked example failed: {name}"))?;
    }
    let cfg = LawConfig { cases, seed: 20_240_601, ..LawConfig::default() };
    for o in check_laws(&cfg) {
        if let Some(cex) = o.failure {
            return Err(format!("{}: counterexample {cex}", o.name));
        }
    }
    Ok(())
}

// Patrol robot.

pub fn patrol_initial() -> Vec<String> {
    let mut v = vec!["Reset_PatrolMod Din".to_string()];
    v.extend((-3..=3).map(|i| format!("Cal_PatrolMod (Din,{i})")));
    v
}

fn right(v: i64) -> String {
    format!("Right_PatrolMod (Dout,{v})")
}

/// Walks the first scenario's path, checking every menu against the
/// animation of the calibrated position -3.
pub fn patrol_pr1() -> Check {
    let (_, t) = module("patrol");
    let mut s = Session::start(t, DEFAULT_TAU_BUDGET);
    let initial = patrol_initial();
    menu_is(s.menu(), &initial, "initial menu")?;
    s.choose(2).map_err(|e| e.to_string())?;
    for (k, v) in [-2, -2, -1, -1, 0].into_iter().enumerate() {
        menu_is(s.menu(), &[right(v)], &format!("forced step {}", k + 1))?;
        s.choose(1).map_err(|e| e.to_string())?;
    }
    let mut after = vec![right(0)];
    after.extend(initial.iter().skip(1).cloned());
    menu_is(s.menu(), &after, "menu at the centre")?;
    s.choose(1).map_err(|e| e.to_string())?;
    menu_is(s.menu(), &initial, "menu after the second move to 0")
}

/// The cyclic scenario is followed for at least `cycles` rounds.
pub fn patrol_cyclic(file: &str, cycles: usize) -> Check {
    let (m, t) = module("patrol");
    let sc = scenario(&m, file);
    let from = sc.repeat_from.ok_or("scenario does not repeat")?;
    let steps = from + cycles * (sc.trace.len() - from);
    let r = replay(&t, &sc, steps, DEFAULT_TAU_BUDGET);
    ensure(r.outcome == Outcome::StepLimit && r.accepted == steps, || r.to_string())
}

pub fn patrol_scenarios_2_3() -> Check {
    patrol_cyclic("patrol-scenario2.txt", 3)?;
    patrol_cyclic("patrol-scenario3.txt", 3)
}

/// Along two rounds of the first scenario, reset is offered exactly at the
/// start of each round, the only points where no movement is pending.
pub fn reset_gating() -> Check {
    let (m, t) = module("patrol");
    let sc = scenario(&m, "patrol-scenario1.txt");
    let cycle = sc.trace.len();
    let mut s = Session::start(t, DEFAULT_TAU_BUDGET);
    let mut pos = 0i64;
    for step in 0..2 * cycle {
        let offered = names(s.menu()).iter().any(|n| n == "Reset_PatrolMod Din");
        let at_start = step % cycle == 0;
        ensure(offered == at_start, || format!("step {step}: reset offered = {offered}, position in round = {}", step % cycle))?;
        ensure(!offered || pos == 0, || format!("step {step}: reset offered at position {pos}"))?;
        let e = sc.event_at(step).expect("cyclic").clone();
        if e.chan.name().starts_with("right") || e.chan.name().starts_with("left") {
            pos = e.payload.nth(1).as_int().expect("position");
        }
        s.choose_event(&e).map_err(|err| format!("step {step}: {err}"))?;
    }
    Ok(())
}

// Chemical detector.

pub fn gas_menu() -> Vec<String> {
    let (m, _) = module("chemical");
    let ty = TypeRef::parse("Seq(GasSensor)").expect("type");
    m.types.values(&ty).iter().map(|v| format!("Gas (Din,{v})")).collect()
}

pub fn chemical_acd1() -> Check {
    let (_, t) = module("chemical");
    let mut s = Session::start(t, DEFAULT_TAU_BUDGET);
    ensure(s.menu().len() == 22, || format!("initial menu has {} events", s.menu().len()))?;
    let mut initial = vec!["RandomWalkCall ()".to_string()];
    initial.extend(gas_menu());
    menu_is(s.menu(), &initial, "initial menu")?;
    s.choose(1).map_err(|e| e.to_string())?;
    ensure(s.menu().len() == 21, || format!("gas menu has {} events", s.menu().len()))?;
    menu_is(s.menu(), &gas_menu(), "gas menu")?;
    let ninth = names(s.menu())[8].clone();
    ensure(squash(&ninth) == squash("Gas (Din,[(0,0),(1,1)])"), || format!("the ninth gas event is {ninth}"))?;
    s.choose(9).map_err(|e| e.to_string())?;
    menu_is(s.menu(), &["MoveCall (0,Chemical_Angle_Front)".into()], "after the strong reading")?;
    s.choose(1).map_err(|e| e.to_string())?;
    menu_is(s.menu(), &["Flag Dout".into()], "after stopping")?;
    s.choose(1).map_err(|e| e.to_string())?;
    ensure(s.menu().render() == "Terminated: ()", || format!("ended with {}", s.menu().render()))
}

/// Paper picks and menu sizes for the weak-reading run; the first six rows
/// are the replayed prefix.
pub const ACD2: [(usize, usize, &str); 6] = [
    (22, 1, "RandomWalkCall ()"),
    (21, 4, "Gas (Din,[(1,0)])"),
    (22, 1, "MoveCall (1,Chemical_Angle_Front)"),
    (24, 2, "Obstacle (Din,Location_Loc_right)"),
    (23, 1, "Odometer (Din,0)"),
    (22, 1, "MoveCall (1,Chemical_Angle_Left)"),
];

pub fn chemical_acd2_prefix() -> Check {
    let (m, t) = module("chemical");
    let sc = scenario(&m, "chemical-acd2-prefix.txt");
    let r = replay(&t, &sc, 100, DEFAULT_TAU_BUDGET);
    ensure(r.outcome == Outcome::Completed && r.accepted == 6, || r.to_string())?;
    let mut s = Session::start(t, DEFAULT_TAU_BUDGET);
    for (i, (size, pick, text)) in ACD2.iter().enumerate() {
        ensure(s.menu().len() == *size, || format!("line {}: menu of {} events", i + 1, s.menu().len()))?;
        let got = names(s.menu())[pick - 1].clone();
        ensure(squash(&got) == squash(text), || format!("line {}: pick {pick} is {got}", i + 1))?;
        s.choose(*pick).map_err(|e| e.to_string())?;
    }
    Ok(())
}

// Model functions defined by pre- and postconditions.

fn field(v: &Value, i: usize) -> i64 {
    v.items().expect("record")[i].as_int().expect("integral field")
}

pub fn model_functions() -> Check {
    let m = load("chemical");
    let f = &m.functions;
    let seqs = m.types.values(&TypeRef::parse("Seq(GasSensor)").expect("type"));
    let mut checked = 0;
    for gs in seqs.iter() {
        let items = gs.items().expect("sequence");
        if items.is_empty() {
            let r = f.apply("intensity", &[gs.clone()]);
            ensure(matches!(r, Err(EvalError::PreconditionViolated(_))), || format!("intensity([]) gave {r:?}"))?;
            let r = f.apply("location", &[gs.clone()]);
            ensure(matches!(r, Err(EvalError::PreconditionViolated(_))), || format!("location([]) gave {r:?}"))?;
            continue;
        }
        let is: Vec<i64> = items.iter().map(|x| field(x, 1)).collect();
        let max = *is.iter().max().expect("nonempty");
        let first_max = is.iter().position(|i| *i == max).expect("max present");
        let got = f.apply("intensity", &[gs.clone()]).map_err(|e| format!("intensity({gs}): {e}"))?;
        ensure(got.as_int() == Some(max), || format!("intensity({gs}) = {got}, oracle {max}"))?;
        let want = if first_max == 0 { "Chemical_Angle_Front" } else { "Chemical_Angle_Right" };
        let got = f.apply("location", &[gs.clone()]).map_err(|e| format!("location({gs}): {e}"))?;
        ensure(got.to_string() == want, || format!("location({gs}) = {got}, oracle {want}"))?;
        checked += 1;
    }
    ensure(checked == 20, || format!("checked {checked} nonempty sequences, expected 20"))?;
    for name in ["intensity", "location", "analysis", "angle", "goreq"] {
        f.check_total(name, 100_000).map_err(|(args, e)| format!("{name} on {args:?}: {e}"))?;
    }
    Ok(())
}

// Determinism.

pub fn determinism(depth: usize, walks: usize) -> Check {
    for name in ["patrol", "chemical"] {
        let (_, t) = module(name);
        let sw = itcsp::animator::sweep(&t, depth, walks, 2, 11, DEFAULT_TAU_BUDGET);
        ensure(sw.duplicate_menus == 0 && sw.divergences == 0 && sw.menus > 0, || format!("{name}: {sw:?}"))?;
    }
    Ok(())
}
