//! Controllers and modules: machines and controllers renamed into the
//! enclosing scope, composed, and joined to their memories and buffers.

use std::sync::Arc;

use crate::event::{Chan, Event, EventSet, HideList};
use crate::finmap::RenSeq;
use crate::itree::{bind, kont, loop_, ret, skip, ITree, Lazy};
use crate::model::types::TypeRef;
use crate::model::{boundary_events, Connection, Controller, EventDecl, Model};
use crate::ops::{exception, extchoice_all, hidep, inp, interleave, outp, parallel, renamep, RenIndex};
use crate::value::{Dir, Value};

use super::machine::{machine_info, machine_process};
use super::{call_payloads, ev, op_chan, payload, Env};

fn conn_chan(k: &Connection) -> Chan {
    Chan::new(&format!("conn_{}_{}", k.from.component, k.from.event))
}

fn conn_from(k: &Connection) -> Chan {
    Chan::new(&format!("conn_{}_{}_from", k.from.component, k.from.event))
}

fn conn_to(k: &Connection) -> Chan {
    Chan::new(&format!("conn_{}_{}_to", k.from.component, k.from.event))
}

fn touches(k: &Connection, comp: &str, event: &str) -> bool {
    (k.from.component == comp && k.from.event == event) || (k.to.component == comp && k.to.event == event)
}

/// Writes `set_EXT_x?v` and forwards each value to every copy in `targets`.
fn memory(env: &Env, vars: &[(String, TypeRef, Vec<Chan>)]) -> ITree {
    let vars: Arc<Vec<(Chan, Arc<Vec<Value>>, Vec<Chan>)>> = Arc::new(
        vars.iter().map(|(x, t, targets)| (Chan::new(&format!("set_EXT_{x}")), env.values(t), targets.clone())).collect(),
    );
    memory_from(vars)
}

fn memory_from(vars: Arc<Vec<(Chan, Arc<Vec<Value>>, Vec<Chan>)>>) -> ITree {
    loop_(
        kont(move |_| {
            let branches: Vec<ITree> = vars
                .iter()
                .map(|(src, values, targets)| {
                    let targets = Arc::new(targets.clone());
                    bind(inp(src, values.iter().cloned()), kont(move |v| forward(targets.clone(), 0, v)))
                })
                .collect();
            extchoice_all(branches)
        }),
        Value::Unit,
    )
}

fn forward(targets: Arc<Vec<Chan>>, i: usize, v: Value) -> ITree {
    if i == targets.len() {
        return ret(Value::Unit);
    }
    bind(outp(&targets[i], v.clone()), kont(move |_| forward(targets.clone(), i + 1, v.clone())))
}

/// Right-nested composition; each head synchronises with the tail on
/// `always` and on the channels `link(head, tail)` returns.
fn compose(mut procs: Vec<ITree>, always: &EventSet, link: &dyn Fn(usize, usize) -> Vec<Chan>) -> ITree {
    let n = procs.len();
    let mut acc = procs.pop().expect("at least one component");
    for i in (0..n - 1).rev() {
        let head = procs.pop().expect("component");
        let mut sync = always.clone();
        for j in i + 1..n {
            for c in link(i, j) {
                sync.add_chan(&c);
            }
        }
        acc = parallel(head, acc, Arc::new(sync));
    }
    acc
}

fn event_values(env: &Env, ty: &Option<TypeRef>, d: Dir) -> Vec<Value> {
    env.payloads(ty).into_iter().map(|v| payload(d, v.as_ref())).collect()
}

fn op_events(env: &Env, model: &Model) -> Vec<Event> {
    let mut out = Vec::new();
    for op in &model.module.platform.operations {
        for p in call_payloads(env, &op.params) {
            out.push(ev(&op_chan(&op.name), p));
        }
    }
    out
}

/// Shared variables of `c` with the machines that keep a copy, in order.
fn controller_shared(c: &Controller) -> Vec<(String, TypeRef, Vec<String>)> {
    let mut out: Vec<(String, TypeRef, Vec<String>)> = Vec::new();
    for m in &c.machines {
        for v in &m.shared {
            match out.iter_mut().find(|(x, _, _)| *x == v.name) {
                Some((_, _, ms)) => ms.push(m.name.clone()),
                None => out.push((v.name.clone(), v.ty.clone(), vec![m.name.clone()])),
            }
        }
    }
    out
}

/// Compiles controller `ci` in its own scope.
pub fn compile_controller(model: &Model, ci: usize) -> ITree {
    let env = Env::of(model);
    let c = &model.module.controllers[ci];
    let terminate = Chan::new("terminate");
    let ops = op_events(&env, model);
    let mut procs = Vec::new();
    for (mi, m) in c.machines.iter().enumerate() {
        let mx = machine_info(model, ci, mi);
        let mut items: Vec<(Event, Event)> = vec![(ev(&terminate, Value::Unit), ev(&terminate, Value::Unit))];
        for v in &m.shared {
            let set = Chan::new(&format!("set_{}", v.name));
            let ext = Chan::new(&format!("set_EXT_{}", v.name));
            let ext_m = Chan::new(&format!("set_EXT_{}_{}", v.name, m.name));
            for x in env.values(&v.ty).iter() {
                items.push((ev(&set, x.clone()), ev(&set, x.clone())));
                items.push((ev(&ext, x.clone()), ev(&ext_m, x.clone())));
            }
        }
        for e in &m.events {
            let chan = Chan::new(&e.name);
            let link = c.connections.iter().find(|k| touches(k, &m.name, &e.name));
            match link {
                Some(k) => {
                    let d = if k.from.component == m.name { Dir::Out } else { Dir::In };
                    for v in env.payloads(&e.ty) {
                        items.push((ev(&chan, payload(d, v.as_ref())), ev(&conn_chan(k), payload(Dir::In, v.as_ref()))));
                    }
                }
                None => {
                    for d in [Dir::In, Dir::Out] {
                        for p in event_values(&env, &e.ty, d) {
                            items.push((ev(&chan, p.clone()), ev(&chan, p)));
                        }
                    }
                }
            }
        }
        items.extend(ops.iter().map(|e| (e.clone(), e.clone())));
        procs.push(renamep(machine_process(&mx), Arc::new(RenIndex::new(&RenSeq::new(items)))));
    }
    let link = |i: usize, j: usize| -> Vec<Chan> {
        let (a, b) = (&c.machines[i].name, &c.machines[j].name);
        c.connections
            .iter()
            .filter(|k| {
                (&k.from.component == a && &k.to.component == b) || (&k.from.component == b && &k.to.component == a)
            })
            .map(conn_chan)
            .collect()
    };
    let composed = compose(procs, &EventSet::of_chans([&terminate]), &link);
    let mut conn_events = HideList::default();
    for k in &c.connections {
        let ty = c
            .machines
            .iter()
            .find(|m| m.name == k.from.component)
            .and_then(|m| m.events.iter().find(|e| e.name == k.from.event))
            .and_then(|e| e.ty.clone());
        conn_events.extend(event_values(&env, &ty, Dir::In).into_iter().map(|p| ev(&conn_chan(k), p)));
    }
    let body = hidep(composed, Arc::new(conn_events));
    let shared = controller_shared(c);
    let body = if shared.is_empty() {
        body
    } else {
        let mut sync = EventSet::empty();
        let mut hidden = HideList::default();
        let vars: Vec<(String, TypeRef, Vec<Chan>)> = shared
            .iter()
            .map(|(x, t, ms)| {
                let chans: Vec<Chan> = ms.iter().map(|m| Chan::new(&format!("set_EXT_{x}_{m}"))).collect();
                for ch in &chans {
                    sync.add_chan(ch);
                    hidden.extend(env.values(t).iter().map(|v| ev(ch, v.clone())));
                }
                (x.clone(), t.clone(), chans)
            })
            .collect();
        hidep(parallel(body, memory(&env, &vars), Arc::new(sync)), Arc::new(hidden))
    };
    exception(body, Arc::new(EventSet::of_chans([&terminate])), Lazy::new(skip))
}

fn module_event_chan(model: &Model, name: &str) -> Chan {
    if model.module.qualify_events {
        Chan::new(&format!("{name}_{}", model.module.name))
    } else {
        Chan::new(name)
    }
}

/// Visible events of the compiled module: platform events in both
/// directions and platform operation calls.
pub fn module_alphabet(model: &Model) -> Vec<Event> {
    let env = Env::of(model);
    let mut out = Vec::new();
    for e in &model.module.platform.events {
        let chan = module_event_chan(model, &e.name);
        for d in [Dir::In, Dir::Out] {
            out.extend(event_values(&env, &e.ty, d).into_iter().map(|p| ev(&chan, p)));
        }
    }
    out.extend(op_events(&env, model));
    out
}

/// Compiles the whole module.
pub fn compile(model: &Model) -> ITree {
    let env = Env::of(model);
    let module = &model.module;
    let terminate = Chan::new("terminate");
    let ops = op_events(&env, model);
    let mut procs = Vec::new();
    let mut bounds: Vec<Vec<EventDecl>> = Vec::new();
    for (ci, c) in module.controllers.iter().enumerate() {
        let mut items: Vec<(Event, Event)> = vec![(ev(&terminate, Value::Unit), ev(&terminate, Value::Unit))];
        for (x, t, _) in controller_shared(c) {
            let set = Chan::new(&format!("set_{x}"));
            let ext = Chan::new(&format!("set_EXT_{x}"));
            let ext_c = Chan::new(&format!("set_EXT_{x}_{}", c.name));
            for v in env.values(&t).iter() {
                items.push((ev(&set, v.clone()), ev(&set, v.clone())));
                items.push((ev(&ext, v.clone()), ev(&ext_c, v.clone())));
            }
        }
        let bound = boundary_events(c);
        for e in &bound {
            let chan = Chan::new(&e.name);
            match module.connections.iter().find(|k| touches(k, &c.name, &e.name)) {
                Some(k) => {
                    let from = k.from.component == c.name;
                    let d = if from { Dir::Out } else { Dir::In };
                    let (target, td) = match (k.is_async, from) {
                        (false, _) => (conn_chan(k), Dir::In),
                        (true, true) => (conn_from(k), Dir::Out),
                        (true, false) => (conn_to(k), Dir::In),
                    };
                    for v in env.payloads(&e.ty) {
                        items.push((ev(&chan, payload(d, v.as_ref())), ev(&target, payload(td, v.as_ref()))));
                    }
                }
                None => {
                    let target = module_event_chan(model, &e.name);
                    for d in [Dir::In, Dir::Out] {
                        for p in event_values(&env, &e.ty, d) {
                            items.push((ev(&chan, p.clone()), ev(&target, p)));
                        }
                    }
                }
            }
        }
        items.extend(ops.iter().map(|e| (e.clone(), e.clone())));
        procs.push(renamep(compile_controller(model, ci), Arc::new(RenIndex::new(&RenSeq::new(items)))));
        bounds.push(bound);
    }
    let link = |i: usize, j: usize| -> Vec<Chan> {
        let (a, b) = (&module.controllers[i].name, &module.controllers[j].name);
        module
            .connections
            .iter()
            .filter(|k| !k.is_async)
            .filter(|k| {
                (&k.from.component == a && &k.to.component == b) || (&k.from.component == b && &k.to.component == a)
            })
            .map(conn_chan)
            .collect()
    };
    let mut system = compose(procs, &EventSet::of_chans([&terminate]), &link);

    let conn_type = |k: &Connection| -> Option<TypeRef> {
        let ci = module.controllers.iter().position(|c| c.name == k.from.component).expect("validated");
        bounds[ci].iter().find(|e| e.name == k.from.event).and_then(|e| e.ty.clone())
    };
    let mut hidden = HideList::default();
    for k in module.connections.iter().filter(|k| !k.is_async) {
        hidden.extend(event_values(&env, &conn_type(k), Dir::In).into_iter().map(|p| ev(&conn_chan(k), p)));
    }

    let asyncs: Vec<&Connection> = module.connections.iter().filter(|k| k.is_async).collect();
    if !asyncs.is_empty() {
        let mut sync = EventSet::empty();
        let mut buffers: Option<ITree> = None;
        for k in &asyncs {
            let ty = conn_type(k);
            let (from, to) = (conn_from(k), conn_to(k));
            sync.add_chan(&from);
            sync.add_chan(&to);
            hidden.extend(event_values(&env, &ty, Dir::Out).into_iter().map(|p| ev(&from, p)));
            hidden.extend(event_values(&env, &ty, Dir::In).into_iter().map(|p| ev(&to, p)));
            let b = single_buffer(&env, from, to, ty);
            buffers = Some(match buffers {
                None => b,
                Some(acc) => interleave(acc, b),
            });
        }
        system = parallel(system, buffers.expect("nonempty"), Arc::new(sync));
    }

    // Platform variables written by a machine are relayed to every controller
    // holding a copy.
    let mut vars: Vec<(String, TypeRef, Vec<Chan>)> = Vec::new();
    for c in &module.controllers {
        for (x, t, _) in controller_shared(c) {
            let ch = Chan::new(&format!("set_EXT_{x}_{}", c.name));
            match vars.iter_mut().find(|(y, _, _)| *y == x) {
                Some((_, _, cs)) => cs.push(ch),
                None => vars.push((x, t, vec![ch])),
            }
        }
    }
    if !vars.is_empty() {
        let mut sync = EventSet::empty();
        let mut mem_hidden = Vec::new();
        let rows: Vec<(Chan, Arc<Vec<Value>>, Vec<Chan>)> = vars
            .iter()
            .map(|(x, t, cs)| {
                let set = Chan::new(&format!("set_{x}"));
                sync.add_chan(&set);
                let values = env.values(t);
                mem_hidden.extend(values.iter().map(|v| ev(&set, v.clone())));
                for ch in cs {
                    sync.add_chan(ch);
                    mem_hidden.extend(values.iter().map(|v| ev(ch, v.clone())));
                }
                (set, values, cs.clone())
            })
            .collect();
        hidden.extend(mem_hidden);
        system = parallel(system, memory_from(Arc::new(rows)), Arc::new(sync));
    }

    let system = hidep(system, Arc::new(hidden));
    let caught = exception(system, Arc::new(EventSet::of_chans([&terminate])), Lazy::new(skip));
    hidep(caught, Arc::new(HideList::new([ev(&terminate, Value::Unit)])))
}

/// One-place buffer: accepts on `from` when empty, delivers on `to`.
fn single_buffer(env: &Env, from: Chan, to: Chan, ty: Option<TypeRef>) -> ITree {
    let values: Arc<Vec<Option<Value>>> = Arc::new(env.payloads(&ty));
    loop_(
        kont(move |held| {
            let held = held.items().expect("list").to_vec();
            let mut branches = Vec::new();
            if held.len() <= 1 {
                let offers = values.iter().map(|v| payload(Dir::Out, v.as_ref()));
                branches.push(bind(
                    inp(&from, offers),
                    kont(|p| ret(Value::list([super::payload_value(&p).unwrap_or(Value::Unit)]))),
                ));
            }
            if let Some(hd) = held.first() {
                let v = if values.first().is_some_and(|v| v.is_none()) { None } else { Some(hd.clone()) };
                branches.push(bind(outp(&to, payload(Dir::In, v.as_ref())), kont(|_| ret(Value::list([])))));
            }
            extchoice_all(branches)
        }),
        Value::list([]),
    )
}
