//! State machines: node processes, the machine memory, and the trigger
//! renaming that turns them into one machine process.

use std::collections::HashMap;
use std::sync::Arc;

use crate::event::{Chan, Event, EventSet, HideList};
use crate::finmap::{FinMap, RenSeq};
use crate::itree::{bind, iterate, kont, loop_, ret, skip, stop, Cond, ITree, Lazy};
use crate::model::expr::{eval, Action, Expr, Trigger};
use crate::model::types::TypeRef;
use crate::model::{Model, NodeKind, Transition};
use crate::ops::{exception, extchoice_all, hidep, inp, interrupt, outp, parallel, renamep, RenIndex};
use crate::value::{Dir, Value};

use super::{call_payload, call_payloads, ev, op_chan, or_stop, payload, payload_value, Env, StoreScope};

pub(crate) struct Var {
    pub name: String,
    pub ty: TypeRef,
    pub shared: bool,
    pub get: Chan,
    pub set: Chan,
    pub set_ext: Option<Chan>,
    pub init: Value,
}

pub(crate) struct EvInfo {
    pub chan: Chan,
    /// `e_`, carrying the transition identifier in front of the payload.
    pub trig: Chan,
    pub ty: Option<TypeRef>,
}

struct Flow {
    internal: Chan,
    enter: Chan,
    entered: Chan,
    exit: Chan,
    exited: Chan,
    terminate: Chan,
}

impl Flow {
    fn new(suffix: &str) -> Flow {
        let c = |n: &str| Chan::new(&format!("{n}{suffix}"));
        Flow {
            internal: c("internal"),
            enter: c("enter"),
            entered: c("entered"),
            exit: c("exit"),
            exited: c("exited"),
            terminate: c("terminate"),
        }
    }

    fn pair_events(&self, a: &Value, b: &Value) -> [Event; 4] {
        let p = Value::tuple([a.clone(), b.clone()]);
        [ev(&self.enter, p.clone()), ev(&self.entered, p.clone()), ev(&self.exit, p.clone()), ev(&self.exited, p)]
    }
}

/// Nodes and transitions of a machine body or of a defined operation.
struct Graph {
    flow: Flow,
    scope: Value,
    /// Identifiers of states and final states, in declaration order.
    sids: Vec<(String, Value)>,
    tids: HashMap<String, Value>,
    names: Arc<HashMap<String, usize>>,
    nodes: Vec<crate::model::Node>,
    transitions: Vec<Transition>,
}

impl Graph {
    fn sid(&self, node: &str) -> Value {
        self.sids.iter().find(|(n, _)| n == node).map(|(_, s)| s.clone()).expect("validated node")
    }

    fn node(&self, name: &str) -> &crate::model::Node {
        self.nodes.iter().find(|n| n.name == name).expect("validated node")
    }

    fn all_flow(&self) -> Vec<Event> {
        let mut out = Vec::new();
        let sources: Vec<&Value> = std::iter::once(&self.scope).chain(self.sids.iter().map(|(_, s)| s)).collect();
        for a in &sources {
            for (_, b) in &self.sids {
                out.extend(self.flow.pair_events(a, b));
            }
        }
        for (_, a) in &self.sids {
            out.extend(self.flow.pair_events(a, &self.scope));
        }
        out
    }
}

/// Everything needed to build a machine's processes.
pub(crate) struct Mx {
    pub env: Env,
    pub vars: Vec<Var>,
    pub events: Vec<(String, EvInfo)>,
    platform_ops: HashMap<String, Vec<TypeRef>>,
    defined: HashMap<String, (Arc<Graph>, Vec<usize>)>,
    defined_order: Vec<String>,
    main: Arc<Graph>,
}

impl Mx {
    fn event(&self, name: &str) -> &EvInfo {
        self.events.iter().find(|(n, _)| n == name).map(|(_, e)| e).expect("validated event")
    }
}

type Step = Arc<dyn Fn() -> ITree + Send + Sync>;

fn step(f: impl Fn() -> ITree + Send + Sync + 'static) -> Step {
    Arc::new(f)
}

/// Runs `steps` in order, then returns `end`.
fn chain(steps: Arc<Vec<Step>>, i: usize, end: Value) -> ITree {
    if i == steps.len() {
        return ret(end);
    }
    let t = (steps[i])();
    bind(t, kont(move |_| chain(steps.clone(), i + 1, end.clone())))
}

fn seq_steps(steps: Vec<Step>, end: Value) -> ITree {
    chain(Arc::new(steps), 0, end)
}

type ReadK = Arc<dyn Fn(&[Value]) -> ITree + Send + Sync>;

/// Reads variables `idxs` through their `get` channels, then continues with
/// a store holding the values read.
fn read_vars(mx: Arc<Mx>, idxs: Arc<Vec<usize>>, pos: usize, store: Arc<Vec<Value>>, k: ReadK) -> ITree {
    if pos == idxs.len() {
        return k(&store);
    }
    let i = idxs[pos];
    let var = &mx.vars[i];
    let t = inp(&var.get, mx.env.values(&var.ty).iter().cloned());
    let mx2 = mx.clone();
    bind(
        t,
        kont(move |v| {
            let mut s = (*store).clone();
            s[i] = v;
            read_vars(mx2.clone(), idxs.clone(), pos + 1, Arc::new(s), k.clone())
        }),
    )
}

fn reads_of(g: &Graph, exprs: &[&Expr]) -> Vec<usize> {
    let mut out = Vec::new();
    for e in exprs {
        for n in e.free_names() {
            if let Some(i) = g.names.get(&n) {
                if !out.contains(i) {
                    out.push(*i);
                }
            }
        }
    }
    out
}

/// Reads what `exprs` mention, then evaluates with `k`.
fn with_reads(mx: &Arc<Mx>, g: &Arc<Graph>, exprs: &[&Expr], k: impl Fn(&StoreScope) -> ITree + Send + Sync + 'static) -> ITree {
    let idxs = reads_of(g, exprs);
    let blank = Arc::new(vec![Value::Unit; mx.vars.len()]);
    let (mx2, g2) = (mx.clone(), g.clone());
    read_vars(
        mx.clone(),
        Arc::new(idxs),
        0,
        blank,
        Arc::new(move |store: &[Value]| {
            let sc = StoreScope { env: &mx2.env, names: &g2.names, store, binder: None };
            k(&sc)
        }),
    )
}

fn set_var(mx: &Mx, i: usize, v: &Value) -> ITree {
    let var = &mx.vars[i];
    match mx.env.types.coerce(&var.ty, v) {
        Some(v) => outp(&var.set, v),
        None => stop(),
    }
}

fn exec(mx: &Arc<Mx>, g: &Arc<Graph>, a: &Action) -> ITree {
    match a {
        Action::Skip | Action::ClockReset(_) | Action::Wait(_) => skip(),
        Action::Assign(x, e) => {
            let i = g.names[x];
            let e2 = e.clone();
            let mx2 = mx.clone();
            with_reads(mx, g, &[e], move |sc| or_stop(eval(&e2, sc).map(|v| set_var(&mx2, i, &v))))
        }
        Action::Send(e, None) => outp(&mx.event(e).chan, Value::Dir(Dir::Out)),
        Action::Send(e, Some(x)) => {
            let info = mx.event(e);
            let (chan, ty) = (info.chan.clone(), info.ty.clone().expect("typed event"));
            let (x2, mx2) = (x.clone(), mx.clone());
            with_reads(mx, g, &[x], move |sc| {
                or_stop(eval(&x2, sc).map(|v| match mx2.env.types.coerce(&ty, &v) {
                    Some(v) => outp(&chan, payload(Dir::Out, Some(&v))),
                    None => stop(),
                }))
            })
        }
        Action::Recv(e, x) => {
            let info = mx.event(e);
            let i = g.names[x];
            let offers = mx.env.payloads(&info.ty).into_iter().map(|v| payload(Dir::In, v.as_ref()));
            let mx2 = mx.clone();
            bind(inp(&info.chan, offers), kont(move |p| set_var(&mx2, i, &payload_value(&p).expect("typed"))))
        }
        Action::Call(op, args) => call(mx, g, op, args),
        Action::Seq(xs) => {
            let steps: Vec<Step> = xs
                .iter()
                .map(|x| {
                    let (mx, g, x) = (mx.clone(), g.clone(), x.clone());
                    step(move || exec(&mx, &g, &x))
                })
                .collect();
            seq_steps(steps, Value::Unit)
        }
    }
}

fn call(mx: &Arc<Mx>, g: &Arc<Graph>, op: &str, args: &[Expr]) -> ITree {
    let refs: Vec<&Expr> = args.iter().collect();
    let args2: Vec<Expr> = args.to_vec();
    let mx2 = mx.clone();
    let op = op.to_string();
    with_reads(mx, g, &refs, move |sc| {
        let vals: Result<Vec<Value>, _> = args2.iter().map(|a| eval(a, sc)).collect();
        let Ok(vals) = vals else { return stop() };
        if let Some((_, params)) = mx2.defined.get(&op) {
            let params = params.clone();
            let mut steps: Vec<Step> = Vec::new();
            for (i, v) in params.into_iter().zip(vals) {
                let mx3 = mx2.clone();
                steps.push(step(move || set_var(&mx3, i, &v)));
            }
            let (mx3, op2) = (mx2.clone(), op.clone());
            steps.push(step(move || defined_op(&mx3, &op2)));
            return seq_steps(steps, Value::Unit);
        }
        let types = mx2.platform_ops.get(&op).expect("validated operation");
        let coerced: Option<Vec<Value>> = types.iter().zip(&vals).map(|(t, v)| mx2.env.types.coerce(t, v)).collect();
        match coerced {
            Some(vs) => outp(&op_chan(&op), call_payload(vs)),
            None => stop(),
        }
    })
}

/// Body of a defined operation: its nodes with their flow hidden, ended by
/// its own termination event.
fn defined_op(mx: &Arc<Mx>, op: &str) -> ITree {
    let (g, _) = mx.defined.get(op).expect("defined operation");
    let nodes = hidep(nodes_of(mx, g), Arc::new(HideList::new(g.all_flow())));
    let term = ev(&g.flow.terminate, Value::Unit);
    let caught = exception(nodes, Arc::new(EventSet::of_chans([&g.flow.terminate])), Lazy::new(skip));
    hidep(caught, Arc::new(HideList::new([term])))
}

/// Node-side half of a trigger.
fn trigger(mx: &Arc<Mx>, g: &Arc<Graph>, t: &Transition) -> ITree {
    let tid = g.tids[&t.id].clone();
    let Some(tr) = &t.trigger else {
        return outp(&g.flow.internal, tid);
    };
    let info = mx.event(tr.event());
    let dir = trigger_dir(tr);
    let offers: Vec<Value> =
        mx.env.payloads(&info.ty).into_iter().map(|v| trig_payload(&tid, dir, v.as_ref())).collect();
    match tr {
        Trigger::Simple(_) => outp(&info.trig, trig_payload(&tid, Dir::In, None)),
        Trigger::Input(_, x) => {
            let i = g.names[x];
            let mx2 = mx.clone();
            bind(inp(&info.trig, offers), kont(move |p| set_var(&mx2, i, p.items().expect("tuple").last().expect("value"))))
        }
        Trigger::Output(..) | Trigger::Sync(..) => bind(inp(&info.trig, offers), kont(|_| skip())),
    }
}

fn trigger_dir(tr: &Trigger) -> Dir {
    match tr {
        Trigger::Output(..) => Dir::Out,
        _ => Dir::In,
    }
}

/// `(tid, d)` or `(tid, d, v)`.
fn trig_payload(tid: &Value, d: Dir, v: Option<&Value>) -> Value {
    match v {
        None => Value::tuple([tid.clone(), Value::Dir(d)]),
        Some(v) => Value::tuple([tid.clone(), Value::Dir(d), v.clone()]),
    }
}

fn junction(mx: &Arc<Mx>, g: &Arc<Graph>) -> ITree {
    let init = g.nodes.iter().find(|n| n.kind == NodeKind::Initial).expect("validated");
    let t = g.transitions.iter().find(|t| t.source == init.name).expect("validated").clone();
    let flow = (g.scope.clone(), g.sid(&t.target));
    let p = Value::tuple([flow.0, flow.1]);
    let (mx1, g1, t1) = (mx.clone(), g.clone(), t.clone());
    let (mx2, g2) = (mx.clone(), g.clone());
    let (g3, p3) = (g.clone(), p.clone());
    let (g4, p4) = (g.clone(), p);
    seq_steps(
        vec![
            step(move || trigger(&mx1, &g1, &t1)),
            step(move || exec(&mx2, &g2, &t.action)),
            step(move || outp(&g3.flow.enter, p3.clone())),
            step(move || outp(&g4.flow.entered, p4.clone())),
        ],
        Value::Unit,
    )
}

/// A transition leaving a state; returns `(re-enter?, target)`.
fn transition(mx: &Arc<Mx>, g: &Arc<Graph>, t: &Transition) -> ITree {
    let s = g.sid(&t.source);
    let tgt = g.sid(&t.target);
    let here = Value::tuple([s.clone(), s.clone()]);
    let mut steps: Vec<Step> = Vec::new();
    let (mx1, g1, t1) = (mx.clone(), g.clone(), t.clone());
    steps.push(step(move || trigger(&mx1, &g1, &t1)));
    let (g1, h1) = (g.clone(), here.clone());
    steps.push(step(move || outp(&g1.flow.exit, h1.clone())));
    let (mx1, g1, src) = (mx.clone(), g.clone(), t.source.clone());
    steps.push(step(move || exec(&mx1, &g1, &g1.node(&src).exit)));
    let (g1, h1) = (g.clone(), here);
    steps.push(step(move || outp(&g1.flow.exited, h1.clone())));
    let (mx1, g1, act) = (mx.clone(), g.clone(), t.action.clone());
    steps.push(step(move || exec(&mx1, &g1, &act)));
    let self_loop = s == tgt;
    if !self_loop {
        let p = Value::tuple([s.clone(), tgt.clone()]);
        let (g1, p1) = (g.clone(), p.clone());
        steps.push(step(move || outp(&g1.flow.enter, p1.clone())));
        let g1 = g.clone();
        steps.push(step(move || outp(&g1.flow.entered, p.clone())));
    }
    seq_steps(steps, Value::tuple([Value::Bool(self_loop), tgt]))
}

fn entering(g: &Graph, s: &Value) -> Vec<Value> {
    std::iter::once(&g.scope)
        .chain(g.sids.iter().map(|(_, x)| x))
        .filter(|x| *x != s)
        .map(|x| Value::tuple([x.clone(), s.clone()]))
        .collect()
}

fn state(mx: &Arc<Mx>, g: &Arc<Graph>, name: &str) -> ITree {
    let s = g.sid(name);
    let enters = Arc::new(entering(g, &s));
    let (mx, g, name) = (mx.clone(), g.clone(), name.to_string());
    loop_(
        kont(move |_| {
            let (mx, g, name) = (mx.clone(), g.clone(), name.clone());
            bind(
                inp(&g.flow.enter, enters.iter().cloned()),
                kont(move |sd| {
                    let cont: Cond = Arc::new(|r| r.nth(0).as_bool() == Some(true));
                    let (mx, g, name) = (mx.clone(), g.clone(), name.clone());
                    let body = kont(move |r| state_round(&mx, &g, &name, r.nth(1).clone()));
                    bind(iterate(cont, body, Value::tuple([Value::Bool(true), sd.nth(0).clone()])), kont(|_| skip()))
                }),
            )
        }),
        Value::Unit,
    )
}

/// A round that returns the chosen transition's `(re-enter?, target)`.
fn state_round(mx: &Arc<Mx>, g: &Arc<Graph>, name: &str, enterer: Value) -> ITree {
    let node = g.node(name);
    let s = g.sid(name);
    let entry = exec(mx, g, &node.entry);
    let (mx2, g2, name2) = (mx.clone(), g.clone(), name.to_string());
    bind(
        entry,
        kont(move |_| {
            let (mx3, g3, name3) = (mx2.clone(), g2.clone(), name2.clone());
            bind(
                outp(&g2.flow.entered, Value::tuple([enterer.clone(), s.clone()])),
                kont(move |_| {
                    let node = g3.node(&name3);
                    let body = bind(exec(&mx3, &g3, &node.during), kont(|_| stop()));
                    let ts: Vec<ITree> =
                        g3.transitions.iter().filter(|t| t.source == name3).map(|t| transition(&mx3, &g3, t)).collect();
                    interrupt(body, extchoice_all(ts))
                }),
            )
        }),
    )
}

fn final_state(g: &Arc<Graph>, name: &str) -> ITree {
    let s = g.sid(name);
    let enters = entering(g, &s);
    let g1 = g.clone();
    bind(
        inp(&g.flow.enter, enters),
        kont(move |sd| {
            let g2 = g1.clone();
            bind(outp(&g1.flow.entered, sd), kont(move |_| bind(outp(&g2.flow.terminate, Value::Unit), kont(|_| stop()))))
        }),
    )
}

/// Blocks the trigger events of transitions that leave other states.
fn restricted(mx: &Arc<Mx>, g: &Arc<Graph>, name: &str) -> ITree {
    let node = g.node(name);
    let p = match node.kind {
        NodeKind::Final => final_state(g, name),
        _ => state(mx, g, name),
    };
    let mut blocked = EventSet::empty();
    for t in g.transitions.iter().filter(|t| t.source != name) {
        let tid = &g.tids[&t.id];
        match &t.trigger {
            None => blocked.add_event(ev(&g.flow.internal, tid.clone())),
            Some(tr) => {
                let info = mx.event(tr.event());
                let d = trigger_dir(tr);
                for v in mx.env.payloads(&info.ty) {
                    blocked.add_event(ev(&info.trig, trig_payload(tid, d, v.as_ref())));
                }
            }
        }
    }
    if blocked.is_empty() {
        return p;
    }
    parallel(p, skip(), Arc::new(blocked))
}

fn compose_states(mx: &Arc<Mx>, g: &Arc<Graph>, names: &[String]) -> ITree {
    let head = restricted(mx, g, &names[0]);
    if names.len() == 1 {
        return head;
    }
    let h = g.sid(&names[0]);
    let mut sync = EventSet::empty();
    for t in &names[1..] {
        let ts = g.sid(t);
        for e in g.flow.pair_events(&ts, &h).into_iter().chain(g.flow.pair_events(&h, &ts)) {
            sync.add_event(e);
        }
    }
    parallel(head, compose_states(mx, g, &names[1..]), Arc::new(sync))
}

fn nodes_of(mx: &Arc<Mx>, g: &Arc<Graph>) -> ITree {
    let names: Vec<String> = g.sids.iter().map(|(n, _)| n.clone()).collect();
    let mut init = EventSet::empty();
    for (_, s) in &g.sids {
        for e in g.flow.pair_events(&g.scope, s) {
            init.add_event(e);
        }
    }
    parallel(junction(mx, g), compose_states(mx, g, &names), Arc::new(init))
}

/// Memory-side trigger availability of one transition.
struct Offer {
    tid: Value,
    trigger: Option<Trigger>,
    guard: Option<Expr>,
    internal: Chan,
    names: Arc<HashMap<String, usize>>,
}

fn offers(g: &Graph) -> Vec<Offer> {
    g.transitions
        .iter()
        .map(|t| Offer {
            tid: g.tids[&t.id].clone(),
            trigger: t.trigger.clone(),
            guard: t.guard.clone(),
            internal: g.flow.internal.clone(),
            names: g.names.clone(),
        })
        .collect()
}

fn guard_holds(env: &Env, o: &Offer, store: &[Value], binder: Option<(&str, Value)>) -> bool {
    match &o.guard {
        None => true,
        Some(gd) => {
            let sc = StoreScope { env, names: &o.names, store, binder };
            matches!(eval(gd, &sc), Ok(Value::Bool(true)))
        }
    }
}

fn memory_menu(mx: &Arc<Mx>, offers: &Arc<Vec<Offer>>, store: Arc<Vec<Value>>) -> ITree {
    let mut m = FinMap::new();
    let same = Value::Tuple(store.iter().cloned().collect());
    for (i, var) in mx.vars.iter().enumerate() {
        m.insert(ev(&var.get, store[i].clone()), Lazy::now(ret(same.clone())));
        let values = mx.env.values(&var.ty);
        for chan in std::iter::once(&var.set).chain(var.set_ext.iter()) {
            for v in values.iter() {
                let (store, v2) = (store.clone(), v.clone());
                m.insert(
                    ev(chan, v.clone()),
                    Lazy::new(move || {
                        let mut s: Vec<Value> = (*store).clone();
                        s[i] = v2.clone();
                        ret(Value::Tuple(s.into()))
                    }),
                );
            }
        }
    }
    for o in offers.iter() {
        let stay = Lazy::now(ret(same.clone()));
        match &o.trigger {
            None => {
                if guard_holds(&mx.env, o, &store, None) {
                    m.insert(ev(&o.internal, o.tid.clone()), stay);
                }
            }
            Some(Trigger::Simple(e)) => {
                if guard_holds(&mx.env, o, &store, None) {
                    m.insert(ev(&mx.event(e).trig, trig_payload(&o.tid, Dir::In, None)), stay);
                }
            }
            Some(Trigger::Input(e, x)) => {
                let info = mx.event(e);
                let ty = info.ty.as_ref().expect("typed");
                for v in mx.env.values(ty).iter() {
                    if guard_holds(&mx.env, o, &store, Some((x, v.clone()))) {
                        m.insert(ev(&info.trig, trig_payload(&o.tid, Dir::In, Some(v))), stay.clone());
                    }
                }
            }
            Some(tr @ (Trigger::Output(e, x) | Trigger::Sync(e, x))) => {
                let info = mx.event(e);
                if guard_holds(&mx.env, o, &store, None) {
                    let sc = StoreScope { env: &mx.env, names: &o.names, store: &store, binder: None };
                    let ty = info.ty.as_ref().expect("typed");
                    if let Some(v) = eval(x, &sc).ok().and_then(|v| mx.env.types.coerce(ty, &v)) {
                        m.insert(ev(&info.trig, trig_payload(&o.tid, trigger_dir(tr), Some(&v))), stay);
                    }
                }
            }
        }
    }
    ITree::vis(m)
}

fn memory(mx: &Arc<Mx>) -> ITree {
    let mut all = offers(&mx.main);
    for op in &mx.defined_order {
        all.extend(offers(&mx.defined[op].0));
    }
    let all = Arc::new(all);
    let init = Value::Tuple(mx.vars.iter().map(|v| v.init.clone()).collect());
    let mx2 = mx.clone();
    loop_(
        kont(move |store| {
            let s: Vec<Value> = store.items().expect("store").to_vec();
            memory_menu(&mx2, &all, Arc::new(s))
        }),
        init,
    )
}

fn build(model: &Model, ctrl: usize, mi: usize) -> Arc<Mx> {
    let env = Env::of(model);
    let c = &model.module.controllers[ctrl];
    let m = &c.machines[mi];
    let mut vars: Vec<Var> = Vec::new();
    let default = |t: &TypeRef| env.values(t).first().cloned().expect("nonempty type");
    let local = |name: &str, ty: &TypeRef, init: Option<Value>, vars: &mut Vec<Var>| {
        vars.push(Var {
            name: name.to_string(),
            ty: ty.clone(),
            shared: false,
            get: Chan::new(&format!("get_{name}")),
            set: Chan::new(&format!("set_{name}")),
            set_ext: None,
            init: init.unwrap_or_else(|| default(ty)),
        });
    };
    for v in &m.locals {
        local(&v.name, &v.ty, v.init.clone(), &mut vars);
    }
    let mut defined_params = HashMap::new();
    for op in &m.calls_defined {
        let def = c.operations.iter().find(|o| &o.name == op).expect("validated");
        let mut idxs = Vec::new();
        for (p, t) in &def.params {
            idxs.push(vars.len());
            local(&format!("{p}_{op}"), t, None, &mut vars);
        }
        defined_params.insert(op.clone(), idxs);
    }
    for v in &m.shared {
        vars.push(Var {
            name: v.name.clone(),
            ty: v.ty.clone(),
            shared: true,
            get: Chan::new(&format!("get_{}", v.name)),
            set: Chan::new(&format!("set_{}", v.name)),
            set_ext: Some(Chan::new(&format!("set_EXT_{}", v.name))),
            init: v.init.clone().unwrap_or_else(|| default(&v.ty)),
        });
    }
    let events = m
        .events
        .iter()
        .map(|e| {
            (
                e.name.clone(),
                EvInfo { chan: Chan::new(&e.name), trig: Chan::new(&format!("{}_", e.name)), ty: e.ty.clone() },
            )
        })
        .collect();
    let platform_ops = model.module.platform.operations.iter().map(|o| (o.name.clone(), o.params.clone())).collect();

    let graph = |flow: Flow, prefix: &str, nodes: &[crate::model::Node], ts: &[Transition], names: HashMap<String, usize>| {
        Graph {
            flow,
            scope: Value::sid(&format!("SID_{prefix}")),
            sids: nodes
                .iter()
                .filter(|n| n.kind != NodeKind::Initial)
                .map(|n| (n.name.clone(), Value::sid(&format!("SID_{prefix}_{}", n.name))))
                .collect(),
            tids: ts.iter().map(|t| (t.id.clone(), Value::tid(&format!("TID_{prefix}_{}", t.id)))).collect(),
            names: Arc::new(names),
            nodes: nodes.to_vec(),
            transitions: ts.to_vec(),
        }
    };
    let main_names: HashMap<String, usize> = vars
        .iter()
        .enumerate()
        .filter(|(_, v)| m.locals.iter().any(|l| l.name == v.name) || v.shared)
        .map(|(i, v)| (v.name.clone(), i))
        .collect();
    let main = Arc::new(graph(Flow::new(""), &m.name, &m.nodes, &m.transitions, main_names));
    let mut defined = HashMap::new();
    for op in &m.calls_defined {
        let def = c.operations.iter().find(|o| &o.name == op).expect("validated");
        let idxs = defined_params[op].clone();
        let names = def.params.iter().map(|(p, _)| p.clone()).zip(idxs.iter().copied()).collect();
        let g = graph(Flow::new(&format!("_{op}")), op, &def.nodes, &def.transitions, names);
        defined.insert(op.clone(), (Arc::new(g), idxs));
    }
    Arc::new(Mx {
        env,
        vars,
        events,
        platform_ops,
        defined,
        defined_order: m.calls_defined.clone(),
        main,
    })
}

/// The trigger renaming: `e_.(tid, d, v)` becomes `e.(d, v)` in transition
/// creation order, then every other visible channel keeps its name.
fn trigger_map(mx: &Mx) -> RenSeq<Event, Event> {
    let mut items = Vec::new();
    let graphs: Vec<&Graph> =
        std::iter::once(mx.main.as_ref()).chain(mx.defined_order.iter().map(|o| mx.defined[o].0.as_ref())).collect();
    for g in &graphs {
        for t in &g.transitions {
            let Some(tr) = &t.trigger else { continue };
            let info = mx.event(tr.event());
            let d = trigger_dir(tr);
            let tid = &g.tids[&t.id];
            for v in mx.env.payloads(&info.ty) {
                items.push((ev(&info.trig, trig_payload(tid, d, v.as_ref())), ev(&info.chan, payload(d, v.as_ref()))));
            }
        }
    }
    let mut id = |e: Event| items.push((e.clone(), e));
    for g in &graphs {
        for t in &g.transitions {
            id(ev(&g.flow.internal, g.tids[&t.id].clone()));
        }
    }
    id(ev(&mx.main.flow.terminate, Value::Unit));
    for var in mx.vars.iter().filter(|v| v.shared) {
        for v in mx.env.values(&var.ty).iter() {
            id(ev(&var.set, v.clone()));
        }
        for v in mx.env.values(&var.ty).iter() {
            id(ev(var.set_ext.as_ref().expect("shared"), v.clone()));
        }
    }
    for (_, info) in &mx.events {
        for d in [Dir::In, Dir::Out] {
            for v in mx.env.payloads(&info.ty) {
                id(ev(&info.chan, payload(d, v.as_ref())));
            }
        }
    }
    let mut ops: Vec<(&String, &Vec<TypeRef>)> = mx.platform_ops.iter().collect();
    ops.sort_by_key(|(n, _)| n.as_str());
    for (op, params) in ops {
        for p in call_payloads(&mx.env, params) {
            id(ev(&op_chan(op), p));
        }
    }
    RenSeq::new(items)
}

/// Compiles machine `mi` of controller `ctrl` in its own scope.
pub fn compile_machine(model: &Model, ctrl: usize, mi: usize) -> ITree {
    machine_process(&build(model, ctrl, mi))
}

pub(crate) fn machine_info(model: &Model, ctrl: usize, mi: usize) -> Arc<Mx> {
    build(model, ctrl, mi)
}

pub(crate) fn machine_process(mx: &Arc<Mx>) -> ITree {
    let nodes = hidep(nodes_of(mx, &mx.main), Arc::new(HideList::new(mx.main.all_flow())));
    let mut sync = EventSet::empty();
    let mut hidden = HideList::default();
    for var in &mx.vars {
        sync.add_chan(&var.get);
        sync.add_chan(&var.set);
        let values = mx.env.values(&var.ty);
        hidden.extend(values.iter().map(|v| ev(&var.get, v.clone())));
        if !var.shared {
            hidden.extend(values.iter().map(|v| ev(&var.set, v.clone())));
        }
    }
    for (_, info) in &mx.events {
        sync.add_chan(&info.trig);
    }
    let mut internal = HideList::default();
    sync.add_chan(&mx.main.flow.internal);
    for t in &mx.main.transitions {
        internal.push(ev(&mx.main.flow.internal, mx.main.tids[&t.id].clone()));
    }
    for op in &mx.defined_order {
        let g = &mx.defined[op].0;
        sync.add_chan(&g.flow.internal);
        for t in &g.transitions {
            internal.push(ev(&g.flow.internal, g.tids[&t.id].clone()));
        }
    }
    let ms = hidep(parallel(nodes, memory(mx), Arc::new(sync)), Arc::new(hidden));
    let renamed = renamep(ms, Arc::new(RenIndex::new(&trigger_map(mx))));
    let term = EventSet::of_chans([&mx.main.flow.terminate]);
    hidep(exception(renamed, Arc::new(term), Lazy::new(skip)), Arc::new(internal))
}
