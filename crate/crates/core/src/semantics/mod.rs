//! Compilation of validated models into interaction trees.
//!
//! Each scope (machine, controller, module) has its own channel names; a
//! child is always brought into its parent's scope by prioritised renaming.

mod machine;
mod system;

use std::collections::HashMap;
use std::sync::Arc;

use crate::event::{Chan, Event};
use crate::itree::{stop, ITree};
use crate::model::expr::{EvalError, Scope};
use crate::model::functions::Functions;
use crate::model::types::{TypeEnv, TypeRef};
use crate::model::Model;
use crate::value::{Dir, Value};

pub use machine::compile_machine;
pub use system::{compile, compile_controller, module_alphabet};

/// Model-wide evaluation context.
#[derive(Clone)]
pub(crate) struct Env {
    pub types: Arc<TypeEnv>,
    pub constants: Arc<HashMap<String, Value>>,
    pub functions: Arc<Functions>,
}

impl Env {
    pub fn of(model: &Model) -> Env {
        Env { types: model.types.clone(), constants: model.constants.clone(), functions: model.functions.clone() }
    }

    pub fn values(&self, t: &TypeRef) -> Arc<Vec<Value>> {
        self.types.values(t)
    }

    /// Payload values of an event type; `None` stands for an untyped event.
    pub fn payloads(&self, t: &Option<TypeRef>) -> Vec<Option<Value>> {
        match t {
            None => vec![None],
            Some(t) => self.values(t).iter().cloned().map(Some).collect(),
        }
    }
}

/// Evaluation over a vector of variable values addressed by name.
pub(crate) struct StoreScope<'a> {
    pub env: &'a Env,
    pub names: &'a HashMap<String, usize>,
    pub store: &'a [Value],
    pub binder: Option<(&'a str, Value)>,
}

impl Scope for StoreScope<'_> {
    fn lookup(&self, name: &str) -> Option<Value> {
        if let Some((b, v)) = &self.binder {
            if *b == name {
                return Some(v.clone());
            }
        }
        if let Some(i) = self.names.get(name) {
            return Some(self.store[*i].clone());
        }
        self.env.constants.get(name).cloned()
    }

    fn call(&self, name: &str, args: &[Value]) -> Result<Value, EvalError> {
        self.env.functions.apply(name, args)
    }

    fn types(&self) -> &TypeEnv {
        &self.env.types
    }
}

/// `d` or `(d, v)`.
pub(crate) fn payload(d: Dir, v: Option<&Value>) -> Value {
    match v {
        None => Value::Dir(d),
        Some(v) => Value::tuple([Value::Dir(d), v.clone()]),
    }
}

/// Value part of an event payload built by [`payload`].
pub(crate) fn payload_value(p: &Value) -> Option<Value> {
    match p {
        Value::Tuple(xs) if xs.len() == 2 => Some(xs[1].clone()),
        _ => None,
    }
}

pub(crate) fn ev(c: &Chan, v: Value) -> Event {
    Event::new(c, v)
}

/// Blocks on evaluation errors: a failed precondition or an out-of-range
/// result disables the behaviour that needed it.
pub(crate) fn or_stop(r: Result<ITree, EvalError>) -> ITree {
    r.unwrap_or_else(|_| stop())
}

/// Argument payload of an operation call: unit, the single value, or a tuple.
pub(crate) fn call_payload(args: Vec<Value>) -> Value {
    match args.len() {
        0 => Value::Unit,
        1 => args.into_iter().next().expect("one"),
        _ => Value::Tuple(args.into()),
    }
}

/// Every call payload for parameter types `params`.
pub(crate) fn call_payloads(env: &Env, params: &[TypeRef]) -> Vec<Value> {
    let mut acc: Vec<Vec<Value>> = vec![Vec::new()];
    for t in params {
        let vs = env.values(t);
        acc = acc
            .into_iter()
            .flat_map(|pre| {
                vs.iter().map(move |v| {
                    let mut row = pre.clone();
                    row.push(v.clone());
                    row
                })
            })
            .collect();
    }
    acc.into_iter().map(call_payload).collect()
}

pub(crate) fn op_chan(op: &str) -> Chan {
    Chan::new(&format!("{op}Call"))
}
