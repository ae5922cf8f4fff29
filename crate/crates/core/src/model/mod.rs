//! Robot model files: parsing, name resolution and validation.
//!
//! A model file is JSON with four top-level parts: `config`, `types`,
//! `functions` and `module`, plus optional `constants`, `name` and `banner`.
//! Guards, actions and triggers are written as strings in the syntax of
//! [`expr`].

pub mod expr;
pub mod functions;
pub mod types;

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::value::Value;
use expr::{eval, parse_action, parse_expr, parse_trigger, Action, EvalError, Expr, Scope, Trigger};
use functions::{FunctionDef, Functions};
use types::{CoreConfig, TypeDef, TypeEnv, TypeRef};

pub const DEFAULT_BANNER: &str = "Starting ITree animation...";

/// Rejected model, with the JSON-ish path of the offending element.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ModelError {
    pub path: String,
    pub message: String,
}

fn err<T>(path: impl Into<String>, message: impl Into<String>) -> Result<T, ModelError> {
    Err(ModelError { path: path.into(), message: message.into() })
}

// ---- file format ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSrc {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    banner: Option<String>,
    #[serde(default)]
    config: CoreConfig,
    #[serde(default)]
    types: Vec<TypeDef>,
    #[serde(default)]
    constants: Vec<ConstSrc>,
    #[serde(default)]
    functions: Vec<FunctionSrc>,
    module: ModuleSrc,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstSrc {
    name: String,
    #[serde(rename = "type")]
    ty: String,
    value: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamSrc {
    name: String,
    #[serde(rename = "type")]
    ty: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionSrc {
    name: String,
    #[serde(default)]
    params: Vec<ParamSrc>,
    result: String,
    #[serde(default)]
    pre: Vec<String>,
    #[serde(default)]
    post: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModuleSrc {
    name: String,
    #[serde(default)]
    qualify_events: bool,
    platform: PlatformSrc,
    controllers: Vec<ControllerSrc>,
    #[serde(default)]
    connections: Vec<ConnSrc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlatformSrc {
    name: String,
    #[serde(default)]
    events: Vec<EventSrc>,
    #[serde(default)]
    variables: Vec<VarSrc>,
    #[serde(default)]
    operations: Vec<OpSigSrc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventSrc {
    name: String,
    #[serde(rename = "type", default)]
    ty: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VarSrc {
    name: String,
    #[serde(rename = "type")]
    ty: String,
    #[serde(default)]
    init: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OpSigSrc {
    name: String,
    #[serde(default)]
    params: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerSrc {
    name: String,
    machines: Vec<MachineSrc>,
    #[serde(default)]
    operations: Vec<OperationSrc>,
    #[serde(default)]
    connections: Vec<ConnSrc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MachineSrc {
    name: String,
    #[serde(default)]
    variables: Vec<VarSrc>,
    #[serde(default)]
    shared: Vec<String>,
    #[serde(default)]
    events: Vec<EventSrc>,
    nodes: Vec<NodeSrc>,
    transitions: Vec<TransSrc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OperationSrc {
    name: String,
    #[serde(default)]
    params: Vec<ParamSrc>,
    nodes: Vec<NodeSrc>,
    transitions: Vec<TransSrc>,
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum NodeKindSrc {
    Initial,
    State,
    Final,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeSrc {
    name: String,
    kind: NodeKindSrc,
    #[serde(default)]
    entry: Option<String>,
    #[serde(default)]
    during: Option<String>,
    #[serde(default)]
    exit: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TransSrc {
    id: String,
    from: String,
    to: String,
    #[serde(default)]
    trigger: Option<String>,
    #[serde(default)]
    guard: Option<String>,
    #[serde(default)]
    action: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConnSrc {
    from: String,
    to: String,
    #[serde(rename = "async", default)]
    is_async: bool,
}

// ---- validated model ----

#[derive(Clone, Debug)]
pub struct EventDecl {
    pub name: String,
    pub ty: Option<TypeRef>,
}

#[derive(Clone, Debug)]
pub struct VarDecl {
    pub name: String,
    pub ty: TypeRef,
    pub init: Option<Value>,
}

#[derive(Clone, Debug)]
pub struct OpSig {
    pub name: String,
    pub params: Vec<TypeRef>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Initial,
    State,
    Final,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    pub entry: Action,
    pub during: Action,
    pub exit: Action,
}

#[derive(Clone, Debug)]
pub struct Transition {
    pub id: String,
    pub source: String,
    pub target: String,
    pub trigger: Option<Trigger>,
    pub guard: Option<Expr>,
    pub action: Action,
}

#[derive(Clone, Debug)]
pub struct Machine {
    pub name: String,
    pub locals: Vec<VarDecl>,
    /// Shared variables, declared by the platform.
    pub shared: Vec<VarDecl>,
    pub events: Vec<EventDecl>,
    pub nodes: Vec<Node>,
    pub transitions: Vec<Transition>,
    /// Defined operations this machine calls, in first-call order.
    pub calls_defined: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Operation {
    pub name: String,
    pub params: Vec<(String, TypeRef)>,
    pub nodes: Vec<Node>,
    pub transitions: Vec<Transition>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Endpoint {
    pub component: String,
    pub event: String,
}

#[derive(Clone, Debug)]
pub struct Connection {
    pub from: Endpoint,
    pub to: Endpoint,
    pub is_async: bool,
}

#[derive(Clone, Debug)]
pub struct Controller {
    pub name: String,
    pub machines: Vec<Machine>,
    pub operations: Vec<Operation>,
    pub connections: Vec<Connection>,
}

#[derive(Clone, Debug)]
pub struct Platform {
    pub name: String,
    pub events: Vec<EventDecl>,
    pub variables: Vec<VarDecl>,
    pub operations: Vec<OpSig>,
}

#[derive(Clone, Debug)]
pub struct Module {
    pub name: String,
    pub qualify_events: bool,
    pub platform: Platform,
    pub controllers: Vec<Controller>,
    pub connections: Vec<Connection>,
}

/// A validated model, ready for compilation.
#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub banner: String,
    pub types: Arc<TypeEnv>,
    pub constants: Arc<HashMap<String, Value>>,
    pub functions: Arc<Functions>,
    pub module: Module,
}

const BUILTINS: [(&str, usize); 6] = [("size", 1), ("blength", 1), ("bnth", 2), ("Plus", 2), ("Minus", 2), ("Mult", 2)];

/// Largest argument domain exhaustively checked for unique function results.
const FUNCTION_CHECK_LIMIT: usize = 100_000;

struct ConstScope<'a> {
    types: &'a TypeEnv,
    constants: &'a HashMap<String, Value>,
    funcs: Option<&'a Functions>,
}

impl Scope for ConstScope<'_> {
    fn lookup(&self, name: &str) -> Option<Value> {
        self.constants.get(name).cloned()
    }

    fn call(&self, name: &str, args: &[Value]) -> Result<Value, EvalError> {
        match self.funcs {
            Some(f) => f.apply(name, args),
            None => Err(EvalError::Undefined(format!("{name}(..)"))),
        }
    }

    fn types(&self) -> &TypeEnv {
        self.types
    }
}

impl Model {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Model, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError { path: path.display().to_string(), message: e.to_string() })?;
        Model::from_json_str(&text, overrides)
    }

    /// Parses and validates a model. `overrides` are `key=value` settings
    /// applied on top of the file's `config`.
    pub fn from_json_str(text: &str, overrides: &[String]) -> Result<Model, ModelError> {
        let src: ModelSrc = serde_json::from_str(text)
            .map_err(|e| ModelError { path: format!("line {} column {}", e.line(), e.column()), message: e.to_string() })?;
        let mut config = src.config.clone();
        for kv in overrides {
            config.apply_override(kv).map_err(|m| ModelError { path: "config".into(), message: m })?;
        }
        let types = Arc::new(TypeEnv::new(config, &src.types).map_err(|m| ModelError { path: "types".into(), message: m })?);
        let resolve = |path: &str, s: &str| -> Result<TypeRef, ModelError> {
            let t = TypeRef::parse(s).map_err(|m| ModelError { path: path.into(), message: m })?;
            types.check_ref(&t).map_err(|m| ModelError { path: path.into(), message: m })?;
            Ok(t)
        };

        let mut constants = HashMap::new();
        for (i, c) in src.constants.iter().enumerate() {
            let path = format!("constants[{i}] ({})", c.name);
            let ty = resolve(&path, &c.ty)?;
            let e = parse_expr(&c.value).map_err(|m| ModelError { path: path.clone(), message: m })?;
            let v = eval(&e, &ConstScope { types: &types, constants: &constants, funcs: None })
                .map_err(|m| ModelError { path: path.clone(), message: m.to_string() })?;
            let Some(v) = types.coerce(&ty, &v) else {
                return err(path, format!("value {v} is not a {ty}"));
            };
            if constants.insert(c.name.clone(), v).is_some() {
                return err(path, "constant declared twice");
            }
        }
        let constants = Arc::new(constants);

        let mut defs = Vec::new();
        for (i, f) in src.functions.iter().enumerate() {
            let path = format!("functions[{i}] ({})", f.name);
            let params = f
                .params
                .iter()
                .map(|p| resolve(&path, &p.ty).map(|t| (p.name.clone(), t)))
                .collect::<Result<Vec<_>, _>>()?;
            let parse_all = |xs: &[String], what: &str| -> Result<Vec<Expr>, ModelError> {
                xs.iter()
                    .enumerate()
                    .map(|(j, s)| parse_expr(s).map_err(|m| ModelError { path: format!("{path}.{what}[{j}]"), message: m }))
                    .collect()
            };
            defs.push(FunctionDef {
                name: f.name.clone(),
                params,
                result: resolve(&path, &f.result)?,
                pre: parse_all(&f.pre, "pre")?,
                post: parse_all(&f.post, "post")?,
            });
        }
        let fnames: HashMap<String, usize> = defs.iter().map(|d| (d.name.clone(), d.params.len())).collect();
        if fnames.len() != defs.len() {
            return err("functions", "function declared twice");
        }
        for d in &defs {
            let path = format!("function {}", d.name);
            let mut bound: Vec<String> = d.params.iter().map(|(n, _)| n.clone()).collect();
            bound.push("result".into());
            let names = NameCtx { types: &types, constants: &constants, functions: &fnames, vars: &bound };
            for e in d.pre.iter().chain(&d.post) {
                names.check_expr(&path, e)?;
            }
        }
        let functions = Arc::new(Functions::new(types.clone(), constants.clone(), defs));
        let mut fn_list: Vec<&String> = fnames.keys().collect();
        fn_list.sort();
        for f in fn_list {
            if let Err((args, e)) = functions.check_total(f, FUNCTION_CHECK_LIMIT) {
                let shown: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                return err(format!("function {f}"), format!("on ({}): {e}", shown.join(",")));
            }
        }

        let cx = Resolver { types: &types, constants: &constants, functions: &fnames };
        let module = cx.module(&src.module)?;
        Ok(Model {
            name: src.name.clone().unwrap_or_else(|| src.module.name.clone()),
            banner: src.banner.clone().unwrap_or_else(|| DEFAULT_BANNER.to_string()),
            types,
            constants,
            functions,
            module,
        })
    }

    /// Resolves a constant, for tests and tools.
    pub fn constant(&self, name: &str) -> Option<&Value> {
        self.constants.get(name)
    }
}

/// Names visible to an expression.
struct NameCtx<'a> {
    types: &'a TypeEnv,
    constants: &'a HashMap<String, Value>,
    functions: &'a HashMap<String, usize>,
    vars: &'a [String],
}

impl NameCtx<'_> {
    fn check_expr(&self, path: &str, e: &Expr) -> Result<(), ModelError> {
        for n in e.free_names() {
            if self.vars.contains(&n) || self.constants.contains_key(&n) {
                continue;
            }
            match self.types.literal(None, &n) {
                Ok(Some(_)) => {}
                Ok(None) => return err(path, format!("unknown name `{n}`")),
                Err(m) => return err(path, m),
            }
        }
        self.check_qualified(path, e)?;
        let mut calls = Vec::new();
        e.called_functions(&mut calls);
        for f in calls {
            let known = self.functions.contains_key(&f) || BUILTINS.iter().any(|(b, _)| *b == f);
            if !known {
                return err(path, format!("unknown function `{f}`"));
            }
        }
        self.check_arity(path, e)
    }

    fn check_qualified(&self, path: &str, e: &Expr) -> Result<(), ModelError> {
        let mut bad = None;
        visit(e, &mut |x| {
            if let Expr::Qualified(t, l) = x {
                if !matches!(self.types.literal(Some(t), l), Ok(Some(_))) && bad.is_none() {
                    bad = Some(format!("unknown literal `{t}::{l}`"));
                }
            }
        });
        match bad {
            Some(m) => err(path, m),
            None => Ok(()),
        }
    }

    fn check_arity(&self, path: &str, e: &Expr) -> Result<(), ModelError> {
        let mut bad = None;
        visit(e, &mut |x| {
            if let Expr::Call(f, args) = x {
                let want = self.functions.get(f).copied().or_else(|| BUILTINS.iter().find(|(b, _)| b == f).map(|(_, n)| *n));
                if want.is_some_and(|n| n != args.len()) && bad.is_none() {
                    bad = Some(format!("`{f}` applied to {} arguments", args.len()));
                }
            }
        });
        match bad {
            Some(m) => err(path, m),
            None => Ok(()),
        }
    }
}

fn visit(e: &Expr, f: &mut dyn FnMut(&Expr)) {
    f(e);
    match e {
        Expr::Neg(a) | Expr::Not(a) | Expr::Field(a, _) => visit(a, f),
        Expr::Bin(_, a, b) => {
            visit(a, f);
            visit(b, f);
        }
        Expr::Call(_, xs) | Expr::Tuple(xs) | Expr::SeqLit(xs) => xs.iter().for_each(|x| visit(x, f)),
        Expr::If(c, t, e2) => {
            visit(c, f);
            visit(t, f);
            visit(e2, f);
        }
        Expr::Quant { bound, body, .. } => {
            visit(bound, f);
            visit(body, f);
        }
        Expr::Int(_) | Expr::Bool(_) | Expr::Name(_) | Expr::Qualified(..) => {}
    }
}

struct Resolver<'a> {
    types: &'a TypeEnv,
    constants: &'a HashMap<String, Value>,
    functions: &'a HashMap<String, usize>,
}

/// Everything a machine body may refer to.
struct BodyCtx<'a> {
    vars: Vec<String>,
    events: &'a [EventDecl],
    platform_ops: &'a [OpSig],
    defined_ops: &'a [OperationSrc],
}

impl Resolver<'_> {
    fn ty(&self, path: &str, s: &str) -> Result<TypeRef, ModelError> {
        let t = TypeRef::parse(s).map_err(|m| ModelError { path: path.into(), message: m })?;
        self.types.check_ref(&t).map_err(|m| ModelError { path: path.into(), message: m })?;
        Ok(t)
    }

    fn events(&self, path: &str, es: &[EventSrc]) -> Result<Vec<EventDecl>, ModelError> {
        let mut seen = HashSet::new();
        es.iter()
            .map(|e| {
                if !seen.insert(e.name.clone()) {
                    return err(format!("{path}.events"), format!("event `{}` declared twice", e.name));
                }
                let ty = e.ty.as_deref().map(|t| self.ty(&format!("{path}.events.{}", e.name), t)).transpose()?;
                Ok(EventDecl { name: e.name.clone(), ty })
            })
            .collect()
    }

    fn vars(&self, path: &str, vs: &[VarSrc]) -> Result<Vec<VarDecl>, ModelError> {
        let mut seen = HashSet::new();
        vs.iter()
            .map(|v| {
                let p = format!("{path}.variables.{}", v.name);
                if !seen.insert(v.name.clone()) {
                    return err(p, "variable declared twice");
                }
                let ty = self.ty(&p, &v.ty)?;
                let init = match &v.init {
                    None => None,
                    Some(s) => {
                        let e = parse_expr(s).map_err(|m| ModelError { path: p.clone(), message: m })?;
                        let val = eval(&e, &ConstScope { types: self.types, constants: self.constants, funcs: None })
                            .map_err(|m| ModelError { path: p.clone(), message: m.to_string() })?;
                        match self.types.coerce(&ty, &val) {
                            Some(x) => Some(x),
                            None => return err(p, format!("initial value {val} is not a {ty}")),
                        }
                    }
                };
                Ok(VarDecl { name: v.name.clone(), ty, init })
            })
            .collect()
    }

    fn module(&self, m: &ModuleSrc) -> Result<Module, ModelError> {
        let ppath = format!("module.platform ({})", m.platform.name);
        let platform = Platform {
            name: m.platform.name.clone(),
            events: self.events(&ppath, &m.platform.events)?,
            variables: self.vars(&ppath, &m.platform.variables)?,
            operations: m
                .platform
                .operations
                .iter()
                .map(|o| {
                    let params = o
                        .params
                        .iter()
                        .map(|t| self.ty(&format!("{ppath}.operations.{}", o.name), t))
                        .collect::<Result<_, _>>()?;
                    Ok(OpSig { name: o.name.clone(), params })
                })
                .collect::<Result<_, ModelError>>()?,
        };
        if m.controllers.is_empty() {
            return err("module", "a module needs at least one controller");
        }
        let mut controllers = Vec::new();
        let mut names = HashSet::new();
        for c in &m.controllers {
            if !names.insert(c.name.clone()) || c.name == platform.name {
                return err(format!("module.controllers.{}", c.name), "duplicate component name");
            }
            controllers.push(self.controller(c, &platform)?);
        }
        let connections = self.connections("module.connections", &m.connections, |comp, ev| {
            controllers
                .iter()
                .find(|c| c.name == comp)
                .is_some_and(|c| boundary_events(c).iter().any(|e| e.name == ev))
        })?;
        for c in &connections {
            if c.from.component == c.to.component {
                return err("module.connections", format!("{} connects a controller to itself", c.from.event));
            }
        }
        // Controller events not joined to another controller belong to the platform.
        for c in &controllers {
            for e in boundary_events(c) {
                let linked = connections.iter().any(|k| {
                    (k.from.component == c.name && k.from.event == e.name) || (k.to.component == c.name && k.to.event == e.name)
                });
                if linked {
                    continue;
                }
                match platform.events.iter().find(|p| p.name == e.name) {
                    None => {
                        return err(
                            format!("module.controllers.{}", c.name),
                            format!("event `{}` is neither connected nor provided by the platform", e.name),
                        )
                    }
                    Some(p) if p.ty != e.ty => {
                        return err(format!("module.controllers.{}", c.name), format!("event `{}` disagrees with the platform type", e.name))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(Module { name: m.name.clone(), qualify_events: m.qualify_events, platform, controllers, connections })
    }

    fn connections(
        &self,
        path: &str,
        cs: &[ConnSrc],
        exists: impl Fn(&str, &str) -> bool,
    ) -> Result<Vec<Connection>, ModelError> {
        let endpoint = |s: &str| -> Result<Endpoint, ModelError> {
            let Some((c, e)) = s.split_once('.') else {
                return err(path, format!("endpoint `{s}` must be Component.event"));
            };
            if !exists(c, e) {
                return err(path, format!("endpoint `{s}` does not exist"));
            }
            Ok(Endpoint { component: c.into(), event: e.into() })
        };
        cs.iter()
            .map(|c| Ok(Connection { from: endpoint(&c.from)?, to: endpoint(&c.to)?, is_async: c.is_async }))
            .collect()
    }

    fn controller(&self, c: &ControllerSrc, platform: &Platform) -> Result<Controller, ModelError> {
        let cpath = format!("controller {}", c.name);
        let mut machines = Vec::new();
        let mut seen = HashSet::new();
        for m in &c.machines {
            if !seen.insert(m.name.clone()) {
                return err(&cpath, format!("machine {} declared twice", m.name));
            }
            machines.push(self.machine(&format!("{cpath}.{}", m.name), m, platform, &c.operations)?);
        }
        if machines.is_empty() {
            return err(&cpath, "a controller needs at least one machine");
        }
        let mut operations = Vec::new();
        for o in &c.operations {
            let opath = format!("{cpath}.operation {}", o.name);
            let params: Vec<(String, TypeRef)> =
                o.params.iter().map(|p| self.ty(&opath, &p.ty).map(|t| (p.name.clone(), t))).collect::<Result<_, _>>()?;
            let body = BodyCtx {
                vars: params.iter().map(|(n, _)| n.clone()).collect(),
                events: &[],
                platform_ops: &platform.operations,
                defined_ops: &[],
            };
            let (nodes, transitions) = self.graph(&opath, &o.nodes, &o.transitions, &body)?;
            operations.push(Operation { name: o.name.clone(), params, nodes, transitions });
        }
        let connections = self.connections(&format!("{cpath}.connections"), &c.connections, |comp, ev| {
            machines.iter().find(|m| m.name == comp).is_some_and(|m| m.events.iter().any(|e| e.name == ev))
        })?;
        for k in &connections {
            if k.is_async {
                return err(&cpath, "connections between machines are synchronous");
            }
            let ty = |e: &Endpoint| {
                machines
                    .iter()
                    .find(|m| m.name == e.component)
                    .and_then(|m| m.events.iter().find(|d| d.name == e.event))
                    .map(|d| d.ty.clone())
            };
            if ty(&k.from) != ty(&k.to) {
                return err(&cpath, format!("connection {}.{} has mismatched types", k.from.component, k.from.event));
            }
        }
        Ok(Controller { name: c.name.clone(), machines, operations, connections })
    }

    fn machine(&self, path: &str, m: &MachineSrc, platform: &Platform, ops: &[OperationSrc]) -> Result<Machine, ModelError> {
        let locals = self.vars(path, &m.variables)?;
        let mut shared = Vec::new();
        for s in &m.shared {
            match platform.variables.iter().find(|v| &v.name == s) {
                Some(v) => shared.push(v.clone()),
                None => return err(path, format!("shared variable `{s}` is not provided by the platform")),
            }
            if locals.iter().any(|l| &l.name == s) {
                return err(path, format!("`{s}` is both local and shared"));
            }
        }
        let events = self.events(path, &m.events)?;
        let body = BodyCtx {
            vars: locals.iter().chain(&shared).map(|v| v.name.clone()).collect(),
            events: &events,
            platform_ops: &platform.operations,
            defined_ops: ops,
        };
        let (nodes, transitions) = self.graph(path, &m.nodes, &m.transitions, &body)?;
        let mut calls_defined = Vec::new();
        let mut note = |a: &Action| collect_calls(a, &mut calls_defined, ops);
        for n in &nodes {
            note(&n.entry);
            note(&n.during);
            note(&n.exit);
        }
        for t in &transitions {
            note(&t.action);
        }
        Ok(Machine { name: m.name.clone(), locals, shared, events, nodes, transitions, calls_defined })
    }

    fn graph(
        &self,
        path: &str,
        ns: &[NodeSrc],
        ts: &[TransSrc],
        body: &BodyCtx<'_>,
    ) -> Result<(Vec<Node>, Vec<Transition>), ModelError> {
        let mut nodes: Vec<Node> = Vec::new();
        for n in ns {
            let npath = format!("{path}.nodes.{}", n.name);
            if nodes.iter().any(|m| m.name == n.name) {
                return err(npath, "node declared twice");
            }
            let kind = match n.kind {
                NodeKindSrc::Initial => NodeKind::Initial,
                NodeKindSrc::State => NodeKind::State,
                NodeKindSrc::Final => NodeKind::Final,
            };
            let act = |s: &Option<String>, what: &str| -> Result<Action, ModelError> {
                let p = format!("{npath}.{what}");
                let a = match s {
                    None => Action::Skip,
                    Some(s) => parse_action(s).map_err(|m| ModelError { path: p.clone(), message: m })?,
                };
                self.check_action(&p, &a, body)?;
                Ok(a)
            };
            let (entry, during, exit) = (act(&n.entry, "entry")?, act(&n.during, "during")?, act(&n.exit, "exit")?);
            if kind != NodeKind::State && [&entry, &during, &exit].iter().any(|a| **a != Action::Skip) {
                return err(npath, "only states have actions");
            }
            nodes.push(Node { name: n.name.clone(), kind, entry, during, exit });
        }
        let initials: Vec<&Node> = nodes.iter().filter(|n| n.kind == NodeKind::Initial).collect();
        if initials.len() != 1 {
            return err(path, format!("expected exactly one initial junction, found {}", initials.len()));
        }
        let mut transitions: Vec<Transition> = Vec::new();
        for t in ts {
            let tpath = format!("{path}.transitions.{}", t.id);
            if transitions.iter().any(|u| u.id == t.id) {
                return err(tpath, "transition declared twice");
            }
            let src = nodes.iter().find(|n| n.name == t.from);
            let tgt = nodes.iter().find(|n| n.name == t.to);
            let (Some(src), Some(tgt)) = (src, tgt) else {
                return err(tpath, format!("unknown node in {} -> {}", t.from, t.to));
            };
            if src.kind == NodeKind::Final {
                return err(tpath, "final states have no outgoing transitions");
            }
            if tgt.kind == NodeKind::Initial {
                return err(tpath, "transitions cannot enter the initial junction");
            }
            let trigger = match &t.trigger {
                None => None,
                Some(s) => Some(parse_trigger(s).map_err(|m| ModelError { path: tpath.clone(), message: m })?),
            };
            if src.kind == NodeKind::Initial && trigger.is_some() {
                return err(tpath, "the initial transition cannot have a trigger");
            }
            let guard = match &t.guard {
                None => None,
                Some(s) => Some(parse_expr(s).map_err(|m| ModelError { path: tpath.clone(), message: m })?),
            };
            let action = match &t.action {
                None => Action::Skip,
                Some(s) => parse_action(s).map_err(|m| ModelError { path: tpath.clone(), message: m })?,
            };
            let mut vars = body.vars.clone();
            if let Some(tr) = &trigger {
                let ev = body.events.iter().find(|e| e.name == tr.event());
                let Some(ev) = ev else {
                    return err(tpath, format!("unknown event `{}`", tr.event()));
                };
                match tr {
                    Trigger::Simple(_) => {
                        if ev.ty.is_some() {
                            return err(tpath, format!("event `{}` carries a value; bind or send it", ev.name));
                        }
                    }
                    Trigger::Input(_, x) => {
                        if ev.ty.is_none() {
                            return err(tpath, "input trigger on an event without a type");
                        }
                        if !body.vars.contains(x) {
                            return err(tpath, format!("binder `{x}` is not a declared variable"));
                        }
                        vars.push(x.clone());
                    }
                    Trigger::Output(_, e) | Trigger::Sync(_, e) => {
                        if ev.ty.is_none() {
                            return err(tpath, "communication on an event without a type");
                        }
                        self.names(&body.vars).check_expr(&tpath, e)?;
                    }
                }
            }
            if let Some(g) = &guard {
                self.names(&vars).check_expr(&format!("{tpath}.guard"), g)?;
            }
            self.check_action(&format!("{tpath}.action"), &action, body)?;
            transitions.push(Transition {
                id: t.id.clone(),
                source: t.from.clone(),
                target: t.to.clone(),
                trigger,
                guard,
                action,
            });
        }
        let init = initials[0].name.clone();
        let out = transitions.iter().filter(|t| t.source == init).count();
        if out != 1 {
            return err(path, format!("the initial junction needs exactly one outgoing transition, found {out}"));
        }
        Ok((nodes, transitions))
    }

    fn names<'b>(&'b self, vars: &'b [String]) -> NameCtx<'b> {
        NameCtx { types: self.types, constants: self.constants, functions: self.functions, vars }
    }

    fn check_action(&self, path: &str, a: &Action, body: &BodyCtx<'_>) -> Result<(), ModelError> {
        let names = self.names(&body.vars);
        let var = |x: &str| -> Result<(), ModelError> {
            if body.vars.iter().any(|v| v == x) {
                Ok(())
            } else {
                err(path, format!("`{x}` is not a declared variable"))
            }
        };
        let event = |e: &str| -> Result<&EventDecl, ModelError> {
            match body.events.iter().find(|d| d.name == e) {
                Some(d) => Ok(d),
                None => err(path, format!("unknown event `{e}`")),
            }
        };
        match a {
            Action::Skip | Action::ClockReset(_) => Ok(()),
            Action::Wait(e) => names.check_expr(path, e),
            Action::Assign(x, e) => {
                var(x)?;
                names.check_expr(path, e)
            }
            Action::Send(e, v) => {
                let d = event(e)?;
                match (v, &d.ty) {
                    (None, None) => Ok(()),
                    (Some(x), Some(_)) => names.check_expr(path, x),
                    (None, Some(_)) => err(path, format!("event `{e}` needs a value")),
                    (Some(_), None) => err(path, format!("event `{e}` carries no value")),
                }
            }
            Action::Recv(e, x) => {
                if event(e)?.ty.is_none() {
                    return err(path, format!("event `{e}` carries no value"));
                }
                var(x)
            }
            Action::Call(op, args) => {
                let arity = body
                    .defined_ops
                    .iter()
                    .find(|o| &o.name == op)
                    .map(|o| o.params.len())
                    .or_else(|| body.platform_ops.iter().find(|o| &o.name == op).map(|o| o.params.len()));
                match arity {
                    None => err(path, format!("unknown operation `{op}`")),
                    Some(n) if n != args.len() => err(path, format!("`{op}` takes {n} arguments, got {}", args.len())),
                    Some(_) => args.iter().try_for_each(|x| names.check_expr(path, x)),
                }
            }
            Action::Seq(xs) => xs.iter().try_for_each(|x| self.check_action(path, x, body)),
        }
    }
}

fn collect_calls(a: &Action, out: &mut Vec<String>, ops: &[OperationSrc]) {
    match a {
        Action::Call(op, _) if ops.iter().any(|o| &o.name == op) => {
            if !out.contains(op) {
                out.push(op.clone());
            }
        }
        Action::Seq(xs) => xs.iter().for_each(|x| collect_calls(x, out, ops)),
        _ => {}
    }
}

/// Events a controller exposes: machine events not joined by an internal
/// connection, first occurrence wins.
pub fn boundary_events(c: &Controller) -> Vec<EventDecl> {
    let mut out: Vec<EventDecl> = Vec::new();
    for m in &c.machines {
        for e in &m.events {
            let internal = c.connections.iter().any(|k| {
                (k.from.component == m.name && k.from.event == e.name) || (k.to.component == m.name && k.to.event == e.name)
            });
            if !internal && !out.iter().any(|o| o.name == e.name) {
                out.push(e.clone());
            }
        }
    }
    out
}

impl Machine {
    pub fn initial(&self) -> &Node {
        self.nodes.iter().find(|n| n.kind == NodeKind::Initial).expect("validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(extra_node: &str) -> String {
        format!(
            r#"{{
              "module": {{
                "name": "M",
                "platform": {{ "name": "P", "events": [{{ "name": "go" }}] }},
                "controllers": [{{
                  "name": "C",
                  "machines": [{{
                    "name": "S",
                    "events": [{{ "name": "go" }}],
                    "nodes": [{{ "name": "i0", "kind": "initial" }}, {{ "name": "s", "kind": "state" }}{extra_node}],
                    "transitions": [
                      {{ "id": "t0", "from": "i0", "to": "s" }},
                      {{ "id": "t1", "from": "s", "to": "s", "trigger": "go" }}
                    ]
                  }}]
                }}]
              }}
            }}"#
        )
    }

    #[test]
    fn accepts_minimal_model() {
        let m = Model::from_json_str(&tiny(""), &[]).unwrap();
        assert_eq!(m.banner, DEFAULT_BANNER);
        assert_eq!(m.module.controllers[0].machines[0].transitions.len(), 2);
    }

    #[test]
    fn rejects_two_initial_junctions() {
        let e = Model::from_json_str(&tiny(r#", { "name": "i1", "kind": "initial" }"#), &[]).unwrap_err();
        assert!(e.message.contains("exactly one initial junction"), "{e}");
    }

    #[test]
    fn rejects_unknown_names_with_a_path() {
        let src = tiny("").replace(r#""trigger": "go""#, r#""trigger": "go", "guard": "y > 0""#);
        let e = Model::from_json_str(&src, &[]).unwrap_err();
        assert!(e.path.contains("t1"), "{e}");
        assert!(e.message.contains("unknown name `y`"), "{e}");
    }
}
