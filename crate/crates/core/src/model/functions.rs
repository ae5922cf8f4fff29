//! Functions given by preconditions and postconditions over `result`.
//!
//! A call is answered by enumerating the result type and keeping the values
//! that satisfy every postcondition; exactly one must remain.

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::Mutex;

use crate::model::expr::{eval, EvalError, Expr, Scope};
use crate::model::types::{TypeEnv, TypeRef};
use crate::value::Value;

#[derive(Clone, Debug)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<(String, TypeRef)>,
    pub result: TypeRef,
    pub pre: Vec<Expr>,
    pub post: Vec<Expr>,
}

type CacheKey = (String, Vec<Value>);

/// Function table shared by every expression evaluated in a model.
pub struct Functions {
    types: Arc<TypeEnv>,
    constants: Arc<HashMap<String, Value>>,
    defs: HashMap<String, FunctionDef>,
    cache: Mutex<HashMap<CacheKey, Result<Value, EvalError>>>,
}

impl std::fmt::Debug for Functions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut names: Vec<&String> = self.defs.keys().collect();
        names.sort();
        f.debug_struct("Functions").field("defs", &names).finish()
    }
}

struct Frame<'a> {
    funcs: &'a Functions,
    names: &'a [(String, TypeRef)],
    args: &'a [Value],
    result: Option<&'a Value>,
}

impl Scope for Frame<'_> {
    fn lookup(&self, name: &str) -> Option<Value> {
        if name == "result" {
            if let Some(r) = self.result {
                return Some(r.clone());
            }
        }
        if let Some(i) = self.names.iter().position(|(n, _)| n == name) {
            return Some(self.args[i].clone());
        }
        self.funcs.constants.get(name).cloned()
    }

    fn call(&self, name: &str, args: &[Value]) -> Result<Value, EvalError> {
        self.funcs.apply(name, args)
    }

    fn types(&self) -> &TypeEnv {
        &self.funcs.types
    }
}

impl Functions {
    pub fn new(types: Arc<TypeEnv>, constants: Arc<HashMap<String, Value>>, defs: Vec<FunctionDef>) -> Functions {
        Functions {
            types,
            constants,
            defs: defs.into_iter().map(|d| (d.name.clone(), d)).collect(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn get(&self, name: &str) -> Option<&FunctionDef> {
        self.defs.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.defs.keys()
    }

    /// The unique result of `name` on `args`.
    pub fn apply(&self, name: &str, args: &[Value]) -> Result<Value, EvalError> {
        let def = self.defs.get(name).ok_or_else(|| EvalError::Undefined(format!("{name}(..)")))?;
        if def.params.len() != args.len() {
            return Err(EvalError::Type(format!("{name} takes {} arguments, got {}", def.params.len(), args.len())));
        }
        let args: Vec<Value> = def
            .params
            .iter()
            .zip(args)
            .map(|((p, t), v)| {
                self.types.coerce(t, v).ok_or_else(|| EvalError::Type(format!("argument {p} of {name}: {v} is not a {t}")))
            })
            .collect::<Result<_, _>>()?;
        let key = (name.to_string(), args);
        if let Some(r) = self.cache.lock().get(&key) {
            return r.clone();
        }
        let r = self.solve(def, &key.1);
        self.cache.lock().insert(key, r.clone());
        r
    }

    fn solve(&self, def: &FunctionDef, args: &[Value]) -> Result<Value, EvalError> {
        let frame = Frame { funcs: self, names: &def.params, args, result: None };
        for p in &def.pre {
            if !truth(&eval(p, &frame)?)? {
                return Err(EvalError::PreconditionViolated(def.name.clone()));
            }
        }
        let mut found: Option<Value> = None;
        for cand in self.types.values(&def.result).iter() {
            let frame = Frame { funcs: self, names: &def.params, args, result: Some(cand) };
            let mut ok = true;
            for q in &def.post {
                if !truth(&eval(q, &frame)?)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                if found.is_some() {
                    return Err(EvalError::NotUnique(def.name.clone()));
                }
                found = Some(cand.clone());
            }
        }
        found.ok_or_else(|| EvalError::NoSolution(def.name.clone()))
    }

    /// Applies `name` to every argument tuple of its parameter types and
    /// reports the first tuple whose answer is missing or ambiguous.
    /// Precondition failures are expected and skipped. Domains larger than
    /// `limit` tuples are not checked.
    pub fn check_total(&self, name: &str, limit: usize) -> Result<usize, (Vec<Value>, EvalError)> {
        let def = self.defs.get(name).expect("declared function");
        let domains: Vec<Arc<Vec<Value>>> = def.params.iter().map(|(_, t)| self.types.values(t)).collect();
        let size = domains.iter().try_fold(1usize, |acc, d| acc.checked_mul(d.len()));
        if size.map_or(true, |s| s > limit) {
            return Ok(0);
        }
        let mut idx = vec![0usize; domains.len()];
        let mut checked = 0;
        if domains.iter().any(|d| d.is_empty()) {
            return Ok(0);
        }
        loop {
            let args: Vec<Value> = idx.iter().zip(&domains).map(|(i, d)| d[*i].clone()).collect();
            match self.apply(name, &args) {
                Ok(_) | Err(EvalError::PreconditionViolated(_)) => checked += 1,
                Err(e) => return Err((args, e)),
            }
            let mut k = idx.len();
            loop {
                if k == 0 {
                    return Ok(checked);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < domains[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

fn truth(v: &Value) -> Result<bool, EvalError> {
    v.as_bool().ok_or_else(|| EvalError::Type(format!("condition evaluated to {v}")))
}
