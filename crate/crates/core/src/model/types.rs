//! Bounded core types and their enumerations.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::value::Value;

/// Instantiation limits for the unbounded core types.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoreConfig {
    pub min_int: i64,
    pub max_int: i64,
    pub max_nat: u64,
    pub min_real: i64,
    pub max_real: i64,
    #[serde(default = "default_seq_bound")]
    pub seq_bound: usize,
}

fn default_seq_bound() -> usize {
    2
}

impl Default for CoreConfig {
    fn default() -> Self {
        CoreConfig { min_int: -2, max_int: 2, max_nat: 2, min_real: 0, max_real: 1, seq_bound: 2 }
    }
}

impl CoreConfig {
    /// Applies `key=value` overrides.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), String> {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("expected key=value, got `{kv}`"))?;
        let bad = |e: std::num::ParseIntError| format!("bad value for {k}: {e}");
        match k.trim() {
            "min_int" => self.min_int = v.trim().parse().map_err(bad)?,
            "max_int" => self.max_int = v.trim().parse().map_err(bad)?,
            "max_nat" => self.max_nat = v.trim().parse().map_err(bad)?,
            "min_real" => self.min_real = v.trim().parse().map_err(bad)?,
            "max_real" => self.max_real = v.trim().parse().map_err(bad)?,
            "seq_bound" => self.seq_bound = v.trim().parse().map_err(bad)?,
            other => return Err(format!("unknown config key `{other}`")),
        }
        self.check()
    }

    pub fn check(&self) -> Result<(), String> {
        if self.min_int > self.max_int {
            return Err("min_int exceeds max_int".into());
        }
        if self.min_real > self.max_real {
            return Err("min_real exceeds max_real".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TypeRef {
    Unit,
    Bool,
    Int,
    Nat,
    Real,
    Named(String),
    Seq(Box<TypeRef>),
    Tuple(Vec<TypeRef>),
}

impl TypeRef {
    pub fn parse(s: &str) -> Result<TypeRef, String> {
        let s = s.trim();
        let lower = s.to_ascii_lowercase();
        if let Some(inner) = lower.strip_prefix("seq(").and_then(|r| r.strip_suffix(')')) {
            let start = s.len() - inner.len() - 1;
            return Ok(TypeRef::Seq(Box::new(TypeRef::parse(&s[start..s.len() - 1])?)));
        }
        Ok(match lower.as_str() {
            "unit" | "()" => TypeRef::Unit,
            "bool" | "boolean" => TypeRef::Bool,
            "int" | "core_int" => TypeRef::Int,
            "nat" | "core_nat" => TypeRef::Nat,
            "real" | "core_real" => TypeRef::Real,
            _ if !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_') => TypeRef::Named(s.to_string()),
            _ => return Err(format!("cannot parse type `{s}`")),
        })
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Unit => f.write_str("unit"),
            TypeRef::Bool => f.write_str("bool"),
            TypeRef::Int => f.write_str("int"),
            TypeRef::Nat => f.write_str("nat"),
            TypeRef::Real => f.write_str("real"),
            TypeRef::Named(n) => f.write_str(n),
            TypeRef::Seq(t) => write!(f, "Seq({t})"),
            TypeRef::Tuple(ts) => {
                f.write_str("(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A user type declaration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TypeDef {
    Enum {
        name: String,
        #[serde(default)]
        package: Option<String>,
        literals: Vec<String>,
    },
    /// Abstract primitive type with `card` elements `0..card`.
    Prim { name: String, card: u64 },
    Record { name: String, fields: Vec<FieldDef> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDef {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

impl TypeDef {
    pub fn name(&self) -> &str {
        match self {
            TypeDef::Enum { name, .. } | TypeDef::Prim { name, .. } | TypeDef::Record { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug)]
enum Resolved {
    Enum { prefix: Arc<str>, literals: Vec<Arc<str>> },
    Prim { card: u64 },
    Record { name: Arc<str>, fields: Vec<(String, TypeRef)> },
}

/// Type environment: user declarations plus the instantiation limits.
pub struct TypeEnv {
    pub config: CoreConfig,
    defs: HashMap<String, Resolved>,
    order: Vec<String>,
    cache: Mutex<HashMap<TypeRef, Arc<Vec<Value>>>>,
}

impl fmt::Debug for TypeEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TypeEnv").field("config", &self.config).field("types", &self.order).finish()
    }
}

impl TypeEnv {
    pub fn new(config: CoreConfig, defs: &[TypeDef]) -> Result<TypeEnv, String> {
        config.check()?;
        let mut map = HashMap::new();
        let mut order = Vec::new();
        for d in defs {
            let r = match d {
                TypeDef::Enum { name, package, literals } => {
                    if literals.is_empty() {
                        return Err(format!("enumeration {name} has no literals"));
                    }
                    let prefix = match package {
                        Some(p) => format!("{p}_{name}"),
                        None => name.clone(),
                    };
                    Resolved::Enum {
                        prefix: Arc::from(prefix.as_str()),
                        literals: literals.iter().map(|l| Arc::from(l.as_str())).collect(),
                    }
                }
                TypeDef::Prim { card, name } => {
                    if *card == 0 {
                        return Err(format!("primitive type {name} is empty"));
                    }
                    Resolved::Prim { card: *card }
                }
                TypeDef::Record { name, fields } => Resolved::Record {
                    name: Arc::from(name.as_str()),
                    fields: fields
                        .iter()
                        .map(|f| TypeRef::parse(&f.ty).map(|t| (f.name.clone(), t)))
                        .collect::<Result<_, _>>()?,
                },
            };
            if map.insert(d.name().to_string(), r).is_some() {
                return Err(format!("type {} declared twice", d.name()));
            }
            order.push(d.name().to_string());
        }
        let env = TypeEnv { config, defs: map, order, cache: Mutex::new(HashMap::new()) };
        for (_, r) in env.defs.iter() {
            if let Resolved::Record { fields, .. } = r {
                for (_, t) in fields {
                    env.check_ref(t)?;
                }
            }
        }
        Ok(env)
    }

    pub fn check_ref(&self, t: &TypeRef) -> Result<(), String> {
        match t {
            TypeRef::Named(n) if !self.defs.contains_key(n) => Err(format!("unknown type `{n}`")),
            TypeRef::Seq(inner) => self.check_ref(inner),
            TypeRef::Tuple(ts) => ts.iter().try_for_each(|t| self.check_ref(t)),
            _ => Ok(()),
        }
    }

    /// All values of `t` in canonical order.
    pub fn values(&self, t: &TypeRef) -> Arc<Vec<Value>> {
        if let Some(v) = self.cache.lock().get(t) {
            return v.clone();
        }
        let vs = Arc::new(self.enumerate(t));
        self.cache.lock().insert(t.clone(), vs.clone());
        vs
    }

    fn enumerate(&self, t: &TypeRef) -> Vec<Value> {
        let c = &self.config;
        match t {
            TypeRef::Unit => vec![Value::Unit],
            TypeRef::Bool => vec![Value::Bool(false), Value::Bool(true)],
            TypeRef::Int => (c.min_int..=c.max_int).map(Value::Int).collect(),
            TypeRef::Nat => (0..=c.max_nat).map(Value::Nat).collect(),
            TypeRef::Real => (c.min_real..=c.max_real).map(Value::Int).collect(),
            TypeRef::Named(n) => match self.defs.get(n).expect("checked type") {
                Resolved::Enum { prefix, literals } => {
                    literals.iter().map(|l| Value::Enum { ty: prefix.clone(), lit: l.clone() }).collect()
                }
                Resolved::Prim { card } => (0..*card).map(Value::Nat).collect(),
                Resolved::Record { name, fields } => {
                    let parts: Vec<Arc<Vec<Value>>> = fields.iter().map(|(_, t)| self.values(t)).collect();
                    product(&parts)
                        .into_iter()
                        .map(|fs| Value::Record { ty: name.clone(), fields: fs.into() })
                        .collect()
                }
            },
            TypeRef::Seq(inner) => {
                let elems = self.values(inner);
                let mut out = Vec::new();
                for len in 0..=c.seq_bound {
                    let parts: Vec<Arc<Vec<Value>>> = (0..len).map(|_| elems.clone()).collect();
                    out.extend(product(&parts).into_iter().map(|xs| Value::List(xs.into())));
                }
                out
            }
            TypeRef::Tuple(ts) => {
                let parts: Vec<Arc<Vec<Value>>> = ts.iter().map(|t| self.values(t)).collect();
                product(&parts).into_iter().map(|xs| Value::Tuple(xs.into())).collect()
            }
        }
    }

    /// Normalises `v` into `t`, or `None` when `v` lies outside `t`.
    pub fn coerce(&self, t: &TypeRef, v: &Value) -> Option<Value> {
        let c = &self.config;
        match (t, v) {
            (TypeRef::Unit, Value::Unit) => Some(Value::Unit),
            (TypeRef::Bool, Value::Bool(_)) => Some(v.clone()),
            (TypeRef::Int, _) => v.as_int().filter(|i| (c.min_int..=c.max_int).contains(i)).map(Value::Int),
            (TypeRef::Real, _) => v.as_int().filter(|i| (c.min_real..=c.max_real).contains(i)).map(Value::Int),
            (TypeRef::Nat, _) => {
                v.as_int().filter(|i| *i >= 0 && (*i as u64) <= c.max_nat).map(|i| Value::Nat(i as u64))
            }
            (TypeRef::Named(n), _) => match (self.defs.get(n)?, v) {
                (Resolved::Enum { prefix, literals }, Value::Enum { ty, lit }) => {
                    (ty == prefix && literals.contains(lit)).then(|| v.clone())
                }
                (Resolved::Prim { card }, _) => {
                    v.as_int().filter(|i| *i >= 0 && (*i as u64) < *card).map(|i| Value::Nat(i as u64))
                }
                (Resolved::Record { name, fields }, Value::Record { ty, fields: vs }) if ty == name => {
                    self.coerce_fields(name, fields, vs)
                }
                (Resolved::Record { name, fields }, Value::Tuple(vs)) => self.coerce_fields(name, fields, vs),
                _ => None,
            },
            (TypeRef::Seq(inner), Value::List(xs)) if xs.len() <= c.seq_bound => {
                let ys: Option<Vec<Value>> = xs.iter().map(|x| self.coerce(inner, x)).collect();
                Some(Value::List(ys?.into()))
            }
            (TypeRef::Tuple(ts), Value::Tuple(xs)) if ts.len() == xs.len() => {
                let ys: Option<Vec<Value>> = ts.iter().zip(xs.iter()).map(|(t, x)| self.coerce(t, x)).collect();
                Some(Value::Tuple(ys?.into()))
            }
            _ => None,
        }
    }

    fn coerce_fields(&self, name: &Arc<str>, fields: &[(String, TypeRef)], vs: &[Value]) -> Option<Value> {
        if fields.len() != vs.len() {
            return None;
        }
        let fs: Option<Vec<Value>> = fields.iter().zip(vs).map(|((_, ft), fv)| self.coerce(ft, fv)).collect();
        Some(Value::Record { ty: name.clone(), fields: fs?.into() })
    }

    /// Position of field `field` in record values of type `ty`.
    pub fn field_index(&self, ty: &str, field: &str) -> Option<usize> {
        match self.defs.get(ty)? {
            Resolved::Record { fields, .. } => fields.iter().position(|(n, _)| n == field),
            _ => None,
        }
    }

    /// Enumeration literal named `lit`, optionally qualified by its type.
    pub fn literal(&self, ty: Option<&str>, lit: &str) -> Result<Option<Value>, String> {
        let mut found = Vec::new();
        for name in &self.order {
            if ty.is_some_and(|t| t != name) {
                continue;
            }
            if let Some(Resolved::Enum { prefix, literals }) = self.defs.get(name) {
                if let Some(l) = literals.iter().find(|l| l.as_ref() == lit) {
                    found.push(Value::Enum { ty: prefix.clone(), lit: l.clone() });
                }
            }
        }
        match found.len() {
            0 => Ok(None),
            1 => Ok(found.pop()),
            _ => Err(format!("literal `{lit}` is ambiguous; qualify it as Type::{lit}")),
        }
    }
}

fn product(parts: &[Arc<Vec<Value>>]) -> Vec<Vec<Value>> {
    let mut acc: Vec<Vec<Value>> = vec![Vec::new()];
    for p in parts {
        let mut next = Vec::with_capacity(acc.len() * p.len());
        for prefix in &acc {
            for v in p.iter() {
                let mut row = prefix.clone();
                row.push(v.clone());
                next.push(row);
            }
        }
        acc = next;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chem_env() -> TypeEnv {
        let defs = vec![
            TypeDef::Prim { name: "Chem".into(), card: 2 },
            TypeDef::Prim { name: "Intensity".into(), card: 2 },
            TypeDef::Record {
                name: "GasSensor".into(),
                fields: vec![
                    FieldDef { name: "c".into(), ty: "Chem".into() },
                    FieldDef { name: "i".into(), ty: "Intensity".into() },
                ],
            },
        ];
        TypeEnv::new(CoreConfig::default(), &defs).unwrap()
    }

    #[test]
    fn bounded_sequences_enumerate_by_length_then_lexicographically() {
        let env = chem_env();
        let vs = env.values(&TypeRef::parse("Seq(GasSensor)").unwrap());
        assert_eq!(vs.len(), 1 + 4 + 16);
        let shown: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
        assert_eq!(shown[0], "[]");
        assert_eq!(shown[3], "[(1,0)]");
        assert_eq!(shown[8], "[(0,0),(1,1)]");
    }

    #[test]
    fn coerce_rejects_out_of_range() {
        let env = chem_env();
        assert_eq!(env.coerce(&TypeRef::Int, &Value::Int(3)), None);
        assert_eq!(env.coerce(&TypeRef::Int, &Value::Int(-2)), Some(Value::Int(-2)));
        assert_eq!(env.coerce(&TypeRef::Named("Intensity".into()), &Value::Int(1)), Some(Value::Nat(1)));
    }
}
