//! Runtime values carried by events and held in machine memories.

use std::fmt;
use std::sync::Arc;

/// Direction tag of an event as seen from the component that declares it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    In,
    Out,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(i64),
    Nat(u64),
    /// `ty` is the qualified display prefix, e.g. `Chemical_Angle`.
    Enum { ty: Arc<str>, lit: Arc<str> },
    Record { ty: Arc<str>, fields: Arc<[Value]> },
    List(Arc<[Value]>),
    Tuple(Arc<[Value]>),
    Dir(Dir),
    Sid(Arc<str>),
    Tid(Arc<str>),
}

impl Value {
    pub fn tuple(items: impl IntoIterator<Item = Value>) -> Value {
        Value::Tuple(items.into_iter().collect())
    }

    pub fn list(items: impl IntoIterator<Item = Value>) -> Value {
        Value::List(items.into_iter().collect())
    }

    pub fn sid(name: &str) -> Value {
        Value::Sid(Arc::from(name))
    }

    pub fn tid(name: &str) -> Value {
        Value::Tid(Arc::from(name))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Integral view shared by `Int`, `Nat` and primitive-type indices.
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Nat(n) => i64::try_from(*n).ok(),
            _ => None,
        }
    }

    pub fn items(&self) -> Option<&[Value]> {
        match self {
            Value::Tuple(xs) | Value::List(xs) => Some(xs),
            Value::Record { fields, .. } => Some(fields),
            _ => None,
        }
    }

    /// Component `i` of a tuple; panics on other shapes.
    pub fn nth(&self, i: usize) -> &Value {
        match self {
            Value::Tuple(xs) => &xs[i],
            other => panic!("not a tuple: {other}"),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Value::Unit => json!([]),
            Value::Bool(b) => json!(b),
            Value::Int(i) => json!(i),
            Value::Nat(n) => json!(n),
            Value::Enum { .. } | Value::Sid(_) | Value::Tid(_) => json!(self.to_string()),
            Value::Dir(Dir::In) => json!("din"),
            Value::Dir(Dir::Out) => json!("dout"),
            Value::Record { ty, fields } => json!({
                "record": ty.as_ref(),
                "fields": fields.iter().map(Value::to_json).collect::<Vec<_>>(),
            }),
            Value::List(xs) => json!(xs.iter().map(Value::to_json).collect::<Vec<_>>()),
            Value::Tuple(xs) => json!({ "tuple": xs.iter().map(Value::to_json).collect::<Vec<_>>() }),
        }
    }
}

fn write_seq(f: &mut fmt::Formatter<'_>, open: &str, xs: &[Value], close: &str) -> fmt::Result {
    f.write_str(open)?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    f.write_str(close)
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Bool(true) => f.write_str("True"),
            Value::Bool(false) => f.write_str("False"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Nat(n) => write!(f, "{n}"),
            Value::Enum { ty, lit } => write!(f, "{ty}_{lit}"),
            Value::Record { fields, .. } => write_seq(f, "(", fields, ")"),
            Value::List(xs) => write_seq(f, "[", xs, "]"),
            Value::Tuple(xs) => write_seq(f, "(", xs, ")"),
            Value::Dir(Dir::In) => f.write_str("Din"),
            Value::Dir(Dir::Out) => f.write_str("Dout"),
            Value::Sid(s) | Value::Tid(s) => f.write_str(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_matches_transcript_syntax() {
        let rec = |a, b| Value::Record { ty: "GasSensor".into(), fields: vec![Value::Nat(a), Value::Nat(b)].into() };
        let gas = Value::tuple([Value::Dir(Dir::In), Value::list([rec(0, 0), rec(1, 1)])]);
        assert_eq!(gas.to_string(), "(Din,[(0,0),(1,1)])");
        let angle = Value::Enum { ty: "Chemical_Angle".into(), lit: "Front".into() };
        assert_eq!(Value::tuple([Value::Int(0), angle]).to_string(), "(0,Chemical_Angle_Front)");
        assert_eq!(Value::Unit.to_string(), "()");
        assert_eq!(Value::Dir(Dir::Out).to_string(), "Dout");
    }
}
