//! Expression, action and trigger syntax, and expression evaluation.
//!
//! Expressions use a small infix language:
//! `x != 0`, `l < MAX`, `d1 - d0 > stuckDist or not ok`,
//! `forall x < size(gs) @ goreq(result, bnth(gs, x).i)`.

use std::fmt;

use crate::model::types::TypeEnv;
use crate::value::Value;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Name(String),
    /// `Type::Literal`.
    Qualified(String, String),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    Field(Box<Expr>, String),
    Tuple(Vec<Expr>),
    SeqLit(Vec<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    /// `forall x < bound @ body`, or `exists`; `x` ranges over `0..bound`.
    Quant { forall: bool, var: String, bound: Box<Expr>, body: Box<Expr> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
}

/// Statement language for entry, during, exit and transition actions.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Skip,
    Assign(String, Expr),
    /// `e!v`, or `e` when the value is absent.
    Send(String, Option<Expr>),
    /// `e?x`.
    Recv(String, String),
    Call(String, Vec<Expr>),
    /// `#C`: clock reset, untimed here.
    ClockReset(String),
    /// `wait(n)`: untimed here.
    Wait(Expr),
    Seq(Vec<Action>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Trigger {
    Simple(String),
    Input(String, String),
    Output(String, Expr),
    Sync(String, Expr),
}

impl Trigger {
    pub fn event(&self) -> &str {
        match self {
            Trigger::Simple(e) | Trigger::Input(e, _) | Trigger::Output(e, _) | Trigger::Sync(e, _) => e,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(i64),
    Ident(String),
    Sym(&'static str),
}

const SYMS: [&str; 26] = [
    "=>", "==", "!=", "<=", ">=", "::", "&&", "||", "(", ")", "[", "]", ",", ".", ";", "!", "?", "=", "<", ">", "+",
    "-", "*", "/", "@", "#",
];

fn lex(src: &str) -> Result<Vec<Tok>, String> {
    let cs: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    'outer: while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = cs[start..i].iter().collect();
            out.push(Tok::Num(s.parse().map_err(|e| format!("bad number {s}: {e}"))?));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(cs[start..i].iter().collect()));
            continue;
        }
        if c == '%' {
            out.push(Tok::Sym("%"));
            i += 1;
            continue;
        }
        for s in SYMS {
            let n = s.chars().count();
            if i + n <= cs.len() && cs[i..i + n].iter().copied().eq(s.chars()) {
                out.push(Tok::Sym(s));
                i += n;
                continue 'outer;
            }
        }
        return Err(format!("unexpected character `{c}`"));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Parser, String> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(t)) if *t == s)
    }

    fn at_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(t)) if t == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.at_kw(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), String> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(format!("expected `{s}` at token {}", self.pos))
        }
    }

    fn ident(&mut self) -> Result<String, String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            other => Err(format!("expected a name, found {other:?}")),
        }
    }

    fn done(&self) -> Result<(), String> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(format!("unexpected trailing {t:?}")),
        }
    }

    fn expr(&mut self) -> Result<Expr, String> {
        if self.at_kw("forall") || self.at_kw("exists") {
            let forall = self.eat_kw("forall");
            if !forall {
                self.eat_kw("exists");
            }
            let var = self.ident()?;
            self.expect_sym("<")?;
            let bound = self.additive()?;
            self.expect_sym("@")?;
            let body = self.expr()?;
            return Ok(Expr::Quant { forall, var, bound: Box::new(bound), body: Box::new(body) });
        }
        let lhs = self.or()?;
        if self.eat_sym("=>") {
            let rhs = self.expr()?;
            return Ok(Expr::Bin(BinOp::Implies, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Expr, String> {
        let mut e = self.and()?;
        while self.eat_kw("or") || self.eat_sym("||") {
            e = Expr::Bin(BinOp::Or, Box::new(e), Box::new(self.and()?));
        }
        Ok(e)
    }

    fn and(&mut self) -> Result<Expr, String> {
        let mut e = self.not()?;
        while self.eat_kw("and") || self.eat_sym("&&") {
            e = Expr::Bin(BinOp::And, Box::new(e), Box::new(self.not()?));
        }
        Ok(e)
    }

    fn not(&mut self) -> Result<Expr, String> {
        if self.eat_kw("not") {
            return Ok(Expr::Not(Box::new(self.not()?)));
        }
        if self.at_kw("forall") || self.at_kw("exists") {
            return self.expr();
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, String> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Some(Tok::Sym("==")) => BinOp::Eq,
            Some(Tok::Sym("!=")) => BinOp::Ne,
            Some(Tok::Sym("<")) => BinOp::Lt,
            Some(Tok::Sym("<=")) => BinOp::Le,
            Some(Tok::Sym(">")) => BinOp::Gt,
            Some(Tok::Sym(">=")) => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        Ok(Expr::Bin(op, Box::new(lhs), Box::new(self.additive()?)))
    }

    fn additive(&mut self) -> Result<Expr, String> {
        let mut e = self.term()?;
        loop {
            let op = if self.eat_sym("+") {
                BinOp::Add
            } else if self.eat_sym("-") {
                BinOp::Sub
            } else {
                return Ok(e);
            };
            e = Expr::Bin(op, Box::new(e), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, String> {
        let mut e = self.unary()?;
        loop {
            let op = if self.eat_sym("*") {
                BinOp::Mul
            } else if self.eat_sym("/") {
                BinOp::Div
            } else if self.eat_sym("%") {
                BinOp::Mod
            } else {
                return Ok(e);
            };
            e = Expr::Bin(op, Box::new(e), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, String> {
        if self.eat_sym("-") {
            return Ok(match self.unary()? {
                Expr::Int(n) => Expr::Int(-n),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, String> {
        let mut e = self.primary()?;
        while self.eat_sym(".") {
            e = Expr::Field(Box::new(e), self.ident()?);
        }
        Ok(e)
    }

    fn args(&mut self, close: &str) -> Result<Vec<Expr>, String> {
        let mut out = Vec::new();
        if self.eat_sym(close) {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat_sym(close) {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }

    fn primary(&mut self) -> Result<Expr, String> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Expr::Int(n))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let mut items = self.args(")")?;
                if items.len() == 1 {
                    Ok(items.pop().expect("one"))
                } else {
                    Ok(Expr::Tuple(items))
                }
            }
            Some(Tok::Sym("[")) => {
                self.pos += 1;
                Ok(Expr::SeqLit(self.args("]")?))
            }
            Some(Tok::Ident(id)) => {
                self.pos += 1;
                match id.as_str() {
                    "true" => return Ok(Expr::Bool(true)),
                    "false" => return Ok(Expr::Bool(false)),
                    "if" => {
                        let c = self.expr()?;
                        if !self.eat_kw("then") {
                            return Err("expected `then`".into());
                        }
                        let t = self.expr()?;
                        if !self.eat_kw("else") {
                            return Err("expected `else`".into());
                        }
                        let f = self.expr()?;
                        self.eat_kw("end");
                        return Ok(Expr::If(Box::new(c), Box::new(t), Box::new(f)));
                    }
                    _ => {}
                }
                if self.eat_sym("::") {
                    let lit = self.ident()?;
                    return Ok(Expr::Qualified(id, lit));
                }
                if self.eat_sym("(") {
                    return Ok(Expr::Call(id, self.args(")")?));
                }
                Ok(Expr::Name(id))
            }
            other => Err(format!("unexpected {other:?}")),
        }
    }

    fn action(&mut self) -> Result<Action, String> {
        let mut items = Vec::new();
        loop {
            if self.peek().is_none() {
                break;
            }
            items.push(self.simple_action()?);
            if !self.eat_sym(";") {
                break;
            }
        }
        Ok(match items.len() {
            0 => Action::Skip,
            1 => items.pop().expect("one"),
            _ => Action::Seq(items),
        })
    }

    fn simple_action(&mut self) -> Result<Action, String> {
        if self.eat_sym("#") {
            return Ok(Action::ClockReset(self.ident()?));
        }
        let name = self.ident()?;
        if name == "skip" {
            return Ok(Action::Skip);
        }
        if name == "wait" && self.eat_sym("(") {
            let mut a = self.args(")")?;
            if a.len() != 1 {
                return Err("wait takes one argument".into());
            }
            return Ok(Action::Wait(a.pop().expect("one")));
        }
        if self.eat_sym("=") {
            return Ok(Action::Assign(name, self.expr()?));
        }
        if self.eat_sym("!") {
            return Ok(Action::Send(name, Some(self.expr()?)));
        }
        if self.eat_sym("?") {
            return Ok(Action::Recv(name, self.ident()?));
        }
        if self.eat_sym("(") {
            return Ok(Action::Call(name, self.args(")")?));
        }
        Ok(Action::Send(name, None))
    }

    fn trigger(&mut self) -> Result<Trigger, String> {
        let e = self.ident()?;
        if self.eat_sym("?") {
            return Ok(Trigger::Input(e, self.ident()?));
        }
        if self.eat_sym("!") {
            return Ok(Trigger::Output(e, self.expr()?));
        }
        if self.eat_sym(".") {
            return Ok(Trigger::Sync(e, self.expr()?));
        }
        Ok(Trigger::Simple(e))
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, String> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.done()?;
    Ok(e)
}

pub fn parse_action(src: &str) -> Result<Action, String> {
    let mut p = Parser::new(src)?;
    let a = p.action()?;
    p.done()?;
    Ok(a)
}

pub fn parse_trigger(src: &str) -> Result<Trigger, String> {
    let mut p = Parser::new(src)?;
    let t = p.trigger()?;
    p.done()?;
    Ok(t)
}

impl Expr {
    /// Free names in order of first occurrence.
    pub fn free_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_names(&mut Vec::new(), &mut out);
        out
    }

    fn collect_names(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Qualified(..) => {}
            Expr::Name(n) => {
                if !bound.contains(n) && !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Expr::Neg(e) | Expr::Not(e) | Expr::Field(e, _) => e.collect_names(bound, out),
            Expr::Bin(_, a, b) => {
                a.collect_names(bound, out);
                b.collect_names(bound, out);
            }
            Expr::Call(_, args) | Expr::Tuple(args) | Expr::SeqLit(args) => {
                args.iter().for_each(|a| a.collect_names(bound, out));
            }
            Expr::If(c, t, f) => {
                c.collect_names(bound, out);
                t.collect_names(bound, out);
                f.collect_names(bound, out);
            }
            Expr::Quant { var, bound: b, body, .. } => {
                b.collect_names(bound, out);
                bound.push(var.clone());
                body.collect_names(bound, out);
                bound.pop();
            }
        }
    }

    /// Names of functions applied anywhere in the expression.
    pub fn called_functions(&self, out: &mut Vec<String>) {
        match self {
            Expr::Call(f, args) => {
                if !out.contains(f) {
                    out.push(f.clone());
                }
                args.iter().for_each(|a| a.called_functions(out));
            }
            Expr::Neg(e) | Expr::Not(e) | Expr::Field(e, _) => e.called_functions(out),
            Expr::Bin(_, a, b) => {
                a.called_functions(out);
                b.called_functions(out);
            }
            Expr::Tuple(xs) | Expr::SeqLit(xs) => xs.iter().for_each(|a| a.called_functions(out)),
            Expr::If(c, t, f) => {
                c.called_functions(out);
                t.called_functions(out);
                f.called_functions(out);
            }
            Expr::Quant { bound, body, .. } => {
                bound.called_functions(out);
                body.called_functions(out);
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::Name(_) | Expr::Qualified(..) => {}
        }
    }
}

impl Action {
    /// Free names read by expressions in the action.
    pub fn expressions(&self) -> Vec<&Expr> {
        match self {
            Action::Assign(_, e) | Action::Send(_, Some(e)) | Action::Wait(e) => vec![e],
            Action::Call(_, args) => args.iter().collect(),
            Action::Seq(xs) => xs.iter().flat_map(|a| a.expressions()).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    Undefined(String),
    Type(String),
    DivByZero,
    PreconditionViolated(String),
    NoSolution(String),
    NotUnique(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Undefined(n) => write!(f, "undefined name `{n}`"),
            EvalError::Type(m) => write!(f, "type error: {m}"),
            EvalError::DivByZero => f.write_str("division by zero"),
            EvalError::PreconditionViolated(n) => write!(f, "precondition of `{n}` violated"),
            EvalError::NoSolution(n) => write!(f, "postcondition of `{n}` has no solution"),
            EvalError::NotUnique(n) => write!(f, "postcondition of `{n}` has several solutions"),
        }
    }
}

impl std::error::Error for EvalError {}

/// Resolves names and function applications during evaluation.
pub trait Scope {
    fn lookup(&self, name: &str) -> Option<Value>;
    fn call(&self, name: &str, args: &[Value]) -> Result<Value, EvalError>;
    fn types(&self) -> &TypeEnv;
}

/// Name binding layered over a parent scope.
struct Bound<'a> {
    name: &'a str,
    value: Value,
    parent: &'a dyn Scope,
}

impl Scope for Bound<'_> {
    fn lookup(&self, name: &str) -> Option<Value> {
        if name == self.name {
            Some(self.value.clone())
        } else {
            self.parent.lookup(name)
        }
    }

    fn call(&self, name: &str, args: &[Value]) -> Result<Value, EvalError> {
        self.parent.call(name, args)
    }

    fn types(&self) -> &TypeEnv {
        self.parent.types()
    }
}

fn int(v: &Value) -> Result<i64, EvalError> {
    v.as_int().ok_or_else(|| EvalError::Type(format!("expected a number, got {v}")))
}

fn boolean(v: &Value) -> Result<bool, EvalError> {
    v.as_bool().ok_or_else(|| EvalError::Type(format!("expected a boolean, got {v}")))
}

/// Equality that identifies numerals across `Int` and `Nat`.
pub fn value_eq(a: &Value, b: &Value) -> bool {
    match (a.as_int(), b.as_int()) {
        (Some(x), Some(y)) => x == y,
        _ => match (a, b) {
            (Value::Record { fields: xs, .. }, Value::Record { fields: ys, .. })
            | (Value::List(xs), Value::List(ys))
            | (Value::Tuple(xs), Value::Tuple(ys)) => {
                xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| value_eq(x, y))
            }
            _ => a == b,
        },
    }
}

pub fn eval(e: &Expr, sc: &dyn Scope) -> Result<Value, EvalError> {
    match e {
        Expr::Int(n) => Ok(Value::Int(*n)),
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Name(n) => match sc.lookup(n) {
            Some(v) => Ok(v),
            None => sc.types().literal(None, n).map_err(EvalError::Type)?.ok_or_else(|| EvalError::Undefined(n.clone())),
        },
        Expr::Qualified(t, l) => sc
            .types()
            .literal(Some(t), l)
            .map_err(EvalError::Type)?
            .ok_or_else(|| EvalError::Undefined(format!("{t}::{l}"))),
        Expr::Neg(a) => Ok(Value::Int(-int(&eval(a, sc)?)?)),
        Expr::Not(a) => Ok(Value::Bool(!boolean(&eval(a, sc)?)?)),
        Expr::Bin(op, a, b) => eval_bin(*op, a, b, sc),
        Expr::Field(a, f) => {
            let v = eval(a, sc)?;
            match &v {
                Value::Record { ty, fields } => {
                    let i = sc
                        .types()
                        .field_index(ty, f)
                        .ok_or_else(|| EvalError::Type(format!("record {ty} has no field {f}")))?;
                    Ok(fields[i].clone())
                }
                _ => Err(EvalError::Type(format!("field {f} of non-record {v}"))),
            }
        }
        Expr::Tuple(xs) => Ok(Value::Tuple(xs.iter().map(|x| eval(x, sc)).collect::<Result<Vec<_>, _>>()?.into())),
        Expr::SeqLit(xs) => Ok(Value::List(xs.iter().map(|x| eval(x, sc)).collect::<Result<Vec<_>, _>>()?.into())),
        Expr::If(c, t, f) => {
            if boolean(&eval(c, sc)?)? {
                eval(t, sc)
            } else {
                eval(f, sc)
            }
        }
        Expr::Quant { forall, var, bound, body } => {
            let n = int(&eval(bound, sc)?)?;
            for i in 0..n.max(0) {
                let inner = Bound { name: var, value: Value::Int(i), parent: sc };
                let holds = boolean(&eval(body, &inner)?)?;
                if *forall && !holds {
                    return Ok(Value::Bool(false));
                }
                if !*forall && holds {
                    return Ok(Value::Bool(true));
                }
            }
            Ok(Value::Bool(*forall))
        }
        Expr::Call(f, args) => {
            let vs = args.iter().map(|a| eval(a, sc)).collect::<Result<Vec<_>, _>>()?;
            builtin(f, &vs).unwrap_or_else(|| sc.call(f, &vs))
        }
    }
}

/// Evaluates `e` with `name` bound to `value`.
pub fn eval_with(e: &Expr, sc: &dyn Scope, name: &str, value: Value) -> Result<Value, EvalError> {
    eval(e, &Bound { name, value, parent: sc })
}

fn eval_bin(op: BinOp, a: &Expr, b: &Expr, sc: &dyn Scope) -> Result<Value, EvalError> {
    match op {
        BinOp::And => {
            if !boolean(&eval(a, sc)?)? {
                return Ok(Value::Bool(false));
            }
            return Ok(Value::Bool(boolean(&eval(b, sc)?)?));
        }
        BinOp::Or => {
            if boolean(&eval(a, sc)?)? {
                return Ok(Value::Bool(true));
            }
            return Ok(Value::Bool(boolean(&eval(b, sc)?)?));
        }
        BinOp::Implies => {
            if !boolean(&eval(a, sc)?)? {
                return Ok(Value::Bool(true));
            }
            return Ok(Value::Bool(boolean(&eval(b, sc)?)?));
        }
        _ => {}
    }
    let x = eval(a, sc)?;
    let y = eval(b, sc)?;
    Ok(match op {
        BinOp::Eq => Value::Bool(value_eq(&x, &y)),
        BinOp::Ne => Value::Bool(!value_eq(&x, &y)),
        BinOp::Lt => Value::Bool(int(&x)? < int(&y)?),
        BinOp::Le => Value::Bool(int(&x)? <= int(&y)?),
        BinOp::Gt => Value::Bool(int(&x)? > int(&y)?),
        BinOp::Ge => Value::Bool(int(&x)? >= int(&y)?),
        BinOp::Add => Value::Int(int(&x)? + int(&y)?),
        BinOp::Sub => Value::Int(int(&x)? - int(&y)?),
        BinOp::Mul => Value::Int(int(&x)? * int(&y)?),
        BinOp::Div => {
            let d = int(&y)?;
            if d == 0 {
                return Err(EvalError::DivByZero);
            }
            Value::Int(int(&x)?.div_euclid(d))
        }
        BinOp::Mod => {
            let d = int(&y)?;
            if d == 0 {
                return Err(EvalError::DivByZero);
            }
            Value::Int(int(&x)?.rem_euclid(d))
        }
        BinOp::And | BinOp::Or | BinOp::Implies => unreachable!("handled above"),
    })
}

/// Built-in sequence and arithmetic helpers.
fn builtin(f: &str, args: &[Value]) -> Option<Result<Value, EvalError>> {
    let two = |g: fn(i64, i64) -> i64| -> Result<Value, EvalError> {
        match args {
            [a, b] => Ok(Value::Int(g(int(a)?, int(b)?))),
            _ => Err(EvalError::Type(format!("{f} takes two arguments"))),
        }
    };
    Some(match f {
        "size" | "blength" => match args {
            [Value::List(xs)] => Ok(Value::Int(xs.len() as i64)),
            _ => Err(EvalError::Type(format!("{f} expects one sequence"))),
        },
        "bnth" => match args {
            [Value::List(xs), i] => {
                let i = match int(i) {
                    Ok(i) => i,
                    Err(e) => return Some(Err(e)),
                };
                usize::try_from(i)
                    .ok()
                    .and_then(|i| xs.get(i).cloned())
                    .ok_or_else(|| EvalError::Type(format!("index {i} out of bounds")))
            }
            _ => Err(EvalError::Type("bnth expects a sequence and an index".into())),
        },
        "Plus" => two(|a, b| a + b),
        "Minus" => two(|a, b| a - b),
        "Mult" => two(|a, b| a * b),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_precedence() {
        let e = parse_expr("d1 - d0 > stuckDist or not ok").unwrap();
        match e {
            Expr::Bin(BinOp::Or, a, b) => {
                assert!(matches!(*a, Expr::Bin(BinOp::Gt, _, _)));
                assert!(matches!(*b, Expr::Not(_)));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_expr("l > -MAX").unwrap(), Expr::Bin(
            BinOp::Gt,
            Box::new(Expr::Name("l".into())),
            Box::new(Expr::Neg(Box::new(Expr::Name("MAX".into()))))
        ));
    }

    #[test]
    fn parses_actions_and_triggers() {
        let a = parse_action("x = l + 1; right!x").unwrap();
        assert!(matches!(a, Action::Seq(ref xs) if xs.len() == 2));
        assert_eq!(parse_action("flag").unwrap(), Action::Send("flag".into(), None));
        assert_eq!(parse_action("odometer?d0").unwrap(), Action::Recv("odometer".into(), "d0".into()));
        assert_eq!(parse_trigger("update?l").unwrap(), Trigger::Input("update".into(), "l".into()));
        assert_eq!(parse_trigger("reset").unwrap(), Trigger::Simple("reset".into()));
        assert_eq!(parse_action("").unwrap(), Action::Skip);
    }

    #[test]
    fn quantifier_free_names_exclude_bound() {
        let e = parse_expr("forall x < size(gs) @ goreq(result, bnth(gs, x).i)").unwrap();
        assert_eq!(e.free_names(), vec!["gs".to_string(), "result".to_string()]);
    }
}
