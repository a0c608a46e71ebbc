//! Rational arithmetic expressions over named integer parameters, as used in registry records:
//! `1/(n*n-n+2)`, `3*m > 2*n`, `n % 2 == 0`.

use crate::rat::{to_i64, Q};
use num_traits::{Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("in expression `{expr}`: {msg}")]
pub struct ExprError {
    pub expr: String,
    pub msg: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    Num(i64),
    Var(usize),
    Op(char),
    Cmp(&'static str),
    Open,
    Close,
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    vars: &'a [(&'a str, i64)],
}

fn tokenize(s: &str, vars: &[(&str, i64)]) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' => i += 1,
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                out.push(Tok::Num(text.parse().map_err(|_| format!("number `{text}` too large"))?));
            }
            'a'..='z' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                let idx =
                    vars.iter().position(|(v, _)| *v == name).ok_or_else(|| format!("unknown variable `{name}`"))?;
                out.push(Tok::Var(idx));
            }
            '+' | '-' | '*' | '/' | '%' => {
                out.push(Tok::Op(c));
                i += 1;
            }
            '(' | ')' => {
                out.push(if c == '(' { Tok::Open } else { Tok::Close });
                i += 1;
            }
            '<' | '>' | '=' | '!' => {
                let two = chars.get(i + 1) == Some(&'=');
                let op = match (c, two) {
                    ('<', true) => "<=",
                    ('<', false) => "<",
                    ('>', true) => ">=",
                    ('>', false) => ">",
                    ('=', true) => "==",
                    ('!', true) => "!=",
                    _ => return Err(format!("unexpected `{c}`")),
                };
                out.push(Tok::Cmp(op));
                i += if two { 2 } else { 1 };
            }
            _ => return Err(format!("unexpected `{c}`")),
        }
    }
    Ok(out)
}

impl Parser<'_> {
    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn sum(&mut self) -> Result<Q, String> {
        let mut acc = self.product()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek() {
            self.pos += 1;
            let rhs = self.product()?;
            acc = if op == '+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<Q, String> {
        let mut acc = self.unary()?;
        while let Some(Tok::Op(op @ ('*' | '/' | '%'))) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = match op {
                '*' => acc * rhs,
                _ if rhs.is_zero() => return Err("division by zero".into()),
                '/' => acc / rhs,
                _ => {
                    let (a, b) = (to_i64(&acc).ok_or("`%` needs integers")?, to_i64(&rhs).ok_or("`%` needs integers")?);
                    Q::from_integer(a.rem_euclid(b).into())
                }
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Q, String> {
        match self.next() {
            Some(Tok::Op('-')) => Ok(-self.unary()?),
            Some(Tok::Num(k)) => Ok(Q::from_integer(k.into())),
            Some(Tok::Var(i)) => Ok(Q::from_integer(self.vars[i].1.into())),
            Some(Tok::Open) => {
                let v = self.sum()?;
                match self.next() {
                    Some(Tok::Close) => Ok(v),
                    _ => Err("missing `)`".into()),
                }
            }
            other => Err(format!("unexpected {other:?}")),
        }
    }
}

fn run<T>(s: &str, vars: &[(&str, i64)], f: impl FnOnce(&mut Parser) -> Result<T, String>) -> Result<T, ExprError> {
    let wrap = |msg: String| ExprError { expr: s.to_string(), msg };
    let toks = tokenize(s, vars).map_err(wrap)?;
    let mut p = Parser { toks, pos: 0, vars };
    let v = f(&mut p).map_err(wrap)?;
    if p.pos != p.toks.len() {
        return Err(wrap("trailing input".into()));
    }
    Ok(v)
}

/// Evaluates an arithmetic expression exactly.
pub fn eval(s: &str, vars: &[(&str, i64)]) -> Result<Q, ExprError> {
    run(s, vars, |p| p.sum())
}

/// Evaluates an expression that must come out integral.
pub fn eval_int(s: &str, vars: &[(&str, i64)]) -> Result<i64, ExprError> {
    let v = eval(s, vars)?;
    to_i64(&v).ok_or_else(|| ExprError { expr: s.to_string(), msg: "value is not an integer".into() })
}

/// Evaluates `lhs <op> rhs`.
pub fn eval_bool(s: &str, vars: &[(&str, i64)]) -> Result<bool, ExprError> {
    run(s, vars, |p| {
        let lhs = p.sum()?;
        let Some(Tok::Cmp(op)) = p.next() else { return Err("expected a comparison".into()) };
        let d = lhs - p.sum()?;
        Ok(match op {
            "<" => d.is_negative(),
            "<=" => !d.is_positive(),
            ">" => d.is_positive(),
            ">=" => !d.is_negative(),
            "==" => d.is_zero(),
            _ => !d.is_zero(),
        })
    })
}

/// Replaces every `{expr}` by its integer value.
pub fn substitute(template: &str, vars: &[(&str, i64)]) -> Result<String, ExprError> {
    let mut out = String::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let close =
            rest[open..].find('}').ok_or_else(|| ExprError { expr: template.into(), msg: "unclosed `{`".into() })?;
        out.push_str(&eval_int(&rest[open + 1..open + close], vars)?.to_string());
        rest = &rest[open + close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}
