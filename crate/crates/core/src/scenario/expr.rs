//! Support predicates and marginal relations as written in scenario files.
//!
//! Support predicates are chains of integer expressions compared with `=` or
//! `!=`, e.g. `Z.in = A.out ^ B.out` or `A.out = B.out = C.out = 0`. Operators
//! are `^` (xor, lowest precedence), `+`, `-` and `*`, `&` (highest), with
//! parentheses. Marginal relations read `A C | Y : 3 P(10|1) = P(00|1)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::rational::Q;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Expr {
    Int(i64),
    Out(usize),
    In(usize),
    Bin(char, Box<Expr>, Box<Expr>),
}

impl Expr {
    fn eval(&self, outs: &[usize], ins: &[usize]) -> i64 {
        match self {
            Expr::Int(v) => *v,
            Expr::Out(p) => outs[*p] as i64,
            Expr::In(p) => ins[*p] as i64,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(outs, ins), b.eval(outs, ins));
                match op {
                    '^' => a ^ b,
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '&' => a & b,
                    _ => unreachable!(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(i64),
    Var(String, bool),
    Op(char),
    Eq,
    Ne,
    LParen,
    RParen,
}

fn lex(s: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let v: String = chars[start..i].iter().collect();
            toks.push(Tok::Int(v.parse().map_err(|_| format!("bad integer {v}"))?));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            let w: String = chars[start..i].iter().collect();
            let (name, kind) = w
                .rsplit_once('.')
                .ok_or_else(|| format!("expected NAME.in or NAME.out, got {w}"))?;
            let is_out = match kind {
                "out" => true,
                "in" => false,
                _ => return Err(format!("expected NAME.in or NAME.out, got {w}")),
            };
            toks.push(Tok::Var(name.to_string(), is_out));
        } else if c == '!' && chars.get(i + 1) == Some(&'=') {
            toks.push(Tok::Ne);
            i += 2;
        } else if c == '=' {
            toks.push(Tok::Eq);
            i += if chars.get(i + 1) == Some(&'=') { 2 } else { 1 };
        } else if "^+-*&".contains(c) {
            toks.push(Tok::Op(c));
            i += 1;
        } else if c == '(' {
            toks.push(Tok::LParen);
            i += 1;
        } else if c == ')' {
            toks.push(Tok::RParen);
            i += 1;
        } else {
            return Err(format!("unexpected character '{c}'"));
        }
    }
    Ok(toks)
}

struct ExprParser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    names: &'a [String],
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn level(&mut self, ops: &[&[char]], depth: usize) -> Result<Expr, String> {
        if depth == ops.len() {
            return self.atom();
        }
        let mut lhs = self.level(ops, depth + 1)?;
        while let Some(Tok::Op(c)) = self.peek() {
            let c = *c;
            if !ops[depth].contains(&c) {
                break;
            }
            self.pos += 1;
            let rhs = self.level(ops, depth + 1)?;
            lhs = Expr::Bin(c, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn expr(&mut self) -> Result<Expr, String> {
        self.level(&[&['^'], &['+', '-'], &['*', '&']], 0)
    }

    fn atom(&mut self) -> Result<Expr, String> {
        let tok = self.peek().cloned().ok_or("unexpected end of expression")?;
        self.pos += 1;
        match tok {
            Tok::Int(v) => Ok(Expr::Int(v)),
            Tok::Var(name, is_out) => {
                let p = self
                    .names
                    .iter()
                    .position(|n| *n == name)
                    .ok_or_else(|| format!("unknown party {name}"))?;
                Ok(if is_out { Expr::Out(p) } else { Expr::In(p) })
            }
            Tok::LParen => {
                let e = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err("missing ')'".into());
                }
                self.pos += 1;
                Ok(e)
            }
            other => Err(format!("unexpected token {other:?}")),
        }
    }
}

/// A parsed support predicate; all comparisons in the chain must hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportExpr {
    text: String,
    sides: Vec<Expr>,
    cmps: Vec<bool>,
}

impl SupportExpr {
    pub fn parse(text: &str, names: &[String]) -> Result<Self, ScenarioError> {
        let err = |m: String| ScenarioError::Invalid(format!("support '{text}': {m}"));
        let toks = lex(text).map_err(err)?;
        let mut p = ExprParser {
            toks,
            pos: 0,
            names,
        };
        let mut sides = vec![p.expr().map_err(err)?];
        let mut cmps = Vec::new();
        while let Some(t) = p.peek().cloned() {
            match t {
                Tok::Eq => cmps.push(true),
                Tok::Ne => cmps.push(false),
                other => return Err(err(format!("unexpected token {other:?}"))),
            }
            p.pos += 1;
            sides.push(p.expr().map_err(err)?);
        }
        if cmps.is_empty() {
            return Err(err("expected a comparison".into()));
        }
        Ok(SupportExpr {
            text: text.trim().to_string(),
            sides,
            cmps,
        })
    }

    pub fn holds(&self, outs: &[usize], ins: &[usize]) -> bool {
        let vals: Vec<i64> = self.sides.iter().map(|e| e.eval(outs, ins)).collect();
        self.cmps
            .iter()
            .zip(vals.windows(2))
            .all(|(&eq, w)| (w[0] == w[1]) == eq)
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for SupportExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// One term `coeff · P(outs | ins)` of a marginal relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalTerm {
    pub coeff: Q,
    pub outs: Vec<usize>,
    pub ins: Vec<usize>,
}

/// Linear relation `Σ coeff · P(a_J = outs | x_K = ins) = rhs` among cells of
/// the marginal of output parties `outputs` given input parties `inputs`. It
/// is imposed for every assignment of the remaining inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalRelation {
    pub outputs: Vec<usize>,
    pub inputs: Vec<usize>,
    pub terms: Vec<MarginalTerm>,
    pub rhs: Q,
}

impl MarginalRelation {
    /// Parses `A C | Y : 3 P(10|1) - P(00|1) = 0`.
    pub fn parse(text: &str, names: &[String]) -> Result<Self, ScenarioError> {
        let err = |m: &str| ScenarioError::Invalid(format!("marginal '{text}': {m}"));
        let (head, body) = text.split_once(':').ok_or_else(|| err("missing ':'"))?;
        let (outs, ins) = head.split_once('|').unwrap_or((head, ""));
        let lookup = |s: &str| -> Result<Vec<usize>, ScenarioError> {
            s.split_whitespace()
                .map(|n| {
                    names
                        .iter()
                        .position(|x| x == n)
                        .ok_or_else(|| err(&format!("unknown party {n}")))
                })
                .collect()
        };
        let outputs = lookup(outs)?;
        let inputs = lookup(ins)?;
        if outputs.is_empty() {
            return Err(err("no output parties"));
        }
        let (lhs, rhs) = body.split_once('=').ok_or_else(|| err("missing '='"))?;
        let (lt, lc) = parse_side(lhs, outputs.len(), inputs.len()).map_err(|m| err(&m))?;
        let (rt, rc) = parse_side(rhs, outputs.len(), inputs.len()).map_err(|m| err(&m))?;
        let mut terms = lt;
        for mut t in rt {
            t.coeff = -t.coeff;
            terms.push(t);
        }
        Ok(MarginalRelation {
            outputs,
            inputs,
            terms,
            rhs: &rc - &lc,
        })
    }

    pub fn describe(&self, names: &[String]) -> String {
        let cell = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let head_o: Vec<&str> = self.outputs.iter().map(|&i| names[i].as_str()).collect();
        let head_i: Vec<&str> = self.inputs.iter().map(|&i| names[i].as_str()).collect();
        let mut s = format!("{} | {} :", head_o.join(" "), head_i.join(" "));
        for (k, t) in self.terms.iter().enumerate() {
            let sign = if t.coeff.is_negative() { "-" } else if k > 0 { "+" } else { "" };
            s.push_str(&format!(" {sign} {} P({}|{})", t.coeff.abs(), cell(&t.outs), cell(&t.ins)));
        }
        s.push_str(&format!(" = {}", self.rhs));
        s
    }
}

/// Parses `[±] [coeff [*]] P(cells) ...` plus bare constants.
fn parse_side(s: &str, n_out: usize, n_in: usize) -> Result<(Vec<MarginalTerm>, Q), String> {
    let mut terms = Vec::new();
    let mut constant = Q::zero();
    let s = s.replace('*', " ");
    let mut rest = s.trim();
    while !rest.is_empty() {
        let mut sign = Q::one();
        while let Some(r) = rest.strip_prefix(['+', '-']) {
            if rest.starts_with('-') {
                sign = -sign;
            }
            rest = r.trim_start();
        }
        let (coeff, after) = match rest.find(|c: char| !(c.is_ascii_digit() || c == '/' || c == '.')) {
            Some(0) => (None, rest),
            Some(k) => (Some(&rest[..k]), rest[k..].trim_start()),
            None => (Some(rest), ""),
        };
        let coeff = match coeff {
            Some(c) => c.parse::<Q>().map_err(|e| e.to_string())?,
            None => Q::one(),
        };
        if let Some(r) = after.strip_prefix("P(") {
            let close = r.find(')').ok_or("missing ')'")?;
            let inner = &r[..close];
            let (o, i) = inner.split_once('|').unwrap_or((inner, ""));
            let outs = digits(o, n_out)?;
            let ins = digits(i, n_in)?;
            terms.push(MarginalTerm {
                coeff: &sign * &coeff,
                outs,
                ins,
            });
            rest = r[close + 1..].trim_start();
        } else {
            constant += &(&sign * &coeff);
            rest = after;
        }
        if !rest.is_empty() && !rest.starts_with(['+', '-']) {
            return Err(format!("unexpected '{rest}'"));
        }
    }
    Ok((terms, constant))
}

/// Cell values: one digit per party, or comma-separated for larger alphabets.
fn digits(s: &str, n: usize) -> Result<Vec<usize>, String> {
    let s = s.trim();
    let v: Vec<usize> = if s.contains(',') {
        s.split(',')
            .map(|d| d.trim().parse().map_err(|_| format!("bad cell value '{d}'")))
            .collect::<Result<_, _>>()?
    } else {
        s.chars()
            .map(|c| c.to_digit(10).map(|d| d as usize).ok_or(format!("bad cell value '{c}'")))
            .collect::<Result<_, _>>()?
    };
    if v.len() != n {
        return Err(format!("cell '{s}' needs {n} values"));
    }
    Ok(v)
}
