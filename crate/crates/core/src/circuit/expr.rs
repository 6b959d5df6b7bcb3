//! Boolean expressions and their parser.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! or   := xor ('|' xor)*
//! xor  := and ('^' and)*
//! and  := unary (('&' | '!&') unary)*
//! unary:= '~' unary | atom
//! atom := ident | '0' | '1' | '(' or ')'
//! ```

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::logic::Digit;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    Var(String),
    Const(bool),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Nand(Box<BoolExpr>, Box<BoolExpr>),
    Xor(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn var(name: &str) -> Self {
        BoolExpr::Var(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: BoolExpr) -> Self {
        BoolExpr::Not(Box::new(e))
    }

    pub fn and(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn nand(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::Nand(Box::new(a), Box::new(b))
    }

    pub fn xor(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::Xor(Box::new(a), Box::new(b))
    }

    /// Variable names in order of first appearance.
    pub fn variables(&self) -> Vec<String> {
        fn walk(e: &BoolExpr, out: &mut Vec<String>) {
            match e {
                BoolExpr::Var(name) => {
                    if !out.contains(name) {
                        out.push(name.clone());
                    }
                }
                BoolExpr::Const(_) => {}
                BoolExpr::Not(x) => walk(x, out),
                BoolExpr::And(a, b) | BoolExpr::Or(a, b) | BoolExpr::Nand(a, b) | BoolExpr::Xor(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn depth(&self) -> usize {
        match self {
            BoolExpr::Var(_) | BoolExpr::Const(_) => 0,
            BoolExpr::Not(x) => 1 + x.depth(),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) | BoolExpr::Nand(a, b) | BoolExpr::Xor(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolExpr::Var(name) => f.write_str(name),
            BoolExpr::Const(c) => write!(f, "{}", u8::from(*c)),
            BoolExpr::Not(x) => write!(f, "~{x}"),
            BoolExpr::And(a, b) => write!(f, "({a} & {b})"),
            BoolExpr::Or(a, b) => write!(f, "({a} | {b})"),
            BoolExpr::Nand(a, b) => write!(f, "({a} !& {b})"),
            BoolExpr::Xor(a, b) => write!(f, "({a} ^ {b})"),
        }
    }
}

/// Direct recursive evaluation; the ground truth for synthesized circuits.
pub fn oracle_evaluate(expr: &BoolExpr, inputs: &HashMap<String, Digit>) -> Result<Digit> {
    fn eval(e: &BoolExpr, inputs: &HashMap<String, Digit>) -> Result<bool> {
        Ok(match e {
            BoolExpr::Var(name) => inputs
                .get(name)
                .ok_or_else(|| Error::UnboundVariable(name.clone()))?
                .as_bool(),
            BoolExpr::Const(c) => *c,
            BoolExpr::Not(x) => !eval(x, inputs)?,
            BoolExpr::And(a, b) => eval(a, inputs)? & eval(b, inputs)?,
            BoolExpr::Or(a, b) => eval(a, inputs)? | eval(b, inputs)?,
            BoolExpr::Nand(a, b) => !(eval(a, inputs)? & eval(b, inputs)?),
            BoolExpr::Xor(a, b) => eval(a, inputs)? ^ eval(b, inputs)?,
        })
    }
    eval(expr, inputs).map(Digit::from_bool)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Const(bool),
    And,
    Nand,
    Or,
    Xor,
    Not,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("`{name}`"),
            Tok::Const(c) => format!("`{}`", u8::from(*c)),
            Tok::And => "`&`".into(),
            Tok::Nand => "`!&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Xor => "`^`".into(),
            Tok::Not => "`~`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '&' => Tok::And,
            '|' => Tok::Or,
            '^' => Tok::Xor,
            '~' => Tok::Not,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '0' => Tok::Const(false),
            '1' => Tok::Const(true),
            '!' if chars.get(i + 1) == Some(&'&') => {
                i += 1;
                Tok::Nand
            }
            'a'..='z' => {
                while i + 1 < chars.len()
                    && matches!(chars[i + 1], 'a'..='z' | '0'..='9' | '_')
                {
                    i += 1;
                }
                Tok::Ident(chars[start..=i].iter().collect())
            }
            other => {
                return Err(Error::Syntax {
                    position: start,
                    expected: vec!["an operator, operand or parenthesis".into()],
                    found: format!("`{other}`"),
                })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((chars.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> Error {
        let (position, tok) = &self.toks[self.pos];
        Error::Syntax {
            position: *position,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: tok.describe(),
        }
    }

    fn or(&mut self) -> Result<BoolExpr> {
        let mut lhs = self.xor()?;
        while *self.peek() == Tok::Or {
            self.bump();
            lhs = BoolExpr::or(lhs, self.xor()?);
        }
        Ok(lhs)
    }

    fn xor(&mut self) -> Result<BoolExpr> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Xor {
            self.bump();
            lhs = BoolExpr::xor(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<BoolExpr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::And => {
                    self.bump();
                    lhs = BoolExpr::and(lhs, self.unary()?);
                }
                Tok::Nand => {
                    self.bump();
                    lhs = BoolExpr::nand(lhs, self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<BoolExpr> {
        if *self.peek() == Tok::Not {
            self.bump();
            return Ok(BoolExpr::not(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<BoolExpr> {
        const OPERAND: [&str; 4] = ["variable", "constant", "`~`", "`(`"];
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(BoolExpr::Var(name))
            }
            Tok::Const(c) => {
                self.bump();
                Ok(BoolExpr::Const(c))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.or()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error(&["`)`", "operator"]));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.error(&OPERAND)),
        }
    }
}

pub fn parse_expr(text: &str) -> Result<BoolExpr> {
    let mut parser = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let expr = parser.or()?;
    if *parser.peek() != Tok::End {
        return Err(parser.error(&["operator", "end of input"]));
    }
    Ok(expr)
}

impl std::str::FromStr for BoolExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_expr(s)
    }
}
