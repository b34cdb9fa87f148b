//! Expression syntax shared by oracle definitions and polynomial text.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | factor
//! factor := base ('^' uint)?
//! base   := int | var | '(' expr ')' | 'sqrt' '(' expr ')'
//! var    := ('x' | 'y') uint | 't'
//! ```
//!
//! `p/q` literals are ordinary divisions of two integers.

use num_bigint::BigInt;

use crate::scalar::{FieldDesc, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{name}` at position {pos}")]
    UnknownVariable { name: String, pos: usize },
}

/// Variable reference. Indices are zero-based (`x1` is `X(0)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X(usize),
    Y(usize),
    T,
}

/// The variables an expression may mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scope {
    pub num_x: usize,
    pub num_y: usize,
    pub allow_t: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(BigInt),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Divisor position is kept for error reporting.
    Div(Box<Expr>, Box<Expr>, usize),
    Pow(Box<Expr>, u32),
    Sqrt(Box<Expr>, usize),
}

impl Expr {
    /// Exact evaluation. `vars` maps each variable to its value; `None` means
    /// the expression is undefined there (pole, missing square root). Any
    /// undefined subexpression makes the whole expression undefined.
    pub fn eval(&self, field: FieldDesc, vars: &dyn Fn(Var) -> Option<Scalar>) -> Option<Scalar> {
        Some(match self {
            Expr::Int(v) => Scalar::from_bigint(field, v),
            Expr::Var(v) => vars(*v)?,
            Expr::Neg(a) => -a.eval(field, vars)?,
            Expr::Add(a, b) => a.eval(field, vars)? + b.eval(field, vars)?,
            Expr::Sub(a, b) => a.eval(field, vars)? - b.eval(field, vars)?,
            Expr::Mul(a, b) => a.eval(field, vars)? * b.eval(field, vars)?,
            Expr::Div(a, b, _) => {
                let num = a.eval(field, vars)?;
                num.checked_div(&b.eval(field, vars)?).ok()?
            }
            Expr::Pow(a, e) => a.eval(field, vars)?.pow(*e),
            Expr::Sqrt(a, _) => a.eval(field, vars)?.sqrt()?,
        })
    }

    /// Largest `x` and `y` indices mentioned (one-based counts).
    pub fn var_extent(&self) -> (usize, usize) {
        match self {
            Expr::Int(_) => (0, 0),
            Expr::Var(Var::X(i)) => (i + 1, 0),
            Expr::Var(Var::Y(i)) => (0, i + 1),
            Expr::Var(Var::T) => (0, 0),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sqrt(a, _) => a.var_extent(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b, _) => {
                let (ax, ay) = a.var_extent();
                let (bx, by) = b.var_extent();
                (ax.max(bx), ay.max(by))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => out.push((Tok::Plus, start)),
            '-' | '\u{2212}' => out.push((Tok::Minus, start)),
            '*' => out.push((Tok::Star, start)),
            '/' => out.push((Tok::Slash, start)),
            '^' => out.push((Tok::Caret, start)),
            '(' => out.push((Tok::LParen, start)),
            ')' => out.push((Tok::RParen, start)),
            '0'..='9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let v: BigInt = text[start..i].parse().expect("digits parse");
                out.push((Tok::Int(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                return Err(ExprError::Syntax {
                    pos: start,
                    msg: format!("unexpected character {:?}", text[start..].chars().next().unwrap()),
                })
            }
        }
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    scope: Scope,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    let pos = self.pos();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?), pos);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let base = self.base()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        match self.bump() {
            (Tok::Int(v), pos) => {
                let e = u32::try_from(&v).map_err(|_| ExprError::Syntax {
                    pos,
                    msg: "exponent too large".into(),
                })?;
                Ok(Expr::Pow(Box::new(base), e))
            }
            (_, pos) => Err(ExprError::Syntax {
                pos,
                msg: "exponent must be a non-negative integer literal".into(),
            }),
        }
    }

    fn base(&mut self) -> Result<Expr, ExprError> {
        let (tok, pos) = self.bump();
        match tok {
            Tok::Int(v) => Ok(Expr::Int(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) if name == "sqrt" => {
                self.expect(Tok::LParen, "`(` after sqrt")?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Sqrt(Box::new(e), pos))
            }
            Tok::Ident(name) => self.variable(name, pos).map(Expr::Var),
            Tok::End => Err(ExprError::Syntax {
                pos,
                msg: "unexpected end of input".into(),
            }),
            other => Err(ExprError::Syntax {
                pos,
                msg: format!("unexpected token {other:?}"),
            }),
        }
    }

    fn variable(&self, name: String, pos: usize) -> Result<Var, ExprError> {
        let unknown = || ExprError::UnknownVariable {
            name: name.clone(),
            pos,
        };
        if name == "t" {
            return if self.scope.allow_t { Ok(Var::T) } else { Err(unknown()) };
        }
        let (kind, digits) = name.split_at(1);
        let idx: usize = match digits.parse() {
            Ok(i) if i >= 1 && !digits.starts_with('0') => i,
            _ => return Err(unknown()),
        };
        match kind {
            "x" if idx <= self.scope.num_x => Ok(Var::X(idx - 1)),
            "y" if idx <= self.scope.num_y => Ok(Var::Y(idx - 1)),
            _ => Err(unknown()),
        }
    }
}

/// Parses `text` with variables restricted to `scope`.
pub fn parse(text: &str, scope: Scope) -> Result<Expr, ExprError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        at: 0,
        scope,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.syntax("unexpected trailing input");
    }
    Ok(e)
}
