//! Parser and evaluator for scalar mathematical expressions.
//!
//! Metric components and immersion components are supplied as strings in a
//! small expression language and evaluated over jet arithmetic. Grammar
//! (EBNF, whitespace insignificant):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" factor)?
//! atom   := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! parses as `-(x^2)`. Functions: `sqrt`, `sin`, `cos`, `exp`, `log`
//! (natural), `pow(base, exponent)`. Exponents of `^` and `pow` must be
//! constant expressions; integer exponents are evaluated by repeated
//! multiplication (valid for any base), non-integer ones require a positive
//! base. Variable names are fixed by the caller and resolved positionally at
//! parse time.

use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
}

/// Immutable expression AST. Variables carry the positional index assigned
/// from the caller's variable list at parse time.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Constant(f64),
    Variable { name: String, index: usize },
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next_token()?;
            let end = tok == Tok::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn next_token(&mut self) -> Result<(Tok, usize)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let at = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Tok::End, at));
        }
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => return self.number(at),
            c if c.is_ascii_alphabetic() || c == b'_' => return self.ident(at),
            other => {
                return Err(Error::Parse {
                    message: format!("unexpected character `{}`", other as char),
                    offset: at,
                })
            }
        };
        self.pos += 1;
        Ok((tok, at))
    }

    fn number(&mut self, at: usize) -> Result<(Tok, usize)> {
        let mut end = self.pos;
        while end < self.src.len() && (self.src[end].is_ascii_digit() || self.src[end] == b'.') {
            end += 1;
        }
        // Optional exponent part, e.g. 1e-3.
        if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
            let mut probe = end + 1;
            if probe < self.src.len() && (self.src[probe] == b'+' || self.src[probe] == b'-') {
                probe += 1;
            }
            if probe < self.src.len() && self.src[probe].is_ascii_digit() {
                end = probe;
                while end < self.src.len() && self.src[end].is_ascii_digit() {
                    end += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
        let value = text.parse::<f64>().map_err(|_| Error::Parse {
            message: format!("malformed number `{text}`"),
            offset: at,
        })?;
        self.pos = end;
        Ok((Tok::Number(value), at))
    }

    fn ident(&mut self, at: usize) -> Result<(Tok, usize)> {
        let mut end = self.pos;
        while end < self.src.len()
            && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
        {
            end += 1;
        }
        let text = std::str::from_utf8(&self.src[self.pos..end])
            .unwrap()
            .to_string();
        self.pos = end;
        Ok((Tok::Ident(text), at))
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(Error::Parse {
                message: format!("expected {what}"),
                offset: self.offset(),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            // Right-associative; exponent may carry a unary minus.
            let exponent = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.bump() {
            Tok::Number(v) => Ok(Expr::Constant(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    self.call(&name, args, at)
                } else {
                    match self.vars.iter().position(|v| **v == name) {
                        Some(index) => Ok(Expr::Variable { name, index }),
                        None => Err(Error::UnknownVariable { name, offset: at }),
                    }
                }
            }
            Tok::End => Err(Error::Parse {
                message: "unexpected end of input".into(),
                offset: at,
            }),
            other => Err(Error::Parse {
                message: format!("unexpected token {other:?}"),
                offset: at,
            }),
        }
    }

    fn call(&mut self, name: &str, mut args: Vec<Expr>, at: usize) -> Result<Expr> {
        let func = match name {
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "pow" => {
                if args.len() != 2 {
                    return Err(Error::Arity {
                        name: name.into(),
                        offset: at,
                        expected: 2,
                        got: args.len(),
                    });
                }
                let exponent = args.pop().unwrap();
                let base = args.pop().unwrap();
                return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
            }
            _ => {
                return Err(Error::UnknownFunction {
                    name: name.into(),
                    offset: at,
                })
            }
        };
        if args.len() != 1 {
            return Err(Error::Arity {
                name: name.into(),
                offset: at,
                expected: 1,
                got: args.len(),
            });
        }
        Ok(Expr::Call(func, Box::new(args.pop().unwrap())))
    }
}

/// Parse `text` against the declared variable list. Variables evaluate
/// positionally: variable k binds to the k-th jet handed to [`Expr::eval`].
pub fn parse(text: &str, allowed_vars: &[&str]) -> Result<Expr> {
    if text.trim().is_empty() {
        return Err(Error::Parse {
            message: "empty expression".into(),
            offset: 0,
        });
    }
    let toks = Lexer::tokens(text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        vars: allowed_vars,
    };
    let expr = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(Error::Parse {
            message: format!("unexpected trailing token {:?}", parser.peek()),
            offset: parser.offset(),
        });
    }
    Ok(expr)
}

impl Expr {
    /// Evaluate over jet arithmetic; `bindings[k]` is the jet bound to
    /// variable k. All jets must share shape.
    pub fn eval(&self, bindings: &[Jet]) -> Result<Jet> {
        match self {
            Expr::Constant(c) => {
                let model = bindings.first().expect("at least one binding required");
                Ok(Jet::constant(*c, model.num_vars(), model.order()))
            }
            Expr::Variable { index, name } => bindings.get(*index).cloned().ok_or_else(|| {
                Error::Scene(format!("variable `{name}` (index {index}) not bound"))
            }),
            Expr::Neg(inner) => Ok(-inner.eval(bindings)?),
            Expr::Binary(op, lhs, rhs) => self.eval_binary(*op, lhs, rhs, bindings),
            Expr::Call(func, arg) => {
                let a = arg.eval(bindings)?;
                let v = a.value();
                match func {
                    Func::Sqrt => {
                        if v <= 0.0 {
                            return Err(Error::Domain(format!(
                                "sqrt of non-positive value {v} in `{self}`"
                            )));
                        }
                        Ok(a.sqrt())
                    }
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(Error::Domain(format!(
                                "log of non-positive value {v} in `{self}`"
                            )));
                        }
                        Ok(a.ln())
                    }
                    Func::Sin => Ok(a.sin()),
                    Func::Cos => Ok(a.cos()),
                    Func::Exp => Ok(a.exp()),
                }
            }
        }
    }

    fn eval_binary(&self, op: BinOp, lhs: &Expr, rhs: &Expr, bindings: &[Jet]) -> Result<Jet> {
        if op == BinOp::Pow {
            let base = lhs.eval(bindings)?;
            let exponent = rhs.const_value().ok_or_else(|| {
                Error::Domain(format!(
                    "exponent must be a constant expression in `{self}`"
                ))
            })?;
            if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
                if exponent < 0.0 && base.value() == 0.0 {
                    return Err(Error::Domain(format!("negative power of zero in `{self}`")));
                }
                return Ok(base.powi(exponent as i32));
            }
            if base.value() <= 0.0 {
                return Err(Error::Domain(format!(
                    "non-integer power of non-positive value {} in `{self}`",
                    base.value()
                )));
            }
            return Ok(base.powf(exponent));
        }
        let a = lhs.eval(bindings)?;
        let b = rhs.eval(bindings)?;
        match op {
            BinOp::Add => Ok(&a + &b),
            BinOp::Sub => Ok(&a - &b),
            BinOp::Mul => Ok(&a * &b),
            BinOp::Div => {
                if b.value() == 0.0 {
                    return Err(Error::Domain(format!("division by zero in `{self}`")));
                }
                Ok(&a / &b)
            }
            BinOp::Pow => unreachable!(),
        }
    }

    /// Plain f64 evaluation. Shares the AST with `eval` but no jet code; this
    /// is the path used by the finite-difference oracle.
    pub fn eval_f64(&self, vars: &[f64]) -> Result<f64> {
        match self {
            Expr::Constant(c) => Ok(*c),
            Expr::Variable { index, name } => vars.get(*index).copied().ok_or_else(|| {
                Error::Scene(format!("variable `{name}` (index {index}) not bound"))
            }),
            Expr::Neg(inner) => Ok(-inner.eval_f64(vars)?),
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval_f64(vars)?;
                let b = rhs.eval_f64(vars)?;
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div => {
                        if b == 0.0 {
                            Err(Error::Domain(format!("division by zero in `{self}`")))
                        } else {
                            Ok(a / b)
                        }
                    }
                    BinOp::Pow => {
                        let p = a.powf(b);
                        if p.is_finite() {
                            Ok(p)
                        } else {
                            Err(Error::Domain(format!("power out of domain in `{self}`")))
                        }
                    }
                }
            }
            Expr::Call(func, arg) => {
                let v = arg.eval_f64(vars)?;
                match func {
                    Func::Sqrt if v <= 0.0 => {
                        Err(Error::Domain(format!("sqrt of {v} in `{self}`")))
                    }
                    Func::Log if v <= 0.0 => Err(Error::Domain(format!("log of {v} in `{self}`"))),
                    Func::Sqrt => Ok(v.sqrt()),
                    Func::Log => Ok(v.ln()),
                    Func::Sin => Ok(v.sin()),
                    Func::Cos => Ok(v.cos()),
                    Func::Exp => Ok(v.exp()),
                }
            }
        }
    }

    /// Value of a constant subtree, if the subtree contains no variables.
    fn const_value(&self) -> Option<f64> {
        match self {
            Expr::Constant(c) => Some(*c),
            Expr::Variable { .. } => None,
            Expr::Neg(e) => e.const_value().map(|v| -v),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.const_value()?, b.const_value()?);
                Some(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                })
            }
            Expr::Call(f, a) => {
                let a = a.const_value()?;
                Some(match f {
                    Func::Sqrt => a.sqrt(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                })
            }
        }
    }
}

/// Fully parenthesized printer; `parse(print(e))` reproduces the AST.
impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Expr::Constant(c) => write!(f, "{c}"),
            Expr::Variable { name, .. } => write!(f, "{name}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {sym} {b})")
            }
            Expr::Call(func, a) => {
                let name = match func {
                    Func::Sqrt => "sqrt",
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                    Func::Exp => "exp",
                    Func::Log => "log",
                };
                write!(f, "{name}({a})")
            }
        }
    }
}
