//! Scalar formulas over chart coordinates.
//!
//! Expressions are immutable trees with shared (`Arc`) children, so a
//! sub-expression that appears in many places (a metric determinant, say) is
//! stored once. Construction goes through folding constructors: anything built
//! only from constants collapses to a constant, and the identities `0 + x`,
//! `1 * x`, `0 * x`, `x ^ 1` are applied on the fly. Nothing beyond that is
//! simplified.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)?
//! exponent:= '-' exponent | power          (must fold to a constant)
//! primary := number | 'pi' | symbol | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! so `-r^2` is `-(r^2)` and `a^b^c` is `a^(b^c)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

/// Built-in single-argument functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> Option<f64> {
        match self {
            Func::Sin => Some(x.sin()),
            Func::Cos => Some(x.cos()),
            Func::Tan => Some(x.tan()),
            Func::Exp => Some(x.exp()),
            Func::Log => (x > 0.0).then(|| x.ln()),
            Func::Sqrt => (x >= 0.0).then(|| x.sqrt()),
            Func::Abs => Some(x.abs()),
        }
    }
}

/// Names that cannot be used as coordinate symbols.
pub fn is_reserved(name: &str) -> bool {
    name == "pi" || Func::from_name(name).is_some()
}

#[derive(Debug)]
pub enum Node {
    Const(f64),
    Var { index: usize, name: Arc<str> },
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, f64),
    Call(Func, Expr),
}

/// A parsed or constructed scalar formula.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("function `{name}` at offset {offset} takes 1 argument, got {found}")]
    Arity {
        offset: usize,
        name: String,
        found: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{what} at point {point:?}")]
pub struct EvalError {
    pub what: String,
    pub point: Vec<f64>,
}

impl Expr {
    fn new(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: f64) -> Expr {
        Expr::new(Node::Const(c))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(index: usize, name: &str) -> Expr {
        Expr::new(Node::Var {
            index,
            name: Arc::from(name),
        })
    }

    pub fn as_constant(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_constant() == Some(1.0)
    }

    /// Parse `src`, resolving identifiers against the coordinate `symbols`.
    pub fn parse<S: AsRef<str>>(src: &str, symbols: &[S]) -> Result<Expr, ParseError> {
        let tokens = lex(src)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            symbols: symbols.iter().map(|s| s.as_ref()).collect(),
            src_len: src.len(),
        };
        let e = parser.expr()?;
        match parser.peek() {
            None => Ok(e),
            Some(tok) => Err(ParseError::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", tok.kind.describe()),
            }),
        }
    }

    /// Evaluate at a coordinate tuple.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let fail = |what: String| EvalError {
            what,
            point: point.to_vec(),
        };
        self.eval_inner(point).map_err(fail)
    }

    fn eval_inner(&self, point: &[f64]) -> Result<f64, String> {
        Ok(match &*self.0 {
            Node::Const(c) => *c,
            Node::Var { index, name } => *point
                .get(*index)
                .ok_or_else(|| format!("coordinate `{name}` (index {index}) missing"))?,
            Node::Neg(a) => -a.eval_inner(point)?,
            Node::Add(a, b) => a.eval_inner(point)? + b.eval_inner(point)?,
            Node::Sub(a, b) => a.eval_inner(point)? - b.eval_inner(point)?,
            Node::Mul(a, b) => a.eval_inner(point)? * b.eval_inner(point)?,
            Node::Div(a, b) => {
                let den = b.eval_inner(point)?;
                if den == 0.0 {
                    return Err(format!("division by zero in `{self}`"));
                }
                a.eval_inner(point)? / den
            }
            Node::Pow(a, p) => {
                let base = a.eval_inner(point)?;
                if base < 0.0 && p.fract() != 0.0 {
                    return Err(format!("negative base {base} to non-integer power {p}"));
                }
                if base == 0.0 && *p < 0.0 {
                    return Err(format!("zero to negative power {p}"));
                }
                powf(base, *p)
            }
            Node::Call(f, a) => {
                let x = a.eval_inner(point)?;
                f.apply(x)
                    .ok_or_else(|| format!("{}({x}) is outside the function domain", f.name()))?
            }
        })
    }

    /// Exact symbolic partial derivative with respect to coordinate `axis`.
    pub fn differentiate(&self, axis: usize) -> Expr {
        let mut memo = HashMap::new();
        self.diff_memo(axis, &mut memo)
    }

    fn diff_memo(&self, axis: usize, memo: &mut HashMap<*const Node, Expr>) -> Expr {
        let key = Arc::as_ptr(&self.0);
        if let Some(d) = memo.get(&key) {
            return d.clone();
        }
        let d = match &*self.0 {
            Node::Const(_) => Expr::zero(),
            Node::Var { index, .. } => {
                if *index == axis {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Neg(a) => -a.diff_memo(axis, memo),
            Node::Add(a, b) => a.diff_memo(axis, memo) + b.diff_memo(axis, memo),
            Node::Sub(a, b) => a.diff_memo(axis, memo) - b.diff_memo(axis, memo),
            Node::Mul(a, b) => {
                let da = a.diff_memo(axis, memo);
                let db = b.diff_memo(axis, memo);
                &da * b + a * &db
            }
            Node::Div(a, b) => {
                let da = a.diff_memo(axis, memo);
                let db = b.diff_memo(axis, memo);
                if db.is_zero() {
                    &da / b
                } else {
                    (&da * b - a * &db) / b.powf(2.0)
                }
            }
            Node::Pow(a, p) => {
                let da = a.diff_memo(axis, memo);
                Expr::constant(*p) * a.powf(p - 1.0) * da
            }
            Node::Call(f, a) => {
                let da = a.diff_memo(axis, memo);
                if da.is_zero() {
                    Expr::zero()
                } else {
                    let outer = match f {
                        Func::Sin => a.cos(),
                        Func::Cos => -a.sin(),
                        Func::Tan => Expr::one() / a.cos().powf(2.0),
                        Func::Exp => self.clone(),
                        Func::Log => Expr::one() / a,
                        Func::Sqrt => Expr::one() / (Expr::constant(2.0) * self),
                        Func::Abs => a / self,
                    };
                    outer * da
                }
            }
        };
        memo.insert(key, d.clone());
        d
    }

    /// Replace every coordinate `i` by `replacements[i]`.
    pub fn substitute(&self, replacements: &[Expr]) -> Expr {
        let mut memo = HashMap::new();
        self.subst_memo(replacements, &mut memo)
    }

    fn subst_memo(&self, reps: &[Expr], memo: &mut HashMap<*const Node, Expr>) -> Expr {
        let key = Arc::as_ptr(&self.0);
        if let Some(e) = memo.get(&key) {
            return e.clone();
        }
        let e = match &*self.0 {
            Node::Const(_) => self.clone(),
            Node::Var { index, .. } => reps
                .get(*index)
                .cloned()
                .unwrap_or_else(|| self.clone()),
            Node::Neg(a) => -a.subst_memo(reps, memo),
            Node::Add(a, b) => a.subst_memo(reps, memo) + b.subst_memo(reps, memo),
            Node::Sub(a, b) => a.subst_memo(reps, memo) - b.subst_memo(reps, memo),
            Node::Mul(a, b) => a.subst_memo(reps, memo) * b.subst_memo(reps, memo),
            Node::Div(a, b) => a.subst_memo(reps, memo) / b.subst_memo(reps, memo),
            Node::Pow(a, p) => a.subst_memo(reps, memo).powf(*p),
            Node::Call(f, a) => a.subst_memo(reps, memo).call(*f),
        };
        memo.insert(key, e.clone());
        e
    }

    /// Indices of the coordinates this expression depends on, sorted.
    pub fn symbols(&self) -> Vec<usize> {
        fn walk(e: &Expr, out: &mut Vec<usize>) {
            match &*e.0 {
                Node::Const(_) => {}
                Node::Var { index, .. } => out.push(*index),
                Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => walk(a, out),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn powf(&self, p: f64) -> Expr {
        if p == 0.0 {
            return Expr::one();
        }
        if p == 1.0 {
            return self.clone();
        }
        if let Some(c) = self.as_constant() {
            let v = powf(c, p);
            if v.is_finite() && !(c < 0.0 && p.fract() != 0.0) && !(c == 0.0 && p < 0.0) {
                return Expr::constant(v);
            }
        }
        Expr::new(Node::Pow(self.clone(), p))
    }

    pub fn call(&self, f: Func) -> Expr {
        if let Some(c) = self.as_constant() {
            if let Some(v) = f.apply(c) {
                if v.is_finite() {
                    return Expr::constant(v);
                }
            }
        }
        Expr::new(Node::Call(f, self.clone()))
    }

    pub fn sin(&self) -> Expr {
        self.call(Func::Sin)
    }
    pub fn cos(&self) -> Expr {
        self.call(Func::Cos)
    }
    pub fn exp(&self) -> Expr {
        self.call(Func::Exp)
    }
    pub fn ln(&self) -> Expr {
        self.call(Func::Log)
    }
    pub fn sqrt(&self) -> Expr {
        self.call(Func::Sqrt)
    }
    pub fn abs(&self) -> Expr {
        self.call(Func::Abs)
    }

    fn precedence(&self) -> u8 {
        match &*self.0 {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Neg(_) => 3,
            Node::Const(c) if c.is_sign_negative() => 3,
            Node::Pow(..) => 4,
            _ => 5,
        }
    }
}

fn powf(base: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
        base.powi(p as i32)
    } else {
        base.powf(p)
    }
}

fn binary(
    a: &Expr,
    b: &Expr,
    fold: impl Fn(f64, f64) -> f64,
    node: impl Fn(Expr, Expr) -> Node,
) -> Expr {
    if let (Some(x), Some(y)) = (a.as_constant(), b.as_constant()) {
        let v = fold(x, y);
        if v.is_finite() {
            return Expr::constant(v);
        }
    }
    Expr::new(node(a.clone(), b.clone()))
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        binary(self, rhs, |x, y| x + y, Node::Add)
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return -rhs;
        }
        binary(self, rhs, |x, y| x - y, Node::Sub)
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        if self.is_one() {
            return rhs.clone();
        }
        if rhs.is_one() {
            return self.clone();
        }
        if self.as_constant() == Some(-1.0) {
            return -rhs;
        }
        if rhs.as_constant() == Some(-1.0) {
            return -self;
        }
        binary(self, rhs, |x, y| x * y, Node::Mul)
    }
}

impl Div for &Expr {
    type Output = Expr;
    fn div(self, rhs: &Expr) -> Expr {
        if rhs.is_one() {
            return self.clone();
        }
        if self.is_zero() && !rhs.is_zero() {
            return Expr::zero();
        }
        binary(self, rhs, |x, y| x / y, Node::Div)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match &*self.0 {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(a) => a.clone(),
            _ => Expr::new(Node::Neg(self.clone())),
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                (&self).$m(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                self.$m(&rhs)
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match &*self.0 {
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Var { name, .. } => write!(f, "{name}"),
            Node::Neg(a) => {
                write!(f, "-")?;
                child(f, a, 4)
            }
            Node::Add(a, b) => {
                child(f, a, 1)?;
                write!(f, " + ")?;
                child(f, b, 2)
            }
            Node::Sub(a, b) => {
                child(f, a, 1)?;
                write!(f, " - ")?;
                child(f, b, 2)
            }
            Node::Mul(a, b) => {
                child(f, a, 2)?;
                write!(f, "*")?;
                child(f, b, 3)
            }
            Node::Div(a, b) => {
                child(f, a, 2)?;
                write!(f, "/")?;
                child(f, b, 4)
            }
            Node::Pow(a, p) => {
                child(f, a, 5)?;
                write!(f, "^({p:?})")
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
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
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(x) => format!("number {x}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(TokenKind::Plus),
            b'-' => Some(TokenKind::Minus),
            b'*' => Some(TokenKind::Star),
            b'/' => Some(TokenKind::Slash),
            b'^' => Some(TokenKind::Caret),
            b'(' => Some(TokenKind::LParen),
            b')' => Some(TokenKind::RParen),
            b',' => Some(TokenKind::Comma),
            _ => None,
        };
        if let Some(kind) = single {
            tokens.push(Token {
                kind,
                offset: start,
            });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            tokens.push(Token {
                kind: TokenKind::Number(value),
                offset: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Ident(src[start..i].to_string()),
                offset: start,
            });
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(ParseError::Syntax {
            offset: start,
            message: format!("unexpected character `{ch}`"),
        });
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    symbols: Vec<&'a str>,
    src_len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            Some(tok) => ParseError::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", tok.kind.describe()),
            },
            None => ParseError::Syntax {
                offset: self.src_len,
                message: "unexpected end of input".into(),
            },
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek_kind() {
                Some(TokenKind::Plus) => {
                    self.pos += 1;
                    lhs = lhs + self.term()?;
                }
                Some(TokenKind::Minus) => {
                    self.pos += 1;
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek_kind() {
                Some(TokenKind::Star) => {
                    self.pos += 1;
                    lhs = lhs * self.unary()?;
                }
                Some(TokenKind::Slash) => {
                    self.pos += 1;
                    lhs = lhs / self.unary()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(TokenKind::Minus) = self.peek_kind() {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Some(TokenKind::Caret) = self.peek_kind() {
            self.pos += 1;
            let offset = self.peek().map_or(self.src_len, |t| t.offset);
            let exponent = self.exponent()?;
            let p = exponent.as_constant().ok_or_else(|| ParseError::Syntax {
                offset,
                message: "exponent must be a constant".into(),
            })?;
            return Ok(base.powf(p));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        if let Some(TokenKind::Minus) = self.peek_kind() {
            self.pos += 1;
            return Ok(-self.exponent()?);
        }
        self.power()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.unexpected());
        };
        match tok.kind {
            TokenKind::Number(x) => {
                self.pos += 1;
                Ok(Expr::constant(x))
            }
            TokenKind::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                self.pos += 1;
                if let Some(func) = Func::from_name(&name) {
                    if self.peek_kind() != Some(&TokenKind::LParen) {
                        return Err(ParseError::Syntax {
                            offset: tok.offset,
                            message: format!("function `{name}` must be followed by `(`"),
                        });
                    }
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek_kind() == Some(&TokenKind::Comma) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect_rparen()?;
                    if args.len() != 1 {
                        return Err(ParseError::Arity {
                            offset: tok.offset,
                            name,
                            found: args.len(),
                        });
                    }
                    return Ok(args[0].call(func));
                }
                if name == "pi" {
                    return Ok(Expr::constant(PI));
                }
                match self.symbols.iter().position(|s| *s == name) {
                    Some(index) => Ok(Expr::var(index, &name)),
                    None => Err(ParseError::UnknownIdentifier {
                        offset: tok.offset,
                        name,
                    }),
                }
            }
            _ => Err(self.unexpected()),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek_kind() {
            Some(TokenKind::RParen) => {
                self.next();
                Ok(())
            }
            _ => Err(self.unexpected()),
        }
    }
}
