//! Infix expression trees used for user-supplied coefficient functions and
//! manufactured fields.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' unary)?          right associative
//! atom  := number | ident | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers: `u`, `v`, `x`, indexed components `u1..u9`, `v1..v9`, and the
//! constants `pi` and `e`. Functions: `exp`, `ln` (alias `log`), `sin`, `cos`,
//! `tanh`, `sqrt`. Evaluation order is fixed by the tree, so results are
//! deterministic.

use std::fmt;

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    U,
    V,
    X,
    /// 1-based component of a vector state in conservative variables.
    Ui(u8),
    /// 1-based component of a vector state in entropy variables.
    Vi(u8),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::U => write!(f, "u"),
            Var::V => write!(f, "v"),
            Var::X => write!(f, "x"),
            Var::Ui(k) => write!(f, "u{k}"),
            Var::Vi(k) => write!(f, "v{k}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Tanh,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply<T: Scalar>(self, a: T) -> T {
        match self {
            Func::Exp => a.exp(),
            Func::Ln => a.ln(),
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Tanh => a.tanh(),
            Func::Sqrt => a.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Func(Func, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("column {column}: {message}")]
pub struct ParseError {
    /// 1-based character column of the offending token.
    pub column: usize,
    pub message: String,
}

/// Variable bindings for evaluation. Unbound components evaluate to zero.
#[derive(Clone, Copy, Debug)]
pub struct Env<'a, T> {
    pub u: T,
    pub v: T,
    pub x: T,
    pub us: &'a [T],
    pub vs: &'a [T],
}

impl<'a, T: Scalar> Env<'a, T> {
    pub fn new() -> Self {
        Self { u: T::zero(), v: T::zero(), x: T::zero(), us: &[], vs: &[] }
    }

    /// Scalar state `u` and rescaled gradient `v` (scalar augmentation terms).
    pub fn uv(u: T, v: T) -> Self {
        Self { u, v, ..Self::new() }
    }

    pub fn x(x: T) -> Self {
        Self { x, ..Self::new() }
    }

    /// Entropy-variable vector; for N = 1 the component is also bound to `v`.
    pub fn entropy_vector(vs: &'a [T]) -> Self {
        let v = if vs.len() == 1 { vs[0] } else { T::zero() };
        Self { v, vs, ..Self::new() }
    }

    fn get(&self, var: Var) -> T {
        match var {
            Var::U => self.u,
            Var::V => self.v,
            Var::X => self.x,
            Var::Ui(k) => self.us.get(k as usize - 1).copied().unwrap_or_else(T::zero),
            Var::Vi(k) => self.vs.get(k as usize - 1).copied().unwrap_or_else(T::zero),
        }
    }
}

impl<T: Scalar> Default for Env<'_, T> {
    fn default() -> Self {
        Self::new()
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, len: src.chars().count() };
        let e = p.expr()?;
        if let Some(tok) = p.peek() {
            return Err(p.error_at(tok.column, format!("unexpected {}", tok.kind)));
        }
        Ok(e)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    /// Value of a variable-free expression.
    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            Expr::Var(_) => None,
            Expr::Neg(a) => a.as_const().map(|x| -x),
            Expr::Add(a, b) => Some(a.as_const()? + b.as_const()?),
            Expr::Sub(a, b) => Some(a.as_const()? - b.as_const()?),
            Expr::Mul(a, b) => Some(a.as_const()? * b.as_const()?),
            Expr::Div(a, b) => Some(a.as_const()? / b.as_const()?),
            Expr::Pow(a, b) => {
                let (x, y) = (a.as_const()?, b.as_const()?);
                Some(if y.fract() == 0.0 && y.abs() <= 64.0 { x.powi(y as i32) } else { x.powf(y) })
            }
            Expr::Func(f, a) => Some(f.apply(a.as_const()?)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn eval<T: Scalar>(&self, env: &Env<'_, T>) -> T {
        match self {
            Expr::Const(c) => T::cst(*c),
            Expr::Var(v) => env.get(*v),
            Expr::Neg(a) => -a.eval(env),
            Expr::Add(a, b) => a.eval(env) + b.eval(env),
            Expr::Sub(a, b) => a.eval(env) - b.eval(env),
            Expr::Mul(a, b) => a.eval(env) * b.eval(env),
            Expr::Div(a, b) => a.eval(env) / b.eval(env),
            Expr::Pow(a, b) => {
                let base = a.eval(env);
                match b.as_const() {
                    Some(c) if c.fract() == 0.0 && c.abs() <= 64.0 => base.powi(c as i32),
                    Some(c) => base.powf(c),
                    None => (b.eval(env) * base.ln()).exp(),
                }
            }
            Expr::Func(f, a) => f.apply(a.eval(env)),
        }
    }

    /// Convenience for `f64` evaluation of a function of `x` only.
    pub fn eval_x(&self, x: f64) -> f64 {
        self.eval(&Env::x(x))
    }

    /// Convenience for `f64` evaluation of a function of `(u, v)`.
    pub fn eval_uv(&self, u: f64, v: f64) -> f64 {
        self.eval(&Env::uv(u, v))
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) | Expr::Func(_, a) => a.depends_on(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
        }
    }

    /// All variables referenced, sorted and deduplicated.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => out.push(*v),
            Expr::Neg(a) | Expr::Func(_, a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Replace every occurrence of `var` by `with`.
    pub fn substitute(&self, var: Var, with: &Expr) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) if *v == var => with.clone(),
            Expr::Var(_) => self.clone(),
            Expr::Neg(a) => neg(a.substitute(var, with)),
            Expr::Add(a, b) => add(a.substitute(var, with), b.substitute(var, with)),
            Expr::Sub(a, b) => sub(a.substitute(var, with), b.substitute(var, with)),
            Expr::Mul(a, b) => mul(a.substitute(var, with), b.substitute(var, with)),
            Expr::Div(a, b) => div(a.substitute(var, with), b.substitute(var, with)),
            Expr::Pow(a, b) => pow(a.substitute(var, with), b.substitute(var, with)),
            Expr::Func(f, a) => func(*f, a.substitute(var, with)),
        }
    }

    /// Symbolic partial derivative with light algebraic simplification.
    pub fn diff(&self, var: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff(var)),
            Expr::Add(a, b) => add(a.diff(var), b.diff(var)),
            Expr::Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Expr::Mul(a, b) => add(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var))),
            Expr::Div(a, b) => {
                let da = a.diff(var);
                let db = b.diff(var);
                let first = div(da, (**b).clone());
                if db.is_zero() {
                    first
                } else {
                    sub(first, div(mul((**a).clone(), db), pow((**b).clone(), Expr::Const(2.0))))
                }
            }
            Expr::Pow(a, b) => {
                if let Some(c) = b.as_const() {
                    let da = a.diff(var);
                    mul(mul(Expr::Const(c), pow((**a).clone(), Expr::Const(c - 1.0))), da)
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    let da = a.diff(var);
                    let db = b.diff(var);
                    let inner = add(
                        mul(db, func(Func::Ln, (**a).clone())),
                        div(mul((**b).clone(), da), (**a).clone()),
                    );
                    mul(self.clone(), inner)
                }
            }
            Expr::Func(f, a) => {
                let da = a.diff(var);
                if da.is_zero() {
                    return Expr::Const(0.0);
                }
                let a = (**a).clone();
                let outer = match f {
                    Func::Exp => func(Func::Exp, a),
                    Func::Ln => div(Expr::Const(1.0), a),
                    Func::Sin => func(Func::Cos, a),
                    Func::Cos => neg(func(Func::Sin, a)),
                    Func::Tanh => sub(Expr::Const(1.0), pow(func(Func::Tanh, a), Expr::Const(2.0))),
                    Func::Sqrt => div(Expr::Const(0.5), func(Func::Sqrt, a)),
                };
                mul(outer, da)
            }
        }
    }

    /// Repeated partial derivative.
    pub fn diff_n(&self, var: Var, order: usize) -> Expr {
        (0..order).fold(self.clone(), |e, _| e.diff(var))
    }
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Const(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
        (Some(x), _) if x == 0.0 => Expr::Const(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub fn pow(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (_, Some(y)) if y == 0.0 => Expr::Const(1.0),
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), Some(y)) if y.fract() == 0.0 && y.abs() <= 64.0 => Expr::Const(x.powi(y as i32)),
        (Some(x), Some(y)) => Expr::Const(x.powf(y)),
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

pub fn func(f: Func, a: Expr) -> Expr {
    match a.as_const() {
        Some(c) => Expr::Const(f.apply(c)),
        None => Expr::Func(f, Box::new(a)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a}^{b})"),
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Num(n) => write!(f, "number {n}"),
            TokenKind::Ident(s) => write!(f, "identifier '{s}'"),
            TokenKind::Op(c) => write!(f, "operator '{c}'"),
            TokenKind::LParen => write!(f, "'('"),
            TokenKind::RParen => write!(f, "')'"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    column: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part: e or E followed by optional sign and digits
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| ParseError {
                column,
                message: format!("invalid number '{text}'"),
            })?;
            out.push(Token { kind: TokenKind::Num(value), column });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { kind: TokenKind::Ident(chars[start..i].iter().collect()), column });
        } else if "+-*/^".contains(c) {
            out.push(Token { kind: TokenKind::Op(c), column });
            i += 1;
        } else if c == '(' {
            out.push(Token { kind: TokenKind::LParen, column });
            i += 1;
        } else if c == ')' {
            out.push(Token { kind: TokenKind::RParen, column });
            i += 1;
        } else {
            return Err(ParseError { column, message: format!("unexpected character '{c}'") });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn error_at(&self, column: usize, message: String) -> ParseError {
        ParseError { column, message }
    }

    fn eof_error(&self) -> ParseError {
        ParseError { column: self.len + 1, message: "unexpected end of expression".into() }
    }

    fn peek_op(&self, ops: &str) -> Option<char> {
        match self.peek() {
            Some(Token { kind: TokenKind::Op(c), .. }) if ops.contains(*c) => Some(*c),
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.peek_op("+-") {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_op("*/") {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek_op("+-") {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(_) => {
                self.pos += 1;
                self.unary()
            }
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek_op("^").is_some() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let tok = self.next().ok_or_else(|| self.eof_error())?;
        match tok.kind {
            TokenKind::Num(n) => Ok(Expr::Const(n)),
            TokenKind::LParen => {
                let e = self.expr()?;
                self.expect_rparen(tok.column)?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                if let Some(f) = Func::lookup(&name) {
                    match self.next() {
                        Some(Token { kind: TokenKind::LParen, column }) => {
                            let arg = self.expr()?;
                            self.expect_rparen(column)?;
                            Ok(Expr::Func(f, Box::new(arg)))
                        }
                        _ => Err(self.error_at(tok.column, format!("function '{name}' requires '(' argument ')'"))),
                    }
                } else {
                    ident(&name).ok_or_else(|| self.error_at(tok.column, format!("unknown identifier '{name}'")))
                }
            }
            other => Err(self.error_at(tok.column, format!("unexpected {other}"))),
        }
    }

    fn expect_rparen(&mut self, open_column: usize) -> Result<(), ParseError> {
        match self.next() {
            Some(Token { kind: TokenKind::RParen, .. }) => Ok(()),
            Some(t) => Err(self.error_at(t.column, format!("expected ')' but found {}", t.kind))),
            None => Err(self.error_at(open_column, "unclosed '('".into())),
        }
    }
}

fn ident(name: &str) -> Option<Expr> {
    match name {
        "u" => Some(Expr::Var(Var::U)),
        "v" => Some(Expr::Var(Var::V)),
        "x" => Some(Expr::Var(Var::X)),
        "pi" => Some(Expr::Const(std::f64::consts::PI)),
        "e" => Some(Expr::Const(std::f64::consts::E)),
        _ => {
            let (head, tail) = name.split_at(1);
            let k: u8 = tail.parse().ok().filter(|k| (1..=9).contains(k))?;
            match head {
                "u" => Some(Expr::Var(Var::Ui(k))),
                "v" => Some(Expr::Var(Var::Vi(k))),
                _ => None,
            }
        }
    }
}
