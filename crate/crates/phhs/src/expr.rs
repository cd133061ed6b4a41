//! Field-expression DSL.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right associative
//! primary := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Values are complex. Identifiers `x<k>`, `y<k>`, `z<k>` (1-based) address the
//! real, imaginary and complex coordinates; models may add aliases such as
//! `Q1`/`P1`. Constants: `i`, `pi`. Functions: `exp`, `sin`, `cos`, `sqrt`,
//! `ln`, `conj`, `re`, `im`, and `bump(s) = exp(1 - 1/(1 - s))` for `s < 1`,
//! `0` otherwise.

use std::fmt;

use num_complex::Complex64;

use crate::error::{PhhsError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: expected one of {}", self.offset, self.expected.join(", "))
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Ident(usize, usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Ln,
    Conj,
    Re,
    Im,
    Bump,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "ln" => Func::Ln,
            "conj" => Func::Conj,
            "re" => Func::Re,
            "im" => Func::Im,
            "bump" => Func::Bump,
            _ => return None,
        })
    }

    fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Func::Exp => z.exp(),
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Sqrt => z.sqrt(),
            Func::Ln => z.ln(),
            Func::Conj => z.conj(),
            Func::Re => Complex64::new(z.re, 0.0),
            Func::Im => Complex64::new(z.im, 0.0),
            Func::Bump => {
                let s = z.re;
                if s < 1.0 {
                    Complex64::new((1.0 - 1.0 / (1.0 - s)).exp(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Num(f64),
    Ident { name: String, offset: usize },
    Neg(Box<Ast>),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    Call(Func, Box<Ast>),
}

/// A parsed, unbound expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    pub source: String,
    pub ast: Ast,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let b = self.src.as_bytes();
        while self.pos < b.len() && b[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Returns the token and its starting offset.
    fn next(&mut self) -> std::result::Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let b = self.src.as_bytes();
        let start = self.pos;
        if start >= b.len() {
            return Ok((Tok::End, start));
        }
        let c = b[start];
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut p = start;
            while p < b.len() && b[p].is_ascii_digit() {
                p += 1;
            }
            if p < b.len() && b[p] == b'.' {
                p += 1;
                while p < b.len() && b[p].is_ascii_digit() {
                    p += 1;
                }
            }
            if p == start + 1 && c == b'.' {
                return Err(ParseError { offset: start + 1, expected: vec!["digit".into()] });
            }
            if p < b.len() && (b[p] == b'e' || b[p] == b'E') {
                let mut q = p + 1;
                if q < b.len() && (b[q] == b'+' || b[q] == b'-') {
                    q += 1;
                }
                let digits = q;
                while q < b.len() && b[q].is_ascii_digit() {
                    q += 1;
                }
                if q == digits {
                    return Err(ParseError { offset: q, expected: vec!["digit".into()] });
                }
                p = q;
            }
            self.pos = p;
            let v: f64 = self.src[start..p].parse().map_err(|_| ParseError {
                offset: start,
                expected: vec!["number".into()],
            })?;
            return Ok((Tok::Num(v), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut p = start;
            while p < b.len() && (b[p].is_ascii_alphanumeric() || b[p] == b'_') {
                p += 1;
            }
            self.pos = p;
            return Ok((Tok::Ident(start, p), start));
        }
        Err(ParseError { offset: start, expected: expected_operand() })
    }
}

fn expected_operand() -> Vec<String> {
    vec!["number".into(), "identifier".into(), "'('".into(), "'-'".into()]
}

fn expected_operator(closing: bool) -> Vec<String> {
    let mut v: Vec<String> = ["'+'", "'-'", "'*'", "'/'", "'^'"].iter().map(|s| s.to_string()).collect();
    if closing {
        v.push("')'".into());
    } else {
        v.push("end of input".into());
    }
    v
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> std::result::Result<(), ParseError> {
        let (t, at) = self.lex.next()?;
        self.tok = t;
        self.at = at;
        Ok(())
    }

    fn expr(&mut self) -> std::result::Result<Ast, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> std::result::Result<Ast, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> std::result::Result<Ast, ParseError> {
        if self.tok == Tok::Minus {
            self.bump()?;
            let inner = self.unary()?;
            return Ok(Ast::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Ast, ParseError> {
        let base = self.primary()?;
        if self.tok == Tok::Caret {
            self.bump()?;
            let exp = self.unary()?;
            return Ok(Ast::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self) -> std::result::Result<(), ParseError> {
        if self.tok != Tok::RParen {
            return Err(ParseError { offset: self.at, expected: expected_operator(true) });
        }
        self.bump()
    }

    fn primary(&mut self) -> std::result::Result<Ast, ParseError> {
        match self.tok {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Ast::Num(v))
            }
            Tok::Ident(a, b) => {
                let name = self.lex.src[a..b].to_string();
                self.bump()?;
                if self.tok == Tok::LParen {
                    let func = Func::from_name(&name).ok_or_else(|| ParseError {
                        offset: a,
                        expected: vec!["function name".into()],
                    })?;
                    self.bump()?;
                    self.depth += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    self.depth -= 1;
                    Ok(Ast::Call(func, Box::new(arg)))
                } else {
                    Ok(Ast::Ident { name, offset: a })
                }
            }
            Tok::LParen => {
                self.bump()?;
                self.depth += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                self.depth -= 1;
                Ok(inner)
            }
            _ => Err(ParseError { offset: self.at, expected: expected_operand() }),
        }
    }
}

/// Parse `src` into an unbound expression.
pub fn parse_expression(src: &str) -> std::result::Result<Expression, ParseError> {
    let mut p = Parser { lex: Lexer { src, pos: 0 }, tok: Tok::End, at: 0, depth: 0 };
    p.bump()?;
    let ast = p.expr()?;
    if p.tok != Tok::End {
        return Err(ParseError { offset: p.at, expected: expected_operator(p.depth > 0) });
    }
    Ok(Expression { source: src.to_string(), ast })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Var {
    X(usize),
    Y(usize),
    Z(usize),
    Const(f64, f64),
}

/// Name resolution for `m` complex coordinates plus model aliases.
#[derive(Debug, Clone)]
pub struct Scope {
    pub m: usize,
    aliases: Vec<(String, usize)>,
}

impl Scope {
    pub fn new(m: usize) -> Self {
        Scope { m, aliases: Vec::new() }
    }

    /// Standard Darboux aliases on C^{2n}: `Q_j = z_j`, `P_j = z_{n+j}`.
    pub fn canonical(n: usize) -> Self {
        let mut s = Scope::new(2 * n);
        for j in 0..n {
            s.aliases.push((format!("Q{}", j + 1), j));
            s.aliases.push((format!("P{}", j + 1), n + j));
        }
        if n == 1 {
            s.aliases.push(("Q".into(), 0));
            s.aliases.push(("P".into(), 1));
        }
        s
    }

    /// Alias `name` to the complex coordinate with 0-based index `idx`.
    pub fn alias(mut self, name: &str, idx: usize) -> Self {
        self.aliases.push((name.to_string(), idx));
        self
    }

    fn resolve(&self, name: &str) -> Option<Var> {
        match name {
            "i" => return Some(Var::Const(0.0, 1.0)),
            "pi" => return Some(Var::Const(std::f64::consts::PI, 0.0)),
            _ => {}
        }
        if let Some((_, k)) = self.aliases.iter().find(|(n, _)| n == name) {
            return Some(Var::Z(*k));
        }
        let (head, tail) = name.split_at(1);
        let k: usize = tail.parse().ok()?;
        if k == 0 || k > self.m {
            return None;
        }
        match head {
            "x" => Some(Var::X(k - 1)),
            "y" => Some(Var::Y(k - 1)),
            "z" => Some(Var::Z(k - 1)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Const(Complex64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// An expression with identifiers resolved against a [`Scope`].
#[derive(Debug, Clone)]
pub struct BoundExpr {
    m: usize,
    root: Node,
}

impl Expression {
    pub fn bind(&self, scope: &Scope) -> Result<BoundExpr> {
        fn go(a: &Ast, s: &Scope) -> Result<Node> {
            Ok(match a {
                Ast::Num(v) => Node::Const(Complex64::new(*v, 0.0)),
                Ast::Ident { name, offset } => Node::Var(s.resolve(name).ok_or_else(|| {
                    PhhsError::UnknownIdentifier { name: name.clone(), offset: *offset }
                })?),
                Ast::Neg(x) => Node::Neg(Box::new(go(x, s)?)),
                Ast::Bin(op, l, r) => Node::Bin(*op, Box::new(go(l, s)?), Box::new(go(r, s)?)),
                Ast::Call(f, x) => Node::Call(*f, Box::new(go(x, s)?)),
            })
        }
        Ok(BoundExpr { m: scope.m, root: go(&self.ast, scope)? })
    }
}

/// Parse and bind in one step.
pub fn compile(src: &str, scope: &Scope) -> Result<BoundExpr> {
    parse_expression(src)?.bind(scope)
}

fn cpow(b: Complex64, e: Complex64) -> Complex64 {
    if e.im == 0.0 && e.re.fract() == 0.0 && e.re.abs() <= 64.0 {
        let n = e.re as i32;
        if b.im == 0.0 {
            return Complex64::new(b.re.powi(n), 0.0);
        }
        return b.powi(n);
    }
    if b.im == 0.0 && e.im == 0.0 && b.re >= 0.0 {
        return Complex64::new(b.re.powf(e.re), 0.0);
    }
    if b == Complex64::new(0.0, 0.0) {
        return b;
    }
    (e * b.ln()).exp()
}

impl BoundExpr {
    pub fn dim(&self) -> usize {
        self.m
    }

    /// Evaluate at a real point with coordinates `(x_1..x_m, y_1..y_m)`.
    pub fn eval(&self, p: &[f64]) -> Complex64 {
        let m = self.m;
        fn go(n: &Node, p: &[f64], m: usize) -> Complex64 {
            match n {
                Node::Const(c) => *c,
                Node::Var(Var::X(k)) => Complex64::new(p[*k], 0.0),
                Node::Var(Var::Y(k)) => Complex64::new(p[m + *k], 0.0),
                Node::Var(Var::Z(k)) => Complex64::new(p[*k], p[m + *k]),
                Node::Var(Var::Const(a, b)) => Complex64::new(*a, *b),
                Node::Neg(x) => -go(x, p, m),
                Node::Bin(op, l, r) => {
                    let a = go(l, p, m);
                    let b = go(r, p, m);
                    match op {
                        BinOp::Add => a + b,
                        BinOp::Sub => a - b,
                        BinOp::Mul => a * b,
                        BinOp::Div => a / b,
                        BinOp::Pow => cpow(a, b),
                    }
                }
                Node::Call(f, x) => f.apply(go(x, p, m)),
            }
        }
        go(&self.root, p, m)
    }

    pub fn eval_re(&self, p: &[f64]) -> f64 {
        self.eval(p).re
    }
}
