//! Small scalar expression language for radius and curvature profiles.
//!
//! Expressions use the variables `theta` and `s`, the constants `pi` and `e`,
//! the operators `+ - * / ^` and the functions `sin cos tan sqrt exp ln abs`.
//! Derivatives are taken symbolically.

use crate::error::{Result, ShellError};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Theta,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sqrt,
    Exp,
    Ln,
    Abs,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(ShellError::ExpressionParseError(format!(
                "unexpected trailing input in '{src}'"
            )));
        }
        Ok(e.simplify())
    }

    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn eval(&self, theta: f64, s: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::Theta) => theta,
            Expr::Var(Var::S) => s,
            Expr::Neg(a) => -a.eval(theta, s),
            Expr::Add(a, b) => a.eval(theta, s) + b.eval(theta, s),
            Expr::Sub(a, b) => a.eval(theta, s) - b.eval(theta, s),
            Expr::Mul(a, b) => a.eval(theta, s) * b.eval(theta, s),
            Expr::Div(a, b) => a.eval(theta, s) / b.eval(theta, s),
            Expr::Pow(a, b) => {
                let base = a.eval(theta, s);
                match **b {
                    Expr::Const(c) if c.fract() == 0.0 && c.abs() < 64.0 => base.powi(c as i32),
                    _ => base.powf(b.eval(theta, s)),
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval(theta, s);
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Sqrt => x.sqrt(),
                    Func::Exp => x.exp(),
                    Func::Ln => x.ln(),
                    Func::Abs => x.abs(),
                }
            }
        }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(v),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on(v) || b.depends_on(v)
            }
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn diff(&self, v: Var) -> Expr {
        use Expr::*;
        let d = match self {
            Const(_) => Const(0.0),
            Var(w) => Const(if *w == v { 1.0 } else { 0.0 }),
            Neg(a) => Neg(Box::new(a.diff(v))),
            Add(a, b) => Add(Box::new(a.diff(v)), Box::new(b.diff(v))),
            Sub(a, b) => Sub(Box::new(a.diff(v)), Box::new(b.diff(v))),
            Mul(a, b) => Add(
                Box::new(Mul(Box::new(a.diff(v)), b.clone())),
                Box::new(Mul(a.clone(), Box::new(b.diff(v)))),
            ),
            Div(a, b) => Div(
                Box::new(Sub(
                    Box::new(Mul(Box::new(a.diff(v)), b.clone())),
                    Box::new(Mul(a.clone(), Box::new(b.diff(v)))),
                )),
                Box::new(Pow(b.clone(), Box::new(Const(2.0)))),
            ),
            Pow(a, b) => {
                if !b.depends_on(v) {
                    // a^b with constant exponent
                    Mul(
                        Box::new(Mul(
                            b.clone(),
                            Box::new(Pow(a.clone(), Box::new(Sub(b.clone(), Box::new(Const(1.0)))))),
                        )),
                        Box::new(a.diff(v)),
                    )
                } else {
                    // a^b = exp(b ln a)
                    Mul(
                        Box::new(self.clone()),
                        Box::new(Add(
                            Box::new(Mul(Box::new(b.diff(v)), Box::new(Call(Func::Ln, a.clone())))),
                            Box::new(Div(Box::new(Mul(b.clone(), Box::new(a.diff(v)))), a.clone())),
                        )),
                    )
                }
            }
            Call(f, a) => {
                let inner = match f {
                    Func::Sin => Call(Func::Cos, a.clone()),
                    Func::Cos => Neg(Box::new(Call(Func::Sin, a.clone()))),
                    Func::Tan => Div(
                        Box::new(Const(1.0)),
                        Box::new(Pow(Box::new(Call(Func::Cos, a.clone())), Box::new(Const(2.0)))),
                    ),
                    Func::Sqrt => Div(
                        Box::new(Const(0.5)),
                        Box::new(Call(Func::Sqrt, a.clone())),
                    ),
                    Func::Exp => Call(Func::Exp, a.clone()),
                    Func::Ln => Div(Box::new(Const(1.0)), a.clone()),
                    Func::Abs => Div(Box::new(*a.clone()), Box::new(Call(Func::Abs, a.clone()))),
                };
                Mul(Box::new(inner), Box::new(a.diff(v)))
            }
        };
        d.simplify()
    }

    /// Constant folding and removal of trivial identities.
    pub fn simplify(&self) -> Expr {
        use Expr::*;
        match self {
            Const(_) | Var(_) => self.clone(),
            Neg(a) => match a.simplify() {
                Const(c) => Const(-c),
                Neg(b) => *b,
                x => Neg(Box::new(x)),
            },
            Add(a, b) => match (a.simplify(), b.simplify()) {
                (Const(x), Const(y)) => Const(x + y),
                (Const(z), e) | (e, Const(z)) if z == 0.0 => e,
                (x, y) => Add(Box::new(x), Box::new(y)),
            },
            Sub(a, b) => match (a.simplify(), b.simplify()) {
                (Const(x), Const(y)) => Const(x - y),
                (e, Const(z)) if z == 0.0 => e,
                (Const(z), e) if z == 0.0 => Neg(Box::new(e)).simplify(),
                (x, y) => Sub(Box::new(x), Box::new(y)),
            },
            Mul(a, b) => match (a.simplify(), b.simplify()) {
                (Const(x), Const(y)) => Const(x * y),
                (Const(z), _) | (_, Const(z)) if z == 0.0 => Const(0.0),
                (Const(o), e) | (e, Const(o)) if o == 1.0 => e,
                (x, y) => Mul(Box::new(x), Box::new(y)),
            },
            Div(a, b) => match (a.simplify(), b.simplify()) {
                (Const(x), Const(y)) if y != 0.0 => Const(x / y),
                (Const(z), _) if z == 0.0 => Const(0.0),
                (e, Const(o)) if o == 1.0 => e,
                (x, y) => Div(Box::new(x), Box::new(y)),
            },
            Pow(a, b) => match (a.simplify(), b.simplify()) {
                (Const(x), Const(y)) => Const(x.powf(y)),
                (_, Const(z)) if z == 0.0 => Const(1.0),
                (e, Const(o)) if o == 1.0 => e,
                (x, y) => Pow(Box::new(x), Box::new(y)),
            },
            Call(f, a) => match a.simplify() {
                Const(c) => Const(Call(*f, Box::new(Const(c))).eval(0.0, 0.0)),
                x => Call(*f, Box::new(x)),
            },
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(Var::Theta) => write!(f, "theta"),
            Expr::Var(Var::S) => write!(f, "s"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => {
                let name = match func {
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                    Func::Tan => "tan",
                    Func::Sqrt => "sqrt",
                    Func::Exp => "exp",
                    Func::Ln => "ln",
                    Func::Abs => "abs",
                };
                write!(f, "{name}({a})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| ShellError::ExpressionParseError(format!("bad number '{text}'")))?;
            out.push(Tok::Num(v));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else if c == '(' {
            out.push(Tok::LParen);
            i += 1;
        } else if c == ')' {
            out.push(Tok::RParen);
            i += 1;
        } else {
            return Err(ShellError::ExpressionParseError(format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    // right associative, binds tighter than unary minus on its left operand
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Expr::Const(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(ShellError::ExpressionParseError("missing ')'".into())),
                }
            }
            Some(Tok::Ident(name)) => {
                let func = match name.as_str() {
                    "theta" => return Ok(Expr::Var(Var::Theta)),
                    "s" => return Ok(Expr::Var(Var::S)),
                    "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
                    "e" => return Ok(Expr::Const(std::f64::consts::E)),
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "tan" => Func::Tan,
                    "sqrt" => Func::Sqrt,
                    "exp" => Func::Exp,
                    "ln" | "log" => Func::Ln,
                    "abs" => Func::Abs,
                    other => {
                        return Err(ShellError::ExpressionParseError(format!("unknown identifier '{other}'")))
                    }
                };
                match self.next() {
                    Some(Tok::LParen) => {}
                    _ => return Err(ShellError::ExpressionParseError(format!("expected '(' after {name}"))),
                }
                let arg = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(Expr::Call(func, Box::new(arg))),
                    _ => Err(ShellError::ExpressionParseError("missing ')'".into())),
                }
            }
            other => Err(ShellError::ExpressionParseError(format!("unexpected token {other:?}"))),
        }
    }
}

/// A scalar field of (theta, s) with the derivatives used by the frame.
#[derive(Debug, Clone)]
pub struct Field {
    source: String,
    f: Expr,
    d_theta: Expr,
    d_s: Expr,
    d_tt: Expr,
    d_ss: Expr,
    d_ts: Expr,
}

/// Value and derivatives of a [`Field`] at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldValue {
    pub v: f64,
    pub t: f64,
    pub s: f64,
    pub tt: f64,
    pub ss: f64,
    pub ts: f64,
}

impl Field {
    pub fn parse(src: &str) -> Result<Field> {
        Ok(Field::from_expr(src.to_string(), Expr::parse(src)?))
    }

    pub fn constant(v: f64) -> Field {
        Field::from_expr(format!("{v}"), Expr::Const(v))
    }

    fn from_expr(source: String, f: Expr) -> Field {
        let d_theta = f.diff(Var::Theta);
        let d_s = f.diff(Var::S);
        let d_tt = d_theta.diff(Var::Theta);
        let d_ss = d_s.diff(Var::S);
        let d_ts = d_theta.diff(Var::S);
        Field { source, f, d_theta, d_s, d_tt, d_ss, d_ts }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.f
    }

    pub fn is_constant(&self) -> bool {
        self.f.as_const().is_some()
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.f.depends_on(v)
    }

    pub fn value(&self, theta: f64, s: f64) -> f64 {
        self.f.eval(theta, s)
    }

    pub fn eval(&self, theta: f64, s: f64) -> FieldValue {
        FieldValue {
            v: self.f.eval(theta, s),
            t: self.d_theta.eval(theta, s),
            s: self.d_s.eval(theta, s),
            tt: self.d_tt.eval(theta, s),
            ss: self.d_ss.eval(theta, s),
            ts: self.d_ts.eval(theta, s),
        }
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.f == other.f
    }
}
