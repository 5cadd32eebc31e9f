//! Forcing expression AST and its recursive-descent parser.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor (('*' | '/') factor)*
//! factor   := base ('^' integer)?
//! base     := number | variable | '(' expr ')' | '-' base
//! variable := 'S' | 'S_theta' | 'S_thetatheta' | 'kappa' | 'theta'
//!           | 'sin(theta)' | 'cos(theta)'
//! ```

use std::fmt;

use crate::error::{FlowError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variable {
    S,
    STheta,
    SThetaTheta,
    Kappa,
    Theta,
    SinTheta,
    CosTheta,
}

impl Variable {
    pub const ALL: [Variable; 7] = [
        Variable::S,
        Variable::STheta,
        Variable::SThetaTheta,
        Variable::Kappa,
        Variable::Theta,
        Variable::SinTheta,
        Variable::CosTheta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::S => "S",
            Variable::STheta => "S_theta",
            Variable::SThetaTheta => "S_thetatheta",
            Variable::Kappa => "kappa",
            Variable::Theta => "theta",
            Variable::SinTheta => "sin(theta)",
            Variable::CosTheta => "cos(theta)",
        }
    }

    /// Whether the variable is a function of the grid angle alone.
    pub fn is_angular(self) -> bool {
        matches!(
            self,
            Variable::Theta | Variable::SinTheta | Variable::CosTheta
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr<T: Scalar> {
    Num(T),
    Var(Variable),
    Neg(Box<Expr<T>>),
    Add(Box<Expr<T>>, Box<Expr<T>>),
    Sub(Box<Expr<T>>, Box<Expr<T>>),
    Mul(Box<Expr<T>>, Box<Expr<T>>),
    Div(Box<Expr<T>>, Box<Expr<T>>),
    Pow(Box<Expr<T>>, i32),
}

impl<T: Scalar> Expr<T> {
    pub fn uses(&self, var: Variable) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) | Expr::Pow(a, _) => a.uses(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.uses(var) || b.uses(var)
            }
        }
    }

    pub fn eval(&self, lookup: &impl Fn(Variable) -> T) -> T {
        match self {
            Expr::Num(c) => *c,
            Expr::Var(v) => lookup(*v),
            Expr::Neg(a) => -a.eval(lookup),
            Expr::Add(a, b) => a.eval(lookup) + b.eval(lookup),
            Expr::Sub(a, b) => a.eval(lookup) - b.eval(lookup),
            Expr::Mul(a, b) => a.eval(lookup) * b.eval(lookup),
            Expr::Div(a, b) => a.eval(lookup) / b.eval(lookup),
            Expr::Pow(a, p) => a.eval(lookup).powi(*p),
        }
    }

    /// Value and partial derivative with respect to `S`, every other variable
    /// held fixed (forward-mode dual arithmetic).
    pub fn eval_with_s_derivative(&self, lookup: &impl Fn(Variable) -> T) -> (T, T) {
        let zero = T::zero();
        match self {
            Expr::Num(c) => (*c, zero),
            Expr::Var(Variable::S) => (lookup(Variable::S), T::one()),
            Expr::Var(v) => (lookup(*v), zero),
            Expr::Neg(a) => {
                let (v, d) = a.eval_with_s_derivative(lookup);
                (-v, -d)
            }
            Expr::Add(a, b) => {
                let ((u, du), (v, dv)) = (
                    a.eval_with_s_derivative(lookup),
                    b.eval_with_s_derivative(lookup),
                );
                (u + v, du + dv)
            }
            Expr::Sub(a, b) => {
                let ((u, du), (v, dv)) = (
                    a.eval_with_s_derivative(lookup),
                    b.eval_with_s_derivative(lookup),
                );
                (u - v, du - dv)
            }
            Expr::Mul(a, b) => {
                let ((u, du), (v, dv)) = (
                    a.eval_with_s_derivative(lookup),
                    b.eval_with_s_derivative(lookup),
                );
                (u * v, du * v + u * dv)
            }
            Expr::Div(a, b) => {
                let ((u, du), (v, dv)) = (
                    a.eval_with_s_derivative(lookup),
                    b.eval_with_s_derivative(lookup),
                );
                (u / v, (du * v - u * dv) / (v * v))
            }
            Expr::Pow(a, p) => {
                let (u, du) = a.eval_with_s_derivative(lookup);
                if *p == 0 {
                    return (T::one(), zero);
                }
                let pf = T::from_i32(*p).unwrap();
                (u.powi(*p), pf * u.powi(*p - 1) * du)
            }
        }
    }
}

fn precedence<T: Scalar>(e: &Expr<T>) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        Expr::Num(c) if *c < T::zero() => 3,
        Expr::Num(_) | Expr::Var(_) => 5,
    }
}

fn write_operand<T: Scalar>(f: &mut fmt::Formatter<'_>, e: &Expr<T>, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl<T: Scalar> fmt::Display for Expr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => write!(f, "{c:?}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_operand(f, a, 5)
            }
            Expr::Add(a, b) => {
                write_operand(f, a, 1)?;
                f.write_str(" + ")?;
                write_operand(f, b, 2)
            }
            Expr::Sub(a, b) => {
                write_operand(f, a, 1)?;
                f.write_str(" - ")?;
                write_operand(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_operand(f, a, 2)?;
                f.write_str("*")?;
                write_operand(f, b, 3)
            }
            Expr::Div(a, b) => {
                write_operand(f, a, 2)?;
                f.write_str("/")?;
                write_operand(f, b, 3)
            }
            Expr::Pow(a, p) => {
                write_operand(f, a, 5)?;
                write!(f, "^{p}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
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

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

/// Token with its byte offset and source text.
struct Spanned {
    tok: Tok,
    offset: usize,
    text: String,
}

fn syntax(offset: usize, message: impl Into<String>) -> FlowError {
    FlowError::Syntax {
        offset,
        message: message.into(),
    }
}

fn tokenize(src: &str) -> Result<Vec<Spanned>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
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
                let value: f64 = text
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number `{text}`")))?;
                out.push(Spanned {
                    tok: Tok::Num(value),
                    offset: start,
                    text: text.to_string(),
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let text = &src[start..i];
                out.push(Spanned {
                    tok: Tok::Ident(text.to_string()),
                    offset: start,
                    text: text.to_string(),
                });
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap();
                return Err(syntax(start, format!("unexpected character `{ch}`")));
            }
        };
        i += 1;
        out.push(Spanned {
            tok,
            offset: start,
            text: src[start..i].to_string(),
        });
    }
    out.push(Spanned {
        tok: Tok::End,
        offset: src.len(),
        text: String::new(),
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> &Spanned {
        let t = &self.toks[self.pos];
        if t.tok != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        let t = self.peek();
        if t.tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(syntax(
                t.offset,
                format!("expected {what}, found {}", t.tok.describe()),
            ))
        }
    }

    fn expr<T: Scalar>(&mut self) -> Result<Expr<T>> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
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

    fn term<T: Scalar>(&mut self) -> Result<Expr<T>> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor<T: Scalar>(&mut self) -> Result<Expr<T>> {
        let base = self.base()?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = if self.peek().tok == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let t = self.bump();
        let offset = t.offset;
        let exponent = match &t.tok {
            Tok::Num(_) if t.text.bytes().all(|b| b.is_ascii_digit()) => t
                .text
                .parse::<i32>()
                .map_err(|_| syntax(offset, "exponent out of range"))?,
            other => {
                return Err(syntax(
                    offset,
                    format!("expected integer exponent, found {}", other.describe()),
                ))
            }
        };
        Ok(Expr::Pow(
            Box::new(base),
            if negative { -exponent } else { exponent },
        ))
    }

    fn base<T: Scalar>(&mut self) -> Result<Expr<T>> {
        let t = self.bump();
        let offset = t.offset;
        match t.tok.clone() {
            Tok::Num(v) => Ok(Expr::Num(T::lit(v))),
            Tok::Minus => Ok(Expr::Neg(Box::new(self.base()?))),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let var = match name.as_str() {
                    "S" => Variable::S,
                    "S_theta" => Variable::STheta,
                    "S_thetatheta" => Variable::SThetaTheta,
                    "kappa" => Variable::Kappa,
                    "theta" => Variable::Theta,
                    "sin" | "cos" => {
                        self.expect(Tok::LParen, "`(` after trigonometric function")?;
                        let arg = self.bump();
                        if arg.tok != Tok::Ident("theta".into()) {
                            return Err(syntax(
                                arg.offset,
                                format!(
                                    "`{name}` only accepts `theta`, found {}",
                                    arg.tok.describe()
                                ),
                            ));
                        }
                        self.expect(Tok::RParen, "`)`")?;
                        if name == "sin" {
                            Variable::SinTheta
                        } else {
                            Variable::CosTheta
                        }
                    }
                    _ => return Err(FlowError::UnknownIdentifier { offset, name }),
                };
                Ok(Expr::Var(var))
            }
            other => Err(syntax(
                offset,
                format!("expected operand, found {}", other.describe()),
            )),
        }
    }
}

/// Parses `text` into an expression tree.
pub fn parse_expr<T: Scalar>(text: &str) -> Result<Expr<T>> {
    let mut parser = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let expr = parser.expr()?;
    let t = parser.peek();
    if t.tok != Tok::End {
        return Err(syntax(
            t.offset,
            format!("expected operator, found {}", t.tok.describe()),
        ));
    }
    Ok(expr)
}
