//! Single-variable arithmetic expressions.
//!
//! Weights `a(x)` and nonlinearities `g(s)` are written in a small
//! expression language: real literals, one free variable, the constant
//! `pi`, the operators `+ - * / ^` and a fixed function table
//! (`sin cos exp log atan abs sqrt` unary, `max min` binary).
//!
//! Precedence, from loosest to tightest: `+ -`, then `* /`, then unary
//! minus, then `^` (right associative). So `-2^2 == -4` and
//! `2^3^2 == 512`.
//!
//! ```
//! use indefinite_bvp::expr::Expr;
//!
//! let g = Expr::parse("max(0, 100*s*atan(abs(s)))", "s").unwrap();
//! let v = g.eval(1.0).unwrap();
//! assert!((v - 25.0 * std::f64::consts::PI).abs() < 1e-12);
//! ```

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Unary functions of the fixed table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func1 {
    Sin,
    Cos,
    Exp,
    Log,
    Atan,
    Abs,
    Sqrt,
}

/// Binary functions of the fixed table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func2 {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression tree. Arity is carried by the variant, so a tree that
/// exists is well formed.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var,
    Pi,
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call1(Func1, Box<Node>),
    Call2(Func2, Box<Node>, Box<Node>),
}

impl Func1 {
    fn name(self) -> &'static str {
        match self {
            Func1::Sin => "sin",
            Func1::Cos => "cos",
            Func1::Exp => "exp",
            Func1::Log => "log",
            Func1::Atan => "atan",
            Func1::Abs => "abs",
            Func1::Sqrt => "sqrt",
        }
    }
}

impl Func2 {
    fn name(self) -> &'static str {
        match self {
            Func2::Max => "max",
            Func2::Min => "min",
        }
    }
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

enum Callable {
    Unary(Func1),
    Binary(Func2),
}

fn lookup_function(name: &str) -> Option<Callable> {
    Some(match name {
        "sin" => Callable::Unary(Func1::Sin),
        "cos" => Callable::Unary(Func1::Cos),
        "exp" => Callable::Unary(Func1::Exp),
        "log" => Callable::Unary(Func1::Log),
        "atan" => Callable::Unary(Func1::Atan),
        "abs" => Callable::Unary(Func1::Abs),
        "sqrt" => Callable::Unary(Func1::Sqrt),
        "max" => Callable::Binary(Func2::Max),
        "min" => Callable::Binary(Func2::Min),
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("malformed number {0:?}")]
    BadNumber(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown variable `{found}` (expected `{expected}`)")]
    UnknownVariable { found: String, expected: String },
    #[error("unexpected {0}")]
    UnexpectedToken(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unbalanced parenthesis")]
    Unbalanced,
    #[error("`{name}` takes {expected} argument(s), found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
}

impl ParseErrorKind {
    /// Lexical errors come from the tokenizer or the function table;
    /// everything else is a syntax error.
    pub fn is_lexical(&self) -> bool {
        matches!(
            self,
            ParseErrorKind::UnexpectedChar(_)
                | ParseErrorKind::BadNumber(_)
                | ParseErrorKind::UnknownFunction(_)
        )
    }
}

/// Parse failure with the byte offset into the source text.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{} at byte {offset}: {kind}", if kind.is_lexical() { "lexical error" } else if matches!(kind, ParseErrorKind::UnknownVariable { .. }) { "unknown variable" } else { "syntax error" })]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in {op} at argument {arg}")]
    Domain { op: &'static str, arg: f64 },
    #[error("overflow: evaluation produced {value}")]
    Overflow { value: f64 },
    #[error("non-finite input {0}")]
    NonFiniteInput(f64),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("operator `{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
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
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push((Tok::Num(v), start)),
                _ => {
                    return Err(ParseError {
                        kind: ParseErrorKind::BadNumber(text.to_string()),
                        offset: start,
                    })
                }
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        let tok = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    kind: ParseErrorKind::UnexpectedChar(ch),
                    offset: start,
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

// Binding powers for the Pratt loop.
const BP_ADD: u8 = 10;
const BP_MUL: u8 = 20;
const BP_NEG: u8 = 30;
const BP_POW: u8 = 40;

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    var: &'a str,
    depth: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError {
            kind,
            offset: self.offset(),
        })
    }

    fn unexpected<T>(&self) -> Result<T, ParseError> {
        match self.peek() {
            Tok::End if self.depth > 0 => self.err(ParseErrorKind::Unbalanced),
            Tok::End => self.err(ParseErrorKind::UnexpectedEnd),
            Tok::RParen if self.depth == 0 => self.err(ParseErrorKind::Unbalanced),
            t => self.err(ParseErrorKind::UnexpectedToken(t.describe())),
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Node, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let (op, l_bp, r_bp) = match self.peek() {
                Tok::Op('+') => (BinOp::Add, BP_ADD, BP_ADD + 1),
                Tok::Op('-') => (BinOp::Sub, BP_ADD, BP_ADD + 1),
                Tok::Op('*') => (BinOp::Mul, BP_MUL, BP_MUL + 1),
                Tok::Op('/') => (BinOp::Div, BP_MUL, BP_MUL + 1),
                // right associative
                Tok::Op('^') => (BinOp::Pow, BP_POW, BP_POW - 1),
                _ => break,
            };
            if l_bp < min_bp {
                break;
            }
            self.bump();
            let rhs = self.expr(r_bp)?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Node, ParseError> {
        if matches!(self.peek(), Tok::RParen | Tok::Comma | Tok::End)
            || matches!(self.peek(), Tok::Op(c) if *c != '-' && *c != '+')
        {
            return self.unexpected();
        }
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Node::Const(v)),
            Tok::Op('-') => Ok(Node::Neg(Box::new(self.expr(BP_NEG)?))),
            Tok::LParen => {
                self.depth += 1;
                let inner = self.expr(0)?;
                self.close_paren()?;
                Ok(inner)
            }
            Tok::Ident(name) => self.ident(name, at),
            // unary plus
            _ => self.expr(BP_NEG),
        }
    }

    fn close_paren(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::RParen => {
                self.depth -= 1;
                self.bump();
                Ok(())
            }
            Tok::End => self.err(ParseErrorKind::Unbalanced),
            _ => self.unexpected(),
        }
    }

    fn ident(&mut self, name: String, at: usize) -> Result<Node, ParseError> {
        if *self.peek() != Tok::LParen {
            if name == self.var {
                return Ok(Node::Var);
            }
            if name == "pi" {
                return Ok(Node::Pi);
            }
            if lookup_function(&name).is_some() {
                return self.err(ParseErrorKind::UnexpectedToken(format!(
                    "{}, expected `(` after `{name}`",
                    self.peek().describe()
                )));
            }
            return Err(ParseError {
                kind: ParseErrorKind::UnknownVariable {
                    found: name,
                    expected: self.var.to_string(),
                },
                offset: at,
            });
        }
        let Some(callable) = lookup_function(&name) else {
            return Err(ParseError {
                kind: ParseErrorKind::UnknownFunction(name),
                offset: at,
            });
        };
        self.bump();
        self.depth += 1;
        let mut args = vec![self.expr(0)?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr(0)?);
        }
        self.close_paren()?;
        let expected = match callable {
            Callable::Unary(_) => 1,
            Callable::Binary(_) => 2,
        };
        if args.len() != expected {
            return Err(ParseError {
                kind: ParseErrorKind::Arity {
                    name,
                    expected,
                    found: args.len(),
                },
                offset: at,
            });
        }
        let mut args = args.into_iter().map(Box::new);
        let first = args.next().expect("arity checked");
        Ok(match callable {
            Callable::Unary(f) => Node::Call1(f, first),
            Callable::Binary(f) => Node::Call2(f, first, args.next().expect("arity checked")),
        })
    }
}

/// A parsed expression in one named variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    var: String,
}

impl Expr {
    /// Parses `source` with `var` as the only free variable.
    pub fn parse(source: &str, var: &str) -> Result<Self, ParseError> {
        let toks = tokenize(source)?;
        if toks.len() == 1 {
            return Err(ParseError {
                kind: ParseErrorKind::Empty,
                offset: 0,
            });
        }
        let mut p = Parser {
            toks,
            pos: 0,
            var,
            depth: 0,
        };
        let root = p.expr(0)?;
        if *p.peek() != Tok::End {
            return p.unexpected();
        }
        Ok(Expr {
            root,
            var: var.to_string(),
        })
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Builds an expression directly from a tree.
    pub fn from_node(root: Node, var: &str) -> Self {
        Expr {
            root,
            var: var.to_string(),
        }
    }

    pub fn eval(&self, value: f64) -> Result<f64, EvalError> {
        if !value.is_finite() {
            return Err(EvalError::NonFiniteInput(value));
        }
        eval_node(&self.root, value)
    }
}

fn finite(value: f64) -> Result<f64, EvalError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EvalError::Overflow { value })
    }
}

fn eval_node(node: &Node, x: f64) -> Result<f64, EvalError> {
    match node {
        Node::Const(c) => Ok(*c),
        Node::Var => Ok(x),
        Node::Pi => Ok(std::f64::consts::PI),
        Node::Neg(a) => Ok(-eval_node(a, x)?),
        Node::Binary(op, a, b) => {
            let a = eval_node(a, x)?;
            let b = eval_node(b, x)?;
            match op {
                BinOp::Add => finite(a + b),
                BinOp::Sub => finite(a - b),
                BinOp::Mul => finite(a * b),
                BinOp::Div => {
                    if b == 0.0 {
                        Err(EvalError::Domain { op: "/", arg: b })
                    } else {
                        finite(a / b)
                    }
                }
                BinOp::Pow => {
                    if a == 0.0 && b < 0.0 {
                        return Err(EvalError::Domain { op: "^", arg: b });
                    }
                    let v = a.powf(b);
                    if v.is_nan() {
                        Err(EvalError::Domain { op: "^", arg: a })
                    } else {
                        finite(v)
                    }
                }
            }
        }
        Node::Call1(f, a) => {
            let a = eval_node(a, x)?;
            match f {
                Func1::Sin => Ok(a.sin()),
                Func1::Cos => Ok(a.cos()),
                Func1::Exp => finite(a.exp()),
                Func1::Log => {
                    if a <= 0.0 {
                        Err(EvalError::Domain { op: "log", arg: a })
                    } else {
                        Ok(a.ln())
                    }
                }
                Func1::Atan => Ok(a.atan()),
                Func1::Abs => Ok(a.abs()),
                Func1::Sqrt => {
                    if a < 0.0 {
                        Err(EvalError::Domain { op: "sqrt", arg: a })
                    } else {
                        Ok(a.sqrt())
                    }
                }
            }
        }
        Node::Call2(f, a, b) => {
            let a = eval_node(a, x)?;
            let b = eval_node(b, x)?;
            Ok(match f {
                Func2::Max => a.max(b),
                Func2::Min => a.min(b),
            })
        }
    }
}

struct Show<'a>(&'a Node, &'a str);

impl fmt::Display for Show<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let var = self.1;
        match self.0 {
            Node::Const(c) if *c < 0.0 || c.is_sign_negative() => write!(f, "(-{:?})", -c),
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Var => f.write_str(var),
            Node::Pi => f.write_str("pi"),
            Node::Neg(a) => write!(f, "(-{})", Show(a, var)),
            Node::Binary(op, a, b) => {
                write!(f, "({} {} {})", Show(a, var), op.symbol(), Show(b, var))
            }
            Node::Call1(func, a) => write!(f, "{}({})", func.name(), Show(a, var)),
            Node::Call2(func, a, b) => {
                write!(f, "{}({}, {})", func.name(), Show(a, var), Show(b, var))
            }
        }
    }
}

/// Fully parenthesised rendering; reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Show(&self.root, &self.var).fmt(f)
    }
}

/// A real function of one real variable that may fail to evaluate.
///
/// Implemented for [`Expr`] and for plain closures, so weights can come
/// from config text or be composed in code.
pub trait RealFn: Send + Sync {
    fn call(&self, x: f64) -> Result<f64, EvalError>;
}

impl RealFn for Expr {
    fn call(&self, x: f64) -> Result<f64, EvalError> {
        self.eval(x)
    }
}

impl<F> RealFn for F
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn call(&self, x: f64) -> Result<f64, EvalError> {
        Ok(self(x))
    }
}

pub type SharedFn = Arc<dyn RealFn>;
