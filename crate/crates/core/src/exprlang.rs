//! A small arithmetic expression language for problem configuration.
//!
//! Coefficients, nonlinearities, boundary data and deviation components are
//! given as expressions over a declared variable set, e.g.
//! `"(1+x1^2)*exp(-u-v)"` over `(x1, x2, u, v)`.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = term , { ( "+" | "-" ) , term } ;
//! term    = unary , { ( "*" | "/" ) , unary } ;
//! unary   = "-" , unary | power ;
//! power   = atom , [ "^" , unary ] ;            (* right-associative *)
//! atom    = number | variable | call | "(" , expr , ")" ;
//! call    = function , "(" , expr , { "," , expr } , ")" ;
//! function = "sin" | "cos" | "exp" | "ln" | "sqrt" | "abs" | "min" | "max" ;
//! number  = digit , { digit } , [ "." , { digit } ] , [ exponent ] ;
//! exponent = ( "e" | "E" ) , [ "+" | "-" ] , digit , { digit } ;
//! ```
//!
//! Unary minus binds looser than `^`, so `-2^2 = -4`; `^` is right
//! associative, so `2^3^2 = 512`. Evaluation follows IEEE double semantics
//! except that `ln` of a non-positive argument, `sqrt` of a negative
//! argument, and any operation producing NaN (such as `0/0`) are hard
//! errors rather than silent NaN propagation.

use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Built-in functions. `min`/`max` take two arguments, the rest one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
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

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Abstract syntax tree of a parsed expression. Variables are stored as
/// indices into the declared variable list.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(f64),
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` expects {expected} argument(s), got {got} (offset {offset})")]
    WrongArity {
        name: String,
        expected: usize,
        got: usize,
        offset: usize,
    },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("arity mismatch: function of {expected} variable(s) called with {got} argument(s)")]
    ArityMismatch { expected: usize, got: usize },
    #[error("evaluation domain error: {func}({arg}) is undefined")]
    Domain { func: &'static str, arg: f64 },
    #[error("evaluation produced NaN in `{op}`")]
    Indeterminate { op: &'static str },
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
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
    Comma,
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn next_token(&mut self) -> Result<(Tok, usize), ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Tok::Eof, start));
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
            b'0'..=b'9' => return self.lex_number(start),
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => return self.lex_ident(start),
            other => {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", other as char),
                })
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }

    fn lex_number(&mut self, start: usize) -> Result<(Tok, usize), ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.src.len()
                && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // `e` belongs to a following identifier, not the number
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        Ok((Tok::Num(value), start))
    }

    fn lex_ident(&mut self, start: usize) -> Result<(Tok, usize), ParseError> {
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok((Tok::Ident(text.to_string()), start))
    }
}

// ---------------------------------------------------------------------------
// Parser (recursive descent with Pratt-style precedence)
// ---------------------------------------------------------------------------

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    cursor: usize,
    variables: &'a [String],
}

// Binding powers: additive 1, multiplicative 3, prefix minus 5, `^` 8
// (right-associative via a right binding power of 7).
const BP_ADD: (u8, u8) = (1, 2);
const BP_MUL: (u8, u8) = (3, 4);
const BP_NEG: u8 = 5;
const BP_POW: (u8, u8) = (8, 7);

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.cursor].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.cursor].1
    }

    fn advance(&mut self) -> (Tok, usize) {
        let t = self.tokens[self.cursor].clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        t
    }

    fn parse_expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let (tok, off) = self.advance();
        let mut lhs = match tok {
            Tok::Num(v) => Expr::Literal(v),
            Tok::Minus => {
                let operand = self.parse_expr(BP_NEG)?;
                Expr::Neg(Box::new(operand))
            }
            Tok::LParen => {
                let inner = self.parse_expr(0)?;
                self.expect_rparen()?;
                inner
            }
            Tok::Ident(name) => self.parse_ident(name, off)?,
            other => {
                return Err(ParseError::Syntax {
                    offset: off,
                    message: format!("expected an operand, found {}", describe(&other)),
                })
            }
        };

        loop {
            let (lbp, rbp, op) = match self.peek() {
                Tok::Plus => (BP_ADD.0, BP_ADD.1, BinOp::Add),
                Tok::Minus => (BP_ADD.0, BP_ADD.1, BinOp::Sub),
                Tok::Star => (BP_MUL.0, BP_MUL.1, BinOp::Mul),
                Tok::Slash => (BP_MUL.0, BP_MUL.1, BinOp::Div),
                Tok::Caret => (BP_POW.0, BP_POW.1, BinOp::Pow),
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.advance();
            let rhs = self.parse_expr(rbp)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_ident(&mut self, name: String, off: usize) -> Result<Expr, ParseError> {
        if let Some(func) = Func::from_name(&name) {
            if !matches!(self.peek(), Tok::LParen) {
                return Err(ParseError::Syntax {
                    offset: self.offset(),
                    message: format!("expected `(` after function `{name}`"),
                });
            }
            self.advance();
            let mut args = vec![self.parse_expr(0)?];
            while matches!(self.peek(), Tok::Comma) {
                self.advance();
                args.push(self.parse_expr(0)?);
            }
            self.expect_rparen()?;
            if args.len() != func.arity() {
                return Err(ParseError::WrongArity {
                    name,
                    expected: func.arity(),
                    got: args.len(),
                    offset: off,
                });
            }
            return Ok(Expr::Call(func, args));
        }
        if let Some(idx) = self.variables.iter().position(|v| v == &name) {
            if matches!(self.peek(), Tok::LParen) {
                return Err(ParseError::Syntax {
                    offset: self.offset(),
                    message: format!("`{name}` is a variable, not a function"),
                });
            }
            return Ok(Expr::Var(idx));
        }
        Err(ParseError::UnknownIdentifier { name, offset: off })
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::RParen => {
                self.advance();
                Ok(())
            }
            other => Err(ParseError::Syntax {
                offset: self.offset(),
                message: format!("expected `)`, found {}", describe(other)),
            }),
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number `{v}`"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses `source` against the declared variable names.
pub fn parse(source: &str, variables: &[String]) -> Result<Expr, ParseError> {
    let mut lexer = Lexer::new(source);
    let mut tokens = Vec::new();
    loop {
        let (tok, off) = lexer.next_token()?;
        let is_eof = tok == Tok::Eof;
        tokens.push((tok, off));
        if is_eof {
            break;
        }
    }
    let mut parser = Parser {
        tokens,
        cursor: 0,
        variables,
    };
    let expr = parser.parse_expr(0)?;
    match parser.peek() {
        Tok::Eof => Ok(expr),
        other => Err(ParseError::Syntax {
            offset: parser.offset(),
            message: format!("trailing input: {}", describe(other)),
        }),
    }
}

// ---------------------------------------------------------------------------
// Pretty printer
// ---------------------------------------------------------------------------

// Precedence levels for parenthesization; atoms are 5.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Literal(_) | Expr::Var(_) | Expr::Call(..) => 5,
        Expr::Neg(_) => 3,
        Expr::Bin(BinOp::Pow, ..) => 4,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
    }
}

fn print_expr(e: &Expr, ctx: u8, vars: &[String], out: &mut String) {
    let p = prec(e);
    let parens = p < ctx;
    if parens {
        out.push('(');
    }
    match e {
        Expr::Literal(v) => out.push_str(&format!("{v:?}")),
        Expr::Var(i) => out.push_str(&vars[*i]),
        Expr::Neg(inner) => {
            out.push('-');
            print_expr(inner, 3, vars, out);
        }
        Expr::Bin(op, l, r) => {
            let (lc, rc) = match op {
                // left-associative: right child needs strictly higher level
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => (p, p + 1),
                // right-associative `^`: left child must be atomic
                BinOp::Pow => (5, 4),
            };
            print_expr(l, lc, vars, out);
            out.push_str(op.symbol());
            print_expr(r, rc, vars, out);
        }
        Expr::Call(func, args) => {
            out.push_str(func.name());
            out.push('(');
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                print_expr(a, 0, vars, out);
            }
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

/// Canonical source rendering of an AST (minimal parentheses); parsing the
/// result over the same variables reproduces the tree.
pub fn to_source(expr: &Expr, variables: &[String]) -> String {
    let mut out = String::new();
    print_expr(expr, 0, variables, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Compiled function
// ---------------------------------------------------------------------------

/// A compiled expression together with its variable list. Cloning is cheap
/// and the function is immutable, so it can be shared across threads.
#[derive(Debug, Clone)]
pub struct ScalarFunc {
    expr: Arc<Expr>,
    variables: Arc<Vec<String>>,
    source: Arc<String>,
}

/// Parses `source` over the declared variables and returns an evaluable
/// function.
pub fn compile(source: &str, variables: &[&str]) -> Result<ScalarFunc, ParseError> {
    let vars: Vec<String> = variables.iter().map(|s| s.to_string()).collect();
    let expr = parse(source, &vars)?;
    Ok(ScalarFunc {
        expr: Arc::new(expr),
        variables: Arc::new(vars),
        source: Arc::new(source.to_string()),
    })
}

impl ScalarFunc {
    /// A constant function of the given arity.
    pub fn constant(value: f64, variables: &[&str]) -> ScalarFunc {
        ScalarFunc {
            expr: Arc::new(Expr::Literal(value)),
            variables: Arc::new(variables.iter().map(|s| s.to_string()).collect()),
            source: Arc::new(format!("{value:?}")),
        }
    }

    pub fn arity(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// The source text the function was compiled from.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Canonical rendering of the parsed tree (minimal parentheses).
    pub fn pretty(&self) -> String {
        to_source(&self.expr, &self.variables)
    }

    /// Evaluates at `args`, which must match the declared arity.
    pub fn eval(&self, args: &[f64]) -> Result<f64, EvalError> {
        if args.len() != self.variables.len() {
            return Err(EvalError::ArityMismatch {
                expected: self.variables.len(),
                got: args.len(),
            });
        }
        eval_expr(&self.expr, args)
    }
}

impl fmt::Display for ScalarFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.source())
    }
}

fn eval_expr(e: &Expr, args: &[f64]) -> Result<f64, EvalError> {
    Ok(match e {
        Expr::Literal(v) => *v,
        Expr::Var(i) => args[*i],
        Expr::Neg(inner) => -eval_expr(inner, args)?,
        Expr::Bin(op, l, r) => {
            let a = eval_expr(l, args)?;
            let b = eval_expr(r, args)?;
            let value = match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => a.powf(b),
            };
            if value.is_nan() && !a.is_nan() && !b.is_nan() {
                return Err(EvalError::Indeterminate { op: op.symbol() });
            }
            value
        }
        Expr::Call(func, fn_args) => {
            let a = eval_expr(&fn_args[0], args)?;
            match func {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
                Func::Ln => {
                    if a <= 0.0 {
                        return Err(EvalError::Domain { func: "ln", arg: a });
                    }
                    a.ln()
                }
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(EvalError::Domain {
                            func: "sqrt",
                            arg: a,
                        });
                    }
                    a.sqrt()
                }
                Func::Abs => a.abs(),
                Func::Min => a.min(eval_expr(&fn_args[1], args)?),
                Func::Max => a.max(eval_expr(&fn_args[1], args)?),
            }
        }
    })
}
