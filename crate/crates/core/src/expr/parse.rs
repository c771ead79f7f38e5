//! Recursive-descent parser for the expression language.
//!
//! Grammar, loosest to tightest binding:
//!   expr  := term (('+' | '-') term)*
//!   term  := unary (('*' | '/') unary)*
//!   unary := '-' unary | power
//!   power := atom ('^' unary)?          (right-associative)
//!   atom  := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'

use super::{BinOp, Expr, Func, Var};
use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Named parameters bound at load time (e.g. sigma, p). Occurrences fold to
/// literals during parsing.
pub type Params = BTreeMap<String, f64>;

/// Parse with an empty parameter table.
pub fn parse_expr(text: &str) -> Result<Expr> {
    parse(text, &Params::new())
}

/// Parse `text`, resolving identifiers against variables, the constants
/// `pi`/`e`, function names, and `params`.
pub fn parse(text: &str, params: &Params) -> Result<Expr> {
    if text.trim().is_empty() {
        return Err(Error::Parse {
            position: 0,
            message: "empty expression".to_string(),
        });
    }
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        params,
    };
    let e = p.expr()?;
    if let Some(tok) = p.peek() {
        return Err(Error::Parse {
            position: tok.pos,
            message: format!("unexpected `{}`", tok.kind.describe()),
        });
    }
    Ok(fold_constants(e))
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
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
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Num(v) => format!("{}", v),
            TokenKind::Ident(s) => s.clone(),
            TokenKind::Plus => "+".to_string(),
            TokenKind::Minus => "-".to_string(),
            TokenKind::Star => "*".to_string(),
            TokenKind::Slash => "/".to_string(),
            TokenKind::Caret => "^".to_string(),
            TokenKind::LParen => "(".to_string(),
            TokenKind::RParen => ")".to_string(),
            TokenKind::Comma => ",".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let pos = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' | ',' => {
                let kind = match c {
                    '+' => TokenKind::Plus,
                    '-' => TokenKind::Minus,
                    '*' => TokenKind::Star,
                    '/' => TokenKind::Slash,
                    '^' => TokenKind::Caret,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    _ => TokenKind::Comma,
                };
                tokens.push(Token { kind, pos });
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                // exponent part, e.g. 1e-3, 2.5E+2
                if i < bytes.len()
                    && matches!(bytes[i] as char, 'e' | 'E')
                    && i + 1 < bytes.len()
                    && (bytes[i + 1].is_ascii_digit()
                        || (matches!(bytes[i + 1] as char, '+' | '-')
                            && i + 2 < bytes.len()
                            && bytes[i + 2].is_ascii_digit()))
                {
                    i += 2;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let lexeme = &text[start..i];
                let value: f64 = lexeme.parse().map_err(|_| Error::Parse {
                    position: start,
                    message: format!("malformed number `{}`", lexeme),
                })?;
                tokens.push(Token {
                    kind: TokenKind::Num(value),
                    pos,
                });
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(text[start..i].to_string()),
                    pos,
                });
            }
            _ => {
                return Err(Error::Parse {
                    position: pos,
                    message: format!("unexpected character `{}`", c),
                });
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
    params: &'a Params,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }


    fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<()> {
        match self.next() {
            Some(t) if t.kind == *kind => Ok(()),
            Some(t) => Err(Error::Parse {
                position: t.pos,
                message: format!("expected {}, found `{}`", what, t.kind.describe()),
            }),
            None => Err(Error::Parse {
                position: self.end,
                message: format!("expected {}, found end of input", what),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(tok) = self.peek() {
            let op = match tok.kind {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            self.next();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(tok) = self.peek() {
            let op = match tok.kind {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                _ => break,
            };
            self.next();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Minus)) {
            self.next();
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Caret)) {
            self.next();
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = match self.next() {
            Some(t) => t,
            None => {
                return Err(Error::Parse {
                    position: self.end,
                    message: "unexpected end of input".to_string(),
                })
            }
        };
        match tok.kind {
            TokenKind::Num(v) => Ok(Expr::Num(v)),
            TokenKind::LParen => {
                let e = self.expr()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                Ok(e)
            }
            TokenKind::Ident(name) => self.ident(&name, tok.pos),
            other => Err(Error::Parse {
                position: tok.pos,
                message: format!("unexpected `{}`", other.describe()),
            }),
        }
    }

    fn ident(&mut self, name: &str, pos: usize) -> Result<Expr> {
        let calls_args = matches!(self.peek().map(|t| &t.kind), Some(TokenKind::LParen));
        if calls_args {
            if let Some(e) = self.call(name, pos)? {
                return Ok(e);
            }
        }
        match name {
            "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
            "e" => return Ok(Expr::Num(std::f64::consts::E)),
            _ => {}
        }
        if let Some(v) = Var::from_name(name) {
            return Ok(Expr::Var(v));
        }
        if let Some(&v) = self.params.get(name) {
            return Ok(Expr::Num(v));
        }
        Err(Error::UnknownIdentifier {
            name: name.to_string(),
            position: pos,
        })
    }

    /// Returns Ok(None) when `name` is not a function name (the caller then
    /// resolves it as a variable/constant/parameter).
    fn call(&mut self, name: &str, pos: usize) -> Result<Option<Expr>> {
        let unary = |f: Func| Some((f, 1usize));
        let spec = match name {
            "sin" => unary(Func::Sin),
            "cos" => unary(Func::Cos),
            "tan" => unary(Func::Tan),
            "sinh" => unary(Func::Sinh),
            "cosh" => unary(Func::Cosh),
            "exp" => unary(Func::Exp),
            "log" => unary(Func::Log),
            "sqrt" => unary(Func::Sqrt),
            "abs" => unary(Func::Abs),
            "sign" => unary(Func::Sign),
            "min" | "max" | "pow" => Some((Func::Abs, 2)), // func unused for 2-arg
            "select" => Some((Func::Abs, 3)),
            _ => None,
        };
        let (func, arity) = match spec {
            Some(s) => s,
            None => return Ok(None),
        };
        self.expect(&TokenKind::LParen, "`(`")?;
        let mut args = vec![self.expr()?];
        while matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Comma)) {
            self.next();
            args.push(self.expr()?);
        }
        self.expect(&TokenKind::RParen, "`)`")?;
        if args.len() != arity {
            return Err(Error::Parse {
                position: pos,
                message: format!(
                    "`{}` takes {} argument(s), found {}",
                    name,
                    arity,
                    args.len()
                ),
            });
        }
        let mut it = args.into_iter();
        let e = match (name, arity) {
            ("min", _) => Expr::Min(Box::new(it.next().unwrap()), Box::new(it.next().unwrap())),
            ("max", _) => Expr::Max(Box::new(it.next().unwrap()), Box::new(it.next().unwrap())),
            ("pow", _) => Expr::Bin(
                BinOp::Pow,
                Box::new(it.next().unwrap()),
                Box::new(it.next().unwrap()),
            ),
            ("select", _) => Expr::Select(
                Box::new(it.next().unwrap()),
                Box::new(it.next().unwrap()),
                Box::new(it.next().unwrap()),
            ),
            _ => Expr::Call(func, Box::new(it.next().unwrap())),
        };
        Ok(Some(e))
    }
}

/// Bottom-up constant folding; leaves anything that would error unfolded so
/// evaluation reports it with context.
pub(super) fn fold_constants(e: Expr) -> Expr {
    let folded = match e {
        Expr::Num(_) | Expr::Var(_) => return e,
        Expr::Neg(a) => Expr::Neg(Box::new(fold_constants(*a))),
        Expr::Bin(op, a, b) => Expr::Bin(
            op,
            Box::new(fold_constants(*a)),
            Box::new(fold_constants(*b)),
        ),
        Expr::Call(f, a) => Expr::Call(f, Box::new(fold_constants(*a))),
        Expr::Min(a, b) => Expr::Min(Box::new(fold_constants(*a)), Box::new(fold_constants(*b))),
        Expr::Max(a, b) => Expr::Max(Box::new(fold_constants(*a)), Box::new(fold_constants(*b))),
        Expr::Select(c, a, b) => Expr::Select(
            Box::new(fold_constants(*c)),
            Box::new(fold_constants(*a)),
            Box::new(fold_constants(*b)),
        ),
    };
    if folded.free_vars().is_empty() {
        if let Ok(v) = folded.eval(&super::Bindings::new()) {
            return Expr::Num(v);
        }
    }
    folded
}
