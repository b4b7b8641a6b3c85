//! Hand-rolled lexer and recursive-descent parser for the expression grammar.

use crate::error::{Error, Result};

use super::{BinOp, Expr, UnaryFn, BUILTIN_CONSTS};

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
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    /// 0-based byte offset of the first byte of the token.
    pos: usize,
}

fn syntax(pos: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        offset: pos + 1,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' => {
                let tok = match b {
                    b'+' => Tok::Plus,
                    b'-' => Tok::Minus,
                    b'*' => Tok::Star,
                    b'/' => Tok::Slash,
                    b'^' => Tok::Caret,
                    b'(' => Tok::LParen,
                    _ => Tok::RParen,
                };
                out.push(Token { tok, pos: i });
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
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
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|_| syntax(start, format!("invalid number literal `{text}`")))?;
                out.push(Token {
                    tok: Tok::Num(value),
                    pos: start,
                });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(src[start..i].to_string()),
                    pos: start,
                });
            }
            _ => return Err(syntax(i, format!("unexpected character `{}`", src[i..].chars().next().unwrap()))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    cursor: usize,
    end: usize,
    vars: &'a [&'a str],
    consts: Vec<&'a str>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.cursor).map(|t| &t.tok)
    }

    fn pos(&self) -> usize {
        self.tokens
            .get(self.cursor)
            .map(|t| t.pos)
            .unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.cursor).map(|t| t.tok.clone());
        self.cursor += 1;
        t
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.cursor += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            self.cursor += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => break,
            };
            self.cursor += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(&Tok::Minus) {
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(&Tok::Caret) {
            let exp = self.exponent()?;
            if exp.contains_var() {
                return Err(Error::NonConstExponent {
                    expr: Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)).to_string(),
                });
            }
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    /// Exponents allow a leading sign and associate to the right: `x^-2`,
    /// `x^y^z` = `x^(y^z)`.
    fn exponent(&mut self) -> Result<Expr> {
        if self.eat(&Tok::Minus) {
            return Ok(self.exponent()?.neg());
        }
        self.power()
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Num(x)) => Ok(Expr::Num(x)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                if !self.eat(&Tok::RParen) {
                    return Err(syntax(self.pos(), "expected `)`"));
                }
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    let f = UnaryFn::from_name(&name)
                        .ok_or(Error::UnknownFunction { name: name.clone() })?;
                    self.cursor += 1;
                    let arg = self.expr()?;
                    if !self.eat(&Tok::RParen) {
                        return Err(syntax(self.pos(), "expected `)`"));
                    }
                    return Ok(Expr::Unary(f, Box::new(arg)));
                }
                if let Some(index) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Expr::Var { index, name });
                }
                if self.consts.iter().any(|c| *c == name) {
                    return Ok(Expr::Const(name));
                }
                Err(Error::UnknownIdentifier { name })
            }
            Some(_) => Err(syntax(pos, "expected a number, name, or `(`")),
            None => Err(syntax(pos, "unexpected end of expression")),
        }
    }
}

/// Parses `source` against the declared variable names and any extra constant
/// names (on top of the built-in `pi`, `sigma`, `sigma_bar`).
pub fn parse(source: &str, vars: &[&str], extra_consts: &[&str]) -> Result<Expr> {
    if source.trim().is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let tokens = lex(source)?;
    let mut consts: Vec<&str> = BUILTIN_CONSTS.to_vec();
    consts.extend_from_slice(extra_consts);
    let mut parser = Parser {
        tokens,
        cursor: 0,
        end: source.len(),
        vars,
        consts,
    };
    let expr = parser.expr()?;
    if parser.cursor != parser.tokens.len() {
        return Err(syntax(parser.pos(), "unexpected trailing input"));
    }
    Ok(expr)
}
