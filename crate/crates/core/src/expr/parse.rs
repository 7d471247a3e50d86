//! Recursive-descent parser for the formula grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | atom ('^' factor)?
//! atom   := number | ident | func '(' expr ')' | '(' expr ')'
//! func   := exp | ln | abs | sin | cos
//! ```
//!
//! Identifiers are the phase-space coordinates `x1..x9`, `p1..p9`, `y1..y9`,
//! plus whatever parameters (and auxiliary symbols) the [`ParseContext`] declares.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::Expr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    Expected(&'static str),
    UnknownIdentifier(String),
    BadNumber(String),
    TrailingInput,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            Self::UnexpectedEnd => f.write_str("unexpected end of input"),
            Self::Expected(what) => write!(f, "expected {what}"),
            Self::UnknownIdentifier(name) => write!(f, "unknown identifier `{name}`"),
            Self::BadNumber(text) => write!(f, "malformed number `{text}`"),
            Self::TrailingInput => f.write_str("unexpected trailing input"),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

/// Names the parser accepts beyond the built-in coordinates.
#[derive(Debug, Clone, Default)]
pub struct ParseContext {
    params: BTreeSet<String>,
    symbols: BTreeSet<String>,
}

impl ParseContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_params<I, S>(params: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            params: params.into_iter().map(Into::into).collect(),
            symbols: BTreeSet::new(),
        }
    }

    pub fn param(mut self, name: impl Into<String>) -> Self {
        self.params.insert(name.into());
        self
    }

    /// Declares an auxiliary symbol (such as `Q1` or `H`) that parses as a
    /// variable and is expected to be substituted away before evaluation.
    pub fn symbol(mut self, name: impl Into<String>) -> Self {
        self.symbols.insert(name.into());
        self
    }

    pub fn params(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(String::as_str)
    }
}

pub fn is_coordinate(name: &str) -> bool {
    let b = name.as_bytes();
    b.len() == 2 && matches!(b[0], b'x' | b'p' | b'y') && (b'1'..=b'9').contains(&b[1])
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with(text, &ParseContext::new())
}

pub fn parse_with(text: &str, ctx: &ParseContext) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        src: text,
        pos: 0,
        ctx,
    };
    let e = parser.expr()?;
    parser.skip_ws();
    if parser.pos < text.len() {
        return Err(parser.error(ParseErrorKind::TrailingInput));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    ctx: &'a ParseContext,
}

impl Parser<'_> {
    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            offset: self.pos,
            kind,
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char, what: &'static str) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(ParseErrorKind::Expected(what)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc.add(&self.term()?);
            } else if self.eat('-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(&self.factor()?);
            } else if self.eat('/') {
                acc = acc.div(&self.factor()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(self.factor()?.neg());
        }
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.factor()?;
            Ok(base.pow(&exponent))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error(ParseErrorKind::UnexpectedEnd)),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')', "`)`")?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.error(ParseErrorKind::UnexpectedChar(c))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && matches!(bytes[end], b'e' | b'E') {
            let mut k = end + 1;
            if k < bytes.len() && matches!(bytes[k], b'+' | b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = &self.src[start..end];
        let value: f64 = text
            .parse()
            .map_err(|_| self.error(ParseErrorKind::BadNumber(text.to_string())))?;
        self.pos = end;
        Ok(Expr::constant(value))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
            end += 1;
        }
        let name = &self.src[start..end];
        self.pos = end;
        let func: Option<fn(&Expr) -> Expr> = match name {
            "exp" => Some(Expr::exp),
            "ln" => Some(Expr::ln),
            "abs" => Some(Expr::abs),
            "sin" => Some(Expr::sin),
            "cos" => Some(Expr::cos),
            _ => None,
        };
        if let Some(apply) = func {
            self.expect('(', "`(` after function name")?;
            let arg = self.expr()?;
            self.expect(')', "`)`")?;
            return Ok(apply(&arg));
        }
        if is_coordinate(name) || self.ctx.symbols.contains(name) {
            Ok(Expr::var(name))
        } else if self.ctx.params.contains(name) {
            Ok(Expr::param(name))
        } else {
            Err(ParseError {
                offset: start,
                kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Node, Point};

    #[test]
    fn single_token_negation() {
        let e = parse("-p1").unwrap();
        match e.node() {
            Node::Negate(inner) => {
                assert!(matches!(inner.node(), Node::Variable(v) if &**v == "p1"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exponential_argument_subtree() {
        let ctx = ParseContext::with_params(["a"]);
        let e = parse_with("exp(-(a*x4))", &ctx).unwrap();
        let Node::Exp(arg) = e.node() else {
            panic!("expected exp, got {e}")
        };
        let Node::Negate(prod) = arg.node() else {
            panic!("expected negation, got {arg}")
        };
        let Node::Product(l, r) = prod.node() else {
            panic!("expected product, got {prod}")
        };
        assert!(matches!(l.node(), Node::Parameter(p) if &**p == "a"));
        assert!(matches!(r.node(), Node::Variable(v) if &**v == "x4"));
    }

    #[test]
    fn power_binds_tighter_than_unary_minus() {
        let e = parse("-x1^2").unwrap();
        let pt = Point::from_vars([("x1", 3.0)]);
        assert_eq!(e.evaluate(&pt).unwrap(), -9.0);
        let e = parse("2^-1").unwrap();
        assert_eq!(e.evaluate(&pt).unwrap(), 0.5);
        // right associative
        let e = parse("2^3^2").unwrap();
        assert_eq!(e.evaluate(&pt).unwrap(), 512.0);
        let e = parse("-x1*x1").unwrap();
        assert_eq!(e.evaluate(&pt).unwrap(), -9.0);
    }

    #[test]
    fn numbers() {
        for (text, v) in [("1.5", 1.5), ("2e-3", 2e-3), (".25", 0.25), ("1E2", 100.0)] {
            assert_eq!(parse(text).unwrap().as_constant(), Some(v), "{text}");
        }
    }

    #[test]
    fn errors_carry_offsets() {
        let err = parse("x1 + * p1").unwrap_err();
        assert_eq!(err.offset, 5);
        assert_eq!(err.kind, ParseErrorKind::UnexpectedChar('*'));

        let err = parse("x1 + q7").unwrap_err();
        assert_eq!(err.offset, 5);
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("q7".into()));

        // parameters must be declared
        assert!(matches!(
            parse("a*x1").unwrap_err().kind,
            ParseErrorKind::UnknownIdentifier(_)
        ));
        assert!(matches!(
            parse("x0").unwrap_err().kind,
            ParseErrorKind::UnknownIdentifier(_)
        ));
        assert_eq!(
            parse("(x1").unwrap_err().kind,
            ParseErrorKind::Expected("`)`")
        );
        assert_eq!(
            parse("x1 x2").unwrap_err().kind,
            ParseErrorKind::TrailingInput
        );
        assert_eq!(parse("").unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
        assert!(matches!(
            parse("1.2.3").unwrap_err().kind,
            ParseErrorKind::BadNumber(_)
        ));
    }

    #[test]
    fn auxiliary_symbols() {
        let ctx = ParseContext::new().symbol("Q1").symbol("Q2");
        let e = parse_with("Q2^2 - 2*Q1", &ctx).unwrap();
        assert!(e.variables().iter().any(|v| &**v == "Q1"));
        assert!(parse("Q1").is_err());
    }
}
