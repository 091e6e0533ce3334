//! Text syntax for scalar expressions in scenario files.
//!
//! Grammar (recursive descent, `^` binds tightest and is right-associative):
//!
//! ```text
//! expr    := term    { ("+" | "-") term }
//! term    := unary   { ("*" | "/") unary }
//! unary   := "-" unary | power
//! power   := atom    [ "^" unary ]
//! atom    := NUMBER
//!          | "pi"
//!          | IDENT                      -- coordinate or parameter
//!          | IDENT "(" expr {"," expr} ")"   -- exp, ln, sin, cos, bump
//!          | "(" expr ")"
//! NUMBER  := decimal literal, optional fraction and exponent (1, 0.5, 2e-3)
//! IDENT   := [A-Za-z_][A-Za-z0-9_]*
//! ```
//!
//! `exp`, `ln`, `sin`, `cos` take one argument. `bump(name, e)` references a
//! bump profile declared in the enclosing scenario and applies it to `e`.
//! Any other identifier must be a chart coordinate or a declared parameter;
//! the [`SymbolTable`] decides which, and unknown names are rejects with a
//! byte offset for diagnostics.

use super::{BumpSpec, Expr};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("parse error at offset {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

/// Names the parser may resolve: chart coordinates, declared parameters and
/// named bump profiles.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    coords: Vec<String>,
    params: Vec<String>,
    bumps: BTreeMap<String, BumpSpec>,
}

impl SymbolTable {
    pub fn new(coords: &[&str], params: &[&str], bumps: &[(&str, BumpSpec)]) -> Self {
        SymbolTable {
            coords: coords.iter().map(|s| s.to_string()).collect(),
            params: params.iter().map(|s| s.to_string()).collect(),
            bumps: bumps.iter().map(|(n, s)| (n.to_string(), *s)).collect(),
        }
    }

    pub fn from_owned(
        coords: Vec<String>,
        params: Vec<String>,
        bumps: BTreeMap<String, BumpSpec>,
    ) -> Self {
        SymbolTable {
            coords,
            params,
            bumps,
        }
    }
}

pub fn parse_expr(src: &str, table: &SymbolTable) -> Result<Expr, ParseError> {
    let mut p = Parser { src, pos: 0, table };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != src.len() {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    table: &'a SymbolTable,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> ParseError {
        ParseError {
            offset: self.pos,
            message: message.to_owned(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(|c: char| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc + self.term()?;
            } else if self.eat('-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc * self.unary()?;
            } else if self.eat('/') {
                acc = acc / self.unary()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            Ok(self.unary()?.neg())
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            Ok(Expr::pow(base, exp))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let rest = self.rest();
        let Some(first) = rest.chars().next() else {
            return Err(self.error("unexpected end of expression"));
        };
        if first == '(' {
            self.pos += 1;
            let e = self.expr()?;
            if !self.eat(')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(e);
        }
        if first.is_ascii_digit() || first == '.' {
            return self.number();
        }
        if first.is_ascii_alphabetic() || first == '_' {
            return self.ident_or_call();
        }
        Err(self.error(&format!("unexpected character `{first}`")))
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
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
        let text = &self.src[start..i];
        self.pos = i;
        text.parse::<f64>()
            .map(Expr::constant)
            .map_err(|_| ParseError {
                offset: start,
                message: format!("invalid number `{text}`"),
            })
    }

    fn ident_or_call(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
            i += 1;
        }
        let name = &self.src[start..i];
        self.pos = i;

        if self.eat('(') {
            if name == "bump" {
                return self.bump_call(start);
            }
            let mut args = vec![self.expr()?];
            while self.eat(',') {
                args.push(self.expr()?);
            }
            if !self.eat(')') {
                return Err(self.error("expected `)` after arguments"));
            }
            return self.apply(name, args, start);
        }

        match name {
            "pi" => Ok(Expr::constant(std::f64::consts::PI)),
            _ if self.table.coords.iter().any(|c| c == name) => Ok(Expr::coord(name)),
            _ if self.table.params.iter().any(|p| p == name) => Ok(Expr::param(name)),
            _ => Err(ParseError {
                offset: start,
                message: format!("unknown symbol `{name}` (not a coordinate or parameter)"),
            }),
        }
    }

    /// `bump(profile-name, arg)`; the opening paren is already consumed.
    fn bump_call(&mut self, at: usize) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
            i += 1;
        }
        if i == start {
            return Err(self.error("expected a bump profile name"));
        }
        let pname = self.src[start..i].to_owned();
        self.pos = i;
        if !self.eat(',') {
            return Err(self.error("`bump` takes a profile name and one argument"));
        }
        let arg = self.expr()?;
        if !self.eat(')') {
            return Err(self.error("expected `)` after arguments"));
        }
        let spec = self.table.bumps.get(&pname).ok_or_else(|| ParseError {
            offset: at,
            message: format!("unknown bump profile `{pname}`"),
        })?;
        Ok(Expr::bump(&pname, *spec, arg))
    }

    fn apply(&self, name: &str, mut args: Vec<Expr>, at: usize) -> Result<Expr, ParseError> {
        match name {
            "exp" | "ln" | "sin" | "cos" => {
                if args.len() != 1 {
                    return Err(ParseError {
                        offset: at,
                        message: format!("`{name}` takes 1 argument"),
                    });
                }
                let a = args.pop().unwrap();
                Ok(match name {
                    "exp" => Expr::exp(a),
                    "ln" => Expr::ln(a),
                    "sin" => Expr::sin(a),
                    _ => Expr::cos(a),
                })
            }
            _ => Err(ParseError {
                offset: at,
                message: format!("unknown function `{name}`"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn table() -> SymbolTable {
        SymbolTable::new(
            &["x", "y", "r"],
            &["lambda", "K"],
            &[("f", BumpSpec::default())],
        )
    }

    fn eval_at(e: &Expr, x: f64, y: f64, r: f64) -> f64 {
        let coords: BTreeMap<String, f64> =
            [("x".into(), x), ("y".into(), y), ("r".into(), r)].into();
        let params: BTreeMap<String, f64> = [("lambda".into(), 2.0), ("K".into(), 3.0)].into();
        e.eval(&coords, &params).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("1 + 2*x^2", &table()).unwrap();
        assert_eq!(eval_at(&e, 3.0, 0.0, 0.0), 19.0);
        // Right-associative power: 2^3^2 = 2^9.
        let e = parse_expr("2^3^2", &table()).unwrap();
        assert_eq!(eval_at(&e, 0.0, 0.0, 0.0), 512.0);
        let e = parse_expr("-x^2", &table()).unwrap();
        assert_eq!(eval_at(&e, 2.0, 0.0, 0.0), -4.0);
    }

    #[test]
    fn functions_params_and_pi() {
        let e = parse_expr("K * cos(2*pi*y) + lambda^x", &table()).unwrap();
        let v = eval_at(&e, 1.0, 0.5, 0.0);
        // cos(pi) = -1, so K*(-1) + lambda^1 = -3 + 2.
        assert!((v - -1.0).abs() < 1e-12);
    }

    #[test]
    fn bump_reference() {
        let e = parse_expr("bump(f, r)", &table()).unwrap();
        assert_eq!(eval_at(&e, 0.0, 0.0, 0.1), 0.0);
        assert_eq!(eval_at(&e, 0.0, 0.0, 0.9), 1.0);
        assert_eq!(eval_at(&e, 0.0, 0.0, 0.5), 0.5);
    }

    #[test]
    fn division_parses() {
        let e = parse_expr("x / (1 + y)", &table()).unwrap();
        assert!((eval_at(&e, 3.0, 2.0, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_symbols_with_offset() {
        let err = parse_expr("x + qq", &table()).unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(err.message.contains("qq"));
        assert!(parse_expr("x +", &table()).is_err());
        assert!(parse_expr("sinh(x)", &table()).is_err());
        assert!(parse_expr("bump(g, r)", &table()).is_err());
        assert!(parse_expr("x 3", &table()).is_err());
    }
}
