//! Tiny expression language for coefficient formulas in config files.
//!
//! Supports `+ - * / ^`, parentheses, unary minus, the functions `sin`,
//! `cos`, `exp`, numeric literals and the state variables `x1..xn`.

use crate::error::{Error, Result};
use crate::model::ScalarField;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// 0-based state coordinate.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    /// Parses `src` with variables `x1..x<dim>` in scope.
    pub fn parse(src: &str, dim: usize) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser {
            src,
            tokens,
            pos: 0,
            dim,
        };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.error(format!("unexpected trailing `{:?}`", p.tokens[p.pos])));
        }
        Ok(e)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
        }
    }

    /// Wraps the expression as a coefficient field.
    pub fn into_field(self) -> ScalarField {
        Arc::new(move |x: &[f64]| self.eval(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
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

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star);
                i += 1;
            }
            '/' => {
                tokens.push(Token::Slash);
                i += 1;
            }
            '^' => {
                tokens.push(Token::Caret);
                i += 1;
            }
            '(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = bytes[start..i].iter().collect();
                let v = text.parse::<f64>().map_err(|_| Error::Expr {
                    expr: src.into(),
                    message: format!("bad number `{text}`"),
                })?;
                tokens.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                tokens.push(Token::Ident(bytes[start..i].iter().collect()));
            }
            other => {
                return Err(Error::Expr {
                    expr: src.into(),
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn error(&self, message: String) -> Error {
        Error::Expr {
            expr: self.src.into(),
            message,
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.pos += 1;
            // right associative
            let exp = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Token::Num(v)) => Ok(Expr::Const(v)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(self.error("missing `)`".into())),
                }
            }
            Some(Token::Ident(name)) => {
                if let Some(rest) = name.strip_prefix('x') {
                    if let Ok(i) = rest.parse::<usize>() {
                        if i >= 1 && i <= self.dim {
                            return Ok(Expr::Var(i - 1));
                        }
                        return Err(self.error(format!(
                            "variable `{name}` out of range (dimension {})",
                            self.dim
                        )));
                    }
                }
                let func = match name.as_str() {
                    "sin" => Expr::Sin as fn(Box<Expr>) -> Expr,
                    "cos" => Expr::Cos,
                    "exp" => Expr::Exp,
                    _ => return Err(self.error(format!("unknown identifier `{name}`"))),
                };
                match self.bump() {
                    Some(Token::LParen) => {
                        let arg = self.expr()?;
                        match self.bump() {
                            Some(Token::RParen) => Ok(func(Box::new(arg))),
                            _ => Err(self.error(format!("missing `)` after {name}(..."))),
                        }
                    }
                    _ => Err(self.error(format!("expected `(` after function `{name}`"))),
                }
            }
            other => Err(self.error(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::approx_constant)] // the literal is the documented example
    fn parses_the_config_example() {
        let e = Expr::parse("1 + 0.5*sin(3.14159*x1)", 1).unwrap();
        let v = e.eval(&[0.5]);
        assert!((v - (1.0 + 0.5 * (3.14159f64 * 0.5).sin())).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_unary() {
        let e = Expr::parse("-x1^2 + 2*x2/4", 2).unwrap();
        // unary minus binds below ^: -(x1^2)
        assert!((e.eval(&[3.0, 2.0]) - (-9.0 + 1.0)).abs() < 1e-15);
        let e = Expr::parse("2^3^1", 1).unwrap();
        assert_eq!(e.eval(&[0.0]), 8.0);
        let e = Expr::parse("exp(0) - cos(0)", 1).unwrap();
        assert_eq!(e.eval(&[0.0]), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Expr::parse("x3", 2).is_err());
        assert!(Expr::parse("foo(1)", 1).is_err());
        assert!(Expr::parse("(1 + 2", 1).is_err());
        assert!(Expr::parse("1 2", 1).is_err());
        assert!(Expr::parse("1 + $", 1).is_err());
    }

    #[test]
    fn scientific_notation() {
        let e = Expr::parse("1e-4 + 2.5E2", 1).unwrap();
        assert!((e.eval(&[0.0]) - 250.0001).abs() < 1e-12);
    }
}
