//! Arithmetic expressions over `x`, `y` and `r2 = x^2 + y^2` used for
//! right-hand sides and initial vorticity in run configs.
//!
//! Grammar: numbers, `x`, `y`, `r2`, `+ - * / ^`, parentheses and the
//! functions `exp`, `sin`, `cos`. `^` binds tighter than unary minus and is
//! right-associative.

use std::fmt;

use crate::error::{LakeError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    X,
    Y,
    R2,
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Exp,
    Sin,
    Cos,
}

/// A parsed expression; cheap to evaluate repeatedly.
#[derive(Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Self { source: src.to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        eval(&self.root, x, y)
    }
}

fn eval(n: &Node, x: f64, y: f64) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::X => x,
        Node::Y => y,
        Node::R2 => x * x + y * y,
        Node::Neg(a) => -eval(a, x, y),
        Node::Bin(op, a, b) => {
            let (u, v) = (eval(a, x, y), eval(b, x, y));
            match op {
                Op::Add => u + v,
                Op::Sub => u - v,
                Op::Mul => u * v,
                Op::Div => u / v,
                Op::Pow => {
                    if v.fract() == 0.0 && v.abs() <= 64.0 {
                        u.powi(v as i32)
                    } else {
                        u.powf(v)
                    }
                }
            }
        }
        Node::Call(f, a) => {
            let u = eval(a, x, y);
            match f {
                Func::Exp => u.exp(),
                Func::Sin => u.sin(),
                Func::Cos => u.cos(),
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> LakeError {
        LakeError::Expression { column: self.pos + 1, message: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { Op::Add } else { Op::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { Op::Mul } else { Op::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                let func = match word {
                    "x" => return Ok(Node::X),
                    "y" => return Ok(Node::Y),
                    "r2" => return Ok(Node::R2),
                    "exp" => Func::Exp,
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    _ => {
                        self.pos = start;
                        return Err(self.error(&format!("unknown identifier '{word}'")));
                    }
                };
                if self.peek() != Some(b'(') {
                    return Err(self.error("expected '(' after function name"));
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(Node::Call(func, Box::new(arg)))
            }
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_digit() || s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mut k = self.pos + 1;
            if k < s.len() && (s[k] == b'+' || s[k] == b'-') {
                k += 1;
            }
            if k < s.len() && s[k].is_ascii_digit() {
                while k < s.len() && s[k].is_ascii_digit() {
                    k += 1;
                }
                self.pos = k;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map(Node::Num).map_err(|_| {
            let mut e = self.error(&format!("malformed number '{text}'"));
            if let LakeError::Expression { column, .. } = &mut e {
                *column = start + 1;
            }
            e
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_manufactured_sources() {
        let e = Expr::parse("-8").unwrap();
        assert_eq!(e.eval(0.3, 0.1), -8.0);
        let e = Expr::parse("(1+2)*(8*r2-4)").unwrap();
        assert!((e.eval(0.5, 0.0) - 3.0 * (8.0 * 0.25 - 4.0)).abs() < 1e-15);
        let e = Expr::parse("(1-r2)^2").unwrap();
        assert!((e.eval(0.6, 0.0) - 0.4096).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_functions() {
        let e = Expr::parse("-x^2 + 2*y/4 - exp(0) + sin(0)*cos(0)").unwrap();
        assert!((e.eval(3.0, 2.0) - (-9.0 + 1.0 - 1.0)).abs() < 1e-15);
        let e = Expr::parse("2^3^2").unwrap();
        assert_eq!(e.eval(0.0, 0.0), 512.0);
        let e = Expr::parse("1.5e-1 * x").unwrap();
        assert!((e.eval(2.0, 0.0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn reports_column_of_errors() {
        match Expr::parse("1 + foo") {
            Err(LakeError::Expression { column, .. }) => assert_eq!(column, 5),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("(x").is_err());
        assert!(Expr::parse("x y").is_err());
        assert!(Expr::parse("").is_err());
    }
}
