//! Arithmetic expressions over phase coordinates, evaluable on jets.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, the functions
//! `sqrt exp ln sin cos tan`, the constants `pi` and `e`, numbers, and the
//! variables `x1..xn`, `y1..yn`. `^` binds tighter than unary minus and is
//! right-associative, so `-x1^2` is `-(x1^2)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::jet::{Jet, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            _ => return None,
        })
    }

    fn apply(self, j: &Jet) -> Jet {
        match self {
            Func::Sqrt => j.sqrt(),
            Func::Exp => j.exp(),
            Func::Ln => j.ln(),
            Func::Sin => j.sin(),
            Func::Cos => j.cos(),
            Func::Tan => j.tan(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    /// Phase index: `x_i` is `i`, `y_i` is `n + i`.
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>> {
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
                .map_err(|_| Error::Expression(format!("bad number `{text}` at {start}")))?;
            out.push((start, Token::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Token::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Token::Op(c)));
            i += 1;
        } else {
            return Err(Error::Expression(format!("unexpected character `{c}` at {i}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [(usize, Token)],
    pos: usize,
    n: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map(|(o, _)| *o).unwrap_or(usize::MAX)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, msg: &str) -> Error {
        match self.offset() {
            usize::MAX => Error::Expression(format!("{msg} at end of input")),
            o => Error::Expression(format!("{msg} at {o}")),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            Ok(Node::Pow(Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                if let Some(f) = Func::lookup(&name) {
                    if !self.eat('(') {
                        return Err(self.error(&format!("expected `(` after `{name}`")));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(self.error("expected `)`"));
                    }
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                match name.as_str() {
                    "pi" => return Ok(Node::Num(std::f64::consts::PI)),
                    "e" => return Ok(Node::Num(std::f64::consts::E)),
                    _ => {}
                }
                self.variable(&name)
            }
            _ => Err(self.error("expected a number, variable, function or `(`")),
        }
    }

    fn variable(&self, name: &str) -> Result<Node> {
        let (kind, rest) = name.split_at(1);
        let index: Option<usize> = rest.parse().ok();
        match (kind, index) {
            ("x", Some(i)) if (1..=self.n).contains(&i) => Ok(Node::Var(i - 1)),
            ("y", Some(i)) if (1..=self.n).contains(&i) => Ok(Node::Var(self.n + i - 1)),
            _ => Err(Error::Expression(format!(
                "unknown name `{name}` (variables are x1..x{n}, y1..y{n})",
                n = self.n
            ))),
        }
    }
}

/// Value of a variable-free subtree.
fn constant(node: &Node) -> Option<f64> {
    Some(match node {
        Node::Num(v) => *v,
        Node::Var(_) => return None,
        Node::Neg(a) => -constant(a)?,
        Node::Add(a, b) => constant(a)? + constant(b)?,
        Node::Sub(a, b) => constant(a)? - constant(b)?,
        Node::Mul(a, b) => constant(a)? * constant(b)?,
        Node::Div(a, b) => constant(a)? / constant(b)?,
        Node::Pow(a, b) => {
            let (a, b) = (constant(a)?, constant(b)?);
            if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
                a.powi(b as i32)
            } else {
                a.powf(b)
            }
        }
        Node::Call(f, a) => {
            let v = constant(a)?;
            match f {
                Func::Sqrt => v.sqrt(),
                Func::Exp => v.exp(),
                Func::Ln => v.ln(),
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Tan => v.tan(),
            }
        }
    })
}

fn eval(node: &Node, vars: &[&Jet], template: &Jet) -> Jet {
    match node {
        Node::Num(v) => template.lift(*v),
        Node::Var(i) => vars[*i].clone(),
        Node::Neg(a) => -eval(a, vars, template),
        Node::Add(a, b) => eval(a, vars, template) + eval(b, vars, template),
        Node::Sub(a, b) => eval(a, vars, template) - eval(b, vars, template),
        Node::Mul(a, b) => eval(a, vars, template) * eval(b, vars, template),
        Node::Div(a, b) => match constant(b) {
            Some(c) => eval(a, vars, template) / c,
            None => eval(a, vars, template) / eval(b, vars, template),
        },
        Node::Pow(a, b) => {
            let base = eval(a, vars, template);
            match constant(b) {
                Some(p) if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 => base.powi(p as i32),
                Some(p) => base.powf(p),
                None => (eval(b, vars, template) * base.ln()).exp(),
            }
        }
        Node::Call(f, a) => f.apply(&eval(a, vars, template)),
    }
}

/// A parsed expression in `x1..xn`, `y1..yn`.
#[derive(Clone, PartialEq)]
pub struct Expression {
    source: String,
    n: usize,
    root: Node,
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expression({:?}, n = {})", self.source, self.n)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expression {
    pub fn parse(source: &str, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Expression("dimension must be at least 1".into()));
        }
        let tokens = tokenize(source)?;
        if tokens.is_empty() {
            return Err(Error::Expression("empty expression".into()));
        }
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            n,
        };
        let root = parser.expr()?;
        if parser.pos != tokens.len() {
            return Err(parser.error("unexpected trailing input"));
        }
        Ok(Expression {
            source: source.to_string(),
            n,
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl ScalarField for Expression {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[Jet], y: &[Jet]) -> Jet {
        let vars: Vec<&Jet> = x.iter().chain(y).collect();
        eval(&self.root, &vars, &x[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{jet_at, value_at};
    use approx::assert_relative_eq;

    fn value(src: &str, x: &[f64], y: &[f64]) -> f64 {
        value_at(&Expression::parse(src, x.len()).unwrap(), x, y).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(value("1 + 2 * 3", &[0.0], &[1.0]), 7.0);
        assert_eq!(value("-x1^2", &[3.0], &[1.0]), -9.0);
        assert_eq!(value("2^3^2", &[0.0], &[1.0]), 512.0);
        assert_eq!(value("(1 + 2) * 3 - 4 / 2", &[0.0], &[1.0]), 7.0);
        assert_eq!(value("2 - 3 - 4", &[0.0], &[1.0]), -5.0);
        assert_eq!(value("1.5e2 + 2E-1", &[0.0], &[1.0]), 150.2);
    }

    #[test]
    fn variables_and_functions() {
        let v = value("0.5*(y1^2 + y2^2) - 9.8*x2", &[0.0, 2.0], &[3.0, 4.0]);
        assert_relative_eq!(v, -7.1, epsilon = 1e-14);
        let v = value("sin(pi/2) + ln(e) + sqrt(4) + exp(0) + cos(0) + tan(0)", &[0.0], &[1.0]);
        assert_relative_eq!(v, 6.0, epsilon = 1e-15);
    }

    #[test]
    fn derivatives_through_expressions() {
        let e = Expression::parse("x1 * y1^2 + x1^y1", 1).unwrap();
        let j = jet_at(&e, &[2.0], &[3.0], 2).unwrap();
        assert_relative_eq!(j.value(), 18.0 + 8.0, epsilon = 1e-13);
        assert_relative_eq!(j.partial(&[0]).unwrap(), 9.0 + 3.0 * 4.0, epsilon = 1e-13);
        assert_relative_eq!(j.partial(&[1]).unwrap(), 12.0 + 8.0 * 2f64.ln(), epsilon = 1e-13);
    }

    #[test]
    fn errors_are_reported() {
        assert!(Expression::parse("x3", 2).is_err());
        assert!(Expression::parse("z1", 2).is_err());
        assert!(Expression::parse("1 +", 1).is_err());
        assert!(Expression::parse("(1", 1).is_err());
        assert!(Expression::parse("sqrt 2", 1).is_err());
        assert!(Expression::parse("1 $ 2", 1).is_err());
        assert!(Expression::parse("", 1).is_err());
        assert!(Expression::parse("1 2", 1).is_err());
    }
}
