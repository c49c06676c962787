//! Polynomial expressions over complex variables, with conjugation.
//!
//! This is the compiler's input language: sums, differences, products,
//! squares, real scalings and complex conjugates of variables and constants.
//! Expressions live in an arena with structural sharing, so a repeated
//! subexpression is one node and compiles to one gadget.

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Var(usize),
    ConstReal(f64),
    ConstComplex(Complex64),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    ScaleReal(f64, NodeId),
    Square(NodeId),
    Conj(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum NodeKey {
    Var(usize),
    ConstReal(u64),
    ConstComplex(u64, u64),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    ScaleReal(u64, NodeId),
    Square(NodeId),
    Conj(NodeId),
}

fn key_of(n: &Node) -> NodeKey {
    match *n {
        Node::Var(i) => NodeKey::Var(i),
        Node::ConstReal(x) => NodeKey::ConstReal(x.to_bits()),
        Node::ConstComplex(z) => NodeKey::ConstComplex(z.re.to_bits(), z.im.to_bits()),
        Node::Add(a, b) => NodeKey::Add(a, b),
        Node::Sub(a, b) => NodeKey::Sub(a, b),
        Node::Mul(a, b) => NodeKey::Mul(a, b),
        Node::ScaleReal(x, a) => NodeKey::ScaleReal(x.to_bits(), a),
        Node::Square(a) => NodeKey::Square(a),
        Node::Conj(a) => NodeKey::Conj(a),
    }
}

/// Expression DAG: nodes stored child-before-parent, shared structurally.
#[derive(Debug, Clone, Default)]
pub struct Expr {
    nodes: Vec<Node>,
    interner: HashMap<NodeKey, NodeId>,
    root: NodeId,
}

impl Expr {
    pub fn new() -> Self {
        Expr::default()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn set_root(&mut self, id: NodeId) {
        assert!(id < self.nodes.len());
        self.root = id;
    }

    pub fn push(&mut self, n: Node) -> NodeId {
        let key = key_of(&n);
        if let Some(&id) = self.interner.get(&key) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(n);
        self.interner.insert(key, id);
        self.root = id;
        id
    }

    pub fn var(&mut self, i: usize) -> NodeId {
        self.push(Node::Var(i))
    }

    pub fn const_real(&mut self, x: f64) -> NodeId {
        self.push(Node::ConstReal(x))
    }

    pub fn const_complex(&mut self, z: Complex64) -> NodeId {
        if z.im == 0.0 {
            self.push(Node::ConstReal(z.re))
        } else {
            self.push(Node::ConstComplex(z))
        }
    }

    fn const_value(&self, id: NodeId) -> Option<Complex64> {
        match self.nodes[id] {
            Node::ConstReal(x) => Some(Complex64::new(x, 0.0)),
            Node::ConstComplex(z) => Some(z),
            _ => None,
        }
    }

    /// Smart constructors fold constant operands and turn multiplication by
    /// a real constant into [`Node::ScaleReal`].
    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        if let (Some(x), Some(y)) = (self.const_value(a), self.const_value(b)) {
            return self.const_complex(x + y);
        }
        self.push(Node::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        if let (Some(x), Some(y)) = (self.const_value(a), self.const_value(b)) {
            return self.const_complex(x - y);
        }
        self.push(Node::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        if let (Some(x), Some(y)) = (self.const_value(a), self.const_value(b)) {
            return self.const_complex(x * y);
        }
        if let Some(x) = self.const_value(a) {
            if x.im == 0.0 {
                return self.scale_real(x.re, b);
            }
        }
        if let Some(y) = self.const_value(b) {
            if y.im == 0.0 {
                return self.scale_real(y.re, a);
            }
        }
        self.push(Node::Mul(a, b))
    }

    pub fn scale_real(&mut self, lambda: f64, a: NodeId) -> NodeId {
        if let Some(x) = self.const_value(a) {
            return self.const_complex(lambda * x);
        }
        self.push(Node::ScaleReal(lambda, a))
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        if let Some(x) = self.const_value(a) {
            return self.const_complex(x * x);
        }
        self.push(Node::Square(a))
    }

    pub fn conj(&mut self, a: NodeId) -> NodeId {
        if let Some(x) = self.const_value(a) {
            return self.const_complex(x.conj());
        }
        self.push(Node::Conj(a))
    }

    /// z^n by square-and-multiply; n = 0 is the constant 1.
    pub fn pow(&mut self, a: NodeId, n: u32) -> NodeId {
        match n {
            0 => self.const_real(1.0),
            1 => a,
            _ => {
                let half = self.pow(a, n / 2);
                let sq = self.square(half);
                if n % 2 == 0 {
                    sq
                } else {
                    self.mul(sq, a)
                }
            }
        }
    }

    /// Copy the subtree of `other` rooted at `id` into `self`, shifting
    /// variables by `var_offset`. Returns the new root.
    pub fn import(&mut self, other: &Expr, id: NodeId, var_offset: usize) -> NodeId {
        let mut map: HashMap<NodeId, NodeId> = HashMap::new();
        for (i, n) in other.nodes.iter().enumerate().take(id + 1) {
            let new = match *n {
                Node::Var(k) => self.var(k + var_offset),
                Node::ConstReal(x) => self.const_real(x),
                Node::ConstComplex(z) => self.const_complex(z),
                Node::Add(a, b) => self.push(Node::Add(map[&a], map[&b])),
                Node::Sub(a, b) => self.push(Node::Sub(map[&a], map[&b])),
                Node::Mul(a, b) => self.push(Node::Mul(map[&a], map[&b])),
                Node::ScaleReal(x, a) => self.push(Node::ScaleReal(x, map[&a])),
                Node::Square(a) => self.push(Node::Square(map[&a])),
                Node::Conj(a) => self.push(Node::Conj(map[&a])),
            };
            map.insert(i, new);
        }
        map[&id]
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Var(i) => Some(*i),
                _ => None,
            })
            .max()
    }

    /// Evaluate on the whole DAG; `inputs[i]` feeds `Var(i)`.
    pub fn eval(&self, inputs: &[Complex64]) -> Complex64 {
        self.eval_at(self.root, inputs)
    }

    pub fn eval_at(&self, id: NodeId, inputs: &[Complex64]) -> Complex64 {
        let mut values = vec![Complex64::new(0.0, 0.0); id + 1];
        for (i, n) in self.nodes.iter().enumerate().take(id + 1) {
            values[i] = match *n {
                Node::Var(k) => inputs[k],
                Node::ConstReal(x) => Complex64::new(x, 0.0),
                Node::ConstComplex(z) => z,
                Node::Add(a, b) => values[a] + values[b],
                Node::Sub(a, b) => values[a] - values[b],
                Node::Mul(a, b) => values[a] * values[b],
                Node::ScaleReal(x, a) => x * values[a],
                Node::Square(a) => values[a] * values[a],
                Node::Conj(a) => values[a].conj(),
            };
        }
        values[id]
    }

    /// Per-node upper bound on |value| when every variable ranges over the
    /// disk |z| <= radius. Interval arithmetic on magnitudes.
    pub fn magnitude_bounds(&self, radius: f64) -> Vec<f64> {
        let mut bound = vec![0.0f64; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            bound[i] = match *n {
                Node::Var(_) => radius,
                Node::ConstReal(x) => x.abs(),
                Node::ConstComplex(z) => z.norm(),
                Node::Add(a, b) | Node::Sub(a, b) => bound[a] + bound[b],
                Node::Mul(a, b) => bound[a] * bound[b],
                Node::ScaleReal(x, a) => x.abs() * bound[a],
                Node::Square(a) => bound[a] * bound[a],
                Node::Conj(a) => bound[a],
            };
        }
        bound
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq)]
#[error("parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

/// Parse e.g. `z1^2 + 2*conj(z2) - (0.5+1i)`.
///
/// Precedence: `^` binds tightest, then unary minus, then `*`, then `+`/`-`.
/// `z` is shorthand for `z1`; `i` alone is the imaginary unit; a numeric
/// literal with an `i` suffix is imaginary.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0, expr: Expr::new() };
    let root = p.parse_sum()?;
    if p.pos != p.tokens.len() {
        return Err(ParseError { pos: p.peek_pos(), msg: "trailing input".into() });
    }
    p.expr.set_root(root);
    Ok(p.expr)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Var(usize),
    Conj,
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                out.push((Tok::Minus, i));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, i));
                i += 1;
            }
            '^' => {
                out.push((Tok::Caret, i));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.' | 'e' | 'E') {
                    // Exponent sign.
                    if (bytes[i] as char == 'e' || bytes[i] as char == 'E')
                        && i + 1 < bytes.len()
                        && matches!(bytes[i + 1] as char, '+' | '-')
                    {
                        i += 1;
                    }
                    i += 1;
                }
                let text = &src[start..i];
                let x: f64 = text
                    .parse()
                    .map_err(|e| ParseError { pos: start, msg: format!("bad number `{text}`: {e}") })?;
                if i < bytes.len() && (bytes[i] as char == 'i' || bytes[i] as char == 'j') {
                    i += 1;
                    out.push((Tok::Imag(x), start));
                } else {
                    out.push((Tok::Num(x), start));
                }
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                    i += 1;
                }
                let word = &src[start..i];
                match word {
                    "conj" => out.push((Tok::Conj, start)),
                    "i" | "j" => out.push((Tok::Imag(1.0), start)),
                    _ if word.starts_with('z') => {
                        let idx = if word.len() == 1 {
                            1
                        } else {
                            word[1..].parse::<usize>().map_err(|_| ParseError {
                                pos: start,
                                msg: format!("bad variable `{word}` (expected z, z1, z2, ...)"),
                            })?
                        };
                        if idx == 0 {
                            return Err(ParseError { pos: start, msg: "variables are 1-based".into() });
                        }
                        out.push((Tok::Var(idx - 1), start));
                    }
                    _ => {
                        return Err(ParseError { pos: start, msg: format!("unknown name `{word}`") });
                    }
                }
            }
            _ => return Err(ParseError { pos: i, msg: format!("unexpected character `{c}`") }),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    expr: Expr,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn peek_pos(&self) -> usize {
        self.tokens.get(self.pos).map(|(_, p)| *p).unwrap_or(usize::MAX)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        let pos = self.peek_pos();
        match self.next() {
            Some(t) if t == want => Ok(()),
            _ => Err(ParseError { pos, msg: format!("expected {what}") }),
        }
    }

    fn parse_sum(&mut self) -> Result<NodeId, ParseError> {
        let mut acc = self.parse_product()?;
        while let Some(tok) = self.peek() {
            match tok {
                Tok::Plus => {
                    self.pos += 1;
                    let rhs = self.parse_product()?;
                    acc = self.expr.add(acc, rhs);
                }
                Tok::Minus => {
                    self.pos += 1;
                    let rhs = self.parse_product()?;
                    acc = self.expr.sub(acc, rhs);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn parse_product(&mut self) -> Result<NodeId, ParseError> {
        let mut acc = self.parse_unary()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            let rhs = self.parse_unary()?;
            acc = self.expr.mul(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_unary(&mut self) -> Result<NodeId, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            let inner = self.parse_unary()?;
            return Ok(self.expr.scale_real(-1.0, inner));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<NodeId, ParseError> {
        let base = self.parse_atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let pos = self.peek_pos();
            match self.next() {
                Some(Tok::Num(x)) if x >= 0.0 && x.fract() == 0.0 && x <= 32.0 => {
                    Ok(self.expr.pow(base, x as u32))
                }
                _ => Err(ParseError { pos, msg: "exponent must be a small non-negative integer".into() }),
            }
        } else {
            Ok(base)
        }
    }

    fn parse_atom(&mut self) -> Result<NodeId, ParseError> {
        let pos = self.peek_pos();
        match self.next() {
            Some(Tok::Num(x)) => Ok(self.expr.const_real(x)),
            Some(Tok::Imag(x)) => Ok(self.expr.const_complex(Complex64::new(0.0, x))),
            Some(Tok::Var(i)) => Ok(self.expr.var(i)),
            Some(Tok::Conj) => {
                self.expect(Tok::LParen, "`(` after conj")?;
                let inner = self.parse_sum()?;
                self.expect(Tok::RParen, "closing `)`")?;
                Ok(self.expr.conj(inner))
            }
            Some(Tok::LParen) => {
                let inner = self.parse_sum()?;
                self.expect(Tok::RParen, "closing `)`")?;
                Ok(inner)
            }
            _ => Err(ParseError { pos, msg: "expected a value".into() }),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(e: &Expr, id: NodeId, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match e.nodes[id] {
                Node::Var(i) => write!(f, "z{}", i + 1),
                Node::ConstReal(x) => write!(f, "{x}"),
                Node::ConstComplex(z) => write!(f, "({})", crate::geom::format_complex(z)),
                Node::Add(a, b) => {
                    write!(f, "(")?;
                    go(e, a, f)?;
                    write!(f, " + ")?;
                    go(e, b, f)?;
                    write!(f, ")")
                }
                Node::Sub(a, b) => {
                    write!(f, "(")?;
                    go(e, a, f)?;
                    write!(f, " - ")?;
                    go(e, b, f)?;
                    write!(f, ")")
                }
                Node::Mul(a, b) => {
                    write!(f, "(")?;
                    go(e, a, f)?;
                    write!(f, "*")?;
                    go(e, b, f)?;
                    write!(f, ")")
                }
                Node::ScaleReal(x, a) => {
                    write!(f, "({x}*")?;
                    go(e, a, f)?;
                    write!(f, ")")
                }
                Node::Square(a) => {
                    go(e, a, f)?;
                    write!(f, "^2")
                }
                Node::Conj(a) => {
                    write!(f, "conj(")?;
                    go(e, a, f)?;
                    write!(f, ")")
                }
            }
        }
        go(self, self.root, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parse_and_eval_spec_syntax() {
        let e = parse("z1^2 + 2*conj(z2) - (0.5+1i)").unwrap();
        let got = e.eval(&[c(1.0, 1.0), c(0.0, 3.0)]);
        // (1+i)^2 + 2*(-3i) - 0.5 - i = 2i - 6i - 0.5 - i = -0.5 - 5i
        assert!((got - c(-0.5, -5.0)).norm() < 1e-12);
    }

    #[test]
    fn parse_powers_and_unary_minus() {
        let e = parse("-z^3 + z*z").unwrap();
        let z = c(2.0, 0.0);
        assert!((e.eval(&[z]) - (-z * z * z + z * z)).norm() < 1e-12);
    }

    #[test]
    fn shared_subexpressions_are_single_nodes() {
        let e = parse("z1^2 + z1^2").unwrap();
        let squares = e.nodes().iter().filter(|n| matches!(n, Node::Square(_))).count();
        assert_eq!(squares, 1);
    }

    #[test]
    fn real_constant_multiplication_becomes_scale() {
        let e = parse("2*z1").unwrap();
        assert!(matches!(e.nodes()[e.root()], Node::ScaleReal(x, _) if x == 2.0));
        let e = parse("z1*0.5").unwrap();
        assert!(matches!(e.nodes()[e.root()], Node::ScaleReal(x, _) if x == 0.5));
    }

    #[test]
    fn constant_folding() {
        let e = parse("(2+1i)*(2-1i)").unwrap();
        assert!(matches!(e.nodes()[e.root()], Node::ConstReal(x) if (x - 5.0).abs() < 1e-12));
    }

    #[test]
    fn max_var_counts() {
        assert_eq!(parse("z1+z3").unwrap().max_var(), Some(2));
        assert_eq!(parse("1.5").unwrap().max_var(), None);
    }

    #[test]
    fn parse_errors() {
        assert!(parse("z0").is_err());
        assert!(parse("z1 +").is_err());
        assert!(parse("foo(z1)").is_err());
        assert!(parse("z1^z2").is_err());
        assert!(parse("(z1").is_err());
    }

    #[test]
    fn magnitude_bounds_dominate_samples() {
        use rand::{Rng, SeedableRng};
        let e = parse("z1^2*conj(z2) - 3*z1 + (1+2i)").unwrap();
        let r = 1.3;
        let bound = e.magnitude_bounds(r)[e.root()];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let z1 = crate::geom::sample_disk(&mut rng, r);
            let z2 = crate::geom::sample_disk(&mut rng, r);
            assert!(e.eval(&[z1, z2]).norm() <= bound + 1e-9);
            let _ = rng.gen::<f64>();
        }
    }

    #[test]
    fn display_round_trips_through_parse() {
        let e = parse("z1^2 + 2*conj(z2) - (0.5+1i)").unwrap();
        let e2 = parse(&e.to_string()).unwrap();
        for _ in 0..3 {
            let inputs = [c(0.3, -0.4), c(-1.1, 0.2)];
            assert!((e.eval(&inputs) - e2.eval(&inputs)).norm() < 1e-12);
        }
    }
}
