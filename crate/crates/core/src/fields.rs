//! Closed-form field expressions over two coordinates.
//!
//! A [`FieldExpr`] is an immutable expression tree built from constants, the
//! two coordinates, arithmetic, integer powers, and the exponential. Fields
//! evaluate to [`Jet2`] values at a point, which is where every derivative
//! in the residual catalog comes from; there is no symbolic differentiation
//! pass. A `deriv` node requests mixed partials of a subtree; it is realized
//! by evaluating the subtree at boosted truncation orders and shifting, so
//! the result is still an exact Taylor jet of the derived function.

use crate::jets::{Jet2, JetError};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// Which coordinate a [`FieldExpr`] leaf refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// First coordinate (always printed `x`).
    First,
    /// Second coordinate (`y` or `t` in the surface syntax; one slot).
    Second,
}

#[derive(Debug)]
enum Node {
    Constant(f64),
    Coordinate(Axis),
    Add(FieldExpr, FieldExpr),
    Sub(FieldExpr, FieldExpr),
    Mul(FieldExpr, FieldExpr),
    Div(FieldExpr, FieldExpr),
    PowInt(FieldExpr, i64),
    Exp(FieldExpr),
    /// Mixed partial of the inner field, `i` in the first coordinate and
    /// `j` in the second. Not part of the surface grammar; printed for
    /// diagnostics only.
    Deriv(FieldExpr, usize, usize),
}

/// An immutable closed-form field of two variables. Cloning is cheap
/// (shared subtrees), and evaluation memoizes on shared nodes.
#[derive(Debug, Clone)]
pub struct FieldExpr {
    node: Arc<Node>,
}

/// Evaluation point: `a` is the first coordinate (x), `b` the second
/// (y for the hyperbolic-space systems, t for the evolutionary ones).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub a: f64,
    pub b: f64,
}

impl Point2 {
    pub fn new(a: f64, b: f64) -> Self {
        Point2 { a, b }
    }
}

/// Exp arguments above this value would overflow into `inf` and poison an
/// entire grid report; they become a structured error instead.
pub const EXP_ARG_LIMIT: f64 = 700.0;

/// Errors from evaluating a field at a point. Each carries the path of node
/// kinds from the root to the offending node.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    /// A divisor is exactly zero at the point.
    #[error("pole at evaluation point (node path: {path})")]
    PoleAtPoint { path: String },
    /// A divisor is within the caller-supplied guard band of zero relative
    /// to its numerator; reported only when a positive guard is in force.
    #[error("denominator within pole guard at evaluation point (node path: {path})")]
    NearPole { path: String },
    /// An `exp` argument exceeded [`EXP_ARG_LIMIT`] or an operation produced
    /// a non-finite coefficient.
    #[error("numeric overflow (node path: {path})")]
    Overflow { path: String },
    /// The requested truncation orders cannot represent the expression
    /// (for example a coordinate with zero order in its direction).
    #[error("truncation orders too small (node path: {path})")]
    Truncation { path: String },
}

fn path_string(stack: &[&'static str]) -> String {
    stack.join("/")
}

impl FieldExpr {
    fn wrap(node: Node) -> Self {
        FieldExpr { node: Arc::new(node) }
    }

    /// The constant field.
    pub fn constant(c: f64) -> Self {
        Self::wrap(Node::Constant(c))
    }

    /// The first coordinate as a field.
    pub fn coord_a() -> Self {
        Self::wrap(Node::Coordinate(Axis::First))
    }

    /// The second coordinate as a field.
    pub fn coord_b() -> Self {
        Self::wrap(Node::Coordinate(Axis::Second))
    }

    pub fn add(&self, rhs: &FieldExpr) -> Self {
        Self::wrap(Node::Add(self.clone(), rhs.clone()))
    }

    pub fn sub(&self, rhs: &FieldExpr) -> Self {
        Self::wrap(Node::Sub(self.clone(), rhs.clone()))
    }

    pub fn mul(&self, rhs: &FieldExpr) -> Self {
        Self::wrap(Node::Mul(self.clone(), rhs.clone()))
    }

    pub fn div(&self, rhs: &FieldExpr) -> Self {
        Self::wrap(Node::Div(self.clone(), rhs.clone()))
    }

    pub fn powi(&self, n: i64) -> Self {
        Self::wrap(Node::PowInt(self.clone(), n))
    }

    pub fn exp(&self) -> Self {
        Self::wrap(Node::Exp(self.clone()))
    }

    /// Multiply by a scalar constant.
    pub fn scale(&self, s: f64) -> Self {
        FieldExpr::constant(s).mul(self)
    }

    /// Negate.
    pub fn neg(&self) -> Self {
        FieldExpr::constant(0.0).sub(self)
    }

    /// The mixed partial `∂^{i+j}/∂a^i∂b^j` of this field, as a field.
    pub fn deriv(&self, i: usize, j: usize) -> Self {
        if i == 0 && j == 0 {
            return self.clone();
        }
        Self::wrap(Node::Deriv(self.clone(), i, j))
    }

    /// Compose with the point reflection `(a, b) -> (-a, -b)`.
    ///
    /// Coordinates flip sign; a derivative node picks up `(-1)^{i+j}` by the
    /// chain rule, so the returned tree evaluates to exactly `f(-a, -b)`.
    pub fn reflect(&self) -> Self {
        match &*self.node {
            Node::Constant(_) => self.clone(),
            Node::Coordinate(_) => self.neg(),
            Node::Add(l, r) => l.reflect().add(&r.reflect()),
            Node::Sub(l, r) => l.reflect().sub(&r.reflect()),
            Node::Mul(l, r) => l.reflect().mul(&r.reflect()),
            Node::Div(l, r) => l.reflect().div(&r.reflect()),
            Node::PowInt(b, n) => b.reflect().powi(*n),
            Node::Exp(a) => a.reflect().exp(),
            Node::Deriv(f, i, j) => {
                let inner = f.reflect().deriv(*i, *j);
                if (i + j) % 2 == 1 {
                    inner.neg()
                } else {
                    inner
                }
            }
        }
    }

    /// Evaluate to a Taylor jet about `p` with the given truncation orders.
    pub fn evaluate(&self, p: Point2, order_a: usize, order_b: usize) -> Result<Jet2, FieldError> {
        self.evaluate_guarded(p, order_a, order_b, 0.0)
    }

    /// Evaluate with a pole guard: any division whose denominator value is
    /// smaller than `guard·(1 + |numerator value|)` reports
    /// [`FieldError::NearPole`]. A guard of zero disables the band (an exact
    /// zero denominator is always an error).
    pub fn evaluate_guarded(
        &self,
        p: Point2,
        order_a: usize,
        order_b: usize,
        guard: f64,
    ) -> Result<Jet2, FieldError> {
        let mut memo: HashMap<(*const Node, usize, usize), Jet2> = HashMap::new();
        let mut stack: Vec<&'static str> = Vec::new();
        eval_rec(self, p, order_a, order_b, guard, &mut memo, &mut stack)
    }

    /// Plain value at a point. Orders (1,1) rather than (0,0) so coordinate
    /// leaves have room for their linear coefficient.
    pub fn value_at(&self, p: Point2) -> Result<f64, FieldError> {
        Ok(self.evaluate(p, 1, 1)?.value())
    }

    /// Render using `y` for the second coordinate.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        print_node(self, 0, 'y', &mut s);
        s
    }

    /// Render using the given letter (`'y'` or `'t'`) for the second coordinate.
    pub fn to_text_with(&self, second: char) -> String {
        let mut s = String::new();
        print_node(self, 0, second, &mut s);
        s
    }
}

impl From<f64> for FieldExpr {
    fn from(c: f64) -> Self {
        FieldExpr::constant(c)
    }
}

macro_rules! field_binop {
    ($trait:ident, $method:ident, $ctor:ident) => {
        impl std::ops::$trait for &FieldExpr {
            type Output = FieldExpr;
            fn $method(self, rhs: &FieldExpr) -> FieldExpr {
                FieldExpr::$ctor(self, rhs)
            }
        }
        impl std::ops::$trait<FieldExpr> for &FieldExpr {
            type Output = FieldExpr;
            fn $method(self, rhs: FieldExpr) -> FieldExpr {
                FieldExpr::$ctor(self, &rhs)
            }
        }
        impl std::ops::$trait<&FieldExpr> for FieldExpr {
            type Output = FieldExpr;
            fn $method(self, rhs: &FieldExpr) -> FieldExpr {
                FieldExpr::$ctor(&self, rhs)
            }
        }
        impl std::ops::$trait for FieldExpr {
            type Output = FieldExpr;
            fn $method(self, rhs: FieldExpr) -> FieldExpr {
                FieldExpr::$ctor(&self, &rhs)
            }
        }
    };
}

field_binop!(Add, add, add);
field_binop!(Sub, sub, sub);
field_binop!(Mul, mul, mul);
field_binop!(Div, div, div);

impl std::ops::Neg for &FieldExpr {
    type Output = FieldExpr;
    fn neg(self) -> FieldExpr {
        FieldExpr::neg(self)
    }
}

impl std::ops::Neg for FieldExpr {
    type Output = FieldExpr;
    fn neg(self) -> FieldExpr {
        FieldExpr::neg(&self)
    }
}

fn eval_rec(
    f: &FieldExpr,
    p: Point2,
    oa: usize,
    ob: usize,
    guard: f64,
    memo: &mut HashMap<(*const Node, usize, usize), Jet2>,
    stack: &mut Vec<&'static str>,
) -> Result<Jet2, FieldError> {
    let key = (Arc::as_ptr(&f.node), oa, ob);
    if let Some(hit) = memo.get(&key) {
        return Ok(hit.clone());
    }
    let label = match &*f.node {
        Node::Constant(_) => "const",
        Node::Coordinate(_) => "coord",
        Node::Add(..) => "add",
        Node::Sub(..) => "sub",
        Node::Mul(..) => "mul",
        Node::Div(..) => "div",
        Node::PowInt(..) => "powint",
        Node::Exp(..) => "exp",
        Node::Deriv(..) => "deriv",
    };
    stack.push(label);
    let jerr = |e: JetError, stack: &[&'static str]| match e {
        JetError::PoleAtPoint => FieldError::PoleAtPoint { path: path_string(stack) },
        JetError::NonFinite => FieldError::Overflow { path: path_string(stack) },
        JetError::TruncationTooSmall { .. } => FieldError::Truncation { path: path_string(stack) },
    };
    let out = match &*f.node {
        Node::Constant(c) => Ok(Jet2::constant(*c, oa, ob)),
        Node::Coordinate(axis) => {
            let (first, v) = match axis {
                Axis::First => (true, p.a),
                Axis::Second => (false, p.b),
            };
            Jet2::coordinate(first, v, oa, ob).map_err(|e| jerr(e, stack))
        }
        Node::Add(l, r) => {
            let l = eval_rec(l, p, oa, ob, guard, memo, stack)?;
            let r = eval_rec(r, p, oa, ob, guard, memo, stack)?;
            Ok(l.add(&r))
        }
        Node::Sub(l, r) => {
            let l = eval_rec(l, p, oa, ob, guard, memo, stack)?;
            let r = eval_rec(r, p, oa, ob, guard, memo, stack)?;
            Ok(l.sub(&r))
        }
        Node::Mul(l, r) => {
            let l = eval_rec(l, p, oa, ob, guard, memo, stack)?;
            let r = eval_rec(r, p, oa, ob, guard, memo, stack)?;
            Ok(l.mul(&r))
        }
        Node::Div(l, r) => {
            let num = eval_rec(l, p, oa, ob, guard, memo, stack)?;
            let den = eval_rec(r, p, oa, ob, guard, memo, stack)?;
            if guard > 0.0 && den.value().abs() < guard * (1.0 + num.value().abs()) {
                Err(FieldError::NearPole { path: path_string(stack) })
            } else {
                num.div(&den).map_err(|e| jerr(e, stack))
            }
        }
        Node::PowInt(b, n) => {
            let base = eval_rec(b, p, oa, ob, guard, memo, stack)?;
            if *n < 0 && guard > 0.0 {
                // The implied denominator is base^|n|; guard it like a Div
                // whose numerator is the constant 1.
                let denv = base.value().powi((-n) as i32);
                if denv.abs() < guard * 2.0 {
                    stack.pop();
                    return Err(FieldError::NearPole { path: path_string(stack) });
                }
            }
            base.powi(*n).map_err(|e| jerr(e, stack))
        }
        Node::Exp(a) => {
            let arg = eval_rec(a, p, oa, ob, guard, memo, stack)?;
            if arg.value() > EXP_ARG_LIMIT {
                Err(FieldError::Overflow { path: path_string(stack) })
            } else {
                arg.exp().map_err(|e| jerr(e, stack))
            }
        }
        Node::Deriv(inner, i, j) => {
            let boosted = eval_rec(inner, p, oa + i, ob + j, guard, memo, stack)?;
            boosted.derivative(*i, *j).map_err(|e| jerr(e, stack))
        }
    };
    stack.pop();
    let out = out?;
    if !out.is_finite() {
        return Err(FieldError::Overflow { path: path_string(stack) });
    }
    memo.insert(key, out.clone());
    Ok(out)
}

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => 0,
        Node::Mul(..) | Node::Div(..) => 1,
        Node::PowInt(..) => 2,
        _ => 3,
    }
}

fn print_node(f: &FieldExpr, parent_prec: u8, second: char, out: &mut String) {
    let prec = precedence(&f.node);
    let needs_parens = prec < parent_prec;
    if needs_parens {
        out.push('(');
    }
    match &*f.node {
        // Negative constants print with a bare minus; the grammar reads that
        // as a '-' atom, which evaluates to the same value in every position
        // a constant can occupy.
        Node::Constant(c) => out.push_str(&format!("{c}")),
        Node::Coordinate(Axis::First) => out.push('x'),
        Node::Coordinate(Axis::Second) => out.push(second),
        Node::Add(l, r) => {
            print_node(l, 0, second, out);
            out.push_str(" + ");
            print_node(r, 1, second, out);
        }
        Node::Sub(l, r) => {
            print_node(l, 0, second, out);
            out.push_str(" - ");
            print_node(r, 1, second, out);
        }
        Node::Mul(l, r) => {
            print_node(l, 1, second, out);
            out.push_str("*");
            print_node(r, 2, second, out);
        }
        Node::Div(l, r) => {
            print_node(l, 1, second, out);
            out.push_str("/");
            print_node(r, 2, second, out);
        }
        Node::PowInt(b, n) => {
            print_node(b, 3, second, out);
            out.push('^');
            out.push_str(&format!("{n}"));
        }
        Node::Exp(a) => {
            out.push_str("exp(");
            print_node(a, 0, second, out);
            out.push(')');
        }
        Node::Deriv(inner, i, j) => {
            // Diagnostic rendering only; not part of the surface grammar.
            out.push_str(&format!("d^({i},{j})["));
            print_node(inner, 0, second, out);
            out.push(']');
        }
    }
    if needs_parens {
        out.push(')');
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Parse errors carry the byte offset of the offending character
/// (whitespace-insensitive, so the offset points at the token start or at
/// end of input).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {expected}")]
    Syntax { offset: usize, expected: &'static str },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } => *offset,
            ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

/// Parse the expression grammar:
///
/// ```text
/// expr   := term (('+' | '-') term)*
/// term   := factor (('*' | '/') factor)*
/// factor := atom ('^' signed-integer)?
/// atom   := number | 'x' | 'y' | 't' | 'exp' '(' expr ')' | '(' expr ')' | '-' atom
/// ```
///
/// `y` and `t` both denote the second coordinate; whitespace is
/// insignificant. Unary minus builds `0 - atom`.
pub fn parse_field(text: &str) -> Result<FieldExpr, ParseError> {
    let mut p = Parser { s: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(ParseError::Syntax { offset: p.pos, expected: "end of input" });
    }
    Ok(e)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && (self.s[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<FieldExpr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<FieldExpr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.factor()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = acc.div(&self.factor()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<FieldExpr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let n = self.signed_integer()?;
            return Ok(base.powi(n));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<FieldExpr, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.atom()?.neg())
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() == Some(b')') {
                    self.pos += 1;
                    Ok(inner)
                } else {
                    Err(ParseError::Syntax { offset: self.pos, expected: "`)`" })
                }
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.s.len()
                    && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                match name {
                    "x" => Ok(FieldExpr::coord_a()),
                    "y" | "t" => Ok(FieldExpr::coord_b()),
                    "exp" => {
                        if self.peek() == Some(b'(') {
                            self.pos += 1;
                            let inner = self.expr()?;
                            if self.peek() == Some(b')') {
                                self.pos += 1;
                                Ok(inner.exp())
                            } else {
                                Err(ParseError::Syntax { offset: self.pos, expected: "`)`" })
                            }
                        } else {
                            Err(ParseError::Syntax {
                                offset: self.pos.min(self.s.len()),
                                expected: "`(` after `exp`",
                            })
                        }
                    }
                    _ => Err(ParseError::UnknownIdentifier {
                        offset: start,
                        name: name.to_string(),
                    }),
                }
            }
            _ => Err(ParseError::Syntax {
                offset: self.pos.min(self.s.len()),
                expected: "number, coordinate, `exp(`, `(`, or `-`",
            }),
        }
    }

    fn number(&mut self) -> Result<FieldExpr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.s.len() && self.s[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        // Optional exponent part, so printed floats like 1e-9 round-trip.
        if self.pos < self.s.len() && (self.s[self.pos] == b'e' || self.s[self.pos] == b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.s.len() && (self.s[self.pos] == b'+' || self.s[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // Not an exponent after all (e.g. `2*exp(x)` tokenizes `2`).
                self.pos = mark;
            }
        }
        let txt = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        match txt.parse::<f64>() {
            Ok(v) => Ok(FieldExpr::constant(v)),
            Err(_) => Err(ParseError::Syntax { offset: start, expected: "number" }),
        }
    }

    fn signed_integer(&mut self) -> Result<i64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos < self.s.len() && (self.s[self.pos] == b'-' || self.s[self.pos] == b'+') {
            self.pos += 1;
        }
        let digits_start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if digits_start == self.pos {
            return Err(ParseError::Syntax {
                offset: self.pos.min(self.s.len()),
                expected: "integer exponent",
            });
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .unwrap()
            .parse::<i64>()
            .map_err(|_| ParseError::Syntax { offset: start, expected: "integer exponent" })
    }
}
