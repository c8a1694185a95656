//! Truncated bivariate Taylor-jet arithmetic.
//!
//! A [`Jet2`] stores the Taylor coefficients of a smooth function of two
//! variables about a fixed expansion point, truncated at independent orders
//! in each coordinate. Arithmetic on jets is exact arithmetic on truncated
//! series, so every mixed partial derivative extracted from a composite jet
//! is the mathematically exact derivative of the composite function, up to
//! floating-point rounding. This is what lets residuals of differential
//! equations be evaluated without any discretization error.

use thiserror::Error;

/// Errors produced by jet construction and arithmetic.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    /// A coefficient or derivative beyond the truncation order was requested,
    /// or a constructor needs at least one order in a direction that has none.
    #[error("truncation order too small: requested ({req_a},{req_b}) from a jet of orders ({order_a},{order_b})")]
    TruncationTooSmall {
        req_a: usize,
        req_b: usize,
        order_a: usize,
        order_b: usize,
    },
    /// Division by a jet whose value at the expansion point is exactly zero.
    /// Signals evaluation on the zero set of the divisor.
    #[error("division by a jet vanishing at the expansion point")]
    PoleAtPoint,
    /// An operation produced a non-finite coefficient (overflow in `exp`).
    #[error("non-finite jet coefficient produced")]
    NonFinite,
}

/// Truncated bivariate Taylor expansion of a real function.
///
/// Entry `(i, j)` of the coefficient array is `(1/(i!·j!))·∂^{i+j}f/∂a^i∂b^j`
/// evaluated at the expansion point, for `0 ≤ i ≤ order_a`, `0 ≤ j ≤ order_b`.
/// Storage is dense rectangular: the derivative demand of the equation
/// catalog is much deeper in the first coordinate than the second, so a
/// total-degree triangle would waste exactly the entries we need most.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    order_a: usize,
    order_b: usize,
    /// Row-major: `c[i*(order_b+1) + j]` is entry `(i, j)`.
    c: Vec<f64>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Jet2 {
    /// Jet of the constant function `c`.
    pub fn constant(c: f64, order_a: usize, order_b: usize) -> Self {
        let mut j = Self::zeros(order_a, order_b);
        j.c[0] = c;
        j
    }

    /// Jet of the first or second coordinate function at the given value.
    ///
    /// Requires order at least 1 in the chosen direction; otherwise the unit
    /// linear coefficient has nowhere to live and the jet would silently
    /// misrepresent the coordinate as a constant.
    pub fn coordinate(
        first: bool,
        value: f64,
        order_a: usize,
        order_b: usize,
    ) -> Result<Self, JetError> {
        let needed = if first { (1, 0) } else { (0, 1) };
        if (first && order_a == 0) || (!first && order_b == 0) {
            return Err(JetError::TruncationTooSmall {
                req_a: needed.0,
                req_b: needed.1,
                order_a,
                order_b,
            });
        }
        let mut j = Self::zeros(order_a, order_b);
        j.c[0] = value;
        let idx = if first { order_b + 1 } else { 1 };
        j.c[idx] = 1.0;
        Ok(j)
    }

    fn zeros(order_a: usize, order_b: usize) -> Self {
        Jet2 {
            order_a,
            order_b,
            c: vec![0.0; (order_a + 1) * (order_b + 1)],
        }
    }

    /// Build a jet from an explicit row-major coefficient array
    /// (`coeffs[i*(order_b+1)+j]` is entry `(i,j)`).
    ///
    /// # Panics
    /// Panics when the array length does not match the orders.
    pub fn from_coeffs(order_a: usize, order_b: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(
            coeffs.len(),
            (order_a + 1) * (order_b + 1),
            "coefficient array length must match orders"
        );
        Jet2 {
            order_a,
            order_b,
            c: coeffs,
        }
    }

    /// Truncation order in the first coordinate.
    pub fn order_a(&self) -> usize {
        self.order_a
    }

    /// Truncation order in the second coordinate.
    pub fn order_b(&self) -> usize {
        self.order_b
    }

    /// Raw Taylor coefficient `(i, j)`, i.e. the mixed partial divided by `i!·j!`.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        assert!(i <= self.order_a && j <= self.order_b, "coefficient index out of range");
        self.c[i * (self.order_b + 1) + j]
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.c[i * (self.order_b + 1) + j]
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.c[i * (self.order_b + 1) + j]
    }

    /// Value of the function at the expansion point (the `(0,0)` entry).
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// The raw mixed partial `∂^{i+k}f/∂a^i∂b^k`, i.e. `i!·k!` times coefficient `(i,k)`.
    pub fn partial(&self, i: usize, k: usize) -> Result<f64, JetError> {
        if i > self.order_a || k > self.order_b {
            return Err(JetError::TruncationTooSmall {
                req_a: i,
                req_b: k,
                order_a: self.order_a,
                order_b: self.order_b,
            });
        }
        Ok(factorial(i) * factorial(k) * self.at(i, k))
    }

    /// True when every stored coefficient is finite.
    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    fn assert_same_orders(&self, other: &Jet2) {
        assert!(
            self.order_a == other.order_a && self.order_b == other.order_b,
            "jet arithmetic requires identical truncation orders: ({},{}) vs ({},{})",
            self.order_a,
            self.order_b,
            other.order_a,
            other.order_b
        );
    }

    /// Entry-wise sum.
    pub fn add(&self, other: &Jet2) -> Jet2 {
        self.assert_same_orders(other);
        let mut out = self.clone();
        for (o, r) in out.c.iter_mut().zip(&other.c) {
            *o += r;
        }
        out
    }

    /// Entry-wise difference.
    pub fn sub(&self, other: &Jet2) -> Jet2 {
        self.assert_same_orders(other);
        let mut out = self.clone();
        for (o, r) in out.c.iter_mut().zip(&other.c) {
            *o -= r;
        }
        out
    }

    /// Multiply every coefficient by a scalar.
    pub fn scale(&self, s: f64) -> Jet2 {
        let mut out = self.clone();
        for o in out.c.iter_mut() {
            *o *= s;
        }
        out
    }

    /// Truncated Cauchy product. Orders are tiny, so the direct quadruple
    /// loop is exact, deterministic, and fast; no transform tricks.
    pub fn mul(&self, other: &Jet2) -> Jet2 {
        self.assert_same_orders(other);
        let mut out = Self::zeros(self.order_a, self.order_b);
        for i in 0..=self.order_a {
            for j in 0..=self.order_b {
                let lhs = self.at(i, j);
                if lhs == 0.0 {
                    continue;
                }
                for m in 0..=self.order_a - i {
                    for n in 0..=self.order_b - j {
                        *out.at_mut(i + m, j + n) += lhs * other.at(m, n);
                    }
                }
            }
        }
        out
    }

    /// Truncated quotient, solving `q·g = f` coefficient by coefficient in
    /// row-major order. Errors only when the divisor's value at the expansion
    /// point is exactly zero; near-zero policy belongs to callers that know
    /// the scale of the surrounding expression.
    pub fn div(&self, other: &Jet2) -> Result<Jet2, JetError> {
        self.assert_same_orders(other);
        let g00 = other.at(0, 0);
        if g00 == 0.0 {
            return Err(JetError::PoleAtPoint);
        }
        let mut q = Self::zeros(self.order_a, self.order_b);
        for i in 0..=self.order_a {
            for j in 0..=self.order_b {
                let mut acc = self.at(i, j);
                for k in 0..=i {
                    for l in 0..=j {
                        if k == i && l == j {
                            continue;
                        }
                        acc -= q.at(k, l) * other.at(i - k, j - l);
                    }
                }
                *q.at_mut(i, j) = acc / g00;
            }
        }
        if !q.is_finite() {
            return Err(JetError::NonFinite);
        }
        Ok(q)
    }

    /// Integer power via binary exponentiation; negative exponents route
    /// through [`Jet2::div`] and so can report a pole.
    pub fn powi(&self, n: i64) -> Result<Jet2, JetError> {
        if n < 0 {
            let pos = self.powi(-n)?;
            return Jet2::constant(1.0, self.order_a, self.order_b).div(&pos);
        }
        let mut result = Jet2::constant(1.0, self.order_a, self.order_b);
        let mut base = self.clone();
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        if !result.is_finite() {
            return Err(JetError::NonFinite);
        }
        Ok(result)
    }

    /// Exponential of a jet via the differential recurrence `h' = f'·h`.
    ///
    /// Row 0 (no first-coordinate derivatives) is filled from the
    /// second-coordinate recurrence; rows `i ≥ 1` from the first-coordinate
    /// one. Each entry references only entries with strictly smaller first
    /// index or, in row 0, smaller second index, so a single row-major pass
    /// suffices and truncation commutes with the recurrence exactly.
    pub fn exp(&self) -> Result<Jet2, JetError> {
        let mut h = Self::zeros(self.order_a, self.order_b);
        let v = self.at(0, 0).exp();
        if !v.is_finite() {
            return Err(JetError::NonFinite);
        }
        *h.at_mut(0, 0) = v;
        for j in 1..=self.order_b {
            let mut acc = 0.0;
            for n in 1..=j {
                acc += n as f64 * self.at(0, n) * h.at(0, j - n);
            }
            *h.at_mut(0, j) = acc / j as f64;
        }
        for i in 1..=self.order_a {
            for j in 0..=self.order_b {
                let mut acc = 0.0;
                for m in 1..=i {
                    for n in 0..=j {
                        acc += m as f64 * self.at(m, n) * h.at(i - m, j - n);
                    }
                }
                *h.at_mut(i, j) = acc / i as f64;
            }
        }
        if !h.is_finite() {
            return Err(JetError::NonFinite);
        }
        Ok(h)
    }

    /// Jet of the mixed partial `∂^{i+j}f/∂a^i∂b^j`, with truncation orders
    /// reduced by `(i, j)`. The shifted coefficients pick up the factor
    /// `(m+i)!(n+j)!/(m!·n!)` that converts between the two normalizations.
    pub fn derivative(&self, i: usize, j: usize) -> Result<Jet2, JetError> {
        if i > self.order_a || j > self.order_b {
            return Err(JetError::TruncationTooSmall {
                req_a: i,
                req_b: j,
                order_a: self.order_a,
                order_b: self.order_b,
            });
        }
        let mut out = Self::zeros(self.order_a - i, self.order_b - j);
        for m in 0..=self.order_a - i {
            for n in 0..=self.order_b - j {
                let w = factorial(m + i) / factorial(m) * (factorial(n + j) / factorial(n));
                *out.at_mut(m, n) = w * self.at(m + i, n + j);
            }
        }
        Ok(out)
    }

    /// Drop coefficients beyond the given orders. Exact: a truncated Taylor
    /// expansion restricted to lower orders is the lower-order expansion.
    pub fn truncate(&self, order_a: usize, order_b: usize) -> Result<Jet2, JetError> {
        if order_a > self.order_a || order_b > self.order_b {
            return Err(JetError::TruncationTooSmall {
                req_a: order_a,
                req_b: order_b,
                order_a: self.order_a,
                order_b: self.order_b,
            });
        }
        let mut out = Self::zeros(order_a, order_b);
        for i in 0..=order_a {
            for j in 0..=order_b {
                *out.at_mut(i, j) = self.at(i, j);
            }
        }
        Ok(out)
    }
}

/// Truncate two jets to their shared orders so they can be combined.
/// Needed when derivative jets of different depths meet in one expression.
pub fn align(a: &Jet2, b: &Jet2) -> (Jet2, Jet2) {
    let oa = a.order_a.min(b.order_a);
    let ob = a.order_b.min(b.order_b);
    (
        a.truncate(oa, ob).expect("align truncates downward"),
        b.truncate(oa, ob).expect("align truncates downward"),
    )
}

/// Default truncation order in the first (spatial) coordinate. The deepest
/// composite residual consumes six first-coordinate derivatives of a
/// manifold function; seven leaves headroom.
pub const DEFAULT_ORDER_A: usize = 7;
/// Default truncation order in the second coordinate; the catalog never
/// needs more than two derivatives there, three leaves headroom.
pub const DEFAULT_ORDER_B: usize = 3;
