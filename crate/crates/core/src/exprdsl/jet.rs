//! Second-order forward jets: value + gradient + Hessian propagated exactly
//! through arithmetic, so downstream residual checks see machine-precision
//! derivatives instead of finite-difference noise.

use serde::Serialize;

use crate::scalar::{lit, Real};

/// Truncated second-order Taylor coefficient bundle of a scalar function of
/// `nvars` real variables at a point.
///
/// The Hessian is stored as a packed lower triangle, which makes the symmetry
/// invariant structural rather than numeric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Jet2<T> {
    value: T,
    grad: Vec<T>,
    /// Row-major lower triangle: entry (i, j) with i >= j sits at i(i+1)/2 + j.
    hess: Vec<T>,
}

#[inline]
fn tri(i: usize, j: usize) -> usize {
    debug_assert!(i >= j);
    i * (i + 1) / 2 + j
}

impl<T: Real> Jet2<T> {
    pub fn constant(value: T, nvars: usize) -> Self {
        Jet2 {
            value,
            grad: vec![T::zero(); nvars],
            hess: vec![T::zero(); nvars * (nvars + 1) / 2],
        }
    }

    /// The jet of the coordinate function `u_index` at a point where it takes
    /// `value`.
    pub fn variable(value: T, index: usize, nvars: usize) -> Self {
        let mut jet = Self::constant(value, nvars);
        jet.grad[index] = T::one();
        jet
    }

    pub fn nvars(&self) -> usize {
        self.grad.len()
    }

    pub fn value(&self) -> T {
        self.value
    }

    pub fn gradient(&self) -> &[T] {
        &self.grad
    }

    /// Hessian entry (i, j); the two index orders read the same packed slot.
    pub fn hessian(&self, i: usize, j: usize) -> T {
        if i >= j {
            self.hess[tri(i, j)]
        } else {
            self.hess[tri(j, i)]
        }
    }

    /// Hessian as a dense row-major `nvars x nvars` buffer (exactly symmetric
    /// because both mirror entries are read from the same slot).
    pub fn hessian_full(&self) -> Vec<T> {
        let n = self.nvars();
        let mut out = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.hessian(i, j);
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        Jet2 {
            value: -self.value,
            grad: self.grad.iter().map(|&g| -g).collect(),
            hess: self.hess.iter().map(|&h| -h).collect(),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        Jet2 {
            value: self.value * c,
            grad: self.grad.iter().map(|&g| g * c).collect(),
            hess: self.hess.iter().map(|&h| h * c).collect(),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let n = self.nvars();
        debug_assert_eq!(n, rhs.nvars());
        let mut grad = Vec::with_capacity(n);
        for i in 0..n {
            grad.push(self.grad[i] * rhs.value + self.value * rhs.grad[i]);
        }
        let mut hess = Vec::with_capacity(self.hess.len());
        for i in 0..n {
            for j in 0..=i {
                hess.push(
                    self.hess[tri(i, j)] * rhs.value
                        + self.grad[i] * rhs.grad[j]
                        + self.grad[j] * rhs.grad[i]
                        + self.value * rhs.hess[tri(i, j)],
                );
            }
        }
        Jet2 {
            value: self.value * rhs.value,
            grad,
            hess,
        }
    }

    pub fn div(&self, rhs: &Self) -> Result<Self, String> {
        if rhs.value == T::zero() {
            return Err("division by zero".to_string());
        }
        Ok(self.mul(&rhs.recip()))
    }

    fn recip(&self) -> Self {
        let inv = T::one() / self.value;
        let d1 = -inv * inv;
        let d2 = lit::<T>(2.0) * inv * inv * inv;
        self.chain(inv, d1, d2)
    }

    /// Composes a smooth univariate function with this jet given its value and
    /// first two derivatives at `self.value`.
    fn chain(&self, f: T, d1: T, d2: T) -> Self {
        let n = self.nvars();
        let grad: Vec<T> = self.grad.iter().map(|&g| d1 * g).collect();
        let mut hess = Vec::with_capacity(self.hess.len());
        for i in 0..n {
            for j in 0..=i {
                hess.push(d2 * self.grad[i] * self.grad[j] + d1 * self.hess[tri(i, j)]);
            }
        }
        Jet2 {
            value: f,
            grad,
            hess,
        }
    }

    pub fn sin(&self) -> Self {
        let (s, c) = (self.value.sin(), self.value.cos());
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = (self.value.sin(), self.value.cos());
        self.chain(c, -s, -c)
    }

    pub fn tan(&self) -> Result<Self, String> {
        let c = self.value.cos();
        if c == T::zero() {
            return Err("tangent of an odd multiple of pi/2".to_string());
        }
        let t = self.value.tan();
        let sec2 = T::one() / (c * c);
        Ok(self.chain(t, sec2, lit::<T>(2.0) * t * sec2))
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Result<Self, String> {
        if self.value <= T::zero() {
            return Err(format!("log of non-positive value {}", self.value));
        }
        let inv = T::one() / self.value;
        Ok(self.chain(self.value.ln(), inv, -inv * inv))
    }

    pub fn sqrt(&self) -> Result<Self, String> {
        if self.value < T::zero() {
            return Err(format!("sqrt of negative value {}", self.value));
        }
        if self.value == T::zero() {
            // Derivative blows up; only the exact-constant-zero case is smooth.
            if self.grad.iter().all(|g| *g == T::zero()) && self.hess.iter().all(|h| *h == T::zero())
            {
                return Ok(Self::constant(T::zero(), self.nvars()));
            }
            return Err("sqrt is not differentiable at zero".to_string());
        }
        let r = self.value.sqrt();
        let d1 = lit::<T>(0.5) / r;
        let d2 = lit::<T>(-0.25) / (r * self.value);
        Ok(self.chain(r, d1, d2))
    }

    pub fn abs(&self) -> Result<Self, String> {
        if self.value == T::zero() {
            if self.grad.iter().all(|g| *g == T::zero()) && self.hess.iter().all(|h| *h == T::zero())
            {
                return Ok(Self::constant(T::zero(), self.nvars()));
            }
            return Err("abs is not differentiable at zero".to_string());
        }
        let s = if self.value > T::zero() {
            T::one()
        } else {
            -T::one()
        };
        Ok(self.chain(self.value.abs(), s, T::zero()))
    }

    /// Integer power by repeated multiplication; negative exponents go through
    /// the reciprocal (which requires a nonzero base).
    pub fn powi(&self, n: i64) -> Result<Self, String> {
        if n == 0 {
            return Ok(Self::constant(T::one(), self.nvars()));
        }
        if n < 0 {
            if self.value == T::zero() {
                return Err("zero raised to a negative power".to_string());
            }
            return self.powi(-n).map(|j| j.recip());
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.mul(self);
        }
        Ok(acc)
    }

    /// Real power; restricted to positive bases to stay clear of branch cuts.
    pub fn powf(&self, r: T) -> Result<Self, String> {
        if self.value <= T::zero() {
            return Err(format!(
                "non-integer power of non-positive base {}",
                self.value
            ));
        }
        let f = self.value.powf(r);
        let d1 = r * self.value.powf(r - T::one());
        let d2 = r * (r - T::one()) * self.value.powf(r - lit::<T>(2.0));
        Ok(self.chain(f, d1, d2))
    }

    fn zip(&self, rhs: &Self, op: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.nvars(), rhs.nvars());
        Jet2 {
            value: op(self.value, rhs.value),
            grad: self
                .grad
                .iter()
                .zip(&rhs.grad)
                .map(|(&a, &b)| op(a, b))
                .collect(),
            hess: self
                .hess
                .iter()
                .zip(&rhs.hess)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }
}
