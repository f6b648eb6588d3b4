//! Scalar fields that game losses are written against.
//!
//! A loss is written once, generically over [`Scalar`], and can then be
//! evaluated with plain `f64`, first-order [`Dual1`] numbers (gradients) or
//! hyper-dual [`Dual2`] numbers (exact second derivatives). The hyper-dual
//! type is simply a dual number whose components are themselves duals.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

/// Failure while evaluating a loss.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("non-finite value{} at {point:?}", along(coordinate))]
    NonFinite { coordinate: Option<usize>, point: Vec<f64> },
    #[error("division by zero in loss of player {player} at {point:?}")]
    DivisionByZero { player: usize, point: Vec<f64> },
    #[error("expected {expected} parameters, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("derivatives above second order are not supported")]
    OrderTooHigh,
}

fn along(coordinate: &Option<usize>) -> String {
    coordinate.map_or(String::new(), |k| format!(" along coordinate {k}"))
}

/// Arithmetic contract for loss evaluation.
pub trait Scalar:
    Copy
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    /// Real part.
    fn value(&self) -> f64;
    /// True when every component is finite.
    fn all_finite(&self) -> bool;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan(self) -> Self;
    fn exp(self) -> Self;
    fn powi(self, n: i32) -> Self;

    /// Evaluates `obj` at `w` using the field implementation for `Self`.
    fn eval(obj: &dyn Objective, w: &[Self]) -> Result<Self, EvalError>;

    #[doc(hidden)]
    fn eval_lifted(obj: &dyn Objective, w: &[Dual<Self>]) -> Result<Dual<Self>, EvalError>;

    #[doc(hidden)]
    fn eval_lifted2(obj: &dyn Objective, w: &[Dual<Dual<Self>>]) -> Result<Dual<Dual<Self>>, EvalError>;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn atan(self) -> Self {
        f64::atan(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn eval(obj: &dyn Objective, w: &[Self]) -> Result<Self, EvalError> {
        obj.eval_real(w)
    }
    fn eval_lifted(obj: &dyn Objective, w: &[Dual<Self>]) -> Result<Dual<Self>, EvalError> {
        obj.eval_dual(w)
    }
    fn eval_lifted2(obj: &dyn Objective, w: &[Dual2]) -> Result<Dual2, EvalError> {
        obj.eval_hyper(w)
    }
}

/// Dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

/// First-order dual over the reals: (value, derivative).
pub type Dual1 = Dual<f64>;

/// Hyper-dual number: (value, d/dy, d/dx, d²/dxdy) laid out as
/// `re.re`, `re.eps`, `eps.re`, `eps.eps`. Seed `x` through the outer
/// `eps` and `y` through the inner one.
pub type Dual2 = Dual<Dual<f64>>;

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Self { re, eps }
    }

    pub fn constant(re: T) -> Self {
        Self { re, eps: T::zero() }
    }

    pub fn variable(re: T) -> Self {
        Self { re, eps: T::one() }
    }
}

impl Dual2 {
    /// Hyper-dual with independent seeds for the two directions.
    pub fn seeded(value: f64, dx: f64, dy: f64) -> Self {
        Dual::new(Dual::new(value, dy), Dual::new(dx, 0.0))
    }

    pub fn d_dx(&self) -> f64 {
        self.eps.re
    }

    pub fn d_dy(&self) -> f64 {
        self.re.eps
    }

    pub fn d2_dxdy(&self) -> f64 {
        self.eps.eps
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.re / o.re;
        Dual::new(q, (self.eps - q * o.eps) / o.re)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(x: f64) -> Self {
        Dual::constant(T::from_f64(x))
    }
    fn value(&self) -> f64 {
        self.re.value()
    }
    fn all_finite(&self) -> bool {
        self.re.all_finite() && self.eps.all_finite()
    }
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.re.cos() * self.eps)
    }
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -(self.re.sin() * self.eps))
    }
    fn atan(self) -> Self {
        let denom = T::one() + self.re * self.re;
        Dual::new(self.re.atan(), self.eps / denom)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, e * self.eps)
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        let d = T::from_f64(n as f64) * self.re.powi(n - 1);
        Dual::new(self.re.powi(n), d * self.eps)
    }
    fn eval(obj: &dyn Objective, w: &[Self]) -> Result<Self, EvalError> {
        T::eval_lifted(obj, w)
    }
    fn eval_lifted(obj: &dyn Objective, w: &[Dual<Self>]) -> Result<Dual<Self>, EvalError> {
        T::eval_lifted2(obj, w)
    }
    fn eval_lifted2(_obj: &dyn Objective, _w: &[Dual<Dual<Self>>]) -> Result<Dual<Dual<Self>>, EvalError> {
        Err(EvalError::OrderTooHigh)
    }
}

/// An evaluator usable with every supported scalar field.
///
/// Implemented automatically for every [`ScalarFn`]; call sites that are
/// generic over `S: Scalar` should go through [`Scalar::eval`].
pub trait Objective: Send + Sync {
    fn eval_real(&self, w: &[f64]) -> Result<f64, EvalError>;
    fn eval_dual(&self, w: &[Dual1]) -> Result<Dual1, EvalError>;
    fn eval_hyper(&self, w: &[Dual2]) -> Result<Dual2, EvalError>;
}

/// A function written once over any [`Scalar`].
pub trait ScalarFn: Send + Sync {
    fn call<S: Scalar>(&self, w: &[S]) -> Result<S, EvalError>;
}

impl<F: ScalarFn> Objective for F {
    fn eval_real(&self, w: &[f64]) -> Result<f64, EvalError> {
        self.call(w)
    }
    fn eval_dual(&self, w: &[Dual1]) -> Result<Dual1, EvalError> {
        self.call(w)
    }
    fn eval_hyper(&self, w: &[Dual2]) -> Result<Dual2, EvalError> {
        self.call(w)
    }
}
