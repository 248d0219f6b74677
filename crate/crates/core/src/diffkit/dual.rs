//! Scalar arithmetic with first-order perturbations.
//!
//! `Dual<T>` carries `re + eps * ε` with `ε² = 0`. Nesting `Dual<Dual<T>>`
//! gives independent infinitesimals per level, so the coefficient of
//! `ε₁ε₂…ε_k` after evaluating `f` is the exact mixed directional derivative
//! of order `k`.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// The operations a scalar field may use when it is evaluated generically.
pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant(c: f64) -> Self;

    /// The real (unperturbed) part.
    fn value(&self) -> f64;

    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;

    /// `|x|`; the derivative is undefined (NaN) at exactly zero.
    fn abs(self) -> Self;

    fn recip(self) -> Self {
        Self::constant(1.0) / self
    }

    fn square(self) -> Self {
        self * self
    }

    /// True when every component is finite.
    fn all_finite(&self) -> bool;
}

impl Real for f64 {
    fn constant(c: f64) -> Self {
        c
    }

    fn value(&self) -> f64 {
        *self
    }

    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    fn exp(self) -> Self {
        f64::exp(self)
    }

    fn ln(self) -> Self {
        f64::ln(self)
    }

    fn abs(self) -> Self {
        f64::abs(self)
    }

    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Real> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Dual::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Dual::new(self.re * rhs.re, self.re * rhs.eps + self.eps * rhs.re)
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;

    fn div(self, rhs: Self) -> Self {
        let q = self.re / rhs.re;
        Dual::new(q, (self.eps - q * rhs.eps) / rhs.re)
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;

    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Real> Add<f64> for Dual<T> {
    type Output = Self;

    fn add(self, rhs: f64) -> Self {
        Dual::new(self.re + rhs, self.eps)
    }
}

impl<T: Real> Sub<f64> for Dual<T> {
    type Output = Self;

    fn sub(self, rhs: f64) -> Self {
        Dual::new(self.re - rhs, self.eps)
    }
}

impl<T: Real> Mul<f64> for Dual<T> {
    type Output = Self;

    fn mul(self, rhs: f64) -> Self {
        Dual::new(self.re * rhs, self.eps * rhs)
    }
}

impl<T: Real> Div<f64> for Dual<T> {
    type Output = Self;

    fn div(self, rhs: f64) -> Self {
        Dual::new(self.re / rhs, self.eps / rhs)
    }
}

impl<T: Real> Real for Dual<T> {
    fn constant(c: f64) -> Self {
        Dual::new(T::constant(c), T::constant(0.0))
    }

    fn value(&self) -> f64 {
        self.re.value()
    }

    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, self.eps / (s * 2.0))
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps * e)
    }

    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }

    fn abs(self) -> Self {
        let v = self.re.value();
        if v > 0.0 {
            self
        } else if v < 0.0 {
            -self
        } else {
            Dual::new(self.re.abs(), self.eps * f64::NAN)
        }
    }

    fn all_finite(&self) -> bool {
        self.re.all_finite() && self.eps.all_finite()
    }
}

/// Nesting depth bookkeeping: seeding variables and reading coefficients.
pub trait Nested: Real {
    const DEPTH: usize;

    /// `x + Σ_level seeds[level] ε_level`, level 0 being the outermost.
    fn seed(x: f64, seeds: &[f64]) -> Self;

    /// Coefficient of `Π_{level ∈ mask} ε_level`.
    fn coefficient(&self, mask: usize) -> f64;
}

impl Nested for f64 {
    const DEPTH: usize = 0;

    fn seed(x: f64, _seeds: &[f64]) -> Self {
        x
    }

    fn coefficient(&self, _mask: usize) -> f64 {
        *self
    }
}

impl<T: Nested> Nested for Dual<T> {
    const DEPTH: usize = T::DEPTH + 1;

    fn seed(x: f64, seeds: &[f64]) -> Self {
        Dual::new(T::seed(x, &seeds[1..]), T::constant(seeds[0]))
    }

    fn coefficient(&self, mask: usize) -> f64 {
        if mask & 1 == 1 {
            self.eps.coefficient(mask >> 1)
        } else {
            self.re.coefficient(mask >> 1)
        }
    }
}

pub type Dual1 = Dual<f64>;
pub type Dual2 = Dual<Dual<f64>>;
pub type Dual3 = Dual<Dual<Dual<f64>>>;
