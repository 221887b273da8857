//! Second-order forward-mode jets: value, gradient and Hessian of a smooth
//! field propagated through arithmetic. Charts have dimension at most
//! [`MAX_DIM`]; a jet always carries the full second-order data.

use crate::linalg::C64;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub const MAX_DIM: usize = 4;

/// Scalar types jets can be built over.
pub trait JetScalar:
    Copy
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs_val(self) -> f64;
}

impl JetScalar for f64 {
    fn zero() -> f64 {
        0.0
    }
    fn one() -> f64 {
        1.0
    }
    fn from_f64(x: f64) -> f64 {
        x
    }
    fn sin(self) -> f64 {
        f64::sin(self)
    }
    fn cos(self) -> f64 {
        f64::cos(self)
    }
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn abs_val(self) -> f64 {
        self.abs()
    }
}

impl JetScalar for C64 {
    fn zero() -> C64 {
        C64::new(0.0, 0.0)
    }
    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> C64 {
        C64::new(x, 0.0)
    }
    fn sin(self) -> C64 {
        num_complex::Complex::sin(self)
    }
    fn cos(self) -> C64 {
        num_complex::Complex::cos(self)
    }
    fn exp(self) -> C64 {
        num_complex::Complex::exp(self)
    }
    fn sqrt(self) -> C64 {
        num_complex::Complex::sqrt(self)
    }
    fn abs_val(self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Jet<T> {
    pub n: usize,
    pub v: T,
    pub d: [T; MAX_DIM],
    pub h: [[T; MAX_DIM]; MAX_DIM],
}

impl<T: JetScalar> Jet<T> {
    pub fn constant(n: usize, v: T) -> Jet<T> {
        Jet {
            n,
            v,
            d: [T::zero(); MAX_DIM],
            h: [[T::zero(); MAX_DIM]; MAX_DIM],
        }
    }

    /// The jet of the coordinate function x^mu at a point.
    pub fn coord(n: usize, x: f64, mu: usize) -> Jet<T> {
        let mut j = Jet::constant(n, T::from_f64(x));
        j.d[mu] = T::one();
        j
    }

    pub fn map2(&self, other: &Jet<T>, f: impl Fn(T, T) -> T) -> Jet<T> {
        debug_assert_eq!(self.n, other.n);
        let mut out = Jet::constant(self.n, f(self.v, other.v));
        for i in 0..self.n {
            out.d[i] = f(self.d[i], other.d[i]);
            for j in 0..self.n {
                out.h[i][j] = f(self.h[i][j], other.h[i][j]);
            }
        }
        out
    }

    pub fn scale(&self, s: T) -> Jet<T> {
        let mut out = *self;
        out.v = out.v * s;
        for i in 0..self.n {
            out.d[i] = out.d[i] * s;
            for j in 0..self.n {
                out.h[i][j] = out.h[i][j] * s;
            }
        }
        out
    }

    /// Chain rule through a univariate function with given derivatives at v.
    fn chain(&self, f0: T, f1: T, f2: T) -> Jet<T> {
        let mut out = Jet::constant(self.n, f0);
        for i in 0..self.n {
            out.d[i] = f1 * self.d[i];
            for j in 0..self.n {
                out.h[i][j] = f1 * self.h[i][j] + f2 * self.d[i] * self.d[j];
            }
        }
        out
    }

    pub fn sin(&self) -> Jet<T> {
        self.chain(self.v.sin(), self.v.cos(), -self.v.sin())
    }

    pub fn cos(&self) -> Jet<T> {
        self.chain(self.v.cos(), -self.v.sin(), -self.v.cos())
    }

    pub fn exp(&self) -> Jet<T> {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn sqrt(&self) -> Jet<T> {
        let s = self.v.sqrt();
        let half = T::from_f64(0.5);
        let quarter = T::from_f64(-0.25);
        self.chain(s, half / s, quarter / (s * self.v))
    }

    pub fn recip(&self) -> Jet<T> {
        let inv = T::one() / self.v;
        self.chain(inv, -inv * inv, T::from_f64(2.0) * inv * inv * inv)
    }
}

impl Jet<f64> {
    pub fn to_complex(&self) -> Jet<C64> {
        let mut out = Jet::constant(self.n, C64::new(self.v, 0.0));
        for i in 0..self.n {
            out.d[i] = C64::new(self.d[i], 0.0);
            for j in 0..self.n {
                out.h[i][j] = C64::new(self.h[i][j], 0.0);
            }
        }
        out
    }
}

impl<T: JetScalar> Add for Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: Jet<T>) -> Jet<T> {
        self.map2(&rhs, |a, b| a + b)
    }
}

impl<T: JetScalar> Sub for Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: Jet<T>) -> Jet<T> {
        self.map2(&rhs, |a, b| a - b)
    }
}

impl<T: JetScalar> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

impl<T: JetScalar> Mul for Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: Jet<T>) -> Jet<T> {
        debug_assert_eq!(self.n, rhs.n);
        let mut out = Jet::constant(self.n, self.v * rhs.v);
        for i in 0..self.n {
            out.d[i] = self.d[i] * rhs.v + self.v * rhs.d[i];
            for j in 0..self.n {
                out.h[i][j] = self.h[i][j] * rhs.v
                    + self.d[i] * rhs.d[j]
                    + self.d[j] * rhs.d[i]
                    + self.v * rhs.h[i][j];
            }
        }
        out
    }
}

impl<T: JetScalar> Div for Jet<T> {
    type Output = Jet<T>;
    fn div(self, rhs: Jet<T>) -> Jet<T> {
        self * rhs.recip()
    }
}
