//! Dense univariate polynomials, coefficients stored lowest degree first.

use num_traits::{Num, Signed};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Poly<T> {
    c: Vec<T>,
}

impl<T: Clone + Num> Poly<T> {
    pub fn new(mut c: Vec<T>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        Poly { c }
    }

    pub fn zero() -> Self {
        Poly { c: Vec::new() }
    }

    pub fn constant(a: T) -> Self {
        Poly::new(vec![a])
    }

    /// `a u^e`
    pub fn monomial(a: T, e: usize) -> Self {
        let mut c = vec![T::zero(); e + 1];
        c[e] = a;
        Poly::new(c)
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (usize, T)>) -> Self {
        let mut c: Vec<T> = Vec::new();
        for (e, a) in terms {
            if c.len() <= e {
                c.resize(e + 1, T::zero());
            }
            c[e] = c[e].clone() + a;
        }
        Poly::new(c)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.c
    }

    pub fn coeff(&self, e: usize) -> T {
        self.c.get(e).cloned().unwrap_or_else(T::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn lead(&self) -> Option<&T> {
        self.c.last()
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.c.iter().position(|x| !x.is_zero())
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &T)> {
        self.c.iter().enumerate().filter(|(_, a)| !a.is_zero())
    }

    pub fn eval(&self, x: &T) -> T {
        self.c
            .iter()
            .rev()
            .fold(T::zero(), |acc, a| acc * x.clone() + a.clone())
    }

    pub fn scale(&self, a: &T) -> Self {
        Poly::new(self.c.iter().map(|x| x.clone() * a.clone()).collect())
    }

    /// Multiplies by `u^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![T::zero(); k];
        c.extend(self.c.iter().cloned());
        Poly { c }
    }

    /// Divides by `u^k`; the low coefficients must vanish.
    pub fn unshift(&self, k: usize) -> Self {
        debug_assert!(self.c.iter().take(k).all(|x| x.is_zero()));
        Poly::new(self.c.iter().skip(k).cloned().collect())
    }

    pub fn derivative(&self) -> Self {
        let mut out = Vec::with_capacity(self.c.len().saturating_sub(1));
        let mut k = T::one();
        for a in self.c.iter().skip(1) {
            out.push(a.clone() * k.clone());
            k = k + T::one();
        }
        Poly::new(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut r = Poly::constant(T::one());
        for _ in 0..e {
            r = &r * self;
        }
        r
    }

    /// Euclidean division over a field: `self = q d + r` with `deg r < deg d`.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dl = d.lead().expect("division by zero polynomial").clone();
        let dd = d.c.len() - 1;
        let mut r = self.c.clone();
        if r.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut q = vec![T::zero(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let f = r[k + dd].clone() / dl.clone();
            if !f.is_zero() {
                for (i, di) in d.c.iter().enumerate() {
                    r[k + i] = r[k + i].clone() - f.clone() * di.clone();
                }
            }
            q[k] = f;
        }
        r.truncate(dd);
        (Poly::new(q), Poly::new(r))
    }
}

impl<T: Clone + Num + Signed> Poly<T> {
    /// Number of sign changes in the coefficient sequence.
    pub fn sign_changes(&self) -> usize {
        let mut last = 0i8;
        let mut n = 0;
        for a in &self.c {
            let s = if a.is_positive() {
                1
            } else if a.is_negative() {
                -1
            } else {
                0
            };
            if s != 0 {
                if last != 0 && s != last {
                    n += 1;
                }
                last = s;
            }
        }
        n
    }
}

impl<T: Clone + Num> Add for &Poly<T> {
    type Output = Poly<T>;
    fn add(self, o: &Poly<T>) -> Poly<T> {
        let n = self.c.len().max(o.c.len());
        Poly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }
}

impl<T: Clone + Num> Sub for &Poly<T> {
    type Output = Poly<T>;
    fn sub(self, o: &Poly<T>) -> Poly<T> {
        let n = self.c.len().max(o.c.len());
        Poly::new((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }
}

impl<T: Clone + Num + Neg<Output = T>> Neg for &Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        Poly {
            c: self.c.iter().map(|x| -x.clone()).collect(),
        }
    }
}

impl<T: Clone + Num> Mul for &Poly<T> {
    type Output = Poly<T>;
    fn mul(self, o: &Poly<T>) -> Poly<T> {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![T::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] = c[i + j].clone() + a.clone() * b.clone();
            }
        }
        Poly::new(c)
    }
}

impl<T: Clone + Num + fmt::Display> fmt::Display for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, a) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match e {
                0 => write!(f, "{a}")?,
                1 => write!(f, "({a})u")?,
                _ => write!(f, "({a})u^{e}")?,
            }
        }
        Ok(())
    }
}
