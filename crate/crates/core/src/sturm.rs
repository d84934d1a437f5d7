//! Exact real-root counting and isolation over the rationals.

use crate::poly::Poly;
use crate::rational::sign;
use crate::Rational;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

type P = Poly<Rational>;

/// Positive rescaling to coprime integer coefficients (keeps every sign).
pub fn primitive(p: &P) -> P {
    if p.is_zero() {
        return P::zero();
    }
    let mut l = BigInt::one();
    for a in p.coeffs() {
        l = l.lcm(a.denom());
    }
    let mut g = BigInt::zero();
    for a in p.coeffs() {
        g = g.gcd(&(a.numer() * (&l / a.denom())));
    }
    p.scale(&Rational::new(l, g))
}

pub fn monic(p: &P) -> P {
    match p.lead() {
        Some(l) => p.scale(&(Rational::one() / l)),
        None => P::zero(),
    }
}

pub fn gcd(a: &P, b: &P) -> P {
    let (mut x, mut y) = (primitive(a), primitive(b));
    while !y.is_zero() {
        let (_, r) = x.div_rem(&y);
        x = y;
        y = primitive(&r);
    }
    monic(&x)
}

/// Yun's algorithm: `p = c * prod f_k^k` with each `f_k` squarefree and coprime.
pub fn squarefree_decomposition(p: &P) -> Vec<(P, u32)> {
    let mut out = Vec::new();
    if p.degree().unwrap_or(0) == 0 {
        return out;
    }
    let dp = p.derivative();
    let a0 = gcd(p, &dp);
    let mut b = p.div_rem(&a0).0;
    let mut c = dp.div_rem(&a0).0;
    let mut d = &c - &b.derivative();
    let mut k = 1;
    loop {
        let a = gcd(&b, &d);
        if a.degree().unwrap_or(0) > 0 {
            out.push((primitive(&a), k));
        }
        b = b.div_rem(&a).0;
        if b.degree().unwrap_or(0) == 0 {
            break;
        }
        c = d.div_rem(&a).0;
        d = &c - &b.derivative();
        k += 1;
    }
    out
}

pub fn squarefree_part(p: &P) -> P {
    let g = gcd(p, &p.derivative());
    primitive(&p.div_rem(&g).0)
}

/// Bound `B` (a power of two) with every real root in `(-B, B)`.
pub fn root_bound(p: &P) -> Rational {
    let lead = p.lead().expect("zero polynomial").abs();
    let mut m = Rational::zero();
    for a in &p.coeffs()[..p.coeffs().len() - 1] {
        let r = a.abs() / &lead;
        if r > m {
            m = r;
        }
    }
    let target = m + Rational::one();
    let mut b = Rational::one();
    while b <= target {
        b *= Rational::from_integer(BigInt::from(2));
    }
    b
}

#[derive(Clone, Debug)]
pub struct Sturm {
    seq: Vec<P>,
}

impl Sturm {
    pub fn new(p: &P) -> Self {
        assert!(!p.is_zero(), "Sturm sequence of the zero polynomial");
        let mut seq = vec![primitive(p)];
        let d = primitive(&p.derivative());
        if !d.is_zero() {
            seq.push(d);
            loop {
                let n = seq.len();
                let (_, r) = seq[n - 2].div_rem(&seq[n - 1]);
                if r.is_zero() {
                    break;
                }
                seq.push(primitive(&-&r));
            }
        }
        Sturm { seq }
    }

    pub fn poly(&self) -> &P {
        &self.seq[0]
    }

    fn count_changes(signs: impl Iterator<Item = i8>) -> usize {
        let mut last = 0;
        let mut n = 0;
        for s in signs {
            if s != 0 {
                if last != 0 && s != last {
                    n += 1;
                }
                last = s;
            }
        }
        n
    }

    pub fn variations(&self, x: &Rational) -> usize {
        Self::count_changes(self.seq.iter().map(|p| sign(&p.eval(x))))
    }

    pub fn variations_pos_inf(&self) -> usize {
        Self::count_changes(self.seq.iter().map(|p| sign(p.lead().unwrap())))
    }

    /// Distinct roots in `(a, b]`.
    pub fn count(&self, a: &Rational, b: &Rational) -> usize {
        self.variations(a).saturating_sub(self.variations(b))
    }

    /// Distinct roots in `(a, +inf)`.
    pub fn count_above(&self, a: &Rational) -> usize {
        self.variations(a).saturating_sub(self.variations_pos_inf())
    }

    /// Disjoint intervals `(lo, hi]` each holding exactly one root, sorted.
    pub fn isolate(&self, lo: &Rational, hi: &Rational) -> Vec<(Rational, Rational)> {
        let mut out = Vec::new();
        let mut stack = vec![(lo.clone(), hi.clone(), self.count(lo, hi))];
        while let Some((a, b, n)) = stack.pop() {
            match n {
                0 => {}
                1 => out.push((a, b)),
                _ => {
                    let c = self.split_point(&a, &b);
                    let left = self.count(&a, &c);
                    stack.push((c.clone(), b, n - left));
                    stack.push((a, c, left));
                }
            }
        }
        out.sort();
        out
    }

    /// A point strictly inside `(a, b)` that is not a root.
    pub fn split_point(&self, a: &Rational, b: &Rational) -> Rational {
        let w = b - a;
        for (n, d) in [(1, 2), (3, 7), (4, 7), (2, 5), (3, 5), (5, 11), (6, 11)] {
            let c = a + &w * Rational::new(BigInt::from(n), BigInt::from(d));
            if !self.seq[0].eval(&c).is_zero() {
                return c;
            }
        }
        let mut k = 13;
        loop {
            let c = a + &w * Rational::new(BigInt::from(6), BigInt::from(k));
            if !self.seq[0].eval(&c).is_zero() {
                return c;
            }
            k += 2;
        }
    }

    /// Shrinks an isolating interval `(a, b]` to width at most `w`.
    pub fn refine(&self, a: &Rational, b: &Rational, w: &Rational) -> (Rational, Rational) {
        let (mut a, mut b) = (a.clone(), b.clone());
        while &(&b - &a) > w {
            let c = self.split_point(&a, &b);
            if self.count(&a, &c) == 1 {
                b = c;
            } else {
                a = c;
            }
        }
        (a, b)
    }
}

/// Distinct positive roots of `p` (which may vanish at zero).
pub fn count_positive_roots(p: &P) -> usize {
    let v = p.valuation().unwrap_or(0);
    let p = p.unshift(v);
    if p.degree().unwrap_or(0) == 0 {
        return 0;
    }
    Sturm::new(&p).count_above(&Rational::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, q};

    fn p(c: &[i64]) -> P {
        Poly::new(c.iter().map(|&x| int(x)).collect())
    }

    fn from_roots(r: &[i64]) -> P {
        r.iter().fold(p(&[1]), |acc, &x| &acc * &p(&[-x, 1]))
    }

    #[test]
    fn counts_and_isolates_integer_roots() {
        let f = from_roots(&[-3, 1, 2, 5]);
        let s = Sturm::new(&f);
        assert_eq!(s.count_above(&int(0)), 3);
        let b = root_bound(&f);
        let iv = s.isolate(&-b.clone(), &b);
        assert_eq!(iv.len(), 4);
        for ((lo, hi), r) in iv.iter().zip([-3, 1, 2, 5]) {
            assert!(lo < &int(r) && &int(r) <= hi);
        }
    }

    #[test]
    fn refines_to_requested_width() {
        let f = p(&[-2, 0, 1]);
        let s = Sturm::new(&f);
        let (a, b) = s.refine(&int(0), &int(2), &q(1, 1 << 30));
        assert!(&b - &a <= q(1, 1 << 30));
        assert!((crate::rational::to_f64(&a) - 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn multiple_roots_counted_once() {
        let f = &from_roots(&[1, 1, 1, 3]) * &p(&[1, 0, 1]);
        assert_eq!(count_positive_roots(&f), 2);
        let dec = squarefree_decomposition(&f);
        let mults: Vec<u32> = dec.iter().map(|(_, k)| *k).collect();
        assert_eq!(mults, vec![1, 3]);
        assert_eq!(squarefree_part(&f).degree(), Some(4));
    }

    #[test]
    fn gcd_of_shared_factor() {
        let a = from_roots(&[1, 2, 4]);
        let b = from_roots(&[2, 4, 7]);
        assert_eq!(gcd(&a, &b), from_roots(&[2, 4]));
    }

    #[test]
    fn root_at_zero_excluded() {
        assert_eq!(count_positive_roots(&p(&[0, -1, 0, 1])), 1);
        assert_eq!(count_positive_roots(&p(&[0, 4])), 0);
    }
}
