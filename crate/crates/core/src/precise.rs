//! Rigorous rational enclosures: fixed-point arctangent, pi, the arc
//! function `T`, and outward-rounded interval arithmetic.

use crate::poly::Poly;
use crate::rational::{pow, round_dyadic, sign};
use crate::{Rational, Real};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

pub const DEFAULT_PREC_BITS: u32 = 256;

/// Working precision in bits, overridable through `MELNIKOV_PREC_BITS`.
pub fn prec_bits() -> u32 {
    std::env::var("MELNIKOV_PREC_BITS")
        .ok()
        .and_then(|s| s.trim().parse::<u32>().ok())
        .map(|b| b.clamp(64, 1 << 16))
        .unwrap_or(DEFAULT_PREC_BITS)
}

/// Closed rational interval `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi, "empty interval");
        Interval { lo, hi }
    }

    pub fn point(x: Rational) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(BigInt::from(2))
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// `Some(sign)` when every point has that sign (`0` only for the point zero).
    pub fn sign(&self) -> Option<i8> {
        let (a, b) = (sign(&self.lo), sign(&self.hi));
        if a == b || (a > 0) || (b < 0) {
            Some(if a > 0 {
                1
            } else if b < 0 {
                -1
            } else {
                0
            })
        } else {
            None
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let (a, b) = (&self.lo * c, &self.hi * c);
        if c.is_negative() {
            Interval { lo: b, hi: a }
        } else {
            Interval { lo: a, hi: b }
        }
    }

    /// Widens outward onto the dyadic grid `2^-bits`.
    pub fn round(&self, bits: u32) -> Self {
        Interval {
            lo: round_dyadic(&self.lo, bits, false),
            hi: round_dyadic(&self.hi, bits, true),
        }
    }

    pub fn to_f64(&self) -> f64 {
        crate::rational::to_f64(&self.mid())
    }
}

impl Add for &Interval {
    type Output = Interval;
    fn add(self, o: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }
}

impl Sub for &Interval {
    type Output = Interval;
    fn sub(self, o: &Interval) -> Interval {
        Interval {
            lo: &self.lo - &o.hi,
            hi: &self.hi - &o.lo,
        }
    }
}

impl Neg for &Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }
}

impl Mul for &Interval {
    type Output = Interval;
    fn mul(self, o: &Interval) -> Interval {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let mut lo = c[0].clone();
        let mut hi = c[0].clone();
        for v in &c[1..] {
            if *v < lo {
                lo = v.clone();
            }
            if *v > hi {
                hi = v.clone();
            }
        }
        Interval { lo, hi }
    }
}

/// Horner evaluation of an exact polynomial over an interval, rounded outward.
pub fn eval_poly(p: &Poly<Rational>, x: &Interval, bits: u32) -> Interval {
    if x.lo == x.hi {
        return Interval::point(p.eval(&x.lo));
    }
    let (xl, xh) = (fixed(&x.lo, bits, false), fixed(&x.hi, bits, true));
    let (mut lo, mut hi) = (BigInt::zero(), BigInt::zero());
    for c in p.coeffs().iter().rev() {
        let ps = [&lo * &xl, &lo * &xh, &hi * &xl, &hi * &xh];
        let pmin = ps.iter().min().unwrap();
        let pmax = ps.iter().max().unwrap();
        lo = (pmin >> bits) + fixed(c, bits, false);
        hi = -((-pmax) >> bits) + fixed(c, bits, true);
    }
    let scale = BigInt::one() << bits;
    Interval {
        lo: Rational::new(lo, scale.clone()),
        hi: Rational::new(hi, scale),
    }
}

/// `floor` or `ceil` of `r * 2^bits`.
fn fixed(r: &Rational, bits: u32, up: bool) -> BigInt {
    let scaled = r.numer() << bits;
    let (q, rem) = scaled.div_mod_floor(r.denom());
    if up && !rem.is_zero() {
        q + 1
    } else {
        q
    }
}

/// `atan(num/den)` for `0 <= num/den <= 1/2` in fixed point `2^-p`; returns
/// the scaled value and an error bound in units of `2^-p`.
fn atan_small_fixed(num: &BigInt, den: &BigInt, p: u32) -> (BigInt, BigInt) {
    let one = BigInt::one() << p;
    let x2 = (num * num * &one) / (den * den);
    let mut t = (num * &one) / den;
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    while !t.is_zero() {
        let term = &t / BigInt::from(2 * k + 1);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        t = (&t * &x2) >> p;
        k += 1;
    }
    (sum, BigInt::from(8 * (k + 2)))
}

fn fixed_to_interval(v: BigInt, err: BigInt, p: u32) -> Interval {
    let d = BigInt::one() << p;
    Interval {
        lo: Rational::new(&v - &err, d.clone()),
        hi: Rational::new(v + err, d),
    }
}

fn atan_small(x: &Rational, p: u32) -> Interval {
    let (v, e) = atan_small_fixed(x.numer(), x.denom(), p);
    fixed_to_interval(v, e, p)
}

fn cache() -> &'static Mutex<HashMap<u32, Interval>> {
    static PI: OnceLock<Mutex<HashMap<u32, Interval>>> = OnceLock::new();
    PI.get_or_init(|| Mutex::new(HashMap::new()))
}

fn atan_half(p: u32) -> Interval {
    static CACHE: OnceLock<Mutex<HashMap<u32, Interval>>> = OnceLock::new();
    let c = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = c.lock().unwrap().get(&p) {
        return v.clone();
    }
    let v = atan_small(&Rational::new(1.into(), 2.into()), p);
    c.lock().unwrap().insert(p, v.clone());
    v
}

/// Enclosure of pi of width about `2^-bits` (Machin's formula).
pub fn pi(bits: u32) -> Interval {
    if let Some(v) = cache().lock().unwrap().get(&bits) {
        return v.clone();
    }
    let p = bits + 32;
    let a = atan_small(&Rational::new(1.into(), 5.into()), p);
    let b = atan_small(&Rational::new(1.into(), 239.into()), p);
    let v =
        (&a.scale(&Rational::from_integer(16.into())) - &b.scale(&Rational::from_integer(4.into()))).round(bits + 8);
    cache().lock().unwrap().insert(bits, v.clone());
    v
}

/// Enclosure of `atan(x)` for any rational `x`.
pub fn atan(x: &Rational, bits: u32) -> Interval {
    if x.is_negative() {
        return -&atan(&-x, bits);
    }
    let p = bits + 32;
    let half = Rational::new(1.into(), 2.into());
    let one = Rational::one();
    let r = if *x > one {
        let inner = atan(&(&one / x), bits + 4);
        &pi(bits + 8).scale(&half) - &inner
    } else if *x > half {
        let y = (x - &half) / (&one + x * &half);
        &atan_half(p) + &atan_small(&y, p)
    } else {
        atan_small(x, p)
    };
    r.round(bits + 8)
}

/// Enclosure of `T(u) = pi/4 + (w/(1+w^2) - atan w)/2`, `w = u^(m-1)`.
pub fn arc_t(u: &Rational, m: u32, bits: u32) -> Interval {
    let w = pow(u, m.saturating_sub(1));
    let one = Rational::one();
    let alg = &w / (&one + &w * &w);
    let quarter = Rational::new(1.into(), 4.into());
    let half = Rational::new(1.into(), 2.into());
    let at = atan(&w, bits + 4);
    let mut r = pi(bits + 4).scale(&quarter);
    r = &r + &(&Interval::point(alg) - &at).scale(&half);
    r.round(bits + 4)
}

/// Enclosure of `T` over `[a, b]` with `0 < a <= b`, using monotonicity.
pub fn arc_t_range(iv: &Interval, m: u32, bits: u32) -> Interval {
    if m == 1 {
        return pi(bits).scale(&Rational::new(1.into(), 4.into()));
    }
    let hi = arc_t(&iv.lo, m, bits);
    let lo = arc_t(&iv.hi, m, bits);
    Interval { lo: lo.lo, hi: hi.hi }
}

/// Float evaluation of `T`; accurate to a few ulps for all `u > 0`.
pub fn arc_t_real<F: Real>(u: F, m: u32) -> F {
    let one = F::one();
    let half = one / (one + one);
    let w = u.powi(m as i32 - 1);
    if w > one {
        let v = one / w;
        half * (v / (one + v * v) + v.atan())
    } else {
        F::FRAC_PI_4() + half * (w / (one + w * w) - w.atan())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, to_f64};

    #[test]
    fn pi_enclosure_is_tight_and_correct() {
        let p = pi(256);
        assert!(to_f64(&p.lo) <= std::f64::consts::PI && std::f64::consts::PI <= to_f64(&p.hi));
        let w = p.width();
        assert!(w < Rational::new(1.into(), BigInt::one() << 240));
        // digits 30..40 of pi: 3.14159265358979323846264338327950288419716939937510
        let digits = Rational::new(
            "314159265358979323846264338327950288419716939937510".parse().unwrap(),
            BigInt::from(10).pow(50),
        );
        let eps = Rational::new(1.into(), BigInt::from(10).pow(49));
        assert!(p.lo > &digits - &eps && p.hi < &digits + &eps);
    }

    #[test]
    fn atan_matches_float() {
        for (n, d) in [(1, 7), (1, 2), (3, 4), (1, 1), (5, 2), (100, 1), (-2, 3)] {
            let x = q(n, d);
            let iv = atan(&x, 128);
            let f = (n as f64 / d as f64).atan();
            assert!((iv.to_f64() - f).abs() < 1e-15, "atan({n}/{d})");
            assert!(iv.width() < Rational::new(1.into(), BigInt::one() << 120));
        }
    }

    #[test]
    fn atan_one_is_quarter_pi() {
        let a = atan(&q(1, 1), 200);
        let p = pi(200).scale(&q(1, 4));
        assert!(a.lo <= p.hi && p.lo <= a.hi);
    }

    #[test]
    fn arc_t_float_and_exact_agree() {
        for m in [2u32, 4, 6] {
            for u in [q(1, 10), q(1, 2), q(1, 1), q(3, 2), q(4, 1)] {
                let e = arc_t(&u, m, 128).to_f64();
                let f = arc_t_real(to_f64(&u), m);
                assert!((e - f).abs() < 1e-15, "m={m} u={u}");
            }
        }
    }

    #[test]
    fn interval_poly_eval_encloses() {
        let p = Poly::new(vec![q(-1, 1), q(0, 1), q(1, 1)]);
        let iv = Interval::new(q(9, 10), q(11, 10));
        let e = eval_poly(&p, &iv, 64);
        assert!(e.lo <= q(-19, 100) && e.hi >= q(21, 100));
        assert_eq!(e.sign(), None);
        let e2 = eval_poly(&p, &Interval::new(q(2, 1), q(3, 1)), 64);
        assert_eq!(e2.sign(), Some(1));
    }

    #[test]
    fn interval_poly_eval_rounds_outward() {
        let p = Poly::new(vec![q(-1, 3), q(-7, 5), q(2, 9), q(-1, 7)]);
        let iv = Interval::new(q(-13, 10), q(-1, 3));
        let e = eval_poly(&p, &iv, 16);
        for k in 0..=20 {
            let x = &iv.lo + (&iv.hi - &iv.lo) * q(k, 20);
            let v = p.eval(&x);
            assert!(e.lo <= v && v <= e.hi);
        }
    }
}
