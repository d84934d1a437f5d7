//! Parsing, formatting and small helpers for exact rationals.

use crate::{Error, Rational, Result};
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, integers and decimals with an optional exponent (`"-1.25e-3"`).
pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().map_err(|_| bad())?;
        let d: BigInt = b.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (ip, fp) = body.split_once('.').unwrap_or((body, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{ip}{fp}").parse().map_err(|_| bad())?;
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        Rational::from_integer(digits * Pow::pow(&ten, scale as u32))
    } else {
        Rational::new(digits, Pow::pow(&ten, (-scale) as u32))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// `"p/q"` or `"p"`.
pub fn format(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact value of a finite float.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::Domain(format!("non-finite value {x}")))
}

pub fn pow(r: &Rational, e: u32) -> Rational {
    Pow::pow(r, e)
}

/// Smallest dyadic `k / 2^bits` that is `>= r` (`up`) or `<= r` (`!up`).
pub fn round_dyadic(r: &Rational, bits: u32, up: bool) -> Rational {
    let scale = BigInt::one() << bits;
    let scaled = r.numer() * &scale;
    let (qt, rem) = scaled.div_mod_floor(r.denom());
    let k = if up && !rem.is_zero() { qt + 1 } else { qt };
    Rational::new(k, scale)
}

/// A dyadic rational close to `x`, for human-chosen inputs like `0.6`.
pub fn nearby(x: f64, bits: u32) -> Result<Rational> {
    let r = from_f64(x)?;
    Ok(round_dyadic(&r, bits, false))
}

/// Simplest rational within the closed interval `[lo, hi]` (Stern-Brocot descent).
pub fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    debug_assert!(lo <= hi);
    if lo.is_negative() && hi.is_positive() || lo.is_zero() || hi.is_zero() {
        return Rational::zero();
    }
    if hi.is_negative() {
        return -simplest_between(&-hi, &-lo);
    }
    let fl = lo.floor();
    if fl == *lo {
        return fl;
    }
    if fl.clone() + Rational::one() <= *hi {
        return fl + Rational::one();
    }
    let rest = simplest_between(&(Rational::one() / (hi - &fl)), &(Rational::one() / (lo - &fl)));
    fl + Rational::one() / rest
}

pub fn sign(r: &Rational) -> i8 {
    match r.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

pub fn max_abs<'a>(it: impl IntoIterator<Item = &'a Rational>) -> Rational {
    it.into_iter()
        .map(|r| r.abs())
        .fold(Rational::zero(), |a, b| if b > a { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse("2/3").unwrap(), q(2, 3));
        assert_eq!(parse("-4/6").unwrap(), q(-2, 3));
        assert_eq!(parse("0.125").unwrap(), q(1, 8));
        assert_eq!(parse("-1.5e-3").unwrap(), q(-3, 2000));
        assert_eq!(parse("7").unwrap(), int(7));
        assert_eq!(parse("2E2").unwrap(), int(200));
        assert_eq!(parse(".5").unwrap(), q(1, 2));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
        assert!(parse("").is_err());
        assert!(parse("1..2").is_err());
    }

    #[test]
    fn formats_round_trip() {
        for r in [q(2, 3), q(-7, 5), int(0), int(-12)] {
            assert_eq!(parse(&format(&r)).unwrap(), r);
        }
        assert_eq!(format(&q(4, 2)), "2");
    }

    #[test]
    fn dyadic_rounding_brackets() {
        let third = q(1, 3);
        let lo = round_dyadic(&third, 20, false);
        let hi = round_dyadic(&third, 20, true);
        assert!(lo < third && third < hi);
        assert_eq!(&hi - &lo, Rational::new(BigInt::one(), BigInt::one() << 20));
        assert_eq!(round_dyadic(&q(1, 4), 10, true), q(1, 4));
    }

    #[test]
    fn simplest_rational_in_interval() {
        assert_eq!(simplest_between(&q(3, 10), &q(4, 10)), q(1, 3));
        assert_eq!(simplest_between(&q(-1, 2), &q(1, 2)), int(0));
        assert_eq!(simplest_between(&q(7, 5), &q(3, 2)), q(3, 2));
        assert_eq!(simplest_between(&q(-4, 10), &q(-3, 10)), q(-1, 3));
    }
}
