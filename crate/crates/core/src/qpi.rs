//! Numbers `a + b*pi` with rational `a`, `b`.

use crate::precise::{pi, Interval};
use crate::rational::{format, parse, to_f64};
use crate::{Error, Rational, Result};
use num_traits::Zero;
use serde_json::{json, Value};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct QPi {
    pub rat: Rational,
    pub pi: Rational,
}

impl QPi {
    pub fn new(rat: Rational, pi: Rational) -> Self {
        QPi { rat, pi }
    }

    pub fn rat(r: Rational) -> Self {
        QPi {
            rat: r,
            pi: Rational::zero(),
        }
    }

    pub fn pi_mul(r: Rational) -> Self {
        QPi {
            rat: Rational::zero(),
            pi: r,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.pi.is_zero()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        QPi {
            rat: &self.rat * c,
            pi: &self.pi * c,
        }
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.rat) + std::f64::consts::PI * to_f64(&self.pi)
    }

    pub fn enclose(&self, bits: u32) -> Interval {
        let p = pi(bits).scale(&self.pi);
        Interval {
            lo: p.lo + &self.rat,
            hi: p.hi + &self.rat,
        }
    }

    /// Exact sign (pi is irrational, so refinement always terminates).
    pub fn sign(&self) -> i8 {
        if self.pi.is_zero() {
            return crate::rational::sign(&self.rat);
        }
        let mut bits = 64;
        loop {
            if let Some(s) = self.enclose(bits).sign() {
                return s;
            }
            bits *= 2;
        }
    }

    /// `"p/q"` when rational, `{"pi": "p/q"}` when a pure multiple of pi,
    /// otherwise `{"rat": .., "pi": ..}`.
    pub fn to_json(&self) -> Value {
        if self.pi.is_zero() {
            json!(format(&self.rat))
        } else if self.rat.is_zero() {
            json!({ "pi": format(&self.pi) })
        } else {
            json!({ "rat": format(&self.rat), "pi": format(&self.pi) })
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => Ok(QPi::rat(parse(s)?)),
            Value::Number(n) => Ok(QPi::rat(parse(&n.to_string())?)),
            Value::Object(o) => {
                let get = |k: &str| -> Result<Rational> {
                    match o.get(k) {
                        None => Ok(Rational::zero()),
                        Some(Value::String(s)) => parse(s),
                        Some(Value::Number(n)) => parse(&n.to_string()),
                        Some(other) => Err(Error::Parse(format!("bad {k} field {other}"))),
                    }
                };
                Ok(QPi {
                    rat: get("rat")?,
                    pi: get("pi")?,
                })
            }
            _ => Err(Error::Parse(format!("expected a rational or pi-multiple, got {v}"))),
        }
    }
}

impl Add for &QPi {
    type Output = QPi;
    fn add(self, o: &QPi) -> QPi {
        QPi {
            rat: &self.rat + &o.rat,
            pi: &self.pi + &o.pi,
        }
    }
}

impl Sub for &QPi {
    type Output = QPi;
    fn sub(self, o: &QPi) -> QPi {
        QPi {
            rat: &self.rat - &o.rat,
            pi: &self.pi - &o.pi,
        }
    }
}

impl Neg for &QPi {
    type Output = QPi;
    fn neg(self) -> QPi {
        QPi {
            rat: -&self.rat,
            pi: -&self.pi,
        }
    }
}

impl Mul<&Rational> for &QPi {
    type Output = QPi;
    fn mul(self, c: &Rational) -> QPi {
        self.scale(c)
    }
}

impl std::fmt::Display for QPi {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.rat.is_zero(), self.pi.is_zero()) {
            (_, true) => write!(f, "{}", format(&self.rat)),
            (true, false) => write!(f, "{}*pi", format(&self.pi)),
            (false, false) => write!(f, "{} + {}*pi", format(&self.rat), format(&self.pi)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn sign_near_pi_multiples() {
        assert_eq!(QPi::new(q(-355, 113), q(1, 1)).sign(), -1);
        assert_eq!(QPi::new(q(-22, 7), q(1, 1)).sign(), -1);
        assert_eq!(QPi::new(q(-333, 106), q(1, 1)).sign(), 1);
        assert_eq!(QPi::new(q(0, 1), q(0, 1)).sign(), 0);
        assert_eq!(QPi::new(q(3, 1), q(-1, 1)).sign(), -1);
    }

    #[test]
    fn json_forms() {
        let a = QPi::pi_mul(q(1, 2));
        assert_eq!(a.to_json(), json!({"pi": "1/2"}));
        assert_eq!(QPi::from_json(&a.to_json()).unwrap(), a);
        let b = QPi::new(q(3, 4), q(-2, 1));
        assert_eq!(QPi::from_json(&b.to_json()).unwrap(), b);
        assert_eq!(QPi::rat(q(5, 1)).to_json(), json!("5"));
    }
}
