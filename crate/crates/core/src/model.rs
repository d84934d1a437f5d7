//! Geometry of the unperturbed center and the perturbation data.

use crate::rational::{format, parse};
use crate::{Error, Rational, Real, Result};
use num_traits::Zero;
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// Exponent `m >= 1` of the switching curve `y = x^m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CurvePower(u32);

impl CurvePower {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("curve exponent m must be >= 1".into()));
        }
        Ok(CurvePower(m))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn is_odd(self) -> bool {
        self.0 % 2 == 1
    }

    /// `k` with `m = 2k + 1` (odd) or `m = 2k` (even).
    pub fn k(self) -> u32 {
        self.0 / 2
    }

    /// `m = 1` turns the switching curve into a straight line.
    pub fn is_line(self) -> bool {
        self.0 == 1
    }
}

/// A level circle `x^2 + y^2 = h` labelled by `u`, with `h = u^2 + u^{2m}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitParam<F> {
    pub u: F,
    pub h: F,
    pub m: CurvePower,
}

impl<F: Real> OrbitParam<F> {
    pub fn from_u(u: F, m: CurvePower) -> Result<Self> {
        if !(u > F::zero()) {
            return Err(Error::Domain(format!("u must be positive, got {u}")));
        }
        Ok(OrbitParam {
            u,
            h: h_from_u(u, m),
            m,
        })
    }

    pub fn from_h(h: F, m: CurvePower) -> Result<Self> {
        Ok(OrbitParam {
            u: u_from_h(h, m)?,
            h,
            m,
        })
    }

    pub fn radius(&self) -> F {
        self.h.sqrt()
    }
}

pub fn h_from_u<F: Real>(u: F, m: CurvePower) -> F {
    u * u + u.powi(2 * m.get() as i32)
}

/// The unique `u > 0` with `u^2 + u^{2m} = h`.
pub fn u_from_h<F: Real>(h: F, m: CurvePower) -> Result<F> {
    if !(h > F::zero()) || !h.is_finite() {
        return Err(Error::Domain(format!("h must be positive and finite, got {h}")));
    }
    let f = |u: F| h_from_u(u, m) - h;
    let two = F::one() + F::one();
    // u^2 <= h and u^{2m} <= h; both terms reach h/2 at most once.
    let inv = F::one() / F::from_u32(2 * m.get()).unwrap();
    let mut hi = h.sqrt().min(h.powf(inv));
    let mut lo = (h / two).sqrt().min((h / two).powf(inv));
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > F::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= F::epsilon() * hi * two {
            break;
        }
    }
    let mut u = (lo + hi) / two;
    let m2 = F::from_u32(2 * m.get()).unwrap();
    for _ in 0..3 {
        let d = two * u + m2 * u.powi(2 * m.get() as i32 - 1);
        let next = u - f(u) / d;
        if next > lo && next < hi {
            u = next;
        }
    }
    Ok(u)
}

/// `A = (-u, (-u)^m)` and `B = (u, u^m)`.
pub fn intersection_points<F: Real>(u: F, m: CurvePower) -> Result<((F, F), (F, F))> {
    if !(u > F::zero()) {
        return Err(Error::Domain(format!("u must be positive, got {u}")));
    }
    let e = m.get() as i32;
    Ok(((-u, (-u).powi(e)), (u, u.powi(e))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    APlus,
    AMinus,
    BPlus,
    BMinus,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::APlus, Family::AMinus, Family::BPlus, Family::BMinus];

    pub fn key(self) -> &'static str {
        match self {
            Family::APlus => "a_plus",
            Family::AMinus => "a_minus",
            Family::BPlus => "b_plus",
            Family::BMinus => "b_minus",
        }
    }

    pub fn is_plus(self) -> bool {
        matches!(self, Family::APlus | Family::BPlus)
    }
}

pub type CoefMap = BTreeMap<(u32, u32), Rational>;

/// Perturbation `p^± = sum a^±_{ij} x^i y^j`, `q^± = sum b^±_{ij} x^i y^j`
/// (`+` above the curve, `-` below).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerturbationSpec {
    pub m: CurvePower,
    pub n: u32,
    pub a_plus: CoefMap,
    pub a_minus: CoefMap,
    pub b_plus: CoefMap,
    pub b_minus: CoefMap,
}

impl PerturbationSpec {
    pub fn zero(m: CurvePower, n: u32) -> Self {
        PerturbationSpec {
            m,
            n,
            a_plus: CoefMap::new(),
            a_minus: CoefMap::new(),
            b_plus: CoefMap::new(),
            b_minus: CoefMap::new(),
        }
    }

    pub fn family(&self, f: Family) -> &CoefMap {
        match f {
            Family::APlus => &self.a_plus,
            Family::AMinus => &self.a_minus,
            Family::BPlus => &self.b_plus,
            Family::BMinus => &self.b_minus,
        }
    }

    pub fn family_mut(&mut self, f: Family) -> &mut CoefMap {
        match f {
            Family::APlus => &mut self.a_plus,
            Family::AMinus => &mut self.a_minus,
            Family::BPlus => &mut self.b_plus,
            Family::BMinus => &mut self.b_minus,
        }
    }

    pub fn get(&self, f: Family, i: u32, j: u32) -> Rational {
        self.family(f).get(&(i, j)).cloned().unwrap_or_else(Rational::zero)
    }

    /// Sets a coefficient, dropping explicit zeros.
    pub fn set(&mut self, f: Family, i: u32, j: u32, v: Rational) -> Result<()> {
        if i + j > self.n {
            return Err(Error::Domain(format!("index ({i},{j}) exceeds degree n={}", self.n)));
        }
        let map = self.family_mut(f);
        if v.is_zero() {
            map.remove(&(i, j));
        } else {
            map.insert((i, j), v);
        }
        Ok(())
    }

    pub fn with(mut self, f: Family, i: u32, j: u32, v: Rational) -> Result<Self> {
        self.set(f, i, j, v)?;
        Ok(self)
    }

    /// All index pairs with `i + j <= n`, ordered by total degree then `j`.
    pub fn indices(n: u32) -> Vec<(u32, u32)> {
        (0..=n).flat_map(|s| (0..=s).map(move |j| (s - j, j))).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for f in Family::ALL {
            if let Some(((i, j), _)) = self.family(f).iter().find(|((i, j), _)| i + j > self.n) {
                return Err(Error::Domain(format!(
                    "{}[{i},{j}] exceeds degree n={}",
                    f.key(),
                    self.n
                )));
            }
        }
        Ok(())
    }

    /// `alpha * self + beta * other` (same `m`, degree is the max).
    pub fn combine(&self, alpha: &Rational, other: &Self, beta: &Rational) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::Domain("cannot combine specs with different m".into()));
        }
        let mut out = PerturbationSpec::zero(self.m, self.n.max(other.n));
        for f in Family::ALL {
            for (i, j) in PerturbationSpec::indices(out.n) {
                let v = alpha * self.get(f, i, j) + beta * other.get(f, i, j);
                out.set(f, i, j, v)?;
            }
        }
        Ok(out)
    }

    pub fn max_abs_coefficient(&self) -> Rational {
        crate::rational::max_abs(Family::ALL.iter().flat_map(|&f| self.family(f).values()))
    }

    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        obj.insert("m".into(), json!(self.m.get()));
        obj.insert("n".into(), json!(self.n));
        for f in Family::ALL {
            let list: Vec<Value> = self
                .family(f)
                .iter()
                .map(|((i, j), v)| json!([i, j, format(v)]))
                .collect();
            obj.insert(f.key().into(), Value::Array(list));
        }
        Value::Object(obj)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let field = |k: &str| -> Result<u32> {
            v.get(k)
                .and_then(Value::as_u64)
                .and_then(|x| u32::try_from(x).ok())
                .ok_or_else(|| Error::Parse(format!("missing or invalid integer field {k:?}")))
        };
        let m = CurvePower::new(field("m")?)?;
        let n = field("n")?;
        let mut spec = PerturbationSpec::zero(m, n);
        for f in Family::ALL {
            let Some(list) = v.get(f.key()) else { continue };
            let list = list
                .as_array()
                .ok_or_else(|| Error::Parse(format!("{} must be an array", f.key())))?;
            for entry in list {
                let bad = || Error::Parse(format!("{} entry must be [i, j, value]: {entry}", f.key()));
                let e = entry.as_array().filter(|e| e.len() == 3).ok_or_else(bad)?;
                let i = e[0].as_u64().ok_or_else(bad)? as u32;
                let j = e[1].as_u64().ok_or_else(bad)? as u32;
                let val = match &e[2] {
                    Value::String(s) => parse(s)?,
                    Value::Number(x) => parse(&x.to_string())?,
                    _ => return Err(bad()),
                };
                if spec.family(f).contains_key(&(i, j)) {
                    return Err(Error::Parse(format!("duplicate {}[{i},{j}]", f.key())));
                }
                spec.set(f, i, j, val)?;
            }
        }
        Ok(spec)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&v)
    }

    /// Float evaluation of `(p^±, q^±)` at `(x, y)`.
    pub fn field<F: Real>(&self, plus: bool, x: F, y: F) -> (F, F) {
        let (fa, fb) = if plus {
            (&self.a_plus, &self.b_plus)
        } else {
            (&self.a_minus, &self.b_minus)
        };
        let eval = |map: &CoefMap| {
            map.iter().fold(F::zero(), |acc, ((i, j), c)| {
                acc + F::from_f64(crate::rational::to_f64(c)).unwrap() * x.powi(*i as i32) * y.powi(*j as i32)
            })
        };
        (eval(fa), eval(fb))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn cp(m: u32) -> CurvePower {
        CurvePower::new(m).unwrap()
    }

    #[test]
    fn u_from_h_examples() {
        for m in 1..=8 {
            assert!((u_from_h(2.0f64, cp(m)).unwrap() - 1.0).abs() < 1e-14);
        }
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid + mid.powi(4) > 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((u_from_h(1.0f64, cp(2)).unwrap() - lo).abs() < 1e-14);
        let closed = ((5f64.sqrt() - 1.0) / 2.0).sqrt();
        assert!((u_from_h(1.0f64, cp(2)).unwrap() - closed).abs() < 1e-15);
        assert!(u_from_h(1e-300f64, cp(3)).unwrap() < 1e-149);
        assert!(u_from_h(0.0f64, cp(3)).is_err());
        assert!(u_from_h(-1.0f64, cp(3)).is_err());
        assert!((u_from_h(2.0f32, cp(3)).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn intersection_point_examples() {
        let (a, b) = intersection_points(1.0f64, cp(3)).unwrap();
        assert_eq!((a, b), ((-1.0, -1.0), (1.0, 1.0)));
        let (a, b) = intersection_points(1.0f64, cp(2)).unwrap();
        assert_eq!((a, b), ((-1.0, 1.0), (1.0, 1.0)));
        let (a, b) = intersection_points(0.5f64, cp(3)).unwrap();
        assert_eq!((a, b), ((-0.5, -0.125), (0.5, 0.125)));
        let h = 0.25 + 0.015625;
        assert!((b.0 * b.0 + b.1 * b.1 - h).abs() < 1e-15);
        assert!((a.0 * a.0 + a.1 * a.1 - h).abs() < 1e-15);
        assert!(intersection_points(0.0f64, cp(2)).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let s = r#"{"m":3,"n":2,"a_plus":[[1,0,"1/2"]],"a_minus":[],"b_plus":[[0,0,"0.25"],[1,1,-3]],"b_minus":[]}"#;
        let spec = PerturbationSpec::from_json_str(s).unwrap();
        assert_eq!(spec.get(Family::APlus, 1, 0), q(1, 2));
        assert_eq!(spec.get(Family::BPlus, 0, 0), q(1, 4));
        assert_eq!(spec.get(Family::BPlus, 1, 1), q(-3, 1));
        let back = PerturbationSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn spec_json_errors() {
        assert!(matches!(
            PerturbationSpec::from_json_str(r#"{"m":3,"n":1,"b_plus":[[2,0,"1"]]}"#),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            PerturbationSpec::from_json_str(r#"{"m":0,"n":1}"#),
            Err(Error::Domain(_))
        ));
        let e = PerturbationSpec::from_json_str("{\"m\":3,\n\"n\":}").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(PerturbationSpec::from_json_str(r#"{"m":3,"n":1,"b_plus":[[0,0]]}"#).is_err());
    }
}
