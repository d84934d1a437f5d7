//! Exact closed forms of the arc integrals
//! `J_{i,j}(h) = int_{L+} x^i y^j dx` (upper arc, from `A` to `B`) and
//! `I_{i,j}(h) = int_{L-} x^i y^j dx` (lower arc, from `B` to `A`),
//! both clockwise on the circle `x^2 + y^2 = h = u^2 + u^{2m}`.

use crate::model::CurvePower;
use crate::poly::Poly;
use crate::precise::{arc_t, arc_t_real, pi, Interval};
use crate::rational::{format, int, parse, q};
use crate::{Error, Rational, Real, Result};
use num_traits::Zero;
use serde_json::{json, Value};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

/// Base functions of `u` that every integral reduces to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    /// `1`
    Unit,
    /// `2u`
    J00,
    /// `(pi/2) h` (odd `m`)
    J01,
    /// `-(2/3) u^{3m}` (odd `m`)
    J11,
    /// `pi h - 2 h T(u)` (even `m`)
    I01,
    /// `T(u)` (even `m`)
    ArcT,
}

impl Generator {
    pub fn tag(self) -> &'static str {
        match self {
            Generator::Unit => "Unit",
            Generator::J00 => "J00",
            Generator::J01 => "J01",
            Generator::J11 => "J11",
            Generator::I01 => "I01",
            Generator::ArcT => "ArcT",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        Ok(match s {
            "Unit" => Generator::Unit,
            "J00" => Generator::J00,
            "J01" => Generator::J01,
            "J11" => Generator::J11,
            "I01" => Generator::I01,
            "ArcT" => Generator::ArcT,
            _ => return Err(Error::Parse(format!("unknown generator {s:?}"))),
        })
    }

    pub fn eval<F: Real>(self, u: F, m: CurvePower) -> F {
        let h = crate::model::h_from_u(u, m);
        let two = F::one() + F::one();
        match self {
            Generator::Unit => F::one(),
            Generator::J00 => two * u,
            Generator::J01 => F::FRAC_PI_2() * h,
            Generator::J11 => -(two / (two + F::one())) * u.powi(3 * m.get() as i32),
            Generator::I01 => F::PI() * h - two * h * arc_t_real(u, m.get()),
            Generator::ArcT => arc_t_real(u, m.get()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    /// Upper arc `L+`, integrals `J`.
    Plus,
    /// Lower arc `L-`, integrals `I`.
    Minus,
}

impl Side {
    pub fn sign(self) -> i64 {
        match self {
            Side::Plus => 1,
            Side::Minus => -1,
        }
    }
}

/// One summand `c h^hp u^up g(u)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub c: Rational,
    pub h: u32,
    pub u: u32,
    pub g: Generator,
}

/// A normalized sum of [`Term`]s: one coefficient per `(hp, up, g)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntegralExpr {
    terms: BTreeMap<(u32, u32, Generator), Rational>,
}

impl IntegralExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(c: Rational, h: u32, u: u32, g: Generator) -> Self {
        let mut e = Self::zero();
        e.push(c, h, u, g);
        e
    }

    fn push(&mut self, c: Rational, h: u32, u: u32, g: Generator) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry((h, u, g)).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&(h, u, g));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        self.terms.iter().map(|(&(h, u, g), c)| Term { c: c.clone(), h, u, g })
    }

    pub fn coefficient(&self, h: u32, u: u32, g: Generator) -> Rational {
        self.terms.get(&(h, u, g)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (&(h, u, g), c) in &o.terms {
            r.push(c.clone(), h, u, g);
        }
        r
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut r = Self::zero();
        for (&(h, u, g), a) in &self.terms {
            r.push(a * c, h, u, g);
        }
        r
    }

    /// Multiplies by `h`.
    pub fn mul_h(&self) -> Self {
        IntegralExpr {
            terms: self
                .terms
                .iter()
                .map(|(&(h, u, g), c)| ((h + 1, u, g), c.clone()))
                .collect(),
        }
    }

    pub fn eval<F: Real>(&self, u: F, m: CurvePower) -> F {
        let h = crate::model::h_from_u(u, m);
        self.terms.iter().fold(F::zero(), |acc, (&(hp, up, g), c)| {
            let c = F::from_f64(crate::rational::to_f64(c)).unwrap();
            acc + c * h.powi(hp as i32) * u.powi(up as i32) * g.eval(u, m)
        })
    }

    /// Expands `h = u^2 + u^{2m}` and the generators into
    /// `rat(u) + pi * pi(u) + T(u) * arc(u)`.
    pub fn canonical(&self, m: CurvePower) -> Canonical {
        let mut out = Canonical::default();
        let hpoly = h_poly(m);
        let mm = m.get() as usize;
        for (&(hp, up, g), c) in &self.terms {
            let up = up as usize;
            let base = hpoly.pow(hp);
            let hk1 = hpoly.pow(hp + 1);
            match g {
                Generator::Unit => out.rat = &out.rat + &base.shift(up).scale(c),
                Generator::J00 => out.rat = &out.rat + &base.shift(up + 1).scale(&(c * int(2))),
                Generator::J11 => out.rat = &out.rat + &base.shift(up + 3 * mm).scale(&(c * q(-2, 3))),
                Generator::J01 => out.pi = &out.pi + &hk1.shift(up).scale(&(c * q(1, 2))),
                Generator::I01 => {
                    out.pi = &out.pi + &hk1.shift(up).scale(c);
                    out.arc = &out.arc + &hk1.shift(up).scale(&(c * int(-2)));
                }
                Generator::ArcT => out.arc = &out.arc + &base.shift(up).scale(c),
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms()
            .map(|t| json!({"c": format(&t.c), "h": t.h, "u": t.u, "g": t.g.tag()}))
            .collect();
        json!({ "terms": terms })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let list = v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("expected {\"terms\": [...]}".into()))?;
        let mut e = Self::zero();
        for t in list {
            let bad = || Error::Parse(format!("bad term {t}"));
            let c = parse(t.get("c").and_then(Value::as_str).ok_or_else(bad)?)?;
            let h = t.get("h").and_then(Value::as_u64).ok_or_else(bad)? as u32;
            let u = t.get("u").and_then(Value::as_u64).ok_or_else(bad)? as u32;
            let g = Generator::from_tag(t.get("g").and_then(Value::as_str).ok_or_else(bad)?)?;
            e.push(c, h, u, g);
        }
        Ok(e)
    }
}

/// `rat(u) + pi * pi(u) + T(u) * arc(u)` with rational polynomials.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Canonical {
    pub rat: Poly<Rational>,
    pub pi: Poly<Rational>,
    pub arc: Poly<Rational>,
}

impl Canonical {
    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.pi.is_zero() && self.arc.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        Canonical {
            rat: &self.rat + &o.rat,
            pi: &self.pi + &o.pi,
            arc: &self.arc + &o.arc,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Canonical {
            rat: &self.rat - &o.rat,
            pi: &self.pi - &o.pi,
            arc: &self.arc - &o.arc,
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Canonical {
            rat: self.rat.scale(c),
            pi: self.pi.scale(c),
            arc: self.arc.scale(c),
        }
    }

    pub fn mul_poly(&self, p: &Poly<Rational>) -> Self {
        Canonical {
            rat: &self.rat * p,
            pi: &self.pi * p,
            arc: &self.arc * p,
        }
    }

    /// Rigorous enclosure of the value at a rational point `u > 0`.
    pub fn enclose(&self, u: &Rational, m: CurvePower, bits: u32) -> Interval {
        let mut out = Interval::point(self.rat.eval(u));
        if !self.pi.is_zero() {
            out = &out + &pi(bits).scale(&self.pi.eval(u));
        }
        if !self.arc.is_zero() {
            out = &out + &arc_t(u, m.get(), bits).scale(&self.arc.eval(u));
        }
        out
    }

    /// Value at a float `u`, computed from a tight rational enclosure so
    /// that cancellation between large terms costs nothing.
    pub fn eval_exact(&self, u: f64, m: CurvePower) -> Result<f64> {
        let ur = crate::rational::from_f64(u)?;
        Ok(self.enclose(&ur, m, 128).to_f64())
    }
}

/// `h(u) = u^2 + u^{2m}` as a polynomial.
pub fn h_poly(m: CurvePower) -> Poly<Rational> {
    Poly::from_terms([(2, int(1)), (2 * m.get() as usize, int(1))])
}

/// `int x^a y^b dx`-boundary contribution `[x^a y^b]` from Green's formula:
/// `(1 - (-1)^{a+mb}) u^{a+mb}` on `L+`, negated on `L-`.
fn boundary(a: u32, b: u32, m: CurvePower, side: Side) -> IntegralExpr {
    let e = a + m.get() * b;
    if e % 2 == 0 {
        return IntegralExpr::zero();
    }
    IntegralExpr::term(int(2 * side.sign()), 0, e, Generator::Unit)
}

/// `J_{00}, J_{10}, J_{01}, J_{11}` (or the `I` analogues).
pub fn base_integral(i: u32, j: u32, m: CurvePower, side: Side) -> IntegralExpr {
    assert!(i <= 1 && j <= 1);
    let s = int(side.sign());
    match (i, j, m.is_odd()) {
        (0, 0, _) => IntegralExpr::term(s, 0, 0, Generator::J00),
        (1, 0, _) => IntegralExpr::zero(),
        (0, 1, true) => IntegralExpr::term(int(1), 0, 0, Generator::J01),
        (1, 1, true) => IntegralExpr::term(s, 0, 0, Generator::J11),
        (0, 1, false) => match side {
            Side::Plus => IntegralExpr::term(int(2), 1, 0, Generator::ArcT),
            Side::Minus => IntegralExpr::term(int(1), 0, 0, Generator::I01),
        },
        (1, 1, false) => IntegralExpr::zero(),
        _ => unreachable!(),
    }
}

/// All eight base integrals as `((i, j), side, expr)`.
pub fn base_integrals(m: CurvePower) -> Vec<((u32, u32), Side, IntegralExpr)> {
    let mut out = Vec::new();
    for side in [Side::Plus, Side::Minus] {
        for (i, j) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            out.push(((i, j), side, base_integral(i, j, m, side)));
        }
    }
    out
}

type Key = (u32, u32, u32, Side);

fn memo() -> &'static Mutex<HashMap<Key, Arc<IntegralExpr>>> {
    static MEMO: OnceLock<Mutex<HashMap<Key, Arc<IntegralExpr>>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Closed form of `J_{i,j}` (`Side::Plus`) or `I_{i,j}` (`Side::Minus`).
///
/// Lowers `j` by two with
/// `(i+j+1) J_{i,j} = j h J_{i,j-2} + [x^{i+1} y^j]`
/// until `j <= 1`, then `i` with
/// `(i+j+1) J_{i,j} = (i-1) h J_{i-2,j} - [x^{i-1} y^{j+2}]`.
pub fn reduce(i: u32, j: u32, m: CurvePower, side: Side) -> Arc<IntegralExpr> {
    let key = (i, j, m.get(), side);
    if let Some(e) = memo().lock().unwrap().get(&key) {
        return e.clone();
    }
    let e = if i <= 1 && j <= 1 {
        base_integral(i, j, m, side)
    } else if j >= 2 {
        reduce(i, j - 2, m, side)
            .mul_h()
            .scale(&int(j as i64))
            .add(&boundary(i + 1, j, m, side))
            .scale(&q(1, (i + j + 1) as i64))
    } else {
        reduce(i - 2, j, m, side)
            .mul_h()
            .scale(&int(i as i64 - 1))
            .add(&boundary(i - 1, j + 2, m, side).scale(&int(-1)))
            .scale(&q(1, (i + j + 1) as i64))
    };
    let e = Arc::new(e);
    memo().lock().unwrap().insert(key, e.clone());
    e
}

pub fn reduce_j(i: u32, j: u32, m: CurvePower) -> Arc<IntegralExpr> {
    reduce(i, j, m, Side::Plus)
}

pub fn reduce_i(i: u32, j: u32, m: CurvePower) -> Arc<IntegralExpr> {
    reduce(i, j, m, Side::Minus)
}

/// `I_{i,j}` predicted from `J_{i,j}` by the odd-`m` reflection
/// `(x, y) -> (-x, -y)`: `I_{i,j} = (-1)^{i+j+1} J_{i,j}`.
pub fn odd_symmetry_image(i: u32, j: u32, m: CurvePower) -> Result<IntegralExpr> {
    if !m.is_odd() {
        return Err(Error::Domain("reflection symmetry needs odd m".into()));
    }
    let s = if (i + j) % 2 == 0 { -1 } else { 1 };
    Ok(reduce_j(i, j, m).scale(&int(s)))
}

/// `J_{i+2,j} + J_{i,j+2} - h J_{i,j}` in canonical form (zero when the
/// identity holds exactly).
pub fn pythagoras_defect(i: u32, j: u32, m: CurvePower, side: Side) -> Canonical {
    let lhs = reduce(i + 2, j, m, side).add(&reduce(i, j + 2, m, side));
    let rhs = reduce(i, j, m, side).mul_h();
    lhs.add(&rhs.scale(&int(-1))).canonical(m)
}

/// `|J_{i+2,j}(h) + J_{i,j+2}(h) - h J_{i,j}(h)|` from the closed forms.
pub fn verify_pythagoras<F: Real>(i: u32, j: u32, h: F, m: CurvePower) -> Result<F> {
    let u = crate::model::u_from_h(h, m)?;
    let a = reduce_j(i + 2, j, m).eval(u, m);
    let b = reduce_j(i, j + 2, m).eval(u, m);
    let c = reduce_j(i, j, m).eval(u, m);
    Ok((a + b - h * c).abs())
}
