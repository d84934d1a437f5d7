//! Certified counting of the zeros of `M(u)` on `(0, inf)`.
//!
//! Purely rational parts go through exact Sturm sequences. Anything with pi
//! or the arc function is handled by interval subdivision: a piece is
//! discarded when the enclosure of `M` excludes zero and accepted as one
//! simple zero when `M'` is sign-definite and the endpoint signs differ. The
//! two unbounded ends are closed off with truncated series whose remainders
//! are bounded by the alternating-series estimate.

use crate::abelian::{h_poly, Canonical};
use crate::melnikov::MelnikovExpansion;
use crate::model::CurvePower;
use crate::poly::Poly;
use crate::precise::{arc_t, arc_t_range, eval_poly, pi, prec_bits, Interval};
use crate::qpi::QPi;
use crate::rational::{format, int, q, to_f64};
use crate::sturm::{gcd, squarefree_decomposition, squarefree_part, Sturm};
use crate::{Error, Rational, Result};
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;

type P = Poly<Rational>;

const MAX_DEPTH: u32 = 160;
const MAX_PIECES: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Multiplicity {
    /// `M'` is sign-definite on the interval (or the exact multiplicity is 1).
    Simple,
    Odd,
    Even,
}

impl Multiplicity {
    pub fn as_str(self) -> &'static str {
        match self {
            Multiplicity::Simple => "simple-certified",
            Multiplicity::Odd => "odd",
            Multiplicity::Even => "even",
        }
    }

    pub fn changes_sign(self) -> bool {
        self != Multiplicity::Even
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rigor {
    Exact,
    IntervalCertified,
    Heuristic,
}

impl fmt::Display for Rigor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rigor::Exact => "exact",
            Rigor::IntervalCertified => "interval-certified",
            Rigor::Heuristic => "heuristic",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootInterval {
    pub lo: Rational,
    pub hi: Rational,
    pub multiplicity: Multiplicity,
    /// Exact multiplicity when it is known.
    pub order: Option<u32>,
}

impl RootInterval {
    pub fn mid(&self) -> f64 {
        to_f64(&((&self.lo + &self.hi) / int(2)))
    }

    pub fn lo_f64(&self) -> f64 {
        to_f64(&self.lo)
    }

    pub fn hi_f64(&self) -> f64 {
        to_f64(&self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        to_f64(&self.lo) <= x && x <= to_f64(&self.hi)
    }
}

#[derive(Clone, Debug)]
pub struct ZeroReport {
    /// Disjoint and sorted.
    pub intervals: Vec<RootInterval>,
    pub rigor: Rigor,
    /// No zero lies beyond this point.
    pub search_bound: Rational,
    /// Even `m`: the Rolle bound `Z(M2) + Z(M0) + 1`, when it is certified.
    pub rolle_upper: Option<usize>,
    pub notes: Vec<String>,
}

impl ZeroReport {
    pub fn count(&self) -> usize {
        self.intervals.len()
    }

    pub fn simple_count(&self) -> usize {
        self.intervals
            .iter()
            .filter(|r| r.multiplicity == Multiplicity::Simple)
            .count()
    }

    /// Zeros where `M` changes sign.
    pub fn odd_count(&self) -> usize {
        self.intervals.iter().filter(|r| r.multiplicity.changes_sign()).count()
    }

    pub fn is_certified(&self) -> bool {
        self.rigor != Rigor::Heuristic
    }

    pub fn approx_zeros(&self) -> Vec<f64> {
        self.intervals.iter().map(RootInterval::mid).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "count": self.count(),
            "simpleCount": self.simple_count(),
            "intervals": self.intervals.iter().map(|r| json!({
                "lo": format(&r.lo),
                "hi": format(&r.hi),
                "approx": r.mid(),
                "multiplicityParity": r.multiplicity.as_str(),
                "multiplicity": r.order,
            })).collect::<Vec<_>>(),
            "rigor": self.rigor.to_string(),
            "searchBound": to_f64(&self.search_bound),
            "rolleUpperBound": self.rolle_upper,
            "notes": self.notes,
        })
    }
}

/// `rat + pi * pi_part + T * arc`, the arc term only for even `m`.
#[derive(Clone, Debug)]
struct Target {
    m: u32,
    rat: P,
    pi: P,
    arc: P,
}

impl Target {
    fn degree(&self) -> usize {
        [&self.rat, &self.pi, &self.arc]
            .iter()
            .filter_map(|p| p.degree())
            .max()
            .unwrap_or(0)
    }
}

fn qpi_valuation(a: &P, b: &P) -> Option<usize> {
    match (a.valuation(), b.valuation()) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

fn reverse(p: &P, d: usize) -> P {
    Poly::from_terms(p.terms().map(|(i, c)| (d - i, c.clone())))
}

fn unit() -> Interval {
    Interval::new(-Rational::one(), Rational::one())
}

fn intersect(a: &Interval, b: &Interval) -> Interval {
    let lo = if a.lo > b.lo { a.lo.clone() } else { b.lo.clone() };
    let hi = if a.hi < b.hi { a.hi.clone() } else { b.hi.clone() };
    if lo <= hi {
        Interval::new(lo, hi)
    } else {
        a.clone()
    }
}

fn recip_pos(x: &Interval, bits: u32) -> Interval {
    Interval::new(Rational::one() / &x.hi, Rational::one() / &x.lo).round(bits)
}

/// Truncated series `G(x) = A(x) + pi B(x) + theta * R(x)` (with `|theta| <= 1`)
/// equal to `F / x^v` on `[0, x0]`; nonvanishing near `0` by construction.
struct LocalSeries {
    a: P,
    b: P,
    rem: P,
}

impl LocalSeries {
    fn enclose(&self, x: &Interval, bits: u32) -> Interval {
        let mut g = eval_poly(&self.a, x, bits);
        if !self.b.is_zero() {
            g = &g + &(&pi(bits) * &eval_poly(&self.b, x, bits));
        }
        if !self.rem.is_zero() {
            let r = eval_poly(&self.rem, x, bits);
            let mag = if r.lo.abs() > r.hi.abs() {
                r.lo.abs()
            } else {
                r.hi.abs()
            };
            g = &g + &unit().scale(&mag);
        }
        g
    }

    /// Largest `2^-j <= 1/2` with `G` nonvanishing on `[0, 2^-j]`.
    fn certify(&self, bits: u32) -> Option<Rational> {
        let mut x0 = q(1, 2);
        for _ in 0..400 {
            let g = self.enclose(&Interval::new(Rational::zero(), x0.clone()), bits);
            if matches!(g.sign(), Some(s) if s != 0) {
                return Some(x0);
            }
            x0 /= int(2);
        }
        None
    }
}

fn build_local(a0: P, b0: P, arc: &P, series: impl Fn(usize) -> (P, usize, Rational)) -> LocalSeries {
    if arc.is_zero() {
        let v = qpi_valuation(&a0, &b0).expect("nonzero target");
        return LocalSeries {
            a: a0.unshift(v),
            b: b0.unshift(v),
            rem: P::zero(),
        };
    }
    let va = arc.valuation().unwrap();
    let mut kk = 1;
    loop {
        let (t, e, c) = series(kk);
        let a = &a0 + &(arc * &t);
        if let Some(v) = qpi_valuation(&a, &b0) {
            if v < e + va {
                return LocalSeries {
                    a: a.unshift(v),
                    b: b0.unshift(v),
                    rem: arc.shift(e).unshift(v).scale(&c),
                };
            }
        }
        kk += 1;
    }
}

impl Target {
    /// Rational part of the arc series at `0`, without the constant `pi/4`,
    /// through `k = K`; the next exponent and its coefficient.
    fn near_zero(&self) -> LocalSeries {
        let d = (self.m - 1) as usize;
        let b0 = &self.pi + &self.arc.scale(&q(1, 4));
        build_local(self.rat.clone(), b0, &self.arc, |kk| {
            let t = Poly::from_terms((1..=kk).map(|k| {
                let s = if k % 2 == 0 { 1 } else { -1 };
                ((2 * k + 1) * d, q(s * k as i64, 2 * k as i64 + 1))
            }));
            (t, (2 * kk + 3) * d, q(kk as i64 + 1, 2 * kk as i64 + 3))
        })
    }

    /// The same in `s = 1/u` after multiplying by `s^D`.
    fn near_infinity(&self) -> LocalSeries {
        let d = (self.m - 1) as usize;
        let deg = self.degree();
        let arc = reverse(&self.arc, deg);
        build_local(reverse(&self.rat, deg), reverse(&self.pi, deg), &arc, |kk| {
            let t = Poly::from_terms((0..=kk).map(|k| {
                let s = if k % 2 == 0 { 1 } else { -1 };
                ((2 * k + 1) * d, q(s * (k as i64 + 1), 2 * k as i64 + 1))
            }));
            (t, (2 * kk + 3) * d, q(kk as i64 + 2, 2 * kk as i64 + 3))
        })
    }
}

struct Engine<'a> {
    t: &'a Target,
    d_rat: P,
    d_pi: P,
    d_arc: P,
    /// `-(m-1) u^{3m} arc(u)` over `h^2` gives `arc * T'`.
    t_num: P,
    h2: P,
    bits: u32,
    arc_memo: RefCell<HashMap<(Rational, u32), Interval>>,
}

impl<'a> Engine<'a> {
    fn new(t: &'a Target, bits: u32) -> Self {
        let cp = CurvePower::new(t.m).expect("m >= 1");
        let h = h_poly(cp);
        let t_num = if t.arc.is_zero() {
            P::zero()
        } else {
            t.arc.shift(3 * t.m as usize).scale(&-int(t.m as i64 - 1))
        };
        Engine {
            t,
            d_rat: t.rat.derivative(),
            d_pi: t.pi.derivative(),
            d_arc: t.arc.derivative(),
            t_num,
            h2: &h * &h,
            bits,
            arc_memo: RefCell::new(HashMap::new()),
        }
    }

    fn arc_at(&self, x: &Rational, bits: u32) -> Interval {
        let key = (x.clone(), bits);
        if let Some(v) = self.arc_memo.borrow().get(&key) {
            return v.clone();
        }
        let v = arc_t(x, self.t.m, bits);
        self.arc_memo.borrow_mut().insert(key, v.clone());
        v
    }

    /// `T` over `x` by monotonicity.
    fn arc_range(&self, x: &Interval) -> Interval {
        if self.t.m == 1 {
            return arc_t_range(x, 1, self.bits);
        }
        let hi = self.arc_at(&x.lo, self.bits).hi;
        let lo = self.arc_at(&x.hi, self.bits).lo;
        Interval { lo, hi }
    }

    fn point(&self, x: &Rational, bits: u32) -> Interval {
        let mut v = Interval::point(self.t.rat.eval(x));
        if !self.t.pi.is_zero() {
            v = &v + &pi(bits).scale(&self.t.pi.eval(x));
        }
        if !self.t.arc.is_zero() {
            v = &v + &self.arc_at(x, bits).scale(&self.t.arc.eval(x));
        }
        v
    }

    /// Exact value at `u = 1`, where `T(1) = pi/8 + 1/4`.
    fn exact_at_one(&self) -> QPi {
        let one = Rational::one();
        let a = self.t.arc.eval(&one);
        QPi::new(self.t.rat.eval(&one) + &a * q(1, 4), self.t.pi.eval(&one) + a * q(1, 8))
    }

    fn sign_at(&self, x: &Rational) -> Option<i8> {
        if x.is_one() && !self.t.arc.is_zero() {
            return Some(self.exact_at_one().sign());
        }
        let mut bits = self.bits;
        for _ in 0..3 {
            if let Some(s) = self.point(x, bits).sign() {
                if s != 0 {
                    return Some(s);
                }
            }
            bits *= 4;
        }
        // pi-free at a rational point: decidable exactly
        if self.t.arc.is_zero() {
            return Some(QPi::new(self.t.rat.eval(x), self.t.pi.eval(x)).sign());
        }
        None
    }

    fn naive(&self, x: &Interval) -> Interval {
        let b = self.bits;
        let mut v = eval_poly(&self.t.rat, x, b);
        if !self.t.pi.is_zero() {
            v = &v + &(&pi(b) * &eval_poly(&self.t.pi, x, b));
        }
        if !self.t.arc.is_zero() {
            v = &v + &(&eval_poly(&self.t.arc, x, b) * &self.arc_range(x));
        }
        v
    }

    fn derivative(&self, x: &Interval) -> Interval {
        let b = self.bits;
        let mut v = eval_poly(&self.d_rat, x, b);
        if !self.d_pi.is_zero() {
            v = &v + &(&pi(b) * &eval_poly(&self.d_pi, x, b));
        }
        if !self.t.arc.is_zero() {
            v = &v + &(&eval_poly(&self.d_arc, x, b) * &self.arc_range(x));
            let tn = &eval_poly(&self.t_num, x, b) * &recip_pos(&eval_poly(&self.h2, x, b), b);
            v = &v + &tn.round(b);
        }
        v
    }

    fn enclose(&self, x: &Interval, fp: &Interval) -> Interval {
        let c = x.mid();
        let mv = &self.point(&c, self.bits) + &(fp * &(x - &Interval::point(c)));
        intersect(&self.naive(x), &mv.round(self.bits))
    }

    fn split(&self, a: &Rational, b: &Rational) -> (Rational, Option<i8>) {
        let w = b - a;
        let mut best = None;
        for (n, d) in [(1, 2), (7, 16), (9, 16), (3, 8), (5, 8)] {
            let c = a + &w * q(n, d);
            let s = self.sign_at(&c);
            if s.is_some() && s != Some(0) {
                return (c, s);
            }
            if best.is_none() {
                best = Some((c, s));
            }
        }
        best.unwrap()
    }

    /// Zeros in `(a, b)`; the flag is false if some piece stayed undecided.
    fn isolate(&self, a: Rational, b: Rational) -> (Vec<RootInterval>, bool) {
        let sa = self.sign_at(&a);
        let sb = self.sign_at(&b);
        let mut out = Vec::new();
        let mut ok = true;
        let mut stack = vec![(a, b, sa, sb, 0u32)];
        let mut pieces = 0usize;
        while let Some((a, b, sa, sb, depth)) = stack.pop() {
            pieces += 1;
            let x = Interval::new(a.clone(), b.clone());
            let fp = self.derivative(&x);
            let f = self.enclose(&x, &fp);
            if matches!(f.sign(), Some(s) if s != 0) {
                continue;
            }
            let monotone = matches!(fp.sign(), Some(s) if s != 0);
            if monotone {
                match (sa, sb) {
                    (Some(x), Some(y)) if x != 0 && y != 0 && x != y => {
                        out.push(RootInterval {
                            lo: a,
                            hi: b,
                            multiplicity: Multiplicity::Simple,
                            order: Some(1),
                        });
                        continue;
                    }
                    (Some(x), Some(y)) if x != 0 && x == y => continue,
                    _ => {}
                }
            }
            if depth >= MAX_DEPTH || pieces > MAX_PIECES {
                ok = false;
                let parity = match (sa, sb) {
                    (Some(x), Some(y)) if x * y < 0 => Multiplicity::Odd,
                    _ => Multiplicity::Even,
                };
                out.push(RootInterval {
                    lo: a,
                    hi: b,
                    multiplicity: parity,
                    order: None,
                });
                continue;
            }
            let (c, sc) = self.split(&a, &b);
            stack.push((c.clone(), b, sc, sb, depth + 1));
            stack.push((a, c, sa, sc, depth + 1));
        }
        out.sort_by(|x, y| x.lo.cmp(&y.lo));
        (out, ok)
    }

    /// Halves a certified simple interval.
    fn refine(&self, r: &RootInterval) -> RootInterval {
        let (sa, sb) = (self.sign_at(&r.lo), self.sign_at(&r.hi));
        let (c, sc) = self.split(&r.lo, &r.hi);
        let mut out = r.clone();
        match (sa, sb, sc) {
            (Some(x), _, Some(z)) if z != 0 && x * z < 0 => out.hi = c,
            (_, Some(y), Some(z)) if z != 0 && y * z < 0 => out.lo = c,
            _ => {}
        }
        out
    }
}

/// Exact zeros of a rational polynomial on `(0, inf)` with multiplicities.
fn exact_zeros(p: &P) -> Vec<RootInterval> {
    let v = p.valuation().unwrap_or(0);
    let p = p.unshift(v);
    if p.degree().unwrap_or(0) == 0 {
        return Vec::new();
    }
    let sq = squarefree_part(&p);
    let st = Sturm::new(&sq);
    let bound = crate::sturm::root_bound(&sq);
    let factors: Vec<(Sturm, u32)> = squarefree_decomposition(&p)
        .into_iter()
        .filter(|(f, _)| f.degree().unwrap_or(0) > 0)
        .map(|(f, k)| (Sturm::new(&f), k))
        .collect();
    st.isolate(&Rational::zero(), &bound)
        .into_iter()
        .map(|(lo, hi)| {
            let k = factors
                .iter()
                .find(|(s, _)| s.count(&lo, &hi) == 1)
                .map(|(_, k)| *k)
                .unwrap_or(1);
            let multiplicity = match k {
                1 => Multiplicity::Simple,
                k if k % 2 == 1 => Multiplicity::Odd,
                _ => Multiplicity::Even,
            };
            RootInterval {
                lo,
                hi,
                multiplicity,
                order: Some(k),
            }
        })
        .collect()
}

fn refine_exact(p: &P, r: &RootInterval) -> RootInterval {
    let sq = squarefree_part(&p.unshift(p.valuation().unwrap_or(0)));
    let (lo, hi) = Sturm::new(&sq).refine(&r.lo, &r.hi, &((&r.hi - &r.lo) / int(2)));
    RootInterval { lo, hi, ..r.clone() }
}

fn gcd_all(t: &Target) -> P {
    let mut g = P::zero();
    for p in [&t.rat, &t.pi, &t.arc] {
        if !p.is_zero() {
            g = if g.is_zero() { p.clone() } else { gcd(&g, p) };
        }
    }
    g
}

fn count_target(t: &Target) -> Result<ZeroReport> {
    if t.rat.is_zero() && t.pi.is_zero() && t.arc.is_zero() {
        return Err(Error::Degenerate("the Melnikov function is identically zero".into()));
    }
    let bits = prec_bits();
    let mut notes = Vec::new();
    let g = gcd_all(t);
    let mut exact = exact_zeros(&g);
    let reduced = Target {
        m: t.m,
        rat: t.rat.div_rem(&g).0,
        pi: t.pi.div_rem(&g).0,
        arc: t.arc.div_rem(&g).0,
    };
    let bound_from = |iv: &[RootInterval]| iv.iter().map(|r| r.hi.clone()).max().unwrap_or_else(Rational::zero);
    if reduced.pi.is_zero() && reduced.arc.is_zero() {
        let sb = bound_from(&exact);
        return Ok(ZeroReport {
            intervals: exact,
            rigor: Rigor::Exact,
            search_bound: sb,
            rolle_upper: None,
            notes,
        });
    }
    let engine = Engine::new(&reduced, bits);
    let (lo, hi) = match (reduced.near_zero().certify(bits), reduced.near_infinity().certify(bits)) {
        (Some(a), Some(s)) => (a, Rational::one() / s),
        _ => {
            return Err(Error::Tolerance(
                "could not certify the behaviour at 0 or infinity".into(),
            ));
        }
    };
    let hi = if hi < int(2) { int(2) } else { hi };
    let (mut found, ok) = engine.isolate(lo, hi.clone());
    let mut rigor = if t.arc.is_zero() {
        Rigor::Exact
    } else {
        Rigor::IntervalCertified
    };
    if !ok {
        rigor = Rigor::Heuristic;
        notes.push("some subintervals stayed undecided; their parity is reported from endpoint signs".into());
    }
    // separate exact roots of the common factor from the certified ones
    for _ in 0..200 {
        let mut clash = None;
        'outer: for (i, e) in exact.iter().enumerate() {
            for (j, f) in found.iter().enumerate() {
                if e.lo <= f.hi && f.lo <= e.hi {
                    clash = Some((i, j));
                    break 'outer;
                }
            }
        }
        let Some((i, j)) = clash else { break };
        exact[i] = refine_exact(&g, &exact[i]);
        if found[j].multiplicity == Multiplicity::Simple {
            found[j] = engine.refine(&found[j]);
        }
    }
    let mut all: Vec<RootInterval> = exact.into_iter().chain(found).collect();
    all.sort_by(|a, b| a.lo.cmp(&b.lo));
    if all.windows(2).any(|w| w[0].hi >= w[1].lo) {
        notes.push("isolating intervals could not be separated".into());
        rigor = Rigor::Heuristic;
    }
    let sb = std::cmp::max(hi, bound_from(&all));
    let mut report = ZeroReport {
        intervals: all,
        rigor,
        search_bound: sb,
        rolle_upper: None,
        notes,
    };
    if !t.arc.is_zero() {
        report.rolle_upper = rolle_bound(t)?;
        if let Some(r) = report.rolle_upper {
            if report.is_certified() && report.count() > r {
                return Err(Error::Internal(format!(
                    "certified count {} exceeds the Rolle bound {r}",
                    report.count()
                )));
            }
        }
    }
    Ok(report)
}

/// `Z(M2) + Z(M0) + 1 + Z(gcd)` with `M0 = arc`, `M2 = R' M0 - R M0' - (m-1) u^{3m} (M0/h)^2`.
fn rolle_bound(t: &Target) -> Result<Option<usize>> {
    let m = t.m;
    let h = h_poly(CurvePower::new(m)?);
    let (st, rem) = t.arc.div_rem(&h);
    if !rem.is_zero() {
        return Ok(None);
    }
    let s = &t.arc;
    let ds = s.derivative();
    let rat2 =
        &(&(&t.rat.derivative() * s) - &(&t.rat * &ds)) - &(&st * &st).shift(3 * m as usize).scale(&int(m as i64 - 1));
    let pi2 = &(&t.pi.derivative() * s) - &(&t.pi * &ds);
    let z_s = exact_zeros(s).len();
    let z_g = exact_zeros(&gcd_all(t)).len();
    if rat2.is_zero() && pi2.is_zero() {
        return Ok(Some(z_s + 1 + z_g));
    }
    let r2 = count_target(&Target {
        m,
        rat: rat2,
        pi: pi2,
        arc: P::zero(),
    })?;
    Ok(r2.is_certified().then(|| r2.count() + z_s + 1 + z_g))
}

pub fn count_canonical(c: &Canonical, m: CurvePower) -> Result<ZeroReport> {
    if m.is_odd() && !c.arc.is_zero() {
        return Err(Error::Domain("arc terms only occur for even m".into()));
    }
    count_target(&Target {
        m: m.get(),
        rat: c.rat.clone(),
        pi: c.pi.clone(),
        arc: c.arc.clone(),
    })
}

/// Zeros of `M` on `(0, inf)`.
pub fn count_zeros(e: &MelnikovExpansion) -> Result<ZeroReport> {
    count_canonical(&e.canonical(), e.m)
}
