//! The first-order Melnikov function `M(u)`: coefficient reduction, exact
//! assembly over the generating basis, independence Jacobians and the
//! expansion at `u = 0`.

use crate::abelian::{h_poly, reduce, Canonical, Generator, IntegralExpr, Side};
use crate::linalg::{determinant, independent_columns, Matrix};
use crate::model::{CoefMap, CurvePower, Family, PerturbationSpec};
use crate::poly::Poly;
use crate::precise::{arc_t, arc_t_real, Interval};
use crate::qpi::QPi;
use crate::rational::{format, int, q};
use crate::roots::bounds::{classify, Region};
use crate::{Error, Rational, Real, Result};
use num_integer::binomial;
use num_traits::{One, Zero};
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReducedKind {
    Rho,
    Gamma,
    Zeta,
}

/// Name of one reduced coefficient, e.g. `rho[2,0]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedLabel {
    pub kind: ReducedKind,
    pub i: u32,
    pub j: u32,
}

impl fmt::Display for ReducedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            ReducedKind::Rho => "rho",
            ReducedKind::Gamma => "gamma",
            ReducedKind::Zeta => "zeta",
        };
        write!(f, "{k}[{},{}]", self.i, self.j)
    }
}

/// `rho`, `gamma`, `zeta` families.
///
/// With `rho^±_{ij} = b^±_{ij} + ((i+1)/j) a^±_{i+1,j-1}` (`rho^±_{i0} = b^±_{i0}`):
/// odd `m`: `rho = rho+ - rho-`, `zeta = rho+ + rho-`;
/// even `m`: `rho = rho+ - rho-`, `zeta = rho-`;
/// both: `gamma = a+ - a-`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedCoefficients {
    pub m: CurvePower,
    pub n: u32,
    pub rho: CoefMap,
    pub gamma: CoefMap,
    pub zeta: CoefMap,
}

fn get(map: &CoefMap, i: u32, j: u32) -> Rational {
    map.get(&(i, j)).cloned().unwrap_or_else(Rational::zero)
}

fn put(map: &mut CoefMap, i: u32, j: u32, v: Rational) {
    if !v.is_zero() {
        map.insert((i, j), v);
    }
}

fn rho_side(spec: &PerturbationSpec, plus: bool, i: u32, j: u32) -> Rational {
    let (a, b) = if plus {
        (Family::APlus, Family::BPlus)
    } else {
        (Family::AMinus, Family::BMinus)
    };
    let mut r = spec.get(b, i, j);
    if j >= 1 {
        r += q((i + 1) as i64, j as i64) * spec.get(a, i + 1, j - 1);
    }
    r
}

pub fn reduce_coefficients(spec: &PerturbationSpec) -> ReducedCoefficients {
    let mut out = ReducedCoefficients {
        m: spec.m,
        n: spec.n,
        rho: CoefMap::new(),
        gamma: CoefMap::new(),
        zeta: CoefMap::new(),
    };
    for (i, j) in PerturbationSpec::indices(spec.n) {
        let (rp, rm) = (rho_side(spec, true, i, j), rho_side(spec, false, i, j));
        put(&mut out.rho, i, j, &rp - &rm);
        put(
            &mut out.gamma,
            i,
            j,
            spec.get(Family::APlus, i, j) - spec.get(Family::AMinus, i, j),
        );
        let z = if spec.m.is_odd() { rp + rm } else { rm };
        put(&mut out.zeta, i, j, z);
    }
    out
}

impl ReducedCoefficients {
    pub fn zero(m: CurvePower, n: u32) -> Self {
        ReducedCoefficients {
            m,
            n,
            rho: CoefMap::new(),
            gamma: CoefMap::new(),
            zeta: CoefMap::new(),
        }
    }

    pub fn get(&self, l: ReducedLabel) -> Rational {
        match l.kind {
            ReducedKind::Rho => get(&self.rho, l.i, l.j),
            ReducedKind::Gamma => get(&self.gamma, l.i, l.j),
            ReducedKind::Zeta => get(&self.zeta, l.i, l.j),
        }
    }

    pub fn set(&mut self, l: ReducedLabel, v: Rational) {
        let map = match l.kind {
            ReducedKind::Rho => &mut self.rho,
            ReducedKind::Gamma => &mut self.gamma,
            ReducedKind::Zeta => &mut self.zeta,
        };
        map.remove(&(l.i, l.j));
        put(map, l.i, l.j, v);
    }

    /// `(rho+_{ij}, rho-_{ij})` recovered from `rho`, `zeta`.
    pub fn rho_pm(&self, i: u32, j: u32) -> (Rational, Rational) {
        let r = get(&self.rho, i, j);
        let z = get(&self.zeta, i, j);
        if self.m.is_odd() {
            let half = q(1, 2);
            ((&z + &r) * &half, (z - r) * half)
        } else {
            (r + &z, z)
        }
    }

    /// Labels that can influence `M`. For odd `m`, `J_{ij} = -I_{ij}` when
    /// `i + j` is even and `J_{ij} = I_{ij}` otherwise, so only `rho` (even
    /// `i + j`) and `zeta` (odd `i + j`) survive.
    pub fn active_labels(m: CurvePower, n: u32) -> Vec<ReducedLabel> {
        let mut out = Vec::new();
        for (i, j) in PerturbationSpec::indices(n) {
            let even = (i + j) % 2 == 0;
            if !m.is_odd() || even {
                out.push(ReducedLabel {
                    kind: ReducedKind::Rho,
                    i,
                    j,
                });
            }
            out.push(ReducedLabel {
                kind: ReducedKind::Gamma,
                i,
                j,
            });
            if !m.is_odd() || !even {
                out.push(ReducedLabel {
                    kind: ReducedKind::Zeta,
                    i,
                    j,
                });
            }
        }
        out
    }

    /// A raw spec with these reduced coefficients on the active labels:
    /// `a+ = gamma`, `a- = 0`, and `b^±` solved from `rho^±`.
    pub fn pull_back(&self) -> Result<PerturbationSpec> {
        let mut spec = PerturbationSpec::zero(self.m, self.n);
        for (i, j) in PerturbationSpec::indices(self.n) {
            spec.set(Family::APlus, i, j, get(&self.gamma, i, j))?;
        }
        for (i, j) in PerturbationSpec::indices(self.n) {
            let (rp, rm) = if self.m.is_odd() {
                let v = if (i + j) % 2 == 0 {
                    get(&self.rho, i, j)
                } else {
                    get(&self.zeta, i, j)
                };
                (v, Rational::zero())
            } else {
                self.rho_pm(i, j)
            };
            let mut bp = rp;
            if j >= 1 {
                bp -= q((i + 1) as i64, j as i64) * spec.get(Family::APlus, i + 1, j - 1);
            }
            spec.set(Family::BPlus, i, j, bp)?;
            spec.set(Family::BMinus, i, j, rm)?;
        }
        Ok(spec)
    }
}

/// Linear map raw coefficients -> reduced coefficients restricted to the
/// square block used for the unimodularity statement: rows are the active
/// labels; columns are `b+` and `a+` (plus `b-` for even `m`).
pub fn coefficient_map_minor(m: CurvePower, n: u32) -> (Matrix, Rational) {
    let rows = ReducedCoefficients::active_labels(m, n);
    let mut fams = vec![Family::BPlus, Family::APlus];
    if !m.is_odd() {
        fams.push(Family::BMinus);
    }
    let mut cols = Vec::new();
    for f in fams {
        for (i, j) in PerturbationSpec::indices(n) {
            cols.push((f, i, j));
        }
    }
    let mut mat: Matrix = vec![vec![Rational::zero(); cols.len()]; rows.len()];
    for (c, &(f, i, j)) in cols.iter().enumerate() {
        let spec = PerturbationSpec::zero(m, n).with(f, i, j, Rational::one()).unwrap();
        let red = reduce_coefficients(&spec);
        for (r, l) in rows.iter().enumerate() {
            mat[r][c] = red.get(*l);
        }
    }
    let det = determinant(&mat);
    (mat, det)
}

/// Element of the generating basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisElement {
    /// `u^e`
    Mono(u32),
    /// `pi (u^2 + u^{2m})^{l+1}`
    Ring(u32),
    /// `(u^2 + u^{2m})^{l+1} T(u)`
    Arc(u32),
}

impl fmt::Display for BasisElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisElement::Mono(e) => write!(f, "u^{e}"),
            BasisElement::Ring(l) => write!(f, "pi*h^{}", l + 1),
            BasisElement::Arc(l) => write!(f, "h^{}*T", l + 1),
        }
    }
}

/// `M(u) = sum mono_e u^e + pi sum ring_l h^{l+1} + T(u) sum arc_l h^{l+1}`
/// with `h = u^2 + u^{2m}`; `ring` stores the rational multiplier of pi.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MelnikovExpansion {
    pub m: CurvePower,
    pub n: u32,
    pub mono: BTreeMap<u32, Rational>,
    pub ring: BTreeMap<u32, Rational>,
    pub arc: BTreeMap<u32, Rational>,
}

fn bump(map: &mut BTreeMap<u32, Rational>, k: u32, v: Rational) {
    if v.is_zero() {
        return;
    }
    let slot = map.entry(k).or_insert_with(Rational::zero);
    *slot += v;
    if slot.is_zero() {
        map.remove(&k);
    }
}

impl MelnikovExpansion {
    pub fn zero(m: CurvePower, n: u32) -> Self {
        MelnikovExpansion {
            m,
            n,
            mono: BTreeMap::new(),
            ring: BTreeMap::new(),
            arc: BTreeMap::new(),
        }
    }

    /// Rewrites an integral expression over the basis.
    pub fn from_expr(e: &IntegralExpr, m: CurvePower, n: u32) -> Result<Self> {
        let mut out = Self::zero(m, n);
        let mm = m.get();
        for t in e.terms() {
            let poly_part = |out: &mut Self, c: Rational, extra: u32| {
                for k in 0..=t.h {
                    let e = t.u + extra + 2 * (t.h - k) + 2 * mm * k;
                    let b = Rational::from_integer(binomial(t.h as u64, k as u64).into());
                    bump(&mut out.mono, e, &c * b);
                }
            };
            let nonpoly =
                |what: &str| Error::Internal(format!("generator {what} with u-power {} has no basis form", t.u));
            match t.g {
                Generator::Unit => poly_part(&mut out, t.c.clone(), 0),
                Generator::J00 => poly_part(&mut out, &t.c * int(2), 1),
                Generator::J11 => poly_part(&mut out, &t.c * q(-2, 3), 3 * mm),
                Generator::J01 => {
                    if t.u != 0 {
                        return Err(nonpoly("J01"));
                    }
                    bump(&mut out.ring, t.h, &t.c * q(1, 2));
                }
                Generator::I01 => {
                    if t.u != 0 {
                        return Err(nonpoly("I01"));
                    }
                    bump(&mut out.ring, t.h, t.c.clone());
                    bump(&mut out.arc, t.h, &t.c * int(-2));
                }
                Generator::ArcT => {
                    if t.u != 0 || t.h == 0 {
                        return Err(nonpoly("ArcT"));
                    }
                    bump(&mut out.arc, t.h - 1, t.c.clone());
                }
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.mono.is_empty() && self.ring.is_empty() && self.arc.is_empty()
    }

    pub fn support(&self) -> BTreeSet<BasisElement> {
        let mut s = BTreeSet::new();
        s.extend(self.mono.keys().map(|&e| BasisElement::Mono(e)));
        s.extend(self.ring.keys().map(|&l| BasisElement::Ring(l)));
        s.extend(self.arc.keys().map(|&l| BasisElement::Arc(l)));
        s
    }

    pub fn coefficient(&self, b: BasisElement) -> Rational {
        let v = match b {
            BasisElement::Mono(e) => self.mono.get(&e),
            BasisElement::Ring(l) => self.ring.get(&l),
            BasisElement::Arc(l) => self.arc.get(&l),
        };
        v.cloned().unwrap_or_else(Rational::zero)
    }

    pub fn set(&mut self, b: BasisElement, v: Rational) {
        let (map, k) = match b {
            BasisElement::Mono(e) => (&mut self.mono, e),
            BasisElement::Ring(l) => (&mut self.ring, l),
            BasisElement::Arc(l) => (&mut self.arc, l),
        };
        map.remove(&k);
        bump(map, k, v);
    }

    pub fn coordinates(&self, basis: &[BasisElement]) -> Vec<Rational> {
        basis.iter().map(|&b| self.coefficient(b)).collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        r.n = r.n.max(o.n);
        for b in o.support() {
            let v = r.coefficient(b) + o.coefficient(b);
            r.set(b, v);
        }
        r
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut r = Self::zero(self.m, self.n);
        for b in self.support() {
            r.set(b, self.coefficient(b) * c);
        }
        r
    }

    /// `rat(u) + pi * pi(u) + T(u) * arc(u)`.
    pub fn canonical(&self) -> Canonical {
        let h = h_poly(self.m);
        let mut c = Canonical {
            rat: Poly::from_terms(self.mono.iter().map(|(&e, v)| (e as usize, v.clone()))),
            ..Canonical::default()
        };
        for (&l, v) in &self.ring {
            c.pi = &c.pi + &h.pow(l + 1).scale(v);
        }
        for (&l, v) in &self.arc {
            c.arc = &c.arc + &h.pow(l + 1).scale(v);
        }
        c
    }

    pub fn eval<F: Real>(&self, u: F) -> F {
        let m = self.m;
        let h = crate::model::h_from_u(u, m);
        let f = |r: &Rational| F::from_f64(crate::rational::to_f64(r)).unwrap();
        let mut s = F::zero();
        for (&e, v) in &self.mono {
            s = s + f(v) * u.powi(e as i32);
        }
        for (&l, v) in &self.ring {
            s = s + F::PI() * f(v) * h.powi(l as i32 + 1);
        }
        if !self.arc.is_empty() {
            let t = arc_t_real(u, m.get());
            for (&l, v) in &self.arc {
                s = s + t * f(v) * h.powi(l as i32 + 1);
            }
        }
        s
    }

    pub fn enclose(&self, u: &Rational, bits: u32) -> Interval {
        self.canonical().enclose(u, self.m, bits)
    }

    pub fn to_json(&self) -> Value {
        let pairs = |map: &BTreeMap<u32, Rational>, pi: bool| -> Vec<Value> {
            map.iter()
                .map(|(k, v)| {
                    if pi {
                        json!([k, {"pi": format(v)}])
                    } else {
                        json!([k, format(v)])
                    }
                })
                .collect()
        };
        json!({
            "m": self.m.get(),
            "n": self.n,
            "mono": pairs(&self.mono, false),
            "ring": pairs(&self.ring, true),
            "arc": pairs(&self.arc, false),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let num = |k: &str| {
            v.get(k)
                .and_then(Value::as_u64)
                .map(|x| x as u32)
                .ok_or_else(|| Error::Parse(format!("missing field {k:?}")))
        };
        let mut out = Self::zero(CurvePower::new(num("m")?)?, num("n")?);
        for key in ["mono", "ring", "arc"] {
            let Some(list) = v.get(key).and_then(Value::as_array) else {
                continue;
            };
            for e in list {
                let bad = || Error::Parse(format!("bad {key} entry {e}"));
                let pair = e.as_array().filter(|p| p.len() == 2).ok_or_else(bad)?;
                let k = pair[0].as_u64().ok_or_else(bad)? as u32;
                let c = QPi::from_json(&pair[1])?;
                let (val, ok) = if key == "ring" {
                    (c.pi.clone(), c.rat.is_zero())
                } else {
                    (c.rat.clone(), c.pi.is_zero())
                };
                if !ok {
                    return Err(Error::Parse(format!("{key} coefficient {e} has the wrong pi part")));
                }
                let b = match key {
                    "mono" => BasisElement::Mono(k),
                    "ring" => BasisElement::Ring(k),
                    _ => BasisElement::Arc(k),
                };
                out.set(b, out.coefficient(b) + val);
            }
        }
        Ok(out)
    }
}

/// `M = sum rho+ J + sum rho- I + Phi` from reduced coefficients.
pub fn assemble_reduced(red: &ReducedCoefficients) -> Result<MelnikovExpansion> {
    let m = red.m;
    let mut e = IntegralExpr::zero();
    for (i, j) in PerturbationSpec::indices(red.n) {
        let (rp, rm) = red.rho_pm(i, j);
        if !rp.is_zero() {
            e = e.add(&reduce(i, j, m, Side::Plus).scale(&rp));
        }
        if !rm.is_zero() {
            e = e.add(&reduce(i, j, m, Side::Minus).scale(&rm));
        }
        let g = get(&red.gamma, i, j);
        if !g.is_zero() {
            e = e.add(&boundary_phi(i, j, m).scale(&g));
        }
    }
    MelnikovExpansion::from_expr(&e, m, red.n)
}

/// Coefficient of `gamma_{ij}` in the boundary polynomial:
/// `((-1)^{i+mj+m} - 1)/(j+1) u^{i+mj+m}`.
pub fn boundary_phi(i: u32, j: u32, m: CurvePower) -> IntegralExpr {
    let e = i + m.get() * j + m.get();
    if e % 2 == 0 {
        return IntegralExpr::zero();
    }
    IntegralExpr::term(q(-2, (j + 1) as i64), 0, e, Generator::Unit)
}

pub fn assemble(spec: &PerturbationSpec) -> Result<MelnikovExpansion> {
    spec.validate()?;
    assemble_reduced(&reduce_coefficients(spec))
}

/// Basis the expansion of any degree-`n` perturbation lives in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratingBasis {
    pub m: CurvePower,
    pub n: u32,
    pub region: Region,
    pub elements: Vec<BasisElement>,
}

impl GeneratingBasis {
    pub fn dimension(&self) -> usize {
        self.elements.len()
    }
}

/// Columns `dM/d(label)` over all reduced labels, in basis coordinates.
fn label_columns(m: CurvePower, n: u32) -> Result<Vec<(ReducedLabel, MelnikovExpansion)>> {
    let mut out = Vec::new();
    for (i, j) in PerturbationSpec::indices(n) {
        for kind in [ReducedKind::Rho, ReducedKind::Gamma, ReducedKind::Zeta] {
            let l = ReducedLabel { kind, i, j };
            let mut red = ReducedCoefficients::zero(m, n);
            red.set(l, Rational::one());
            out.push((l, assemble_reduced(&red)?));
        }
    }
    Ok(out)
}

pub fn generating_basis(m: CurvePower, n: u32) -> Result<GeneratingBasis> {
    let mut s = BTreeSet::new();
    for (_, e) in label_columns(m, n)? {
        s.extend(e.support());
    }
    Ok(GeneratingBasis {
        m,
        n,
        region: classify(m, n),
        elements: s.into_iter().collect(),
    })
}

/// Basis size predicted for odd `m`: `[(n-1)/2] + [n/2]^2 + 3[n/2] + 3` in D1
/// and `[(n-1)/2] + [n/2] m - m^2/4 + 3m/2 + 3/4` in D2 and D3.
pub fn predicted_dimension_odd(m: CurvePower, n: u32) -> Option<i64> {
    if !m.is_odd() {
        return None;
    }
    let fl = |a: i64| a.div_euclid(2);
    let (n, mm) = (n as i64, m.get() as i64);
    Some(if n < mm - 1 {
        fl(n - 1) + fl(n) * fl(n) + 3 * fl(n) + 3
    } else {
        // (-m^2 + 6m + 3)/4 is an integer for odd m
        fl(n - 1) + fl(n) * mm + (-mm * mm + 6 * mm + 3) / 4
    })
}

/// Square Jacobian of basis coefficients with respect to a maximal
/// independent set of reduced coefficients.
#[derive(Clone, Debug)]
pub struct IndependenceJacobian {
    pub rows: Vec<BasisElement>,
    pub columns: Vec<ReducedLabel>,
    pub matrix: Matrix,
    pub determinant: Rational,
}

impl IndependenceJacobian {
    pub fn entry(&self, row: BasisElement, col: ReducedLabel) -> Option<Rational> {
        let r = self.rows.iter().position(|&b| b == row)?;
        let c = self.columns.iter().position(|&l| l == col)?;
        Some(self.matrix[r][c].clone())
    }
}

fn column_priority(l: &ReducedLabel) -> (u8, u32, u32) {
    let s = l.i + l.j;
    match l.kind {
        ReducedKind::Rho if l.j == 0 && l.i % 2 == 0 => (0, s, l.j),
        ReducedKind::Gamma => (1, s, l.j),
        ReducedKind::Rho => (2, s, l.j),
        ReducedKind::Zeta if l.j == 1 => (3, s, l.j),
        ReducedKind::Zeta => (4, s, l.j),
    }
}

/// Selects columns greedily (`rho_{2l,0}` first, then `gamma`, other `rho`,
/// `zeta`), so the leading block is diagonal. A rank-deficient or singular
/// result is a finding.
pub fn independence_jacobian(m: CurvePower, n: u32) -> Result<IndependenceJacobian> {
    let basis = generating_basis(m, n)?;
    let mut cols = label_columns(m, n)?;
    cols.retain(|(_, e)| !e.is_zero());
    cols.sort_by_key(|(l, _)| column_priority(l));
    let full: Matrix = basis
        .elements
        .iter()
        .map(|&b| cols.iter().map(|(_, e)| e.coefficient(b)).collect())
        .collect();
    let order: Vec<usize> = (0..cols.len()).collect();
    let chosen = independent_columns(&full, &order);
    if chosen.len() != basis.dimension() {
        return Err(Error::Finding(format!(
            "independence fails for m={}, n={n}: rank {} < basis size {}",
            m.get(),
            chosen.len(),
            basis.dimension()
        )));
    }
    let matrix: Matrix = full
        .iter()
        .map(|row| chosen.iter().map(|&c| row[c].clone()).collect())
        .collect();
    let det = determinant(&matrix);
    if det.is_zero() {
        return Err(Error::Finding(format!("singular Jacobian for m={}, n={n}", m.get())));
    }
    Ok(IndependenceJacobian {
        rows: basis.elements,
        columns: chosen.iter().map(|&c| cols[c].0).collect(),
        matrix,
        determinant: det,
    })
}

/// The arc function `T(u) = int_0^{(1+u^{2m-2})^{-1/2}} sqrt(1-t^2) dt`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArcFunction {
    pub m: CurvePower,
}

impl ArcFunction {
    pub fn new(m: CurvePower) -> Self {
        ArcFunction { m }
    }

    pub fn value<F: Real>(&self, u: F) -> F {
        arc_t_real(u, self.m.get())
    }

    /// `(a sqrt(1-a^2) + arcsin a)/2` with `a = (1+u^{2m-2})^{-1/2}`.
    pub fn value_arcsin<F: Real>(&self, u: F) -> F {
        let one = F::one();
        let a = one / (one + u.powi(2 * self.m.get() as i32 - 2)).sqrt();
        (a * (one - a * a).sqrt() + a.asin()) / (one + one)
    }

    pub fn enclose(&self, u: &Rational, bits: u32) -> Interval {
        arc_t(u, self.m.get(), bits)
    }

    /// `dT/du = -(m-1) u^{3m} / h^2`.
    pub fn derivative<F: Real>(&self, u: F) -> F {
        let m = self.m.get();
        let h = crate::model::h_from_u(u, self.m);
        -F::from_u32(m - 1).unwrap() * u.powi(3 * m as i32) / (h * h)
    }

    /// `pi/4 + sum_{k>=1} (-1)^k k/(2k+1) u^{(2k+1)(m-1)}` up to `u^order`.
    pub fn series(&self, order: u32) -> Vec<(u32, QPi)> {
        let mut out = vec![(0, QPi::pi_mul(q(1, 4)))];
        let d = self.m.get().saturating_sub(1);
        if d == 0 {
            return out;
        }
        let mut k = 1u32;
        while (2 * k + 1) * d <= order {
            let s = if k % 2 == 0 { 1 } else { -1 };
            out.push(((2 * k + 1) * d, QPi::rat(q(s * k as i64, (2 * k + 1) as i64))));
            k += 1;
        }
        out
    }
}

/// Expansion of `M` at `u = 0+` up to `u^order`.
pub fn expand_series(e: &MelnikovExpansion, order: u32) -> Vec<(u32, QPi)> {
    let c = e.canonical();
    let mut acc: BTreeMap<u32, QPi> = BTreeMap::new();
    let mut add = |k: u32, v: QPi| {
        if k <= order && !v.is_zero() {
            let s = acc.entry(k).or_default();
            *s = &*s + &v;
        }
    };
    for (k, v) in c.rat.terms() {
        add(k as u32, QPi::rat(v.clone()));
    }
    for (k, v) in c.pi.terms() {
        add(k as u32, QPi::pi_mul(v.clone()));
    }
    if !c.arc.is_zero() {
        let t = ArcFunction::new(e.m).series(order);
        for (k, v) in c.arc.terms() {
            for (tk, tv) in &t {
                add(k as u32 + tk, tv.scale(v));
            }
        }
    }
    acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
}

/// Parses `MelnikovExpansion` JSON text.
pub fn expansion_from_str(s: &str) -> Result<MelnikovExpansion> {
    let v: Value = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    MelnikovExpansion::from_json(&v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cp(m: u32) -> CurvePower {
        CurvePower::new(m).unwrap()
    }

    fn spec(m: u32, n: u32, entries: &[(Family, u32, u32, i64)]) -> PerturbationSpec {
        let mut s = PerturbationSpec::zero(cp(m), n);
        for &(f, i, j, v) in entries {
            s.set(f, i, j, int(v)).unwrap();
        }
        s
    }

    #[test]
    fn reduction_examples() {
        let r = reduce_coefficients(&spec(3, 1, &[(Family::BPlus, 0, 0, 1)]));
        assert_eq!(r.rho.get(&(0, 0)), Some(&int(1)));
        assert_eq!(r.rho.len(), 1);
        let r = reduce_coefficients(&spec(3, 1, &[(Family::APlus, 1, 0, 1)]));
        assert_eq!(r.rho.get(&(0, 1)), Some(&int(1)));
        assert_eq!(r.gamma.get(&(1, 0)), Some(&int(1)));
        let s = spec(
            2,
            2,
            &[
                (Family::APlus, 1, 1, 3),
                (Family::AMinus, 1, 1, 3),
                (Family::APlus, 0, 2, -1),
                (Family::AMinus, 0, 2, -1),
            ],
        );
        assert!(reduce_coefficients(&s).gamma.is_empty());
    }

    #[test]
    fn coefficient_map_is_unimodular() {
        for m in 1..=6 {
            for n in 0..=4 {
                let d = coefficient_map_minor(cp(m), n).1;
                assert_eq!(&d * &d, int(1), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn assemble_examples() {
        let e = assemble(&spec(3, 0, &[(Family::BPlus, 0, 0, 1), (Family::BMinus, 0, 0, -1)])).unwrap();
        assert_eq!(e.mono, BTreeMap::from([(1, int(4))]));
        assert!(e.ring.is_empty() && e.arc.is_empty());
        let e = assemble(&spec(3, 0, &[(Family::APlus, 0, 0, 1)])).unwrap();
        assert_eq!(e.mono, BTreeMap::from([(3, int(-2))]));
        let e = assemble(&spec(3, 1, &[(Family::BPlus, 0, 1, 1), (Family::BMinus, 0, 1, 1)])).unwrap();
        assert!(e.mono.is_empty());
        assert_eq!(e.ring, BTreeMap::from([(0, int(1))]));
    }

    #[test]
    fn hamiltonian_perturbation_gives_zero() {
        for m in 1..=5 {
            let s = spec(
                m,
                1,
                &[
                    (Family::APlus, 0, 1, 1),
                    (Family::AMinus, 0, 1, 1),
                    (Family::BPlus, 1, 0, -1),
                    (Family::BMinus, 1, 0, -1),
                ],
            );
            assert!(assemble(&s).unwrap().is_zero(), "m={m}");
            assert!(assemble(&PerturbationSpec::zero(cp(m), 3)).unwrap().is_zero());
        }
    }

    #[test]
    fn arc_function_identities() {
        let t = ArcFunction::new(cp(2));
        for u in [0.01f64, 0.3, 0.9, 1.0, 2.5] {
            assert!((t.value(u) - t.value_arcsin(u)).abs() < 1e-14);
            let d = (t.value(u + 1e-6) - t.value(u - 1e-6)) / 2e-6;
            assert!((d - t.derivative(u)).abs() < 1e-8);
        }
        assert!((t.value(1e-300f64) - std::f64::consts::FRAC_PI_4).abs() < 1e-16);
        let s = ArcFunction::new(cp(4)).series(20);
        assert_eq!(s[1], (9, QPi::rat(q(-1, 3))));
        assert_eq!(s[2], (15, QPi::rat(q(2, 5))));
    }

    #[test]
    fn series_of_ring_and_arc_terms() {
        let mut e = MelnikovExpansion::zero(cp(3), 1);
        e.set(BasisElement::Ring(0), int(1));
        let s = expand_series(&e, 10);
        assert_eq!(s, vec![(2, QPi::pi_mul(int(1))), (6, QPi::pi_mul(int(1)))]);
        let mut a = MelnikovExpansion::zero(cp(2), 1);
        a.set(BasisElement::Arc(0), int(1));
        let s = expand_series(&a, 5);
        // h T = (u^2 + u^4)(pi/4 - u^3/3 + ...)
        assert_eq!(
            s,
            vec![
                (2, QPi::pi_mul(q(1, 4))),
                (4, QPi::pi_mul(q(1, 4))),
                (5, QPi::rat(q(-1, 3)))
            ]
        );
    }

    #[test]
    fn json_round_trip() {
        let e = assemble(&spec(
            2,
            2,
            &[
                (Family::BPlus, 0, 1, 2),
                (Family::BMinus, 0, 1, 1),
                (Family::APlus, 1, 1, 3),
            ],
        ))
        .unwrap();
        assert!(!e.ring.is_empty() && !e.arc.is_empty());
        let back = MelnikovExpansion::from_json(&e.to_json()).unwrap();
        assert_eq!(back, e);
        let v: Value =
            serde_json::from_str(r#"{"m":3,"n":2,"mono":[[1,"4"],[3,"-2/3"]],"ring":[[0,{"pi":"1/2"}]],"arc":[]}"#)
                .unwrap();
        let e = MelnikovExpansion::from_json(&v).unwrap();
        assert_eq!(e.ring[&0], q(1, 2));
    }

    #[test]
    fn jacobian_small_cases() {
        let j = independence_jacobian(cp(7), 1).unwrap();
        assert_eq!(
            j.entry(
                BasisElement::Mono(1),
                ReducedLabel {
                    kind: ReducedKind::Rho,
                    i: 0,
                    j: 0
                }
            ),
            Some(int(2))
        );
        let j0 = independence_jacobian(cp(7), 0).unwrap();
        assert_eq!(j0.rows, vec![BasisElement::Mono(1), BasisElement::Mono(7)]);
        assert!(!j0.determinant.is_zero());
        let g = independence_jacobian(cp(3), 2).unwrap();
        assert_eq!(
            g.entry(
                BasisElement::Mono(3),
                ReducedLabel {
                    kind: ReducedKind::Rho,
                    i: 2,
                    j: 0
                }
            ),
            Some(q(2, 3))
        );
        assert_eq!(
            g.entry(
                BasisElement::Mono(5),
                ReducedLabel {
                    kind: ReducedKind::Gamma,
                    i: 2,
                    j: 0
                }
            ),
            Some(int(-2))
        );
        assert_eq!(g.rows.len(), 6);
    }
}
