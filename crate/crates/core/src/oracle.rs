//! Independent numeric ground truth by adaptive Gauss-Kronrod quadrature of
//! the defining line integrals.

use crate::abelian::Side;
use crate::model::{intersection_points, CurvePower, PerturbationSpec};
use crate::{Error, Real, Result};
use std::collections::BinaryHeap;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureResult<F> {
    pub value: F,
    pub error_estimate: F,
    /// Integral of `|f|`, the natural scale for absolute errors.
    pub abs_integral: F,
    pub evaluations: usize,
    pub converged: bool,
    /// Stopped because the error estimate reached the rounding floor
    /// `50 eps int|f|` before the requested tolerance.
    pub roundoff_limited: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-14,
            max_evals: 1 << 20,
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Segment<F> {
    a: F,
    b: F,
    value: F,
    err: F,
    abs: F,
}

impl<F: Real> PartialEq for Segment<F> {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl<F: Real> Eq for Segment<F> {}
impl<F: Real> PartialOrd for Segment<F> {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl<F: Real> Ord for Segment<F> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.partial_cmp(&o.err).unwrap_or(std::cmp::Ordering::Equal)
    }
}

fn c<F: Real>(x: f64) -> F {
    F::from_f64(x).unwrap()
}

/// 15-point Kronrod rule with the QUADPACK error heuristic.
fn qk15<F: Real, G: Fn(F) -> F>(f: &G, a: F, b: F) -> Segment<F> {
    let half = c::<F>(0.5);
    let center = half * (a + b);
    let hl = half * (b - a);
    let fc = f(center);
    let mut resg = fc * c(WG[3]);
    let mut resk = fc * c(WGK[7]);
    let mut resabs = fc.abs() * c(WGK[7]);
    let mut f1 = [F::zero(); 7];
    let mut f2 = [F::zero(); 7];
    for j in 0..7 {
        let dx = hl * c(XGK[j]);
        let (v1, v2) = (f(center - dx), f(center + dx));
        f1[j] = v1;
        f2[j] = v2;
        resk = resk + c::<F>(WGK[j]) * (v1 + v2);
        resabs = resabs + c::<F>(WGK[j]) * (v1.abs() + v2.abs());
        if j % 2 == 1 {
            resg = resg + c::<F>(WG[j / 2]) * (v1 + v2);
        }
    }
    let reskh = resk * half;
    let mut resasc = c::<F>(WGK[7]) * (fc - reskh).abs();
    for j in 0..7 {
        resasc = resasc + c::<F>(WGK[j]) * ((f1[j] - reskh).abs() + (f2[j] - reskh).abs());
    }
    let value = resk * hl;
    let resabs = resabs * hl.abs();
    let resasc = resasc * hl.abs();
    let mut err = ((resk - resg) * hl).abs();
    if resasc != F::zero() && err != F::zero() {
        err = resasc * F::one().min((c::<F>(200.0) * err / resasc).powf(c(1.5)));
    }
    let floor = c::<F>(50.0) * F::epsilon() * resabs;
    if resabs > F::min_positive_value() / (c::<F>(50.0) * F::epsilon()) {
        err = err.max(floor);
    }
    Segment {
        a,
        b,
        value,
        err,
        abs: resabs,
    }
}

/// Globally adaptive quadrature of `f` over `[a, b]`, pre-split at `breaks`.
pub fn integrate<F: Real, G: Fn(F) -> F>(
    f: G,
    a: F,
    b: F,
    breaks: &[F],
    opts: &QuadratureOptions,
) -> QuadratureResult<F> {
    let (lo, hi, sgn) = if a <= b { (a, b, F::one()) } else { (b, a, -F::one()) };
    let mut pts = vec![lo];
    pts.extend(breaks.iter().copied().filter(|&p| p > lo && p < hi));
    pts.push(hi);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    for w in pts.windows(2) {
        heap.push(qk15(&f, w[0], w[1]));
        evals += 15;
    }
    let abs_tol: F = c(opts.abs_tol);
    let rel_tol: F = c(opts.rel_tol);
    let sums = |h: &BinaryHeap<Segment<F>>| {
        h.iter().fold((F::zero(), F::zero(), F::zero()), |(v, e, s), g| {
            (v + g.value, e + g.err, s + g.abs)
        })
    };
    let mut converged = false;
    let mut roundoff_limited = false;
    let floor_of = |g: &Segment<F>| c::<F>(50.0) * F::epsilon() * g.abs;
    loop {
        let (v, e, _) = sums(&heap);
        if e <= abs_tol.max(rel_tol * v.abs()) {
            converged = true;
            break;
        }
        let floor: F = heap.iter().fold(F::zero(), |acc, g| acc + floor_of(g));
        if e <= c::<F>(2.0) * floor {
            roundoff_limited = true;
            break;
        }
        if evals + 30 > opts.max_evals {
            break;
        }
        let worst = heap.pop().unwrap();
        let mid = (worst.a + worst.b) * c(0.5);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        heap.push(qk15(&f, worst.a, mid));
        heap.push(qk15(&f, mid, worst.b));
        evals += 30;
    }
    let (v, e, s) = sums(&heap);
    QuadratureResult {
        value: sgn * v,
        error_estimate: e,
        abs_integral: s,
        evaluations: evals,
        converged,
        roundoff_limited,
    }
}

/// Angular interval traversed clockwise along `L+` or `L-`, as `(from, to)`
/// with `from > to`.
pub fn arc_angles<F: Real>(u: F, m: CurvePower, side: Side) -> Result<(F, F)> {
    let (a, b) = intersection_points(u, m)?;
    let tb = b.1.atan2(b.0);
    let mut ta = a.1.atan2(a.0);
    let two_pi = F::PI() + F::PI();
    while ta <= tb {
        ta = ta + two_pi;
    }
    while ta > tb + two_pi {
        ta = ta - two_pi;
    }
    Ok(match side {
        Side::Plus => (ta, tb),
        Side::Minus => (tb, ta - two_pi),
    })
}

fn quarter_breaks<F: Real>(lo: F, hi: F) -> Vec<F> {
    let q = F::FRAC_PI_2();
    let mut k = (lo / q).floor() + F::one();
    let mut out = Vec::new();
    while k * q < hi {
        out.push(k * q);
        k = k + F::one();
    }
    out
}

/// `int x^i y^j dx` along one arc, parameterized by the polar angle.
pub fn integral_quadrature<F: Real>(
    i: u32,
    j: u32,
    u: F,
    m: CurvePower,
    side: Side,
    opts: &QuadratureOptions,
) -> Result<QuadratureResult<F>> {
    let (from, to) = arc_angles(u, m, side)?;
    let r = crate::model::h_from_u(u, m).sqrt();
    let f = |t: F| {
        let (s, co) = t.sin_cos();
        let x = r * co;
        let y = r * s;
        x.powi(i as i32) * y.powi(j as i32) * (-r * s)
    };
    Ok(integrate(f, from, to, &quarter_breaks(to, from), opts))
}

/// Transversality ratio `(H+_x + H+_y phi')/(H-_x + H-_y phi')` at `A`
/// for the Hamiltonians `hp`, `hm` given by their gradients.
pub fn switching_ratio<F: Real>(
    u: F,
    m: CurvePower,
    grad_plus: impl Fn(F, F) -> (F, F),
    grad_minus: impl Fn(F, F) -> (F, F),
) -> Result<F> {
    let (a, _) = intersection_points(u, m)?;
    let dphi = F::from_u32(m.get()).unwrap() * a.0.powi(m.get() as i32 - 1);
    let (px, py) = grad_plus(a.0, a.1);
    let (mx, my) = grad_minus(a.0, a.1);
    let den = mx + my * dphi;
    if den == F::zero() {
        return Err(Error::Internal("tangent level curve at A".into()));
    }
    Ok((px + py * dphi) / den)
}

/// `int_{L+} q+ dx - p+ dy + ratio * int_{L-} q- dx - p- dy`.
pub fn melnikov_quadrature<F: Real>(
    spec: &PerturbationSpec,
    u: F,
    opts: &QuadratureOptions,
) -> Result<QuadratureResult<F>> {
    let m = spec.m;
    let two = F::one() + F::one();
    let grad = |x: F, y: F| (two * x, two * y);
    let ratio = switching_ratio(u, m, grad, grad)?;
    if (ratio - F::one()).abs() > c(1e-12) {
        return Err(Error::Internal(format!("switching ratio {ratio} differs from 1")));
    }
    let r = crate::model::h_from_u(u, m).sqrt();
    let mut total: Option<QuadratureResult<F>> = None;
    for (side, w) in [(Side::Plus, F::one()), (Side::Minus, ratio)] {
        let plus = side == Side::Plus;
        let (from, to) = arc_angles(u, m, side)?;
        let f = |t: F| {
            let (s, co) = t.sin_cos();
            let (x, y) = (r * co, r * s);
            let (p, q) = spec.field(plus, x, y);
            w * (q * (-r * s) - p * (r * co))
        };
        let res = integrate(f, from, to, &quarter_breaks(to, from), opts);
        total = Some(match total {
            None => res,
            Some(t) => QuadratureResult {
                value: t.value + res.value,
                error_estimate: t.error_estimate + res.error_estimate,
                abs_integral: t.abs_integral + res.abs_integral,
                evaluations: t.evaluations + res.evaluations,
                converged: t.converged && res.converged,
                roundoff_limited: t.roundoff_limited || res.roundoff_limited,
            },
        });
    }
    Ok(total.unwrap())
}

/// `oint x^i y^j dx` over the full circle of radius `r`, clockwise, by the
/// Wallis formula.
pub fn full_circle_integral(i: u32, j: u32, r: f64) -> f64 {
    let (a, b) = (i, j + 1);
    if a % 2 == 1 || b % 2 == 1 {
        return 0.0;
    }
    let dfact = |n: i64| -> f64 { (1..=n).rev().step_by(2).map(|k| k as f64).product() };
    let wallis = 2.0 * std::f64::consts::PI * dfact(a as i64 - 1) * dfact(b as i64 - 1) / dfact((a + b) as i64);
    r.powi((i + j + 1) as i32) * wallis
}
