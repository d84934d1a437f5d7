//! Event-driven integration of the piecewise system
//! `x' = y + eps p^±`, `y' = -x + eps q^±` with `+` on `y >= x^m`.
//!
//! Dormand-Prince 5(4) with step-size control; a crossing of `y = x^m`
//! inside a step is located by re-running the step with a shortened length
//! (Illinois iteration) until `|y - x^m| < 1e-12`, then the field switches.

use crate::model::{CurvePower, PerturbationSpec};
use crate::{Error, Real, Result};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::fmt;

pub const MAX_EPSILON: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Zone {
    Above,
    Below,
}

impl Zone {
    pub fn of<F: Real>(x: F, y: F, m: CurvePower) -> Zone {
        if y >= x.powi(m.get() as i32) {
            Zone::Above
        } else {
            Zone::Below
        }
    }

    pub fn flip(self) -> Zone {
        match self {
            Zone::Above => Zone::Below,
            Zone::Below => Zone::Above,
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Zone::Above => "above",
            Zone::Below => "below",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiecewiseState<F> {
    pub t: F,
    pub x: F,
    pub y: F,
    pub zone: Zone,
}

impl<F: Real> PiecewiseState<F> {
    /// The point `B(u) = (u, u^m)` on the switching curve, about to enter
    /// the lower zone.
    pub fn on_curve(u: F, m: CurvePower) -> Self {
        PiecewiseState {
            t: F::zero(),
            x: u,
            y: u.powi(m.get() as i32),
            zone: Zone::Below,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing<F> {
    pub t: F,
    pub x: F,
    pub y: F,
    pub from: Zone,
    pub to: Zone,
}

#[derive(Clone, Debug)]
pub struct Trajectory<F> {
    pub states: Vec<PiecewiseState<F>>,
    pub crossings: Vec<Crossing<F>>,
}

#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Required `|y - x^m|` at a located crossing.
    pub event_tol: f64,
    /// Crossings with `|d/dt (y - x^m)|` below this abort as grazing.
    pub graze_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            rtol: 1e-12,
            atol: 1e-14,
            max_step: 0.05,
            max_steps: 2_000_000,
            event_tol: 1e-12,
            graze_tol: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    Attracting,
    Repelling,
    Undetermined,
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::Attracting => "attracting",
            Stability::Repelling => "repelling",
            Stability::Undetermined => "undetermined",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleFinding<F> {
    pub u_star: F,
    pub h_star: F,
    pub stability: Stability,
    /// `|Delta(u_star)|`.
    pub residual: F,
}

impl<F: Real> CycleFinding<F> {
    pub fn to_json(&self) -> Value {
        let f = |v: F| v.to_f64().unwrap();
        json!({
            "uStar": f(self.u_star),
            "hStar": f(self.h_star),
            "stability": self.stability.to_string(),
            "residual": f(self.residual),
        })
    }
}

/// Float copy of the perturbation for fast evaluation.
struct System<F> {
    m: CurvePower,
    eps: F,
    plus: [Vec<(i32, i32, F)>; 2],
    minus: [Vec<(i32, i32, F)>; 2],
}

impl<F: Real> System<F> {
    fn new(spec: &PerturbationSpec, eps: F) -> Result<Self> {
        let e = eps.to_f64().unwrap();
        if !e.is_finite() || e.abs() > MAX_EPSILON {
            return Err(Error::Domain(format!(
                "|epsilon| must be at most {MAX_EPSILON}, got {e}"
            )));
        }
        let conv = |map: &crate::model::CoefMap| -> Vec<(i32, i32, F)> {
            map.iter()
                .map(|((i, j), c)| (*i as i32, *j as i32, F::from_f64(crate::rational::to_f64(c)).unwrap()))
                .collect()
        };
        Ok(System {
            m: spec.m,
            eps,
            plus: [conv(&spec.a_plus), conv(&spec.b_plus)],
            minus: [conv(&spec.a_minus), conv(&spec.b_minus)],
        })
    }

    fn field(&self, zone: Zone, x: F, y: F) -> (F, F) {
        let fam = match zone {
            Zone::Above => &self.plus,
            Zone::Below => &self.minus,
        };
        let ev = |terms: &[(i32, i32, F)]| {
            terms
                .iter()
                .fold(F::zero(), |a, &(i, j, c)| a + c * x.powi(i) * y.powi(j))
        };
        (y + self.eps * ev(&fam[0]), -x + self.eps * ev(&fam[1]))
    }

    fn g(&self, x: F, y: F) -> F {
        y - x.powi(self.m.get() as i32)
    }

    fn g_dot(&self, zone: Zone, x: F, y: F) -> F {
        let m = self.m.get() as i32;
        let (dx, dy) = self.field(zone, x, y);
        dy - F::from_i32(m).unwrap() * x.powi(m - 1) * dx
    }
}

fn c<F: Real>(v: f64) -> F {
    F::from_f64(v).unwrap()
}

/// One Dormand-Prince step; returns the 5th-order point and an error estimate.
fn dopri_step<F: Real>(sys: &System<F>, zone: Zone, x: F, y: F, h: F) -> ((F, F), F) {
    let f = |a: F, b: F| sys.field(zone, a, b);
    let k1 = f(x, y);
    let k2 = f(x + h * c::<F>(1.0 / 5.0) * k1.0, y + h * c::<F>(1.0 / 5.0) * k1.1);
    let k3 = f(
        x + h * (c::<F>(3.0 / 40.0) * k1.0 + c::<F>(9.0 / 40.0) * k2.0),
        y + h * (c::<F>(3.0 / 40.0) * k1.1 + c::<F>(9.0 / 40.0) * k2.1),
    );
    let k4 = f(
        x + h * (c::<F>(44.0 / 45.0) * k1.0 - c::<F>(56.0 / 15.0) * k2.0 + c::<F>(32.0 / 9.0) * k3.0),
        y + h * (c::<F>(44.0 / 45.0) * k1.1 - c::<F>(56.0 / 15.0) * k2.1 + c::<F>(32.0 / 9.0) * k3.1),
    );
    let a5 = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
    let k5 = f(
        x + h * (c::<F>(a5[0]) * k1.0 + c::<F>(a5[1]) * k2.0 + c::<F>(a5[2]) * k3.0 + c::<F>(a5[3]) * k4.0),
        y + h * (c::<F>(a5[0]) * k1.1 + c::<F>(a5[1]) * k2.1 + c::<F>(a5[2]) * k3.1 + c::<F>(a5[3]) * k4.1),
    );
    let a6 = [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ];
    let k6 = f(
        x + h
            * (c::<F>(a6[0]) * k1.0
                + c::<F>(a6[1]) * k2.0
                + c::<F>(a6[2]) * k3.0
                + c::<F>(a6[3]) * k4.0
                + c::<F>(a6[4]) * k5.0),
        y + h
            * (c::<F>(a6[0]) * k1.1
                + c::<F>(a6[1]) * k2.1
                + c::<F>(a6[2]) * k3.1
                + c::<F>(a6[3]) * k4.1
                + c::<F>(a6[4]) * k5.1),
    );
    let b = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ];
    let nx = x + h
        * (c::<F>(b[0]) * k1.0 + c::<F>(b[2]) * k3.0 + c::<F>(b[3]) * k4.0 + c::<F>(b[4]) * k5.0 + c::<F>(b[5]) * k6.0);
    let ny = y + h
        * (c::<F>(b[0]) * k1.1 + c::<F>(b[2]) * k3.1 + c::<F>(b[3]) * k4.1 + c::<F>(b[4]) * k5.1 + c::<F>(b[5]) * k6.1);
    let k7 = f(nx, ny);
    // difference between the 5th- and 4th-order weights
    let e = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let ks = [k1, k2, k3, k4, k5, k6, k7];
    let mut ex = F::zero();
    let mut ey = F::zero();
    for (w, k) in e.iter().zip(ks.iter()) {
        ex = ex + c::<F>(*w) * k.0;
        ey = ey + c::<F>(*w) * k.1;
    }
    ex = ex * h;
    ey = ey * h;
    ((nx, ny), ex.abs().max(ey.abs()))
}

struct Integrator<'a, F> {
    sys: &'a System<F>,
    opts: FlowOptions,
    h: F,
}

enum StepOutcome<F> {
    Plain(PiecewiseState<F>),
    Event(PiecewiseState<F>, Crossing<F>),
}

impl<'a, F: Real> Integrator<'a, F> {
    fn new(sys: &'a System<F>, opts: FlowOptions) -> Self {
        Integrator { sys, opts, h: c(0.01) }
    }

    fn tol(&self, x: F, y: F, nx: F, ny: F) -> F {
        let s = x.abs().max(y.abs()).max(nx.abs()).max(ny.abs());
        c::<F>(self.opts.atol) + c::<F>(self.opts.rtol) * s
    }

    /// One accepted step, capped at `t_end`.
    fn step(&mut self, s: PiecewiseState<F>, t_end: F) -> Result<StepOutcome<F>> {
        let hmin = c::<F>(1e-14);
        loop {
            let mut h = self.h.min(c(self.opts.max_step));
            let capped = s.t + h >= t_end;
            if capped {
                h = t_end - s.t;
            }
            let ((nx, ny), err) = dopri_step(self.sys, s.zone, s.x, s.y, h);
            let tol = self.tol(s.x, s.y, nx, ny);
            let ratio = err / tol;
            if ratio <= F::one() || h < hmin {
                let fac = if ratio == F::zero() {
                    c(5.0)
                } else {
                    (c::<F>(0.9) * ratio.powf(c(-0.2))).min(c(5.0)).max(c(0.2))
                };
                if !capped {
                    self.h = h * fac;
                }
                if h < hmin && ratio > F::one() {
                    return Err(Error::Integration(format!(
                        "step size collapsed at t = {}",
                        s.t.to_f64().unwrap()
                    )));
                }
                let g_new = self.sys.g(nx, ny);
                let crossed = match s.zone {
                    Zone::Above => g_new < F::zero(),
                    Zone::Below => g_new >= F::zero(),
                };
                if crossed {
                    return self.locate(s, h).map(|(st, cr)| StepOutcome::Event(st, cr));
                }
                return Ok(StepOutcome::Plain(PiecewiseState {
                    t: s.t + h,
                    x: nx,
                    y: ny,
                    zone: s.zone,
                }));
            }
            self.h = h * (c::<F>(0.9) * ratio.powf(c(-0.2))).max(c(0.1));
        }
    }

    /// Finds the crossing inside `(0, h]` by shortened steps.
    fn locate(&self, s: PiecewiseState<F>, h: F) -> Result<(PiecewiseState<F>, Crossing<F>)> {
        let sys = self.sys;
        let new_side = |g: F| match s.zone {
            Zone::Above => g < F::zero(),
            Zone::Below => g >= F::zero(),
        };
        let at = |tau: F| {
            let ((x, y), _) = dopri_step(sys, s.zone, s.x, s.y, tau);
            (x, y, sys.g(x, y))
        };
        let (mut a, mut ga) = (F::zero(), sys.g(s.x, s.y));
        let (mut b, mut pb) = (h, at(h));
        let tol = c::<F>(self.opts.event_tol);
        let mut side = 0i8;
        for _ in 0..200 {
            if pb.2.abs() < tol || b - a < c(1e-16) {
                break;
            }
            let gb = pb.2;
            let mut tau = if ga != gb {
                b - gb * (b - a) / (gb - ga)
            } else {
                (a + b) / c(2.0)
            };
            if !(tau > a && tau < b) {
                tau = (a + b) / c(2.0);
            }
            let p = at(tau);
            if new_side(p.2) {
                b = tau;
                pb = p;
                if side == 1 {
                    ga = ga / c(2.0);
                }
                side = 1;
            } else {
                a = tau;
                ga = p.2;
                if side == -1 {
                    pb.2 = pb.2 / c(2.0);
                }
                side = -1;
            }
        }
        let (x, y, _) = at(b);
        let gd = sys.g_dot(s.zone, x, y);
        if gd.abs() < c(self.opts.graze_tol) {
            return Err(Error::Grazing {
                t: (s.t + b).to_f64().unwrap(),
                x: x.to_f64().unwrap(),
                y: y.to_f64().unwrap(),
            });
        }
        let to = s.zone.flip();
        let t = s.t + b;
        Ok((
            PiecewiseState { t, x, y, zone: to },
            Crossing {
                t,
                x,
                y,
                from: s.zone,
                to,
            },
        ))
    }
}

/// Integrates from `start` up to `max_time`, recording every accepted step
/// and every crossing of the switching curve.
pub fn flow<F: Real>(
    spec: &PerturbationSpec,
    epsilon: F,
    start: PiecewiseState<F>,
    max_time: F,
) -> Result<Trajectory<F>> {
    flow_with(spec, epsilon, start, max_time, FlowOptions::default())
}

pub fn flow_with<F: Real>(
    spec: &PerturbationSpec,
    epsilon: F,
    start: PiecewiseState<F>,
    max_time: F,
    opts: FlowOptions,
) -> Result<Trajectory<F>> {
    let sys = System::new(spec, epsilon)?;
    let mut it = Integrator::new(&sys, opts);
    let mut s = start;
    let mut out = Trajectory {
        states: vec![s],
        crossings: Vec::new(),
    };
    let mut steps = 0;
    while s.t < max_time {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Integration("step limit reached".into()));
        }
        s = match it.step(s, max_time)? {
            StepOutcome::Plain(n) => n,
            StepOutcome::Event(n, cr) => {
                out.crossings.push(cr);
                n
            }
        };
        out.states.push(s);
    }
    Ok(out)
}

/// First return to `{(u, u^m): u > 0}` from `B(u0)`, crossing from the
/// upper zone into the lower one. Returns `(u_return, time)`.
pub fn first_return<F: Real>(spec: &PerturbationSpec, epsilon: F, u0: F, opts: FlowOptions) -> Result<(F, F)> {
    if !(u0 > F::zero()) {
        return Err(Error::Domain("u0 must be positive".into()));
    }
    let sys = System::new(spec, epsilon)?;
    let mut it = Integrator::new(&sys, opts);
    let mut s = PiecewiseState::on_curve(u0, spec.m);
    let max_time = c::<F>(20.0 * std::f64::consts::PI);
    let mut steps = 0;
    while s.t < max_time {
        steps += 1;
        if steps > opts.max_steps {
            break;
        }
        match it.step(s, max_time)? {
            StepOutcome::Plain(n) => s = n,
            StepOutcome::Event(n, cr) => {
                if cr.from == Zone::Above && cr.x > F::zero() {
                    return Ok((cr.x, cr.t));
                }
                s = n;
            }
        }
    }
    Err(Error::Escape(format!(
        "no return to the section from u0 = {}",
        u0.to_f64().unwrap()
    )))
}

/// `Delta(u0, eps) = u_return - u0`.
pub fn displacement_map<F: Real>(spec: &PerturbationSpec, epsilon: F, u0: F) -> Result<F> {
    displacement_map_with(spec, epsilon, u0, FlowOptions::default())
}

pub fn displacement_map_with<F: Real>(spec: &PerturbationSpec, epsilon: F, u0: F, opts: FlowOptions) -> Result<F> {
    first_return(spec, epsilon, u0, opts).map(|(u, _)| u - u0)
}

/// `(u, Delta(u))` on `samples` evenly spaced points of `[a, b]`.
pub fn displacement_grid<F: Real>(
    spec: &PerturbationSpec,
    epsilon: F,
    range: (F, F),
    samples: usize,
) -> Result<Vec<(F, F)>> {
    displacement_grid_with(spec, epsilon, range, samples, FlowOptions::default())
}

pub fn displacement_grid_with<F: Real>(
    spec: &PerturbationSpec,
    epsilon: F,
    range: (F, F),
    samples: usize,
    opts: FlowOptions,
) -> Result<Vec<(F, F)>> {
    if samples < 2 || !(range.0 > F::zero() && range.1 > range.0) {
        return Err(Error::Domain("need samples >= 2 and 0 < a < b".into()));
    }
    let (a, b) = range;
    let n = F::from_usize(samples - 1).unwrap();
    (0..samples)
        .into_par_iter()
        .map(|k| {
            let u = a + (b - a) * F::from_usize(k).unwrap() / n;
            displacement_map_with(spec, epsilon, u, opts).map(|d| (u, d))
        })
        .collect()
}

/// Sign changes of `Delta` on the grid, refined by bisection until
/// `|Delta| < 1e-10` and the bracket is below `1e-9`.
pub fn find_limit_cycles<F: Real>(
    spec: &PerturbationSpec,
    epsilon: F,
    range: (F, F),
    samples: usize,
) -> Result<Vec<CycleFinding<F>>> {
    find_limit_cycles_with(spec, epsilon, range, samples, FlowOptions::default())
}

pub fn find_limit_cycles_with<F: Real>(
    spec: &PerturbationSpec,
    epsilon: F,
    range: (F, F),
    samples: usize,
    opts: FlowOptions,
) -> Result<Vec<CycleFinding<F>>> {
    if epsilon == F::zero() {
        return Err(Error::Domain("epsilon must be nonzero".into()));
    }
    let grid = displacement_grid_with(spec, epsilon, range, samples, opts)?;
    let brackets: Vec<((F, F), (F, F))> = grid
        .windows(2)
        .filter(|w| (w[0].1 > F::zero()) != (w[1].1 > F::zero()))
        .map(|w| (w[0], w[1]))
        .collect();
    let tol = c::<F>(1e-10);
    let mut out: Vec<CycleFinding<F>> = brackets
        .into_par_iter()
        .map(|((mut a, mut da), (mut b, db))| {
            let left_positive = da > F::zero();
            let mut best = if da.abs() < db.abs() { (a, da) } else { (b, db) };
            for _ in 0..100 {
                if (best.1.abs() < tol && b - a < c(1e-9)) || (b - a) < c(1e-14) {
                    break;
                }
                let mid = (a + b) / c(2.0);
                let dm = displacement_map_with(spec, epsilon, mid, opts)?;
                if dm.abs() < best.1.abs() {
                    best = (mid, dm);
                }
                if (dm > F::zero()) == (da > F::zero()) {
                    a = mid;
                    da = dm;
                } else {
                    b = mid;
                }
            }
            let stability = if left_positive {
                Stability::Attracting
            } else {
                Stability::Repelling
            };
            let u = best.0;
            Ok(CycleFinding {
                u_star: u,
                h_star: crate::model::h_from_u(u, spec.m),
                stability,
                residual: best.1.abs(),
            })
        })
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| a.u_star.partial_cmp(&b.u_star).unwrap());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Family;
    use crate::rational::int;

    fn cp(m: u32) -> CurvePower {
        CurvePower::new(m).unwrap()
    }

    #[test]
    fn unperturbed_orbit_closes() {
        let spec = PerturbationSpec::zero(cp(3), 1);
        let (u, t) = first_return(&spec, 0.0f64, 1.0, FlowOptions::default()).unwrap();
        assert!((u - 1.0).abs() < 1e-9);
        assert!((t - 2.0 * std::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn clockwise_start() {
        let spec = PerturbationSpec::zero(cp(2), 1);
        let tr = flow(&spec, 0.0f64, PiecewiseState::on_curve(1.0, cp(2)), 0.1).unwrap();
        let s = tr.states[1];
        assert!(s.y.atan2(s.x) < 1f64.atan2(1.0));
        assert_eq!(s.zone, Zone::Below);
    }

    #[test]
    fn positive_melnikov_pushes_outward() {
        let spec = PerturbationSpec::zero(cp(3), 0)
            .with(Family::BPlus, 0, 0, int(1))
            .unwrap()
            .with(Family::BMinus, 0, 0, int(-1))
            .unwrap();
        assert!(displacement_map(&spec, 1e-3f64, 1.0).unwrap() > 0.0);
        assert!(find_limit_cycles(&spec, 1e-3f64, (0.3, 2.0), 12).unwrap().is_empty());
    }

    #[test]
    fn epsilon_guard() {
        let spec = PerturbationSpec::zero(cp(3), 0);
        assert!(matches!(displacement_map(&spec, 0.1f64, 1.0), Err(Error::Domain(_))));
    }
}
