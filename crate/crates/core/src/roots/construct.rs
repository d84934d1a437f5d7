//! Perturbations whose Melnikov function has prescribed simple zeros.

use super::bounds::bound_Z;
use super::count::{count_zeros, ZeroReport};
use crate::linalg::{null_space, rank, solve, Matrix};
use crate::melnikov::{
    assemble, assemble_reduced, generating_basis, independence_jacobian, BasisElement, MelnikovExpansion,
    ReducedCoefficients,
};
use crate::model::{CurvePower, PerturbationSpec};
use crate::precise::{arc_t, pi};
use crate::rational::{max_abs, nearby, pow, to_f64};
use crate::{Error, Rational, Result};
use num_traits::Zero;

const APPROX_BITS: u32 = 128;

#[derive(Clone, Debug)]
pub struct Construction {
    pub spec: PerturbationSpec,
    pub expansion: MelnikovExpansion,
    /// Solved coordinates on the generating basis.
    pub coefficients: Vec<(BasisElement, Rational)>,
    pub targets: Vec<Rational>,
    pub report: ZeroReport,
}

/// `p` points geometrically spaced strictly inside `(0.3, 3)`.
pub fn default_targets(p: usize) -> Vec<f64> {
    (1..=p).map(|i| 0.3 * 10f64.powf(i as f64 / (p + 1) as f64)).collect()
}

fn basis_value(b: BasisElement, u: &Rational, m: CurvePower, pi_q: &Rational) -> Rational {
    let h = pow(u, 2) + pow(u, 2 * m.get());
    match b {
        BasisElement::Mono(e) => pow(u, e),
        BasisElement::Ring(l) => pi_q * pow(&h, l + 1),
        BasisElement::Arc(l) => arc_t(u, m.get(), APPROX_BITS).mid() * pow(&h, l + 1),
    }
}

/// Rounds to about 48 significant bits after scaling the largest entry to 1.
fn tidy(v: &[Rational]) -> Vec<Rational> {
    let s = max_abs(v.iter());
    v.iter()
        .map(|x| {
            let y = x / &s;
            nearby(to_f64(&y), 48).unwrap_or(y)
        })
        .collect()
}

fn realize(
    m: CurvePower,
    n: u32,
    coef: &[Rational],
    elements: &[BasisElement],
) -> Result<(PerturbationSpec, MelnikovExpansion)> {
    let jac = independence_jacobian(m, n)?;
    let rhs: Vec<Rational> = jac
        .rows
        .iter()
        .map(|r| {
            elements
                .iter()
                .position(|e| e == r)
                .map_or_else(Rational::zero, |i| coef[i].clone())
        })
        .collect();
    let x = solve(&jac.matrix, &rhs).ok_or_else(|| Error::Internal("independence Jacobian is singular".into()))?;
    let mut red = ReducedCoefficients::zero(m, n);
    for (l, v) in jac.columns.iter().zip(x) {
        red.set(*l, v);
    }
    let via_reduced = assemble_reduced(&red)?;
    let spec = red.pull_back()?;
    let e = assemble(&spec)?;
    if e != via_reduced {
        return Err(Error::Internal(
            "pull-back does not reproduce the reduced expansion".into(),
        ));
    }
    Ok((spec, e))
}

/// Solves `M(t_i) = 0` on the generating basis (pi and `T` replaced by
/// 128-bit rational approximations), realizes the solution as a spec through
/// the unimodular coefficient maps, and certifies the zeros with
/// `count_zeros`.
pub fn construct_max_zeros(m: CurvePower, n: u32, targets: &[f64]) -> Result<Construction> {
    if targets.is_empty() {
        return Err(Error::Domain("at least one target is required".into()));
    }
    if targets.iter().any(|t| !(t.is_finite() && *t > 0.0)) || targets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(format!(
            "targets must be positive and strictly increasing: {targets:?}"
        )));
    }
    let basis = generating_basis(m, n)?;
    let d = basis.dimension();
    if targets.len() >= d {
        return Err(Error::Domain(format!(
            "{} targets requested but the basis has dimension {d}; at most {} zeros can be placed",
            targets.len(),
            d - 1
        )));
    }
    let ts: Vec<Rational> = targets.iter().map(|&t| nearby(t, 40)).collect::<Result<_>>()?;
    let pi_q = pi(APPROX_BITS).mid();
    let a: Matrix = ts
        .iter()
        .map(|t| basis.elements.iter().map(|&b| basis_value(b, t, m, &pi_q)).collect())
        .collect();
    let r = rank(&a);
    if r < ts.len() {
        let mut pivots = crate::linalg::independent_columns(&a, &(0..d).collect::<Vec<_>>());
        pivots.sort();
        let missing: Vec<String> = (0..d)
            .filter(|c| !pivots.contains(c))
            .map(|c| basis.elements[c].to_string())
            .collect();
        return Err(Error::RankDeficient(missing));
    }
    let kernel = null_space(&a, d);
    let raw = kernel
        .first()
        .ok_or_else(|| Error::Internal("empty null space".into()))?;
    let mut last_err = None;
    for coef in [tidy(raw), raw.clone()] {
        let (spec, expansion) = realize(m, n, &coef, &basis.elements)?;
        let report = count_zeros(&expansion)?;
        let hits = ts
            .iter()
            .filter(|t| {
                let t = to_f64(t);
                report
                    .intervals
                    .iter()
                    .any(|r| r.multiplicity == super::Multiplicity::Simple && r.contains_near(t))
            })
            .count();
        if report.is_certified() && report.simple_count() >= ts.len() && hits == ts.len() {
            return Ok(Construction {
                spec,
                expansion,
                coefficients: basis.elements.iter().copied().zip(coef).collect(),
                targets: ts,
                report,
            });
        }
        last_err = Some(format!(
            "certified {} simple zeros ({}), {} near targets, wanted {}",
            report.simple_count(),
            report.rigor,
            hits,
            ts.len()
        ));
    }
    Err(Error::Finding(format!(
        "construction for m={}, n={n} failed: {}",
        m.get(),
        last_err.unwrap()
    )))
}

/// Targets for the stated lower bound, capped by the basis dimension.
pub fn construct_lower_bound(m: CurvePower, n: u32) -> Result<Construction> {
    let lower = bound_Z(m, n).lower.max(0) as usize;
    let d = generating_basis(m, n)?.dimension();
    let p = lower.min(d.saturating_sub(1)).max(1);
    construct_max_zeros(m, n, &default_targets(p))
}

impl super::RootInterval {
    /// Containment with a little slack for targets rounded to 40 bits.
    pub fn contains_near(&self, x: f64) -> bool {
        let tol = 1e-9 * x.abs().max(1.0);
        to_f64(&self.lo) - tol <= x && x <= to_f64(&self.hi) + tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cp(m: u32) -> CurvePower {
        CurvePower::new(m).unwrap()
    }

    #[test]
    fn single_zero_for_degree_zero() {
        let c = construct_max_zeros(cp(3), 0, &[0.8]).unwrap();
        assert_eq!(c.report.simple_count(), 1);
        assert!(c.report.intervals[0].contains_near(0.8));
    }

    #[test]
    fn odd_and_even_small_cases() {
        let c = construct_max_zeros(cp(3), 2, &[0.5, 1.0, 1.5, 2.0, 2.5]).unwrap();
        assert_eq!(c.report.simple_count(), 5);
        let c = construct_max_zeros(cp(2), 1, &[0.6, 1.0, 1.5]).unwrap();
        assert_eq!(c.report.simple_count(), 3);
        assert_eq!(assemble(&c.spec).unwrap(), c.expansion);
    }

    #[test]
    fn too_many_targets() {
        assert!(matches!(
            construct_max_zeros(cp(3), 0, &[0.5, 1.0]),
            Err(Error::Domain(_))
        ));
        assert!(construct_max_zeros(cp(3), 1, &[1.0, 0.5]).is_err());
    }
}
