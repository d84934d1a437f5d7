//! One line per acceptance criterion: `PASS` / `FAIL`, the criterion, and
//! what was measured. Exits nonzero if any criterion fails.

use melnikov_core::abelian::{
    odd_symmetry_image, pythagoras_defect, reduce, reduce_i, reduce_j, Generator, IntegralExpr, Side,
};
use melnikov_core::melnikov::{assemble, independence_jacobian, ArcFunction, BasisElement, ReducedKind, ReducedLabel};
use melnikov_core::model::{CurvePower, Family, PerturbationSpec};
use melnikov_core::oracle::{integral_quadrature, QuadratureOptions};
use melnikov_core::qpi::QPi;
use melnikov_core::rational::q;
use melnikov_core::roots::{bound_Z, construct_max_zeros, count_zeros, default_targets};
use melnikov_core::simulate::find_limit_cycles;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn cp(m: u32) -> CurvePower {
    CurvePower::new(m).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let o = QuadratureOptions::default();
    let (mut worst, mut where_, mut bad, mut n) = (0.0f64, String::from("-"), 0, 0);
    let mut worst_scaled = 0.0f64;
    for mm in 1..=6 {
        let m = cp(mm);
        for u in [0.3f64, 0.7, 1.0, 1.5] {
            for s in 0..=8u32 {
                for j in 0..=s {
                    let i = s - j;
                    for side in [Side::Plus, Side::Minus] {
                        n += 1;
                        let closed = reduce(i, j, m, side).canonical(m).eval_exact(u, m).unwrap();
                        let quad = integral_quadrature(i, j, u, m, side, &o).unwrap();
                        let diff = (closed - quad.value).abs();
                        let rel = diff / closed.abs().max(quad.value.abs()).max(f64::MIN_POSITIVE);
                        // integrals that vanish exactly are judged against the size of the integrand
                        let ok = rel <= 1e-8 || diff <= 1e-13 * quad.abs_integral;
                        if !ok {
                            bad += 1;
                        }
                        worst_scaled = worst_scaled.max(diff / quad.abs_integral.max(f64::MIN_POSITIVE));
                        if closed.abs() > 1e-10 * quad.abs_integral && rel > worst {
                            worst = rel;
                            where_ = format!("m={mm} u={u} ({i},{j}) {side:?}");
                        }
                    }
                }
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        pass: bad == 0 && secs < 60.0,
        detail: format!("{n} integrals, {bad} outside 1e-8, worst rel {worst:.2e} (non-vanishing) at {where_}, worst error over integral of |integrand| {worst_scaled:.1e}, {secs:.1}s (limit 60s)"),
    }
}

fn criterion_2() -> Outcome {
    let (mut checked, mut bad) = (0, Vec::new());
    for mm in 1..=6 {
        let m = cp(mm);
        for s in 0..=8u32 {
            for j in 0..=s {
                let i = s - j;
                for side in [Side::Plus, Side::Minus] {
                    checked += 1;
                    if !pythagoras_defect(i, j, m, side).is_zero() {
                        bad.push(format!("pythagoras m={mm} ({i},{j}) {side:?}"));
                    }
                }
                if m.is_odd() {
                    checked += 1;
                    let img = odd_symmetry_image(i, j, m).unwrap();
                    if img.canonical(m) != reduce_i(i, j, m).canonical(m) {
                        bad.push(format!("symmetry m={mm} ({i},{j})"));
                    }
                }
            }
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!(
            "{checked} exact identities, {} failures {:?}",
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    }
}

/// The displayed closed forms of the proof table (odd `m`), as `(c, h, u-exponent as (a, b) meaning a*m + b, generator)`.
fn displayed(i: u32, j: u32, m: u32) -> IntegralExpr {
    let rows: Vec<(i64, i64, u32, u32, u32, Generator)> = match (i, j) {
        (2, 0) => vec![(2, 3, 1, 0, 0, Generator::J00), (-2, 3, 0, 2, 1, Generator::Unit)],
        (0, 2) => vec![(2, 3, 1, 0, 0, Generator::J00), (2, 3, 0, 2, 1, Generator::Unit)],
        (4, 0) => vec![
            (1, 1, 2, 0, 0, Generator::J00),
            (-2, 3, 1, 2, 1, Generator::Unit),
            (-2, 5, 0, 2, 3, Generator::Unit),
        ],
        (3, 1) => vec![(4, 5, 1, 0, 0, Generator::J11), (-2, 5, 0, 3, 2, Generator::Unit)],
        (1, 3) => vec![(3, 5, 1, 0, 0, Generator::J11), (2, 5, 0, 3, 2, Generator::Unit)],
        (2, 2) => vec![
            (2, 5, 2, 0, 0, Generator::J00),
            (-4, 15, 1, 2, 1, Generator::Unit),
            (2, 5, 0, 2, 3, Generator::Unit),
        ],
        (0, 4) => vec![
            (8, 15, 2, 0, 0, Generator::J00),
            (8, 15, 1, 2, 1, Generator::Unit),
            (2, 5, 0, 4, 1, Generator::Unit),
        ],
        _ => unreachable!(),
    };
    let mut e = IntegralExpr::zero();
    for (a, b, h, um, uc, g) in rows {
        e = e.add(&IntegralExpr::term(q(a, b), h, um * m + uc, g));
    }
    e
}

fn criterion_3() -> Outcome {
    let o = QuadratureOptions::default();
    let (mut matched, mut findings, mut unresolved) = (Vec::new(), Vec::new(), Vec::new());
    for (i, j) in [(2, 0), (0, 2), (4, 0), (3, 1), (1, 3), (2, 2), (0, 4)] {
        let mut same = true;
        let mut oracle_backs_recursion = true;
        for mm in [3, 5, 7] {
            let m = cp(mm);
            let ours = reduce_j(i, j, m).canonical(m);
            let shown = displayed(i, j, mm).canonical(m);
            if ours != shown {
                same = false;
                for u in [0.7f64, 1.3] {
                    let quad = integral_quadrature(i, j, u, m, Side::Plus, &o).unwrap().value;
                    let a = ours.eval_exact(u, m).unwrap();
                    let b = shown.eval_exact(u, m).unwrap();
                    let scale = quad.abs().max(1e-300);
                    if !((a - quad).abs() <= 1e-8 * scale && (b - quad).abs() > 1e-6 * scale) {
                        oracle_backs_recursion = false;
                    }
                }
            }
        }
        let name = format!("J{i}{j}");
        if same {
            matched.push(name);
        } else if oracle_backs_recursion {
            findings.push(name);
        } else {
            unresolved.push(name);
        }
    }
    Outcome {
        pass: unresolved.is_empty(),
        detail: format!(
            "match as displayed: {matched:?}; FINDING (display contradicts quadrature, recursion agrees): {findings:?}; unresolved: {unresolved:?}"
        ),
    }
}

fn criterion_4() -> Outcome {
    let mut expected: Vec<((u32, u32), (i64, i64))> = (1..=6).map(|n| ((1, n), (n as i64, n as i64))).collect();
    expected.extend([
        ((2, 1), (3, 3)),
        ((2, 2), (4, 4)),
        ((3, 2), (5, 6)),
        ((3, 3), (6, 9)),
        ((3, 4), (9, 12)),
    ]);
    let bad: Vec<String> = expected
        .iter()
        .filter_map(|&((m, n), want)| {
            let b = bound_Z(cp(m), n);
            ((b.lower, b.upper) != want).then(|| format!("Z({m},{n}) = ({}, {}) want {want:?}", b.lower, b.upper))
        })
        .collect();
    Outcome {
        pass: bad.is_empty(),
        detail: format!("{} corollary values, mismatches {bad:?}", expected.len()),
    }
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for (m, n, want) in [(3, 2, 5usize), (2, 1, 3), (2, 2, 4), (3, 3, 6)] {
        match construct_max_zeros(cp(m), n, &default_targets(want)) {
            Ok(c) => {
                let got = c.report.simple_count();
                ok &= got >= want && c.report.is_certified();
                parts.push(format!("({m},{n}): {got} simple ({}) want >= {want}", c.report.rigor));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("({m},{n}): {e}"));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        pass: ok && secs < 120.0,
        detail: format!("{}; {secs:.1}s (limit 120s)", parts.join("; ")),
    }
}

fn random_spec(rng: &mut ChaCha8Rng, m: u32, n: u32) -> PerturbationSpec {
    let mut s = PerturbationSpec::zero(cp(m), n);
    for f in Family::ALL {
        for (i, j) in PerturbationSpec::indices(n) {
            if rng.gen_bool(0.7) {
                let num: i64 = rng.gen_range(-9..=9);
                let den: i64 = rng.gen_range(1..=5);
                s.set(f, i, j, q(num, den)).unwrap();
            }
        }
    }
    s
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut parts = Vec::new();
    let (mut exceed, mut uncertified, mut trivial) = (0, 0, 0);
    for (m, n) in [(3, 2), (3, 3), (5, 2), (2, 2), (2, 3)] {
        let t = Instant::now();
        let upper = bound_Z(cp(m), n).upper;
        let mut max_seen = 0;
        for _ in 0..200 {
            let spec = random_spec(&mut rng, m, n);
            let e = assemble(&spec).unwrap();
            if e.is_zero() {
                trivial += 1;
                continue;
            }
            match count_zeros(&e) {
                Ok(r) if r.is_certified() => {
                    max_seen = max_seen.max(r.count());
                    if r.count() as i64 > upper {
                        exceed += 1;
                        println!(
                            "FINDING: ({m},{n}) spec {} has {} zeros > {upper}",
                            spec.to_json(),
                            r.count()
                        );
                    }
                }
                _ => uncertified += 1,
            }
        }
        parts.push(format!(
            "({m},{n}) max {max_seen} <= {upper} [{:.1}s]",
            t.elapsed().as_secs_f64()
        ));
    }
    Outcome {
        pass: exceed == 0 && uncertified == 0,
        detail: format!(
            "{}; exceedances {exceed}, uncertified {uncertified}, identically zero {trivial}",
            parts.join(", ")
        ),
    }
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let targets = [0.6, 1.0, 1.5];
    let c = match construct_max_zeros(cp(2), 1, &targets) {
        Ok(c) => c,
        Err(e) => {
            return Outcome {
                pass: false,
                detail: e.to_string(),
            }
        }
    };
    match find_limit_cycles(&c.spec, 1e-3f64, (0.3, 2.2), 60) {
        Ok(cycles) => {
            let close = cycles.len() == 3
                && cycles
                    .iter()
                    .zip(targets)
                    .all(|(cy, t)| (cy.u_star - t).abs() < 0.05 && cy.residual < 1e-10);
            let secs = t.elapsed().as_secs_f64();
            let list: Vec<String> = cycles
                .iter()
                .map(|c| format!("{:.6} ({}, |Delta| {:.1e})", c.u_star, c.stability, c.residual))
                .collect();
            Outcome {
                pass: close && secs < 300.0,
                detail: format!("{} cycles [{}], {secs:.1}s", cycles.len(), list.join(", ")),
            }
        }
        Err(e) => Outcome {
            pass: false,
            detail: e.to_string(),
        },
    }
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    let mut ok = true;
    for mm in [2u32, 4] {
        let t = ArcFunction::new(cp(mm));
        ok &= (t.value(0.0f64) - std::f64::consts::FRAC_PI_4).abs() < 1e-15;
        let d = mm - 1;
        let series = t.series(121 * d);
        ok &= series.contains(&(3 * d, QPi::rat(q(-1, 3)))) && series.contains(&(5 * d, QPi::rat(q(2, 5))));
        for k in 1..=50 {
            let u = 0.01 * k as f64;
            let s: f64 = series.iter().map(|(e, c)| c.to_f64() * u.powi(*e as i32)).sum();
            worst = worst.max((s - t.value(u)).abs());
        }
    }
    Outcome {
        pass: ok && worst < 1e-12,
        detail: format!("m in {{2,4}}, u <= 0.5: max |series - closed| = {worst:.1e}"),
    }
}

fn criterion_9() -> Outcome {
    let mut bad = Vec::new();
    for m in 1..=7 {
        for n in 0..=6 {
            match independence_jacobian(cp(m), n) {
                Ok(j) if !j.determinant.is_zero() => {
                    if m % 2 == 1 && n <= 4 {
                        for l in 0..=n / 2 {
                            let lab = ReducedLabel {
                                kind: ReducedKind::Rho,
                                i: 2 * l,
                                j: 0,
                            };
                            if j.entry(BasisElement::Mono(2 * l + 1), lab) != Some(q(2, 2 * l as i64 + 1)) {
                                bad.push(format!("diag m={m} n={n} l={l}"));
                            }
                        }
                    }
                }
                Ok(_) => bad.push(format!("singular m={m} n={n}")),
                Err(e) => bad.push(format!("m={m} n={n}: {e}")),
            }
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!("49 Jacobians, problems {bad:?}"),
    }
}

fn main() {
    let list: [(&str, fn() -> Outcome); 9] = [
        ("1 integral oracle suite", criterion_1),
        ("2 exact identity suite", criterion_2),
        ("3 proof-table golden values", criterion_3),
        ("4 corollary bound table", criterion_4),
        ("5 lower-bound realization", criterion_5),
        ("6 upper-bound conformance", criterion_6),
        ("7 ODE confirmation", criterion_7),
        ("8 arc function series", criterion_8),
        ("9 independence Jacobians", criterion_9),
    ];
    let mut failed = 0;
    for (name, f) in list {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
