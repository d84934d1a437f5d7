use melnikov_core::melnikov::{assemble, expand_series, generating_basis};
use melnikov_core::model::{CurvePower, Family, PerturbationSpec};
use melnikov_core::oracle::{melnikov_quadrature, QuadratureOptions};
use melnikov_core::rational::{from_f64, q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cp(m: u32) -> CurvePower {
    CurvePower::new(m).unwrap()
}

fn random_spec(rng: &mut ChaCha8Rng, m: u32, n: u32) -> PerturbationSpec {
    let mut s = PerturbationSpec::zero(cp(m), n);
    for f in Family::ALL {
        for (i, j) in PerturbationSpec::indices(n) {
            if rng.gen_bool(0.6) {
                s.set(f, i, j, q(rng.gen_range(-9..=9), rng.gen_range(1..=7))).unwrap();
            }
        }
    }
    s
}

const CONFIGS: [(u32, u32); 6] = [(3, 2), (3, 4), (5, 2), (2, 2), (2, 3), (4, 3)];

#[test]
fn assembled_expansion_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let o = QuadratureOptions::default();
    let mut checked = 0;
    for (m, n) in CONFIGS {
        for _ in 0..50 {
            let spec = random_spec(&mut rng, m, n);
            let e = assemble(&spec).unwrap();
            for u in [0.4, 0.9, 1.3] {
                let closed = e.enclose(&from_f64(u).unwrap(), 128).to_f64();
                let quad = melnikov_quadrature(&spec, u, &o).unwrap();
                let diff = (closed - quad.value).abs();
                let rel = diff / closed.abs().max(quad.value.abs()).max(f64::MIN_POSITIVE);
                // near-cancelling values are judged against the size of the integrand
                assert!(
                    rel <= 1e-7 || diff <= 1e-13 * quad.abs_integral,
                    "m={m} n={n} u={u}: closed {closed} quadrature {} rel {rel:e}",
                    quad.value
                );
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 900);
}

#[test]
fn support_lies_in_generating_basis() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for m in 1..=6 {
        for n in 0..=5 {
            let basis = generating_basis(cp(m), n).unwrap();
            for _ in 0..5 {
                let e = assemble(&random_spec(&mut rng, m, n)).unwrap();
                for b in e.support() {
                    assert!(basis.elements.contains(&b), "m={m} n={n}: {b} not in basis");
                }
            }
        }
    }
}

#[test]
fn series_matches_evaluation_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u = 1e-2f64;
    for (m, n) in CONFIGS.into_iter().chain([(1, 3), (6, 2)]) {
        for _ in 0..10 {
            let e = assemble(&random_spec(&mut rng, m, n)).unwrap();
            let order = 2 * m + 6;
            let s: f64 = expand_series(&e, order)
                .iter()
                .map(|(k, c)| c.to_f64() * u.powi(*k as i32))
                .sum();
            let exact = e.enclose(&from_f64(u).unwrap(), 128).to_f64();
            assert!((s - exact).abs() < 1e-12, "m={m} n={n}: series {s} vs {exact}");
            assert!(expand_series(&e, order).iter().any(|(k, _)| *k <= 2 * m + 4) || e.is_zero());
        }
    }
}

#[test]
fn shared_hamiltonian_perturbations_vanish() {
    // p = -H_y, q = H_x with the same polynomial H on both sides
    for m in 1..=5 {
        let spec = PerturbationSpec::zero(cp(m), 3)
            .with(Family::APlus, 0, 1, q(-2, 1))
            .unwrap()
            .with(Family::AMinus, 0, 1, q(-2, 1))
            .unwrap()
            .with(Family::BPlus, 1, 0, q(2, 1))
            .unwrap()
            .with(Family::BMinus, 1, 0, q(2, 1))
            .unwrap()
            .with(Family::APlus, 2, 0, q(-3, 1))
            .unwrap()
            .with(Family::AMinus, 2, 0, q(-3, 1))
            .unwrap()
            .with(Family::BPlus, 1, 1, q(6, 1))
            .unwrap()
            .with(Family::BMinus, 1, 1, q(6, 1))
            .unwrap();
        assert!(assemble(&spec).unwrap().is_zero(), "m={m}");
    }
}
