use melnikov_core::melnikov::assemble;
use melnikov_core::model::CurvePower;
use melnikov_core::roots::construct_max_zeros;
use melnikov_core::simulate::{displacement_map, find_limit_cycles};

fn cp(m: u32) -> CurvePower {
    CurvePower::new(m).unwrap()
}

#[test]
fn cycles_sit_at_melnikov_zeros() {
    let c = construct_max_zeros(cp(2), 1, &[0.6, 1.0, 1.5]).unwrap();
    let t = std::time::Instant::now();
    let cycles = find_limit_cycles(&c.spec, 1e-3f64, (0.3, 2.2), 60).unwrap();
    eprintln!("{:?} in {:?}", cycles, t.elapsed());
    assert_eq!(cycles.len(), 3);
    for (cy, target) in cycles.iter().zip([0.6, 1.0, 1.5]) {
        assert!((cy.u_star - target).abs() < 0.05);
        assert!(cy.residual < 1e-10);
    }
}

#[test]
fn displacement_sign_follows_melnikov() {
    let c = construct_max_zeros(cp(3), 2, &[0.5, 1.0, 1.5, 2.0, 2.5]).unwrap();
    let e = assemble(&c.spec).unwrap();
    for u in [0.75f64, 1.25, 1.75, 2.25] {
        let d = displacement_map(&c.spec, 1e-5, u).unwrap();
        assert_eq!(e.eval(u) > 0.0, d > 0.0, "u={u}");
    }
}

// First order: the energy h/2 changes by eps*M per turn, so
// Delta / (eps M) -> 2 / h'(u).
#[test]
fn first_order_ratio() {
    let c = construct_max_zeros(cp(3), 2, &[0.5, 1.0, 1.5, 2.0, 2.5]).unwrap();
    let e = assemble(&c.spec).unwrap();
    for u in [0.75f64, 1.25, 1.75, 2.25] {
        let dh = 2.0 * u + 6.0 * u.powi(5);
        let mut last = f64::INFINITY;
        for eps in [1e-4, 1e-5, 1e-6] {
            let ratio = displacement_map(&c.spec, eps, u).unwrap() / (eps * e.eval(u));
            let err = (ratio * dh / 2.0 - 1.0).abs();
            assert!(err < last, "u={u} eps={eps}: {err}");
            last = err;
        }
        assert!(last < 0.01, "u={u}: {last}");
    }
}

#[test]
fn unperturbed_energy_is_conserved() {
    let spec = melnikov_core::model::PerturbationSpec::zero(cp(2), 1);
    for m in [2, 3, 5] {
        let spec = melnikov_core::model::PerturbationSpec::zero(cp(m), spec.n);
        for u in [0.3f64, 0.8, 1.4, 2.0] {
            let d = displacement_map(&spec, 0.0, u).unwrap();
            assert!(d.abs() < 1e-9, "m={m} u={u}: {d}");
        }
    }
}

#[test]
fn displacement_is_first_order_consistent() {
    let c = construct_max_zeros(cp(2), 1, &[0.6, 1.0, 1.5]).unwrap();
    let gap = |eps: f64| {
        let a = displacement_map(&c.spec, eps, 0.8).unwrap() / eps;
        let b = displacement_map(&c.spec, eps / 2.0, 0.8).unwrap() / (eps / 2.0);
        (a - b).abs()
    };
    let (g1, g2, g3) = (gap(1e-2), gap(1e-3), gap(1e-4));
    assert!(g2 < g1 && g3 < g2, "{g1} {g2} {g3}");
}

#[test]
fn cycles_converge_as_epsilon_shrinks() {
    let c = construct_max_zeros(cp(2), 1, &[0.6, 1.0, 1.5]).unwrap();
    let e = assemble(&c.spec).unwrap();
    let zeros: Vec<f64> = c
        .report
        .intervals
        .iter()
        .map(|r| {
            let (mut a, mut b) = (r.lo_f64(), r.hi_f64());
            let sa = e.eval(a) > 0.0;
            for _ in 0..100 {
                let mid = 0.5 * (a + b);
                if (e.eval(mid) > 0.0) == sa {
                    a = mid
                } else {
                    b = mid
                }
            }
            a
        })
        .collect();
    let mut last = vec![f64::INFINITY; 3];
    for eps in [1e-2, 1e-3, 1e-4] {
        let cyc = find_limit_cycles(&c.spec, eps, (0.3, 2.2), 60).unwrap();
        assert_eq!(cyc.len(), 3, "eps={eps}");
        for k in 0..3 {
            let d = (cyc[k].u_star - zeros[k]).abs();
            assert!(d <= last[k], "eps={eps} cycle {k}: {d} > {}", last[k]);
            last[k] = d;
        }
    }
}

#[test]
fn no_spurious_cycles() {
    let c = construct_max_zeros(cp(3), 2, &[0.5, 1.0, 1.5, 2.0, 2.5]).unwrap();
    let cyc = find_limit_cycles(&c.spec, 1e-5, (0.3, 2.8), 80).unwrap();
    assert!(cyc.len() <= c.report.count());
}
