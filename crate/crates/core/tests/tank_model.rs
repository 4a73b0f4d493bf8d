mod common;

use common::{random_plant, reference_point, rng, tank_rhs};
use proptest::prelude::*;
use tankmpc::{linearize, nonlinear_derivatives, steady_inflows, DeviationState, TankParams};

fn fd_jacobian(p: &TankParams, op: &tankmpc::OperatingPoint, step: f64) -> [[f64; 2]; 2] {
    let mut j = [[0.0; 2]; 2];
    for col in 0..2 {
        let mut hp = [0.0; 2];
        let mut hm = [0.0; 2];
        hp[col] = step;
        hm[col] = -step;
        let fp = nonlinear_derivatives(p, op, &hp.into(), [0.0; 2]).unwrap();
        let fm = nonlinear_derivatives(p, op, &hm.into(), [0.0; 2]).unwrap();
        for row in 0..2 {
            j[row][col] = (fp[row] - fm[row]) / (2.0 * step);
        }
    }
    j
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-12)
}

#[test]
fn rates_at_half_and_three_tenths_metre() {
    // evaluated independently at 40 significant digits
    let (p, op) = reference_point();
    let d = nonlinear_derivatives(&p, &op, &DeviationState::new(0.5, 0.3), [0.0; 2]).unwrap();
    assert!((d[0] - -1.4519467130135591028).abs() < 1e-12, "{}", d[0]);
    assert!((d[1] - 0.85414972435471499104).abs() < 1e-12, "{}", d[1]);
}

#[test]
fn matches_absolute_level_mass_balance() {
    let mut r = rng(11);
    for _ in 0..50 {
        let (p, op) = random_plant(&mut r);
        let h = [
            rand::Rng::random_range(&mut r, -0.3..0.3),
            rand::Rng::random_range(&mut r, -0.3..0.3),
        ];
        let fi = [
            rand::Rng::random_range(&mut r, -1.0..1.0),
            rand::Rng::random_range(&mut r, -1.0..1.0),
        ];
        let got = nonlinear_derivatives(&p, &op, &h.into(), fi).unwrap();
        let want = tank_rhs(&p, (op.l1, op.l2), h, fi);
        for i in 0..2 {
            assert!(
                (got[i] - want[i]).abs() <= 1e-12 * (1.0 + want[i].abs()),
                "{got:?} {want:?}"
            );
        }
    }
}

#[test]
fn steady_inflows_of_reference_plant() {
    let (fi1, fi2) = steady_inflows(&TankParams::reference(), 4.0, 3.5).unwrap();
    assert!((fi1 - 1.5556349186104045537).abs() < 1e-12);
    assert!((fi2 - 1.9989395988248397626).abs() < 1e-12);
}

#[test]
fn jacobian_of_reference_plant() {
    let (p, op) = reference_point();
    let lin = linearize(&p, &op).unwrap();
    let j = fd_jacobian(&p, &op, 1e-6);
    for r in 0..2 {
        for c in 0..2 {
            assert!(
                rel_err(j[r][c], lin.a[(r, c)]) < 1e-4,
                "({r},{c}) {} vs {}",
                j[r][c],
                lin.a[(r, c)]
            );
        }
    }
}

#[test]
fn linearize_rejects_degenerate_levels() {
    let p = TankParams::reference();
    let op = tankmpc::OperatingPoint {
        l1: 3.0,
        l2: 3.0,
        fi1_bar: 0.0,
        fi2_bar: p.alpha2 * 3f64.sqrt(),
    };
    assert!(matches!(
        linearize(&p, &op),
        Err(tankmpc::Error::SingularLinearization(_))
    ));
    let op = tankmpc::OperatingPoint {
        l1: 1.0,
        l2: 0.0,
        fi1_bar: 2.2,
        fi2_bar: -2.2,
    };
    assert!(matches!(
        linearize(&p, &op),
        Err(tankmpc::Error::SingularLinearization(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn equilibrium_is_exact(seed in any::<u64>()) {
        let (p, op) = random_plant(&mut rng(seed));
        let d = nonlinear_derivatives(&p, &op, &DeviationState::default(), [0.0; 2]).unwrap();
        prop_assert_eq!(d, [0.0, 0.0]);
    }

    #[test]
    fn directional_derivative_matches_a(seed in any::<u64>(), theta in 0.0..std::f64::consts::TAU) {
        let (p, op) = random_plant(&mut rng(seed));
        let lin = linearize(&p, &op).unwrap();
        let v = [theta.cos(), theta.sin()];
        let step = 1e-6;
        let fp = nonlinear_derivatives(&p, &op, &[step * v[0], step * v[1]].into(), [0.0; 2]).unwrap();
        let fm = nonlinear_derivatives(&p, &op, &[-step * v[0], -step * v[1]].into(), [0.0; 2]).unwrap();
        for r in 0..2 {
            let fd = (fp[r] - fm[r]) / (2.0 * step);
            let av = lin.a[(r, 0)] * v[0] + lin.a[(r, 1)] * v[1];
            let scale = lin.a[(r, 0)].abs() + lin.a[(r, 1)].abs();
            prop_assert!((fd - av).abs() <= 1e-4 * scale, "row {} fd {} a.v {}", r, fd, av);
        }
        let j = fd_jacobian(&p, &op, 1e-6);
        for r in 0..2 {
            for c in 0..2 {
                prop_assert!(rel_err(j[r][c], lin.a[(r, c)]) < 1e-4);
            }
        }
    }

    #[test]
    fn inflow_slope_is_b(seed in any::<u64>(), h1 in -0.2..0.2f64, h2 in -0.2..0.2f64) {
        let (p, op) = random_plant(&mut rng(seed));
        let lin = linearize(&p, &op).unwrap();
        let h = DeviationState::new(h1, h2);
        let base = nonlinear_derivatives(&p, &op, &h, [0.0, 0.0]).unwrap();
        for k in 0..2 {
            let mut fi = [0.0; 2];
            fi[k] = 1.0;
            let d = nonlinear_derivatives(&p, &op, &h, fi).unwrap();
            for r in 0..2 {
                let slope = d[r] - base[r];
                prop_assert!((slope - lin.b[(r, k)]).abs() <= 1e-12 * lin.b[(r, k)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn sign_structure(seed in any::<u64>()) {
        let (p, op) = random_plant(&mut rng(seed));
        let a = linearize(&p, &op).unwrap().a;
        prop_assert!(a[(0, 0)] < 0.0 && a[(1, 1)] < 0.0 && a[(0, 1)] > 0.0 && a[(1, 0)] > 0.0);
        prop_assert_eq!(a[(0, 0)], -a[(0, 1)]);
    }

    #[test]
    fn steady_inflows_zero_the_balance(seed in any::<u64>()) {
        let (p, op) = random_plant(&mut rng(seed));
        let (fi1, fi2) = steady_inflows(&p, op.l1, op.l2).unwrap();
        let q12 = p.alpha1 * (op.l1 - op.l2).sqrt();
        let r1 = fi1 - q12;
        let r2 = fi2 + q12 - p.alpha2 * op.l2.sqrt();
        prop_assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12, "{} {}", r1, r2);
    }
}
