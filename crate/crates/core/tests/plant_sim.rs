mod common;

use common::{random_plant, reference_point, reference_solution, rk4_plain, rng, tank_rhs};
use nalgebra::DVector;
use proptest::prelude::*;
use tankmpc::closed_loop::open_loop;
use tankmpc::plant::{rk4_step, PlantDynamics};
use tankmpc::{
    linearize, zoh_discretize, DeviationState, DisturbanceProfile, DisturbanceTarget, PlantState,
};

fn integrate(dt: f64, steps: usize, h0: [f64; 2]) -> [f64; 2] {
    let (p, op) = reference_point();
    let dynamics = PlantDynamics::nonlinear(p, op);
    open_loop(&dynamics, h0.into(), [0.0; 2], dt, steps).unwrap()[steps].as_array()
}

#[test]
fn single_step_against_high_accuracy_reference() {
    let (p, op) = reference_point();
    let f = |h: [f64; 2]| tank_rhs(&p, (op.l1, op.l2), h, [0.0; 2]);
    let want = reference_solution(&f, [0.1, 0.1], 0.0125, 1e-12);
    let got = rk4_step(
        &p,
        &op,
        &PlantState {
            t: 0.0,
            dev: DeviationState::new(0.1, 0.1),
        },
        [0.0; 2],
        &DisturbanceProfile::none(),
        0.0125,
    )
    .unwrap()
    .dev
    .as_array();
    let err = (got[0] - want[0]).abs().max((got[1] - want[1]).abs());
    assert!(err < 1e-8, "one-step error {err:e}");
}

#[test]
fn fourth_order_convergence() {
    let (p, op) = reference_point();
    let f = |h: [f64; 2]| tank_rhs(&p, (op.l1, op.l2), h, [0.0; 2]);
    let h0 = [0.3, -0.2];
    let t = 1.0;
    let want = reference_solution(&f, h0, t, 1e-14);
    let dts = [0.025, 0.0125, 0.00625];
    let pts: Vec<(f64, f64)> = dts
        .iter()
        .map(|&dt| {
            let got = integrate(dt, (t / dt).round() as usize, h0);
            let e = (got[0] - want[0]).abs().max((got[1] - want[1]).abs());
            (dt.ln(), e.ln())
        })
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - 4.0).abs() <= 0.3, "slope {slope}");
}

#[test]
fn disturbance_is_resolved_at_stage_times() {
    let (p, op) = reference_point();
    // pulse starting half way through the step: only stages at t + dt/2 and t + dt see it
    let pulse = DisturbanceProfile {
        start: 0.005,
        duration: 1.0,
        magnitude: 10.0,
        target: DisturbanceTarget::Tank1,
    };
    let dt = 0.01;
    let got = rk4_step(&p, &op, &PlantState::default(), [0.0; 2], &pulse, dt)
        .unwrap()
        .dev
        .as_array();
    let d = 0.1 * op.fi1_bar;
    let f = |t: f64, h: [f64; 2]| {
        tank_rhs(
            &p,
            (op.l1, op.l2),
            h,
            [if t >= 0.005 { d } else { 0.0 }, 0.0],
        )
    };
    let k1 = f(0.0, [0.0; 2]);
    let k2 = f(dt / 2.0, [dt / 2.0 * k1[0], dt / 2.0 * k1[1]]);
    let k3 = f(dt / 2.0, [dt / 2.0 * k2[0], dt / 2.0 * k2[1]]);
    let k4 = f(dt, [dt * k3[0], dt * k3[1]]);
    for i in 0..2 {
        let want = dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        assert!((got[i] - want).abs() < 1e-15, "{got:?}");
    }
}

#[test]
fn draining_tank_one_falls_monotonically() {
    let (p, op) = reference_point();
    let traj = open_loop(
        &PlantDynamics::nonlinear(p, op),
        DeviationState::new(0.4, 0.0),
        [0.0; 2],
        0.0125,
        400,
    )
    .unwrap();
    for w in traj.windows(2) {
        assert!(w[1].h1 < w[0].h1);
    }
    assert!(traj.last().unwrap().h1.abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn small_signals_follow_the_linear_model(
        h1 in -0.035..0.035f64,
        h2 in -0.035..0.035f64,
        u1 in -0.05..0.05f64,
        u2 in -0.05..0.05f64,
    ) {
        let (p, op) = reference_point();
        let ts = 0.05;
        let d = zoh_discretize(&linearize(&p, &op).unwrap(), ts).unwrap();
        let nl = open_loop(&PlantDynamics::nonlinear(p, op), DeviationState::new(h1, h2), [u1, u2], ts / 4.0, 80).unwrap();
        let mut x = DVector::from_vec(vec![h1, h2]);
        let u = DVector::from_vec(vec![u1, u2]);
        let mut peak: f64 = x.amax();
        let mut worst: f64 = 0.0;
        for k in 1..=20 {
            x = &d.ad * &x + &d.bd * &u;
            peak = peak.max(x.amax());
            let s = nl[4 * k].as_array();
            worst = worst.max((s[0] - x[0]).abs()).max((s[1] - x[1]).abs());
        }
        prop_assert!(worst <= 0.02 * peak, "worst {} peak {}", worst, peak);
    }

    #[test]
    fn equilibrium_holds_for_any_plant(seed in any::<u64>(), dt in 0.001..0.05f64) {
        let (p, op) = random_plant(&mut rng(seed));
        let mut s = PlantState::default();
        for _ in 0..50 {
            s = rk4_step(&p, &op, &s, [0.0; 2], &DisturbanceProfile::none(), dt).unwrap();
        }
        prop_assert!(s.dev.h1.abs() < 1e-12 && s.dev.h2.abs() < 1e-12);
    }

    #[test]
    fn rk4_step_agrees_with_plain_rk4(seed in any::<u64>(), h1 in -0.3..0.3f64, h2 in -0.3..0.3f64, dt in 0.001..0.05f64) {
        let (p, op) = random_plant(&mut rng(seed));
        let f = |h: [f64; 2]| tank_rhs(&p, (op.l1, op.l2), h, [0.1, -0.1]);
        let want = rk4_plain(&f, [h1, h2], dt);
        let got = rk4_step(&p, &op, &PlantState { t: 0.0, dev: DeviationState::new(h1, h2) }, [0.1, -0.1], &DisturbanceProfile::none(), dt)
            .unwrap()
            .dev
            .as_array();
        prop_assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
    }
}
