mod common;

use common::{max_abs_diff, random_plant, reference_point, rng, zoh_2x2_eigen};
use nalgebra::DMatrix;
use proptest::prelude::*;
use tankmpc::discretize::euler_discretize;
use tankmpc::{linearize, zoh_discretize};

#[test]
fn reference_plant_against_eigendecomposition() {
    let (p, op) = reference_point();
    let lin = linearize(&p, &op).unwrap();
    let d = zoh_discretize(&lin, 0.05).unwrap();
    let (ad, bd) = zoh_2x2_eigen(&lin.a, &lin.b, 0.05);
    assert!(max_abs_diff(&d.ad, &ad) < 1e-10, "{}", d.ad);
    assert!(max_abs_diff(&d.bd, &bd) < 1e-10, "{}", d.bd);

    // frozen after the cross-check above, 40-digit evaluation
    let ad_ref = DMatrix::from_row_slice(
        2,
        2,
        &[
            0.7338550203120952109,
            0.24327290322619621914,
            0.3003425842974988542,
            0.57874635263495450224,
        ],
    );
    let bd_ref = DMatrix::from_row_slice(
        2,
        2,
        &[
            0.21612630098982334997,
            0.045041828338847507106,
            0.045041828338847507106,
            0.23810935382598725867,
        ],
    );
    assert!(max_abs_diff(&d.ad, &ad_ref) < 1e-12);
    assert!(max_abs_diff(&d.bd, &bd_ref) < 1e-12);
    assert_eq!(d.cd, DMatrix::identity(2, 2));
    assert_eq!(d.dd, DMatrix::zeros(2, 2));
}

#[test]
fn eigenvalues_inside_unit_circle() {
    let (p, op) = reference_point();
    let d = zoh_discretize(&linearize(&p, &op).unwrap(), 0.05).unwrap();
    let (tr, det) = (d.ad.trace(), d.ad.determinant());
    let disc = tr * tr / 4.0 - det;
    assert!(disc > 0.0);
    for l in [tr / 2.0 + disc.sqrt(), tr / 2.0 - disc.sqrt()] {
        assert!(l.abs() < 1.0, "{l}");
    }
}

#[test]
fn euler_error_decays_quadratically() {
    let (p, op) = reference_point();
    let lin = linearize(&p, &op).unwrap();
    let err = |ts: f64| {
        let z = zoh_discretize(&lin, ts).unwrap();
        let e = euler_discretize(&lin, ts).unwrap();
        (max_abs_diff(&z.ad, &e.ad), max_abs_diff(&z.bd, &e.bd))
    };
    let mut ts = 0.01;
    let mut prev = err(ts);
    for _ in 0..3 {
        ts /= 2.0;
        let next = err(ts);
        let (ra, rb) = (prev.0 / next.0, prev.1 / next.1);
        assert!((3.6..=4.4).contains(&ra), "ad ratio {ra}");
        assert!((3.6..=4.4).contains(&rb), "bd ratio {rb}");
        prev = next;
    }
}

#[test]
fn small_sampling_period_tends_to_identity() {
    let (p, op) = reference_point();
    let lin = linearize(&p, &op).unwrap();
    let d = zoh_discretize(&lin, 1e-9).unwrap();
    assert!(max_abs_diff(&d.ad, &DMatrix::identity(2, 2)) < 1e-7);
    assert!(d.bd.amax() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn semigroup(seed in any::<u64>(), t1 in 0.001..0.2f64, t2 in 0.001..0.2f64) {
        let (p, op) = random_plant(&mut rng(seed));
        let lin = linearize(&p, &op).unwrap();
        let a = zoh_discretize(&lin, t1).unwrap().ad;
        let b = zoh_discretize(&lin, t2).unwrap().ad;
        let ab = zoh_discretize(&lin, t1 + t2).unwrap().ad;
        prop_assert!(max_abs_diff(&ab, &(a * b)) < 1e-10);
    }

    #[test]
    fn random_plants_against_eigendecomposition(seed in any::<u64>(), ts in 0.005..0.1f64) {
        let (p, op) = random_plant(&mut rng(seed));
        let lin = linearize(&p, &op).unwrap();
        let d = zoh_discretize(&lin, ts).unwrap();
        let (ad, bd) = zoh_2x2_eigen(&lin.a, &lin.b, ts);
        prop_assert!(max_abs_diff(&d.ad, &ad) < 1e-10);
        prop_assert!(max_abs_diff(&d.bd, &bd) < 1e-10 * bd.amax().max(1.0));
    }
}
