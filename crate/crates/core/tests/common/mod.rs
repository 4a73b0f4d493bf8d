//! Reference computations that do not go through the library's own algorithms.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tankmpc::{FlowPolicy, OperatingPoint, TankParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn reference_point() -> (TankParams, OperatingPoint) {
    let p = TankParams::reference();
    let op = OperatingPoint::new(&p, 4.0, 3.5, FlowPolicy::AllowNegative).unwrap();
    (p, op)
}

/// A physically valid parameter set with l1 > l2 > 0.
pub fn random_plant(rng: &mut impl Rng) -> (TankParams, OperatingPoint) {
    let p = TankParams::new(
        rng.random_range(0.05..1.0),
        rng.random_range(0.05..1.0),
        rng.random_range(0.2..5.0),
        rng.random_range(0.2..5.0),
    )
    .unwrap();
    let l2 = rng.random_range(0.5..5.0);
    let l1 = l2 + rng.random_range(0.1..3.0);
    let op = OperatingPoint::new(&p, l1, l2, FlowPolicy::AllowNegative).unwrap();
    (p, op)
}

/// Right-hand side of the tank equations written out directly from the
/// absolute-level mass balance, without the library.
pub fn tank_rhs(p: &TankParams, l: (f64, f64), h: [f64; 2], fi: [f64; 2]) -> [f64; 2] {
    let (l1, l2) = l;
    let d = (l1 + h[0]) - (l2 + h[1]);
    let q12 = p.alpha1 * d.signum() * d.abs().sqrt();
    let q2 = p.alpha2 * (l2 + h[1]).sqrt();
    let fi1 = p.alpha1 * (l1 - l2).sqrt() + fi[0];
    let fi2 = p.alpha2 * l2.sqrt() - p.alpha1 * (l1 - l2).sqrt() + fi[1];
    [(fi1 - q12) / p.a1, (fi2 + q12 - q2) / p.a2]
}

pub fn rk4_plain(f: &dyn Fn([f64; 2]) -> [f64; 2], h: [f64; 2], dt: f64) -> [f64; 2] {
    let add = |a: [f64; 2], k: [f64; 2], s: f64| [a[0] + s * k[0], a[1] + s * k[1]];
    let k1 = f(h);
    let k2 = f(add(h, k1, dt / 2.0));
    let k3 = f(add(h, k2, dt / 2.0));
    let k4 = f(add(h, k3, dt));
    [
        h[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        h[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// High-accuracy solution: fine RK4 with step halving until two successive
/// Richardson-extrapolated estimates agree to `tol`.
pub fn reference_solution(
    f: &dyn Fn([f64; 2]) -> [f64; 2],
    h0: [f64; 2],
    t: f64,
    tol: f64,
) -> [f64; 2] {
    let run = |n: usize| {
        let mut h = h0;
        for _ in 0..n {
            h = rk4_plain(f, h, t / n as f64);
        }
        h
    };
    let mut n = 8;
    let mut coarse = run(n);
    let mut prev: Option<[f64; 2]> = None;
    loop {
        let fine = run(2 * n);
        let rich = [
            fine[0] + (fine[0] - coarse[0]) / 15.0,
            fine[1] + (fine[1] - coarse[1]) / 15.0,
        ];
        if let Some(p) = prev {
            if (rich[0] - p[0]).abs().max((rich[1] - p[1]).abs()) < tol || n > 1 << 16 {
                return rich;
            }
        }
        prev = Some(rich);
        coarse = fine;
        n *= 2;
    }
}

/// Gaussian elimination with partial pivoting on plain vectors.
pub fn gauss_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| a[(i, j)]).collect();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..=n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

/// Normal equations of the tracking cost built element by element from the
/// raw augmented matrices, then solved by [`gauss_solve`].
pub fn dense_optimum(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    np: usize,
    nc: usize,
    rw: f64,
    x: &DVector<f64>,
    r: &DVector<f64>,
) -> Vec<f64> {
    let (q, m) = (c.nrows(), b.ncols());
    // response of every output sample to a unit move in each slot
    let mut g = DMatrix::zeros(np * q, nc * m);
    for j in 0..nc {
        for i in 0..m {
            let mut s = DVector::zeros(a.nrows());
            for k in 0..np {
                s = a * &s;
                if k == j {
                    s += b.column(i);
                }
                g.view_mut((k * q, j * m + i), (q, 1)).copy_from(&(c * &s));
            }
        }
    }
    let mut free = DVector::zeros(np * q);
    let mut s = x.clone();
    for k in 0..np {
        s = a * &s;
        free.rows_mut(k * q, q).copy_from(&(c * &s));
    }
    let mut target = DVector::zeros(np * q);
    for k in 0..np {
        target.rows_mut(k * q, q).copy_from(r);
    }
    let h = g.transpose() * &g + DMatrix::identity(nc * m, nc * m) * rw;
    let rhs = g.transpose() * (target - free);
    gauss_solve(&h, &rhs)
}

/// Closed-form exponential of a 2x2 matrix with real distinct eigenvalues,
/// and the matching zero-order-hold input matrix.
pub fn zoh_2x2_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let tr = a[(0, 0)] + a[(1, 1)];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let disc = (tr * tr / 4.0 - det).sqrt();
    let l = [tr / 2.0 + disc, tr / 2.0 - disc];
    // eigenvectors (a01, l - a00)
    let v = DMatrix::from_row_slice(
        2,
        2,
        &[a[(0, 1)], a[(0, 1)], l[0] - a[(0, 0)], l[1] - a[(0, 0)]],
    );
    let vi = v.clone().try_inverse().unwrap();
    let e = DMatrix::from_diagonal(&DVector::from_vec(vec![(l[0] * t).exp(), (l[1] * t).exp()]));
    let g = DMatrix::from_diagonal(&DVector::from_vec(vec![
        (l[0] * t).exp_m1() / l[0],
        (l[1] * t).exp_m1() / l[1],
    ]));
    (&v * e * &vi, &v * g * &vi * b)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}
