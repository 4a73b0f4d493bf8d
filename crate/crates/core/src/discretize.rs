//! Zero-order-hold sampling of a continuous [`LinearModel`].

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tank::LinearModel;

/// Sampled model `x(k+1) = ad x(k) + bd u(k)`, `y(k) = cd x(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    pub ad: DMatrix<f64>,
    pub bd: DMatrix<f64>,
    pub cd: DMatrix<f64>,
    pub dd: DMatrix<f64>,
    /// Sampling period (s).
    pub ts: f64,
}

impl DiscreteModel {
    /// Wraps already-sampled matrices. `dd` is set to zero.
    pub fn new(ad: DMatrix<f64>, bd: DMatrix<f64>, cd: DMatrix<f64>, ts: f64) -> Result<Self> {
        if !ts.is_finite() || ts <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "sampling period must be positive, got {ts}"
            )));
        }
        let n = ad.nrows();
        if ad.ncols() != n || bd.nrows() != n || cd.ncols() != n {
            return Err(Error::dims(
                "discrete model",
                format!("ad {n}x{n}, bd {n}xm, cd qx{n}"),
                format!(
                    "ad {}x{}, bd {}x{}, cd {}x{}",
                    ad.nrows(),
                    ad.ncols(),
                    bd.nrows(),
                    bd.ncols(),
                    cd.nrows(),
                    cd.ncols()
                ),
            ));
        }
        let dd = DMatrix::zeros(cd.nrows(), bd.ncols());
        Ok(DiscreteModel { ad, bd, cd, dd, ts })
    }

    pub fn states(&self) -> usize {
        self.ad.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.bd.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.cd.nrows()
    }
}

/// Exact discretization under a zero-order hold on the input.
///
/// Exponentiates the block matrix `[[a, b], [0, 0]] * ts`; its top-left block
/// is `exp(a ts)` and its top-right block is `int_0^ts exp(a s) ds * b`.
pub fn zoh_discretize(model: &LinearModel, ts: f64) -> Result<DiscreteModel> {
    if !ts.is_finite() || ts <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "sampling period must be positive, got {ts}"
        )));
    }
    if model.d.iter().any(|v| *v != 0.0) {
        return Err(Error::InvalidConfig(
            "feedthrough matrix must be zero".into(),
        ));
    }
    let n = model.states();
    let m = model.inputs();
    let mut block = DMatrix::zeros(n + m, n + m);
    block.view_mut((0, 0), (n, n)).copy_from(&model.a);
    block.view_mut((0, n), (n, m)).copy_from(&model.b);
    block *= ts;

    let e = expm(&block)?;
    DiscreteModel::new(
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, m)).into_owned(),
        model.c.clone(),
        ts,
    )
}

/// Forward-Euler sampling `ad = I + a ts`, `bd = b ts`; kept for comparison runs.
pub fn euler_discretize(model: &LinearModel, ts: f64) -> Result<DiscreteModel> {
    if !ts.is_finite() || ts <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "sampling period must be positive, got {ts}"
        )));
    }
    let n = model.states();
    DiscreteModel::new(
        DMatrix::identity(n, n) + &model.a * ts,
        &model.b * ts,
        model.c.clone(),
        ts,
    )
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor series.
///
/// The argument is scaled by `2^-s` until its 1-norm is at most 0.5, the
/// series is summed until the next term no longer changes the sum in double
/// precision, and the result is squared `s` times.
pub fn expm(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::dims(
            "matrix exponential",
            "square matrix",
            crate::tank::shape(m),
        ));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix exponential argument".into()));
    }
    let dim = m.nrows();
    let norm = norm1(m);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let scaled = m * scale;

    let mut sum = DMatrix::identity(dim, dim);
    let mut term = DMatrix::identity(dim, dim);
    // with ||scaled|| <= 0.5 the k-th term is below 0.5^k / k!, so 30 terms is far past eps
    for k in 1..=30 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if norm1(&term) <= f64::EPSILON * 1e-3 * norm1(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}
