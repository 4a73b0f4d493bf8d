//! Unconstrained MPC on the velocity-form (incremental) model.
//!
//! The plant `x_m(k+1) = Ad x_m(k) + Bd u(k)`, `y = Cd x_m` is rewritten in
//! increments and stacked with its output,
//!
//! ```text
//! x(k) = [dx_m(k); y(k)]
//! x(k+1) = [[Ad, 0], [Cd Ad, I]] x(k) + [[Bd], [Cd Bd]] du(k)
//! y(k)   = [0, I] x(k)
//! ```
//!
//! which puts an integrator on every output. Over `np` future samples and
//! `nc` free moves the outputs are `Y = psi x + phi dU`, and the cost
//! `J = |Rs - Y|^2 + rw |dU|^2` has the closed-form minimizer
//! `dU = (phi' phi + rw I)^-1 phi' (Rs - psi x)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::discretize::DiscreteModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Plant output map, needed to turn a measured plant state into `y`.
    pub cd: DMatrix<f64>,
    pub n: usize,
    pub m: usize,
    pub q: usize,
}

impl AugmentedModel {
    pub fn states(&self) -> usize {
        self.n + self.q
    }

    /// One step of the augmented dynamics.
    pub fn step(&self, x: &DVector<f64>, du: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * du
    }

    pub fn output(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x
    }
}

/// Builds the velocity-form triple from a sampled plant.
pub fn augment(model: &DiscreteModel) -> Result<AugmentedModel> {
    let n = model.ad.nrows();
    let m = model.bd.ncols();
    let q = model.cd.nrows();
    if model.ad.ncols() != n {
        return Err(Error::dims(
            "augment: ad",
            format!("{n}x{n}"),
            crate::tank::shape(&model.ad),
        ));
    }
    if model.bd.nrows() != n {
        return Err(Error::dims("augment: bd rows", n, model.bd.nrows()));
    }
    if model.cd.ncols() != n {
        return Err(Error::dims("augment: cd columns", n, model.cd.ncols()));
    }
    if model.dd.iter().any(|v| *v != 0.0) {
        return Err(Error::InvalidConfig(
            "augment: feedthrough must be zero".into(),
        ));
    }

    let ca = &model.cd * &model.ad;
    let cb = &model.cd * &model.bd;

    let mut a = DMatrix::zeros(n + q, n + q);
    a.view_mut((0, 0), (n, n)).copy_from(&model.ad);
    a.view_mut((n, 0), (q, n)).copy_from(&ca);
    a.view_mut((n, n), (q, q)).fill_with_identity();

    let mut b = DMatrix::zeros(n + q, m);
    b.view_mut((0, 0), (n, m)).copy_from(&model.bd);
    b.view_mut((n, 0), (q, m)).copy_from(&cb);

    let mut c = DMatrix::zeros(q, n + q);
    c.view_mut((0, n), (q, q)).fill_with_identity();

    Ok(AugmentedModel {
        a,
        b,
        c,
        cd: model.cd.clone(),
        n,
        m,
        q,
    })
}

/// Horizons and move weight. The move penalty is `rw * I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcConfig {
    /// Prediction horizon (samples).
    pub np: usize,
    /// Control horizon (samples).
    pub nc: usize,
    /// Weight on control increments.
    pub rw: f64,
}

impl MpcConfig {
    pub fn new(np: usize, nc: usize, rw: f64) -> Result<Self> {
        let cfg = MpcConfig { np, nc, rw };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nc < 1 {
            return Err(Error::InvalidConfig(
                "control horizon nc must be at least 1".into(),
            ));
        }
        if self.nc > self.np {
            return Err(Error::InvalidConfig(format!(
                "control horizon nc = {} exceeds prediction horizon np = {} (need nc <= np)",
                self.nc, self.np
            )));
        }
        if !self.rw.is_finite() || self.rw < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "move weight rw must be finite and >= 0, got {}",
                self.rw
            )));
        }
        Ok(())
    }
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig {
            np: 10,
            nc: 3,
            rw: 1.0,
        }
    }
}

/// `psi`, `phi` and the factored Hessian for one (model, np, nc, rw) tuple.
#[derive(Debug, Clone)]
pub struct PredictionMatrices {
    pub psi: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    /// `phi' phi + rw I`.
    pub hessian: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
    pub config: MpcConfig,
    pub q: usize,
    pub m: usize,
}

/// Stacks `psi` (rows `C A^(k+1)`) and the block-Toeplitz `phi`
/// (block `(i, j)` = `C A^(i-j) B`, zero above the diagonal), then factors
/// the Hessian once.
pub fn build_prediction(aug: &AugmentedModel, cfg: &MpcConfig) -> Result<PredictionMatrices> {
    cfg.validate()?;
    let (np, nc, q, m) = (cfg.np, cfg.nc, aug.q, aug.m);
    let nx = aug.states();

    let mut psi = DMatrix::zeros(np * q, nx);
    // markov[k] = C A^k B
    let mut markov = Vec::with_capacity(np);
    let mut c_pow = aug.c.clone();
    for k in 0..np {
        markov.push(&c_pow * &aug.b);
        c_pow = &c_pow * &aug.a;
        psi.view_mut((k * q, 0), (q, nx)).copy_from(&c_pow);
    }

    let mut phi = DMatrix::zeros(np * q, nc * m);
    for i in 0..np {
        for j in 0..nc.min(i + 1) {
            phi.view_mut((i * q, j * m), (q, m))
                .copy_from(&markov[i - j]);
        }
    }

    let mut hessian = phi.transpose() * &phi;
    for k in 0..nc * m {
        hessian[(k, k)] += cfg.rw;
    }
    // the Gram product is symmetric mathematically; make it so bit-for-bit
    for i in 0..hessian.nrows() {
        for j in 0..i {
            hessian[(i, j)] = hessian[(j, i)];
        }
    }
    if hessian.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("prediction Hessian".into()));
    }

    let factor = Cholesky::new(hessian.clone()).ok_or_else(|| {
        Error::SingularHessian(format!(
            "phi' phi + {} I is not positive definite (np = {np}, nc = {nc})",
            cfg.rw
        ))
    })?;

    Ok(PredictionMatrices {
        psi,
        phi,
        hessian,
        factor,
        config: *cfg,
        q,
        m,
    })
}

impl PredictionMatrices {
    pub fn moves_len(&self) -> usize {
        self.config.nc * self.m
    }

    /// `Rs`: the setpoint repeated over the prediction horizon.
    pub fn stacked_setpoint(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        if r.len() != self.q {
            return Err(Error::dims("setpoint", self.q, r.len()));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("setpoint".into()));
        }
        Ok(DVector::from_fn(self.config.np * self.q, |i, _| {
            r[i % self.q]
        }))
    }

    fn check(&self, x: &DVector<f64>, du: Option<&DVector<f64>>) -> Result<()> {
        if x.len() != self.psi.ncols() {
            return Err(Error::dims("augmented state", self.psi.ncols(), x.len()));
        }
        if let Some(du) = du {
            if du.len() != self.moves_len() {
                return Err(Error::dims("control moves", self.moves_len(), du.len()));
            }
        }
        Ok(())
    }

    /// `Y = psi x + phi dU`.
    pub fn predict(&self, x: &DVector<f64>, du: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(x, Some(du))?;
        Ok(&self.psi * x + &self.phi * du)
    }

    /// `J = (Rs - Y)'(Rs - Y) + dU' R dU` with `Y` from the prediction equation.
    pub fn cost(&self, x: &DVector<f64>, r: &DVector<f64>, du: &DVector<f64>) -> Result<f64> {
        let err = self.stacked_setpoint(r)? - self.predict(x, du)?;
        Ok(err.norm_squared() + self.config.rw * du.norm_squared())
    }

    /// The same cost expanded as a quadratic in `dU`:
    /// `e'e - 2 dU' phi' e + dU' (phi' phi + R) dU` with `e = Rs - psi x`.
    pub fn cost_expanded(
        &self,
        x: &DVector<f64>,
        r: &DVector<f64>,
        du: &DVector<f64>,
    ) -> Result<f64> {
        self.check(x, Some(du))?;
        let e = self.stacked_setpoint(r)? - &self.psi * x;
        let linear = du.dot(&(self.phi.transpose() * &e));
        let quadratic = du.dot(&(&self.hessian * du));
        Ok(e.norm_squared() - 2.0 * linear + quadratic)
    }

    /// `dJ/dU = -2 phi'(Rs - psi x) + 2 (phi' phi + R) dU`.
    pub fn cost_gradient(
        &self,
        x: &DVector<f64>,
        r: &DVector<f64>,
        du: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        self.check(x, Some(du))?;
        let e = self.stacked_setpoint(r)? - &self.psi * x;
        Ok((self.phi.transpose() * e) * -2.0 + (&self.hessian * du) * 2.0)
    }

    /// Minimizer of the cost: solves `(phi' phi + R) dU = phi'(Rs - psi x)`.
    pub fn solve_optimal(&self, x: &DVector<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(x, None)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("augmented state".into()));
        }
        let rhs = self.phi.transpose() * (self.stacked_setpoint(r)? - &self.psi * x);
        let du = self.factor.solve(&rhs);
        if du.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("optimal control moves".into()));
        }
        Ok(du)
    }
}

/// What the controller remembers between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    /// Last measured plant state `x_m(k-1)`.
    pub prev_plant_state: DVector<f64>,
    /// Last applied control `u(k-1)` (deviation from the steady inflows).
    pub prev_control: DVector<f64>,
    /// `[dx_m(k); y(k)]` as formed at the last step.
    pub augmented_x: DVector<f64>,
}

impl ControllerState {
    /// Starts from a first measurement with zero increment and zero control,
    /// so the first step sees no spurious state derivative.
    pub fn new(aug: &AugmentedModel, first_measurement: &DVector<f64>) -> Result<Self> {
        if first_measurement.len() != aug.n {
            return Err(Error::dims("measurement", aug.n, first_measurement.len()));
        }
        let mut augmented_x = DVector::zeros(aug.states());
        augmented_x
            .rows_mut(aug.n, aug.q)
            .copy_from(&(&aug.cd * first_measurement));
        Ok(ControllerState {
            prev_plant_state: first_measurement.clone(),
            prev_control: DVector::zeros(aug.m),
            augmented_x,
        })
    }

    /// One receding-horizon step.
    ///
    /// `measurement` is the measured plant state (the tank levels, which are
    /// also the outputs). Only the first move of the optimal sequence is
    /// applied. Returns the updated state and the absolute control `u(k)`.
    pub fn receding_step(
        &self,
        pred: &PredictionMatrices,
        aug: &AugmentedModel,
        measurement: &DVector<f64>,
        r: &DVector<f64>,
    ) -> Result<(ControllerState, DVector<f64>)> {
        if measurement.len() != aug.n {
            return Err(Error::dims("measurement", aug.n, measurement.len()));
        }
        if measurement.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("measurement".into()));
        }
        let mut x = DVector::zeros(aug.states());
        x.rows_mut(0, aug.n)
            .copy_from(&(measurement - &self.prev_plant_state));
        x.rows_mut(aug.n, aug.q).copy_from(&(&aug.cd * measurement));

        let moves = pred.solve_optimal(&x, r)?;
        let u = &self.prev_control + moves.rows(0, aug.m);
        let next = ControllerState {
            prev_plant_state: measurement.clone(),
            prev_control: u.clone(),
            augmented_x: x,
        };
        Ok((next, u))
    }

    /// Overrides the remembered control, e.g. after an actuator clamp.
    pub fn with_applied_control(mut self, u: DVector<f64>) -> Self {
        self.prev_control = u;
        self
    }
}

/// Augmented model plus prediction matrices, designed once and reused.
#[derive(Debug, Clone)]
pub struct MpcController {
    pub aug: AugmentedModel,
    pub pred: PredictionMatrices,
}

impl MpcController {
    pub fn design(model: &DiscreteModel, cfg: &MpcConfig) -> Result<Self> {
        let aug = augment(model)?;
        let pred = build_prediction(&aug, cfg)?;
        Ok(MpcController { aug, pred })
    }

    pub fn init(&self, first_measurement: &DVector<f64>) -> Result<ControllerState> {
        ControllerState::new(&self.aug, first_measurement)
    }

    pub fn step(
        &self,
        state: &ControllerState,
        measurement: &DVector<f64>,
        r: &DVector<f64>,
    ) -> Result<(ControllerState, DVector<f64>)> {
        state.receding_step(&self.pred, &self.aug, measurement, r)
    }
}
