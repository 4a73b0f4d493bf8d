//! Two coupled tanks: physical constants, nonlinear level dynamics, steady
//! operating point and the first-order (Taylor) linearization.
//!
//! Tank 1 drains into tank 2 through valve V1, tank 2 drains to the outside
//! through valve V2. Both orifice flows follow a square-root law
//! `F = alpha * sqrt(head)`. All dynamics are written in deviation variables
//! `h = level - L` around an operating point `(L1, L2)`.
//!
//! Units: levels in m, flows in m^3/s, areas in m^2, discharge coefficients
//! in m^(5/2)/s, time in s.

use std::cmp::Ordering;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Levels this far below zero are treated as zero before taking square roots.
pub const LEVEL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TankParams {
    /// Cross-section area of tank 1 (m^2).
    pub a1: f64,
    /// Cross-section area of tank 2 (m^2).
    pub a2: f64,
    /// Discharge coefficient of the coupling valve V1.
    pub alpha1: f64,
    /// Discharge coefficient of the outlet valve V2.
    pub alpha2: f64,
}

impl TankParams {
    pub fn new(a1: f64, a2: f64, alpha1: f64, alpha2: f64) -> Result<Self> {
        let p = TankParams {
            a1,
            a2,
            alpha1,
            alpha2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Reference rig: alpha1 = 2.2, alpha2 = 1.9, A1 = 0.1963 m^2, A2 = 0.159 m^2.
    pub fn reference() -> Self {
        TankParams {
            a1: 0.1963,
            a2: 0.159,
            alpha1: 2.2,
            alpha2: 1.9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.a1, self.a2, self.alpha1, self.alpha2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tank parameters".into()));
        }
        if self.a1 <= 0.0 || self.a2 <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "tank areas must be positive (a1 = {}, a2 = {})",
                self.a1, self.a2
            )));
        }
        if self.alpha1 < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "alpha1 must be non-negative, got {}",
                self.alpha1
            )));
        }
        if self.alpha2 <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "alpha2 must be positive, got {}",
                self.alpha2
            )));
        }
        Ok(())
    }
}

impl Default for TankParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Whether a negative steady inflow to tank 2 is acceptable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlowPolicy {
    #[default]
    AllowNegative,
    /// Reject operating points that would need a pump drawing water out of tank 2.
    StrictPhysical,
}

/// Steady levels together with the inflows that hold them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub l1: f64,
    pub l2: f64,
    pub fi1_bar: f64,
    pub fi2_bar: f64,
}

impl OperatingPoint {
    /// Solves the steady inflows for `(l1, l2)`. Requires `l1 > l2 >= 0`.
    pub fn new(params: &TankParams, l1: f64, l2: f64, policy: FlowPolicy) -> Result<Self> {
        if l1.partial_cmp(&l2) != Some(Ordering::Greater) {
            return Err(Error::Domain(format!(
                "linearization is singular unless l1 > l2 (got l1 = {l1}, l2 = {l2})"
            )));
        }
        let (fi1_bar, fi2_bar) = steady_inflows(params, l1, l2)?;
        if policy == FlowPolicy::StrictPhysical && fi2_bar < 0.0 {
            return Err(Error::Infeasible(format!(
                "steady inflow to tank 2 would be {fi2_bar:.6} m^3/s"
            )));
        }
        Ok(OperatingPoint {
            l1,
            l2,
            fi1_bar,
            fi2_bar,
        })
    }

    pub fn steady_inflows(&self) -> [f64; 2] {
        [self.fi1_bar, self.fi2_bar]
    }
}

/// Level deviations from the operating point (m).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeviationState {
    pub h1: f64,
    pub h2: f64,
}

impl DeviationState {
    pub fn new(h1: f64, h2: f64) -> Self {
        DeviationState { h1, h2 }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.h1, self.h2]
    }
}

impl From<[f64; 2]> for DeviationState {
    fn from(v: [f64; 2]) -> Self {
        DeviationState { h1: v[0], h2: v[1] }
    }
}

/// Continuous-time quadruple `dx/dt = a x + b u`, `y = c x + d u` with `d = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dims("state matrix", format!("{n}x{n}"), shape(&a)));
        }
        if b.nrows() != n {
            return Err(Error::dims("input matrix rows", n, b.nrows()));
        }
        if c.ncols() != n {
            return Err(Error::dims("output matrix columns", n, c.ncols()));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::dims(
                "feedthrough matrix",
                format!("{}x{}", c.nrows(), b.ncols()),
                shape(&d),
            ));
        }
        if d.iter().any(|v| *v != 0.0) {
            return Err(Error::InvalidConfig(
                "feedthrough matrix must be zero: u(k) cannot act on y(k)".into(),
            ));
        }
        for (name, m) in [("a", &a), ("b", &b), ("c", &c)] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("linear model matrix {name}")));
            }
        }
        Ok(LinearModel { a, b, c, d })
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }
}

pub(crate) fn shape(m: &DMatrix<f64>) -> String {
    format!("{}x{}", m.nrows(), m.ncols())
}

/// `sign(x) * sqrt(|x|)`: orifice flow that reverses with the head difference.
pub fn signed_sqrt(x: f64) -> f64 {
    x.signum() * x.abs().sqrt()
}

fn physical_level(level: f64, which: &str) -> Result<f64> {
    if level < -LEVEL_TOLERANCE || level.is_nan() {
        return Err(Error::Domain(format!("{which} level is {level} m")));
    }
    Ok(level.max(0.0))
}

/// Level rates `(dh1/dt, dh2/dt)` of the nonlinear plant in deviation form.
///
/// `inflows` are deviations from the steady inflows. The coupling flow uses
/// [`signed_sqrt`] so that a reversed head sends water from tank 2 back to
/// tank 1.
pub fn nonlinear_derivatives(
    params: &TankParams,
    op: &OperatingPoint,
    state: &DeviationState,
    inflows: [f64; 2],
) -> Result<[f64; 2]> {
    let level1 = physical_level(op.l1 + state.h1, "tank 1")?;
    let level2 = physical_level(op.l2 + state.h2, "tank 2")?;

    let coupling = params.alpha1 * (signed_sqrt(level1 - level2) - signed_sqrt(op.l1 - op.l2));
    let outlet = params.alpha2 * (level2.sqrt() - op.l2.sqrt());

    let dh1 = (inflows[0] - coupling) / params.a1;
    let dh2 = (inflows[1] - outlet + coupling) / params.a2;
    if !dh1.is_finite() || !dh2.is_finite() {
        return Err(Error::NonFinite("level derivatives".into()));
    }
    Ok([dh1, dh2])
}

/// Inflows that hold the levels `(l1, l2)` at rest.
///
/// `fi2_bar` may come out negative when tank 2 receives more from tank 1 than
/// it can discharge; [`OperatingPoint::new`] decides whether that is allowed.
pub fn steady_inflows(params: &TankParams, l1: f64, l2: f64) -> Result<(f64, f64)> {
    params.validate()?;
    if !l1.is_finite() || !l2.is_finite() {
        return Err(Error::NonFinite("operating levels".into()));
    }
    if l2 < 0.0 {
        return Err(Error::Domain(format!("l2 must be non-negative, got {l2}")));
    }
    if l1 < l2 {
        return Err(Error::Domain(format!(
            "l1 must not be below l2 (got l1 = {l1}, l2 = {l2})"
        )));
    }
    let coupling = params.alpha1 * (l1 - l2).sqrt();
    let outlet = params.alpha2 * l2.sqrt();
    Ok((coupling, outlet - coupling))
}

/// First-order Taylor linearization of the square-root flows at `op`.
pub fn linearize(params: &TankParams, op: &OperatingPoint) -> Result<LinearModel> {
    params.validate()?;
    if op.l1.partial_cmp(&op.l2) != Some(Ordering::Greater) {
        return Err(Error::SingularLinearization(format!(
            "needs l1 > l2 strictly (got l1 = {}, l2 = {})",
            op.l1, op.l2
        )));
    }
    if op.l2.partial_cmp(&0.0) != Some(Ordering::Greater) {
        return Err(Error::SingularLinearization(format!(
            "needs l2 > 0 strictly (got l2 = {})",
            op.l2
        )));
    }

    let head = (op.l1 - op.l2).sqrt();
    let k1 = params.alpha1 / (2.0 * params.a1 * head);
    let k2 = params.alpha1 / (2.0 * params.a2 * head);
    let a11 = -(params.alpha1 / head + params.alpha2 / op.l2.sqrt()) / (2.0 * params.a2);

    let a = DMatrix::from_row_slice(2, 2, &[-k1, k1, k2, a11]);
    let b = DMatrix::from_row_slice(2, 2, &[1.0 / params.a1, 0.0, 0.0, 1.0 / params.a2]);
    LinearModel::new(a, b, DMatrix::identity(2, 2), DMatrix::zeros(2, 2))
}
