//! Continuous-time simulation of the tank plant between controller samples.

use log::warn;

use crate::error::{Error, Result};
use crate::tank::{nonlinear_derivatives, DeviationState, LinearModel, OperatingPoint, TankParams};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    /// Simulation time (s).
    pub t: f64,
    pub dev: DeviationState,
}

/// Which inflow the disturbance adds to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DisturbanceTarget {
    #[default]
    Tank1,
    Tank2,
    Both,
}

/// Rectangular pulse added to an inflow, sized in percent of the steady
/// tank-1 inflow `fi1_bar`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DisturbanceProfile {
    /// Start time (s).
    pub start: f64,
    /// Duration (s).
    pub duration: f64,
    /// Percent of `fi1_bar`.
    pub magnitude: f64,
    pub target: DisturbanceTarget,
}

impl DisturbanceProfile {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.start.is_finite() || !self.duration.is_finite() || !self.magnitude.is_finite() {
            return Err(Error::InvalidConfig(
                "disturbance fields must be finite".into(),
            ));
        }
        if self.duration < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "disturbance duration must be >= 0, got {}",
                self.duration
            )));
        }
        Ok(())
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.start <= t && t < self.start + self.duration
    }

    /// Additive flow per inflow channel at time `t`.
    pub fn channel_flows(&self, op: &OperatingPoint, t: f64) -> [f64; 2] {
        let f = disturbance_flow(self, op, t);
        match self.target {
            DisturbanceTarget::Tank1 => [f, 0.0],
            DisturbanceTarget::Tank2 => [0.0, f],
            DisturbanceTarget::Both => [f, f],
        }
    }
}

/// Disturbance flow (m^3/s) at time `t`: `magnitude / 100 * fi1_bar` inside
/// `[start, start + duration)`, zero elsewhere.
pub fn disturbance_flow(profile: &DisturbanceProfile, op: &OperatingPoint, t: f64) -> f64 {
    if profile.is_active(t) {
        profile.magnitude / 100.0 * op.fi1_bar
    } else {
        0.0
    }
}

/// Right-hand side used by the integrator.
#[derive(Debug, Clone, PartialEq)]
pub enum PlantDynamics {
    /// The square-root tank model.
    Nonlinear {
        params: TankParams,
        op: OperatingPoint,
    },
    /// The linearized model, for debugging the controller without model mismatch.
    Linear {
        model: LinearModel,
        op: OperatingPoint,
    },
}

impl PlantDynamics {
    pub fn nonlinear(params: TankParams, op: OperatingPoint) -> Self {
        PlantDynamics::Nonlinear { params, op }
    }

    pub fn operating_point(&self) -> &OperatingPoint {
        match self {
            PlantDynamics::Nonlinear { op, .. } | PlantDynamics::Linear { op, .. } => op,
        }
    }

    pub fn derivatives(&self, dev: &DeviationState, inflows: [f64; 2]) -> Result<[f64; 2]> {
        match self {
            PlantDynamics::Nonlinear { params, op } => {
                nonlinear_derivatives(params, op, &floor_levels(op, *dev), inflows)
            }
            PlantDynamics::Linear { model, .. } => {
                let (a, b) = (&model.a, &model.b);
                let h = [dev.h1, dev.h2];
                let mut out = [0.0; 2];
                for (i, o) in out.iter_mut().enumerate() {
                    *o = a[(i, 0)] * h[0]
                        + a[(i, 1)] * h[1]
                        + b[(i, 0)] * inflows[0]
                        + b[(i, 1)] * inflows[1];
                }
                Ok(out)
            }
        }
    }

    /// One classical RK4 step. The control deviation is held over the step;
    /// the disturbance is evaluated at each stage time.
    pub fn rk4_step(
        &self,
        state: &PlantState,
        inflow_dev: [f64; 2],
        disturbance: &DisturbanceProfile,
        dt: f64,
    ) -> Result<PlantState> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "integration step must be positive, got {dt}"
            )));
        }
        let op = *self.operating_point();
        let t = state.t;
        let h = state.dev.as_array();
        let f = |ts: f64, hs: [f64; 2]| -> Result<[f64; 2]> {
            let d = disturbance.channel_flows(&op, ts);
            self.derivatives(&hs.into(), [inflow_dev[0] + d[0], inflow_dev[1] + d[1]])
        };
        let shift = |k: [f64; 2], s: f64| [h[0] + s * k[0], h[1] + s * k[1]];

        let k1 = f(t, h)?;
        let k2 = f(t + 0.5 * dt, shift(k1, 0.5 * dt))?;
        let k3 = f(t + 0.5 * dt, shift(k2, 0.5 * dt))?;
        let k4 = f(t + dt, shift(k3, dt))?;

        let mut next = [0.0; 2];
        for i in 0..2 {
            next[i] = h[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("plant state at t = {}", t + dt)));
        }

        let dev = DeviationState::from(next);
        let floored = floor_levels(&op, dev);
        if floored != dev {
            warn!(
                "tank level fell below zero at t = {:.4} s; clamped to empty",
                t + dt
            );
        }
        Ok(PlantState {
            t: t + dt,
            dev: floored,
        })
    }
}

/// Clamps deviations so that the physical levels `L + h` stay non-negative.
fn floor_levels(op: &OperatingPoint, dev: DeviationState) -> DeviationState {
    DeviationState {
        h1: dev.h1.max(-op.l1),
        h2: dev.h2.max(-op.l2),
    }
}

/// RK4 step of the nonlinear plant.
pub fn rk4_step(
    params: &TankParams,
    op: &OperatingPoint,
    state: &PlantState,
    inflow_dev: [f64; 2],
    disturbance: &DisturbanceProfile,
    dt: f64,
) -> Result<PlantState> {
    PlantDynamics::nonlinear(*params, *op).rk4_step(state, inflow_dev, disturbance, dt)
}
