//! Receding-horizon loop: sample the plant, solve for the next move, hold it
//! over the sample interval while the nonlinear plant is integrated.

use log::warn;
use nalgebra::DVector;

use crate::discretize::zoh_discretize;
use crate::error::{Error, Result};
use crate::mpc::{MpcConfig, MpcController};
use crate::plant::{disturbance_flow, DisturbanceProfile, PlantDynamics, PlantState};
use crate::tank::{linearize, DeviationState, FlowPolicy, OperatingPoint, TankParams};

/// Rectangular setpoint pulse on one output (deviation from the operating level).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SetpointPulse {
    /// Height of the pulse (m).
    pub amplitude: f64,
    /// Start time (s).
    pub start: f64,
    /// Duration (s).
    pub duration: f64,
}

impl SetpointPulse {
    pub fn value(&self, t: f64) -> f64 {
        if self.start <= t && t < self.start + self.duration {
            self.amplitude
        } else {
            0.0
        }
    }

    fn validate(&self, which: &str) -> Result<()> {
        if !self.amplitude.is_finite() || !self.start.is_finite() || !self.duration.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "setpoint {which} fields must be finite"
            )));
        }
        if self.duration < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "setpoint {which} duration must be >= 0, got {}",
                self.duration
            )));
        }
        Ok(())
    }
}

/// What the controller is closed around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlantMode {
    #[default]
    Nonlinear,
    /// Linearized plant; removes model mismatch when debugging the controller.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: TankParams,
    /// Operating levels `(L1, L2)` (m).
    pub op_levels: (f64, f64),
    pub flow_policy: FlowPolicy,
    pub mpc: MpcConfig,
    /// Controller sampling period (s).
    pub ts: f64,
    /// Simulated duration (s).
    pub t_end: f64,
    /// RK4 steps per sampling period.
    pub substeps: usize,
    pub setpoints: [SetpointPulse; 2],
    pub disturbance: DisturbanceProfile,
    /// Keep absolute inflows non-negative by clamping the control.
    pub clamp_inflow: bool,
    pub plant_mode: PlantMode,
}

impl Scenario {
    /// Steps of 0.5 m and 0.3 m from t = 0.5 s for 5 s, a 10 % pulse on the
    /// tank-1 inflow at t = 8 s for 2 s, 15 s in total, np = 10, nc = 3,
    /// ts = 0.05 s, rw = 1.
    pub fn reference() -> Self {
        Scenario {
            params: TankParams::reference(),
            op_levels: (4.0, 3.5),
            flow_policy: FlowPolicy::AllowNegative,
            mpc: MpcConfig::default(),
            ts: 0.05,
            t_end: 15.0,
            substeps: 4,
            setpoints: [
                SetpointPulse {
                    amplitude: 0.5,
                    start: 0.5,
                    duration: 5.0,
                },
                SetpointPulse {
                    amplitude: 0.3,
                    start: 0.5,
                    duration: 5.0,
                },
            ],
            disturbance: DisturbanceProfile {
                start: 8.0,
                duration: 2.0,
                magnitude: 10.0,
                target: Default::default(),
            },
            clamp_inflow: false,
            plant_mode: PlantMode::Nonlinear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.mpc.validate()?;
        if !self.ts.is_finite() || self.ts <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "ts must be positive, got {}",
                self.ts
            )));
        }
        if !self.t_end.is_finite() || self.t_end <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidConfig("substeps must be at least 1".into()));
        }
        self.setpoints[0].validate("h1")?;
        self.setpoints[1].validate("h2")?;
        self.disturbance.validate()
    }

    pub fn operating_point(&self) -> Result<OperatingPoint> {
        OperatingPoint::new(
            &self.params,
            self.op_levels.0,
            self.op_levels.1,
            self.flow_policy,
        )
    }

    /// Number of logged rows: `floor(t_end / ts) + 1`.
    pub fn sample_count(&self) -> usize {
        // tolerate t_end / ts landing just under an integer
        (self.t_end / self.ts + 1e-9).floor() as usize + 1
    }

    pub fn setpoint(&self, t: f64) -> [f64; 2] {
        [self.setpoints[0].value(t), self.setpoints[1].value(t)]
    }

    /// Designs the controller for this scenario around its operating point.
    pub fn design(&self) -> Result<(OperatingPoint, MpcController)> {
        let op = self.operating_point()?;
        let lin = linearize(&self.params, &op)?;
        let disc = zoh_discretize(&lin, self.ts)?;
        Ok((op, MpcController::design(&disc, &self.mpc)?))
    }
}

impl Default for Scenario {
    fn default() -> Self {
        Self::reference()
    }
}

/// One logged sample. Levels and controls are deviations; `fi_abs` are absolute.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogRow {
    pub t: f64,
    pub r: [f64; 2],
    pub h: [f64; 2],
    /// Control deviation applied from this sample on.
    pub u: [f64; 2],
    /// Disturbance flow at this sample.
    pub u3: f64,
    pub fi_abs: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationLog {
    pub rows: Vec<LogRow>,
}

impl SimulationLog {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Runs the scenario and returns one row per sample, `t = 0 .. t_end`.
pub fn run_closed_loop(scenario: &Scenario) -> Result<SimulationLog> {
    scenario.validate()?;
    let (op, controller) = scenario.design()?;
    let dynamics = match scenario.plant_mode {
        PlantMode::Nonlinear => PlantDynamics::nonlinear(scenario.params, op),
        PlantMode::Linear => PlantDynamics::Linear {
            model: linearize(&scenario.params, &op)?,
            op,
        },
    };

    let samples = scenario.sample_count();
    let dt = scenario.ts / scenario.substeps as f64;
    let steady = op.steady_inflows();

    let mut plant = PlantState::default();
    let mut ctrl = controller
        .init(&DVector::from_row_slice(&plant.dev.as_array()))
        .map_err(|e| e.at_sample(0))?;
    let mut rows = Vec::with_capacity(samples);

    for k in 0..samples {
        let t = k as f64 * scenario.ts;
        let run = |ctrl: &crate::mpc::ControllerState, plant: &PlantState| -> Result<_> {
            let y = DVector::from_row_slice(&plant.dev.as_array());
            let r = scenario.setpoint(t);
            let (next, u) = controller.step(ctrl, &y, &DVector::from_row_slice(&r))?;
            Ok((next, [u[0], u[1]], r))
        };
        let (mut next, mut u, r) = run(&ctrl, &plant).map_err(|e| e.at_sample(k))?;

        if scenario.clamp_inflow {
            let mut clamped = false;
            for i in 0..2 {
                if steady[i] + u[i] < 0.0 {
                    u[i] = -steady[i];
                    clamped = true;
                }
            }
            if clamped {
                warn!("sample {k}: control clamped to keep inflows non-negative");
                next = next.with_applied_control(DVector::from_row_slice(&u));
            }
        }
        ctrl = next;

        let d = scenario.disturbance.channel_flows(&op, t);
        rows.push(LogRow {
            t,
            r,
            h: plant.dev.as_array(),
            u,
            u3: disturbance_flow(&scenario.disturbance, &op, t),
            fi_abs: [steady[0] + u[0] + d[0], steady[1] + u[1] + d[1]],
        });

        if k + 1 < samples {
            for s in 0..scenario.substeps {
                plant.t = t + s as f64 * dt;
                plant = dynamics
                    .rk4_step(&plant, u, &scenario.disturbance, dt)
                    .map_err(|e| e.at_sample(k))?;
            }
            plant.t = (k + 1) as f64 * scenario.ts;
        }
    }
    Ok(SimulationLog { rows })
}

/// Deviation state after integrating the plant open loop with constant inflows.
pub fn open_loop(
    dynamics: &PlantDynamics,
    start: DeviationState,
    inflow_dev: [f64; 2],
    dt: f64,
    steps: usize,
) -> Result<Vec<DeviationState>> {
    let mut s = PlantState { t: 0.0, dev: start };
    let mut out = Vec::with_capacity(steps + 1);
    out.push(start);
    for _ in 0..steps {
        s = dynamics.rk4_step(&s, inflow_dev, &DisturbanceProfile::none(), dt)?;
        out.push(s.dev);
    }
    Ok(out)
}
