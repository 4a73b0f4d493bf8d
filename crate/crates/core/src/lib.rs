//! Model predictive control of a two-tank liquid-level plant.
//!
//! The pipeline is
//! [`tank::linearize`] → [`discretize::zoh_discretize`] → [`mpc::augment`] →
//! [`mpc::build_prediction`], after which [`mpc::ControllerState::receding_step`]
//! computes one control move per sample. [`closed_loop::run_closed_loop`]
//! wires the controller to the nonlinear plant of [`plant`].

pub mod cli;
pub mod closed_loop;
pub mod config;
pub mod csv;
pub mod discretize;
pub mod error;
pub mod metrics;
pub mod mpc;
pub mod plant;
pub mod tank;

pub use closed_loop::{run_closed_loop, LogRow, PlantMode, Scenario, SetpointPulse, SimulationLog};
pub use discretize::{zoh_discretize, DiscreteModel};
pub use error::{Error, Result};
pub use mpc::{
    augment, build_prediction, AugmentedModel, ControllerState, MpcConfig, MpcController,
    PredictionMatrices,
};
pub use plant::{DisturbanceProfile, DisturbanceTarget, PlantState};
pub use tank::{
    linearize, nonlinear_derivatives, steady_inflows, DeviationState, FlowPolicy, LinearModel,
    OperatingPoint, TankParams,
};
