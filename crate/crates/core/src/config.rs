//! Run configuration files.
//!
//! A flat `key = value` format with dotted section names:
//!
//! ```text
//! plant.alpha1 = 2.2
//! mpc.np = 10
//! setpoint.h1.amplitude = 0.5
//! ```
//!
//! The syntax is a subset of TOML and is parsed as such, so quoted strings,
//! `#` comments and `[section]` headers are accepted too. Every key is
//! optional; omitted keys take the reference-scenario values. Decimals use
//! a dot.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closed_loop::{PlantMode, Scenario, SetpointPulse};
use crate::mpc::MpcConfig;
use crate::plant::{DisturbanceProfile, DisturbanceTarget};
use crate::tank::{FlowPolicy, TankParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{}{key}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        key: String,
        line: Option<usize>,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    pub a1: f64,
    pub a2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub l1: f64,
    pub l2: f64,
    /// `allow_negative` or `strict`.
    pub flow_policy: String,
    /// `nonlinear` or `linear`.
    pub mode: String,
    pub clamp_inflow: bool,
}

impl Default for PlantSection {
    fn default() -> Self {
        let p = TankParams::reference();
        PlantSection {
            a1: p.a1,
            a2: p.a2,
            alpha1: p.alpha1,
            alpha2: p.alpha2,
            l1: 4.0,
            l2: 3.5,
            flow_policy: "allow_negative".into(),
            mode: "nonlinear".into(),
            clamp_inflow: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcSection {
    pub np: i64,
    pub nc: i64,
    pub rw: f64,
}

impl Default for MpcSection {
    fn default() -> Self {
        MpcSection {
            np: 10,
            nc: 3,
            rw: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub ts: f64,
    pub t_end: f64,
    pub substeps: i64,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            ts: 0.05,
            t_end: 15.0,
            substeps: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSection {
    pub amplitude: f64,
    pub start: f64,
    pub duration: f64,
}

impl Default for PulseSection {
    fn default() -> Self {
        PulseSection {
            amplitude: 0.0,
            start: 0.5,
            duration: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SetpointSection {
    pub h1: PulseSection,
    pub h2: PulseSection,
}

impl Default for SetpointSection {
    fn default() -> Self {
        SetpointSection {
            h1: PulseSection {
                amplitude: 0.5,
                ..Default::default()
            },
            h2: PulseSection {
                amplitude: 0.3,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisturbanceSection {
    pub start: f64,
    pub duration: f64,
    /// Percent of the steady tank-1 inflow.
    pub magnitude: f64,
    /// `tank1`, `tank2` or `both`.
    pub target: String,
}

impl Default for DisturbanceSection {
    fn default() -> Self {
        DisturbanceSection {
            start: 8.0,
            duration: 2.0,
            magnitude: 10.0,
            target: "tank1".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// CSV path used when none is given on the command line; empty for none.
    pub path: String,
    /// Print step metrics after a simulation.
    pub metrics: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            path: String::new(),
            metrics: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub plant: PlantSection,
    pub mpc: MpcSection,
    pub sim: SimSection,
    pub setpoint: SetpointSection,
    pub disturbance: DisturbanceSection,
    pub output: OutputSection,
}

/// 1-based line on which `key` is assigned, for flat-format files.
fn key_line(source: Option<&str>, key: &str) -> Option<usize> {
    let source = source?;
    source
        .lines()
        .position(|l| {
            l.trim_start()
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.scenario_with_source(Some(text))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let pulse = |p: &SetpointPulse| PulseSection {
            amplitude: p.amplitude,
            start: p.start,
            duration: p.duration,
        };
        RunConfig {
            plant: PlantSection {
                a1: s.params.a1,
                a2: s.params.a2,
                alpha1: s.params.alpha1,
                alpha2: s.params.alpha2,
                l1: s.op_levels.0,
                l2: s.op_levels.1,
                flow_policy: match s.flow_policy {
                    FlowPolicy::AllowNegative => "allow_negative",
                    FlowPolicy::StrictPhysical => "strict",
                }
                .into(),
                mode: match s.plant_mode {
                    PlantMode::Nonlinear => "nonlinear",
                    PlantMode::Linear => "linear",
                }
                .into(),
                clamp_inflow: s.clamp_inflow,
            },
            mpc: MpcSection {
                np: s.mpc.np as i64,
                nc: s.mpc.nc as i64,
                rw: s.mpc.rw,
            },
            sim: SimSection {
                ts: s.ts,
                t_end: s.t_end,
                substeps: s.substeps as i64,
            },
            setpoint: SetpointSection {
                h1: pulse(&s.setpoints[0]),
                h2: pulse(&s.setpoints[1]),
            },
            disturbance: DisturbanceSection {
                start: s.disturbance.start,
                duration: s.disturbance.duration,
                magnitude: s.disturbance.magnitude,
                target: match s.disturbance.target {
                    DisturbanceTarget::Tank1 => "tank1",
                    DisturbanceTarget::Tank2 => "tank2",
                    DisturbanceTarget::Both => "both",
                }
                .into(),
            },
            output: OutputSection::default(),
        }
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        self.scenario_with_source(None)
    }

    fn scenario_with_source(&self, source: Option<&str>) -> Result<Scenario, ConfigError> {
        let invalid = |key: &str, message: String| ConfigError::Invalid {
            key: key.to_string(),
            line: key_line(source, key),
            message,
        };
        let finite = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(invalid(key, format!("must be finite, got {v}")))
            }
        };
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(invalid(key, format!("must be positive, got {v}")))
            }
        };
        let count = |key: &str, v: i64| {
            usize::try_from(v)
                .ok()
                .filter(|n| *n >= 1)
                .ok_or_else(|| invalid(key, format!("must be a positive integer, got {v}")))
        };

        let p = &self.plant;
        let params = TankParams {
            a1: positive("plant.a1", p.a1)?,
            a2: positive("plant.a2", p.a2)?,
            alpha1: finite("plant.alpha1", p.alpha1)?,
            alpha2: positive("plant.alpha2", p.alpha2)?,
        };
        if params.alpha1 < 0.0 {
            return Err(invalid(
                "plant.alpha1",
                format!("must be >= 0, got {}", params.alpha1),
            ));
        }
        let l1 = finite("plant.l1", p.l1)?;
        let l2 = finite("plant.l2", p.l2)?;
        if l2 < 0.0 {
            return Err(invalid("plant.l2", format!("must be >= 0, got {l2}")));
        }
        if l1.partial_cmp(&l2) != Some(Ordering::Greater) {
            return Err(invalid(
                "plant.l1",
                format!("linearization is singular unless l1 > l2 (got l1 = {l1}, l2 = {l2})"),
            ));
        }
        let flow_policy = match p.flow_policy.as_str() {
            "allow_negative" => FlowPolicy::AllowNegative,
            "strict" => FlowPolicy::StrictPhysical,
            other => {
                return Err(invalid(
                    "plant.flow_policy",
                    format!("expected allow_negative or strict, got {other:?}"),
                ))
            }
        };
        let plant_mode = match p.mode.as_str() {
            "nonlinear" => PlantMode::Nonlinear,
            "linear" => PlantMode::Linear,
            other => {
                return Err(invalid(
                    "plant.mode",
                    format!("expected nonlinear or linear, got {other:?}"),
                ))
            }
        };

        let np = count("mpc.np", self.mpc.np)?;
        let nc = count("mpc.nc", self.mpc.nc)?;
        if nc > np {
            return Err(invalid(
                "mpc.nc",
                format!("must not exceed mpc.np ({nc} > {np})"),
            ));
        }
        let rw = finite("mpc.rw", self.mpc.rw)?;
        if rw < 0.0 {
            return Err(invalid("mpc.rw", format!("must be >= 0, got {rw}")));
        }

        let ts = positive("sim.ts", self.sim.ts)?;
        let t_end = positive("sim.t_end", self.sim.t_end)?;
        let substeps = count("sim.substeps", self.sim.substeps)?;

        let pulse = |name: &str, s: &PulseSection| -> Result<SetpointPulse, ConfigError> {
            let key = |f: &str| format!("setpoint.{name}.{f}");
            let duration = finite(&key("duration"), s.duration)?;
            if duration < 0.0 {
                return Err(invalid(
                    &key("duration"),
                    format!("must be >= 0, got {duration}"),
                ));
            }
            Ok(SetpointPulse {
                amplitude: finite(&key("amplitude"), s.amplitude)?,
                start: finite(&key("start"), s.start)?,
                duration,
            })
        };
        let setpoints = [
            pulse("h1", &self.setpoint.h1)?,
            pulse("h2", &self.setpoint.h2)?,
        ];

        let d = &self.disturbance;
        let duration = finite("disturbance.duration", d.duration)?;
        if duration < 0.0 {
            return Err(invalid(
                "disturbance.duration",
                format!("must be >= 0, got {duration}"),
            ));
        }
        let target = match d.target.as_str() {
            "tank1" => DisturbanceTarget::Tank1,
            "tank2" => DisturbanceTarget::Tank2,
            "both" => DisturbanceTarget::Both,
            other => {
                return Err(invalid(
                    "disturbance.target",
                    format!("expected tank1, tank2 or both, got {other:?}"),
                ))
            }
        };
        let disturbance = DisturbanceProfile {
            start: finite("disturbance.start", d.start)?,
            duration,
            magnitude: finite("disturbance.magnitude", d.magnitude)?,
            target,
        };

        let scenario = Scenario {
            params,
            op_levels: (l1, l2),
            flow_policy,
            mpc: MpcConfig { np, nc, rw },
            ts,
            t_end,
            substeps,
            setpoints,
            disturbance,
            clamp_inflow: p.clamp_inflow,
            plant_mode,
        };
        scenario
            .validate()
            .map_err(|e| invalid("config", e.to_string()))?;
        if flow_policy == FlowPolicy::StrictPhysical {
            scenario
                .operating_point()
                .map_err(|e| invalid("plant.flow_policy", e.to_string()))?;
        }
        Ok(scenario)
    }

    /// Writes the flat dotted form, one key per line. Floats use the
    /// shortest representation that parses back to the same value.
    pub fn to_flat_string(&self) -> String {
        let mut s = String::new();
        let f = |v: f64| format!("{v:?}");
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let p = &self.plant;
        line("plant.a1", f(p.a1));
        line("plant.a2", f(p.a2));
        line("plant.alpha1", f(p.alpha1));
        line("plant.alpha2", f(p.alpha2));
        line("plant.l1", f(p.l1));
        line("plant.l2", f(p.l2));
        line("plant.flow_policy", format!("{:?}", p.flow_policy));
        line("plant.mode", format!("{:?}", p.mode));
        line("plant.clamp_inflow", p.clamp_inflow.to_string());
        line("mpc.np", self.mpc.np.to_string());
        line("mpc.nc", self.mpc.nc.to_string());
        line("mpc.rw", f(self.mpc.rw));
        line("sim.ts", f(self.sim.ts));
        line("sim.t_end", f(self.sim.t_end));
        line("sim.substeps", self.sim.substeps.to_string());
        for (name, pulse) in [("h1", &self.setpoint.h1), ("h2", &self.setpoint.h2)] {
            line(&format!("setpoint.{name}.amplitude"), f(pulse.amplitude));
            line(&format!("setpoint.{name}.start"), f(pulse.start));
            line(&format!("setpoint.{name}.duration"), f(pulse.duration));
        }
        let d = &self.disturbance;
        line("disturbance.start", f(d.start));
        line("disturbance.duration", f(d.duration));
        line("disturbance.magnitude", f(d.magnitude));
        line("disturbance.target", format!("{:?}", d.target));
        line("output.path", format!("{:?}", self.output.path));
        line("output.metrics", self.output.metrics.to_string());
        s
    }
}

/// The bundled reference configuration.
pub const REFERENCE_CONF: &str = include_str!("../configs/paper.conf");
