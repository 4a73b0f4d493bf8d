//! Command implementations behind the `tankmpc` binary.
//!
//! Exit codes: 0 success, 1 some sweep values failed, 2 configuration
//! error, 3 runtime error (numerical failure or unwritable output).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::closed_loop::{run_closed_loop, Scenario, SimulationLog};
use crate::config::{ConfigError, RunConfig};
use crate::csv::{fmt_sig, fmt_sig9, write_log};
use crate::discretize::zoh_discretize;
use crate::error::Error;
use crate::metrics::{summarize, Settling, Summary};
use crate::tank::linearize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Runtime(_) | CliError::Output { .. } => EXIT_RUNTIME,
        }
    }
}

fn load(path: &Path) -> Result<(RunConfig, Scenario), CliError> {
    let cfg = RunConfig::load(path)?;
    let scenario = cfg.scenario()?;
    Ok((cfg, scenario))
}

fn write_matrix(
    out: &mut dyn Write,
    name: &str,
    m: &DMatrix<f64>,
    digits: usize,
) -> io::Result<()> {
    writeln!(out, "{name} =")?;
    let cells: Vec<Vec<String>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| fmt_sig(m[(i, j)], digits)).collect())
        .collect();
    let width = cells.iter().flatten().map(|c| c.len()).max().unwrap_or(1);
    for row in cells {
        let row: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
        writeln!(out, "  [ {} ]", row.join("  "))?;
    }
    Ok(())
}

/// `tankmpc linearize`: prints the continuous model at 4 significant figures
/// and its zero-order-hold sampling.
pub fn cmd_linearize(config: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let (_, scenario) = load(config)?;
    let op = scenario
        .operating_point()
        .map_err(|e| CliError::Config(config_err(e)))?;
    let lin = linearize(&scenario.params, &op).map_err(|e| CliError::Config(config_err(e)))?;
    let disc = zoh_discretize(&lin, scenario.ts)?;

    let io = |source| CliError::Output {
        path: "<stdout>".into(),
        source,
    };
    (|| -> io::Result<()> {
        writeln!(
            out,
            "operating point: L1 = {} m, L2 = {} m, Fi1 = {} m^3/s, Fi2 = {} m^3/s",
            fmt_sig9(op.l1),
            fmt_sig9(op.l2),
            fmt_sig9(op.fi1_bar),
            fmt_sig9(op.fi2_bar)
        )?;
        writeln!(out, "continuous model (4 significant figures):")?;
        write_matrix(out, "A_m", &lin.a, 4)?;
        write_matrix(out, "B_m", &lin.b, 4)?;
        write_matrix(out, "C_m", &lin.c, 4)?;
        write_matrix(out, "D_m", &lin.d, 4)?;
        writeln!(out, "zero-order hold, ts = {} s:", fmt_sig9(disc.ts))?;
        write_matrix(out, "Ad", &disc.ad, 9)?;
        write_matrix(out, "Bd", &disc.bd, 9)?;
        Ok(())
    })()
    .map_err(io)
}

fn config_err(e: Error) -> ConfigError {
    let key = match e {
        Error::SingularLinearization(_) => "plant.l1/plant.l2",
        Error::Infeasible(_) => "plant.flow_policy",
        _ => "plant",
    };
    ConfigError::Invalid {
        key: key.into(),
        line: None,
        message: e.to_string(),
    }
}

/// Writes `log` to `path` through a temporary file in the same directory, so
/// a failed write leaves nothing behind.
pub fn write_csv_atomic(log: &SimulationLog, path: &Path) -> Result<(), CliError> {
    let err = |source| CliError::Output {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(err)?;
    write_log(log, io::BufWriter::new(tmp.as_file_mut())).map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

/// `tankmpc simulate`: runs the scenario, writes the CSV and prints metrics.
pub fn cmd_simulate(
    config: &Path,
    csv_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (cfg, scenario) = load(config)?;
    let path = match csv_out {
        Some(p) => p.to_path_buf(),
        None if !cfg.output.path.is_empty() => PathBuf::from(&cfg.output.path),
        None => {
            return Err(CliError::Usage(
                "no output path: pass --out or set output.path".into(),
            ))
        }
    };
    let log = run_closed_loop(&scenario)?;
    write_csv_atomic(&log, &path)?;
    if cfg.output.metrics {
        if let Some(summary) = summarize(&log) {
            write!(out, "{summary}").map_err(|source| CliError::Output {
                path: "<stdout>".into(),
                source,
            })?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Rw,
    Np,
    Nc,
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rw" => Ok(SweepParam::Rw),
            "np" => Ok(SweepParam::Np),
            "nc" => Ok(SweepParam::Nc),
            other => Err(format!(
                "unknown sweep parameter {other:?} (expected rw, np or nc)"
            )),
        }
    }
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Rw => "rw",
            SweepParam::Np => "np",
            SweepParam::Nc => "nc",
        }
    }

    fn apply(self, base: &Scenario, value: f64) -> Scenario {
        let mut s = base.clone();
        match self {
            SweepParam::Rw => s.mpc.rw = value,
            SweepParam::Np => s.mpc.np = value as usize,
            SweepParam::Nc => s.mpc.nc = value as usize,
        }
        s
    }

    fn parse_value(self, text: &str) -> Result<f64, String> {
        let text = text.trim();
        match self {
            SweepParam::Rw => text
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("rw value {text:?} is not a finite number")),
            SweepParam::Np | SweepParam::Nc => {
                text.parse::<usize>().map(|v| v as f64).map_err(|_| {
                    format!(
                        "{} value {text:?} is not a non-negative integer",
                        self.name()
                    )
                })
            }
        }
    }
}

/// Result of one sweep point.
#[derive(Debug)]
pub struct SweepOutcome {
    pub label: String,
    pub value: f64,
    pub result: Result<Summary, String>,
}

/// Runs one scenario per value on its own thread, writes
/// `<out_dir>/<param>_<value>.csv` for each success, and returns the
/// outcomes sorted by value.
pub fn run_sweep(
    base: &Scenario,
    param: SweepParam,
    values: &[String],
    out_dir: &Path,
) -> Result<Vec<SweepOutcome>, CliError> {
    let parsed = values
        .iter()
        .map(|v| param.parse_value(v).map(|x| (v.trim().to_string(), x)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::Usage)?;
    fs::create_dir_all(out_dir).map_err(|source| CliError::Output {
        path: out_dir.display().to_string(),
        source,
    })?;

    let mut outcomes: Vec<SweepOutcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = parsed
            .iter()
            .map(|(label, value)| {
                let scenario = param.apply(base, *value);
                let path = out_dir.join(format!("{}_{}.csv", param.name(), label));
                scope.spawn(move || -> Result<Summary, String> {
                    let log = run_closed_loop(&scenario).map_err(|e| e.to_string())?;
                    write_csv_atomic(&log, &path).map_err(|e| e.to_string())?;
                    summarize(&log).ok_or_else(|| "empty log".to_string())
                })
            })
            .collect();
        handles
            .into_iter()
            .zip(&parsed)
            .map(|(h, (label, value))| SweepOutcome {
                label: label.clone(),
                value: *value,
                result: h.join().unwrap_or_else(|_| Err("worker panicked".into())),
            })
            .collect()
    });
    outcomes.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(outcomes)
}

fn settling_text(s: Option<Settling>) -> String {
    match s {
        Some(Settling::Settled(t)) => fmt_sig9(t),
        Some(Settling::NotSettled) => "not_settled".into(),
        None => "-".into(),
    }
}

/// Comparison table, one line per sweep value.
pub fn sweep_table(param: SweepParam, outcomes: &[SweepOutcome]) -> String {
    let mut s = format!(
        "{},status,settling_h1,settling_h2,overshoot_h1,overshoot_h2,final_error_h1,final_error_h2\n",
        param.name()
    );
    for o in outcomes {
        match &o.result {
            Ok(m) => {
                let first = |i: usize| m.first_step(i);
                s.push_str(&format!(
                    "{},ok,{},{},{},{},{},{}\n",
                    o.label,
                    settling_text(first(0).map(|x| x.settling)),
                    settling_text(first(1).map(|x| x.settling)),
                    first(0).map_or("-".into(), |x| fmt_sig9(x.overshoot_pct)),
                    first(1).map_or("-".into(), |x| fmt_sig9(x.overshoot_pct)),
                    fmt_sig9(m.final_error[0]),
                    fmt_sig9(m.final_error[1]),
                ));
            }
            Err(e) => s.push_str(&format!(
                "{},failed: {},-,-,-,-,-,-\n",
                o.label,
                e.replace(',', ";")
            )),
        }
    }
    s
}

/// `tankmpc sweep`. Returns the exit code: 0 when every value ran, 1 otherwise.
pub fn cmd_sweep(
    config: &Path,
    param: &str,
    values: &[String],
    out_dir: &Path,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let param: SweepParam = param.parse().map_err(CliError::Usage)?;
    if values.is_empty() {
        return Err(CliError::Usage("no sweep values given".into()));
    }
    let (_, base) = load(config)?;
    let outcomes = run_sweep(&base, param, values, out_dir)?;
    let table = sweep_table(param, &outcomes);
    let write_err = |source| CliError::Output {
        path: "<stdout>".into(),
        source,
    };
    fs::write(out_dir.join("sweep_summary.csv"), &table).map_err(|source| CliError::Output {
        path: out_dir.join("sweep_summary.csv").display().to_string(),
        source,
    })?;
    out.write_all(table.as_bytes()).map_err(write_err)?;
    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    Ok(if failed == 0 { EXIT_OK } else { EXIT_PARTIAL })
}
