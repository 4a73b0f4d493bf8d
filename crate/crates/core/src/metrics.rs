//! Step-response figures for a [`SimulationLog`].
//!
//! The log is cut into segments at every change of an output's setpoint
//! (plus the first row). On each segment the step runs from the output value
//! at the edge to the new setpoint.

use std::fmt;

use crate::closed_loop::SimulationLog;
use crate::csv::fmt_sig9;

/// Settling band as a fraction of the step size.
pub const BAND_FRACTION: f64 = 0.02;
/// Consecutive samples that must stay inside the band.
pub const DWELL_SAMPLES: usize = 10;

const TINY_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Settling {
    /// Time from the edge (s).
    Settled(f64),
    NotSettled,
}

impl fmt::Display for Settling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Settling::Settled(t) => f.write_str(&fmt_sig9(*t)),
            Settling::NotSettled => f.write_str("not settled"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    /// Time of the setpoint edge (s).
    pub edge_time: f64,
    /// Time the segment ends (last row in it).
    pub end_time: f64,
    /// Output value at the edge.
    pub from: f64,
    pub target: f64,
    /// 10 % to 90 % rise time; `None` when 90 % is never reached.
    pub rise_time: Option<f64>,
    pub settling: Settling,
    /// Peak excursion past the target in percent of the step.
    pub overshoot_pct: f64,
    /// `|target - y|` at the end of the segment.
    pub steady_state_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    /// Per output, one entry per setpoint segment.
    pub outputs: [Vec<StepMetrics>; 2],
    /// Largest `|u(k) - u(k-1)|` per input.
    pub max_abs_du: [f64; 2],
    /// `|r - h|` at the last row.
    pub final_error: [f64; 2],
}

impl Summary {
    /// The segment whose setpoint edge is the first nonzero step on `output`.
    pub fn first_step(&self, output: usize) -> Option<&StepMetrics> {
        self.outputs[output]
            .iter()
            .find(|m| (m.target - m.from).abs() > TINY_STEP)
    }
}

/// Step metrics of a log with the default band and dwell.
pub fn summarize(log: &SimulationLog) -> Option<Summary> {
    summarize_with(log, BAND_FRACTION, DWELL_SAMPLES)
}

pub fn summarize_with(log: &SimulationLog, band_fraction: f64, dwell: usize) -> Option<Summary> {
    let last = log.rows.last()?;
    let t: Vec<f64> = log.rows.iter().map(|r| r.t).collect();
    let outputs = [0, 1].map(|i| {
        let y: Vec<f64> = log.rows.iter().map(|r| r.h[i]).collect();
        let r: Vec<f64> = log.rows.iter().map(|r| r.r[i]).collect();
        segments(&r)
            .into_iter()
            .map(|(s, e)| step_metrics(&t[s..e], &y[s..e], r[s], band_fraction, dwell))
            .collect()
    });

    let mut max_abs_du = [0.0f64; 2];
    for w in log.rows.windows(2) {
        for (i, m) in max_abs_du.iter_mut().enumerate() {
            *m = m.max((w[1].u[i] - w[0].u[i]).abs());
        }
    }
    let final_error = [0, 1].map(|i| (last.r[i] - last.h[i]).abs());
    Some(Summary {
        outputs,
        max_abs_du,
        final_error,
    })
}

/// Half-open index ranges over which `r` is constant.
fn segments(r: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..r.len() {
        if r[k] != r[k - 1] {
            out.push((start, k));
            start = k;
        }
    }
    out.push((start, r.len()));
    out
}

fn step_metrics(
    t: &[f64],
    y: &[f64],
    target: f64,
    band_fraction: f64,
    dwell: usize,
) -> StepMetrics {
    let from = y[0];
    let step = target - from;
    let scale = if step.abs() > TINY_STEP {
        step.abs()
    } else {
        target.abs()
    };
    let band = band_fraction * scale;
    let t0 = t[0];

    // earliest index from which every later sample stays in the band
    let mut settle_idx = y.len();
    for k in (0..y.len()).rev() {
        if (y[k] - target).abs() <= band {
            settle_idx = k;
        } else {
            break;
        }
    }
    let settling = if y.len() - settle_idx >= dwell && settle_idx < y.len() {
        Settling::Settled(t[settle_idx] - t0)
    } else {
        Settling::NotSettled
    };

    let (rise_time, overshoot_pct) = if step.abs() > TINY_STEP {
        let progress: Vec<f64> = y.iter().map(|v| (v - from) / step).collect();
        let t10 = progress.iter().position(|p| *p >= 0.1).map(|k| t[k]);
        let t90 = progress.iter().position(|p| *p >= 0.9).map(|k| t[k]);
        let rise = match (t10, t90) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        };
        let peak = progress.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (rise, ((peak - 1.0) * 100.0).max(0.0))
    } else {
        (Some(0.0), 0.0)
    };

    StepMetrics {
        edge_time: t0,
        end_time: *t.last().unwrap(),
        from,
        target,
        rise_time,
        settling,
        overshoot_pct,
        steady_state_error: (target - y[y.len() - 1]).abs(),
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, steps) in self.outputs.iter().enumerate() {
            writeln!(f, "output h{}:", i + 1)?;
            for m in steps {
                let rise = m.rise_time.map_or_else(|| "none".to_string(), fmt_sig9);
                writeln!(
                    f,
                    "  edge t={} target={} rise_time={} settling_time={} overshoot_pct={} steady_state_error={}",
                    fmt_sig9(m.edge_time),
                    fmt_sig9(m.target),
                    rise,
                    m.settling,
                    fmt_sig9(m.overshoot_pct),
                    fmt_sig9(m.steady_state_error),
                )?;
            }
            writeln!(f, "  final_error={}", fmt_sig9(self.final_error[i]))?;
        }
        for i in 0..2 {
            writeln!(
                f,
                "input u{}: max_abs_du={}",
                i + 1,
                fmt_sig9(self.max_abs_du[i])
            )?;
        }
        Ok(())
    }
}
