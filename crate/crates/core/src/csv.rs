//! CSV form of a [`SimulationLog`].
//!
//! Header `t,r1,r2,h1,h2,u1,u2,u3,fi1_abs,fi2_abs`, numbers with 9
//! significant digits, `\n` line endings, no trailing spaces.

use std::io::{self, Write};

use crate::closed_loop::SimulationLog;

pub const HEADER: &str = "t,r1,r2,h1,h2,u1,u2,u3,fi1_abs,fi2_abs";

/// Formats `v` with 9 significant digits, `%g` style: plain decimals for
/// exponents in `-5..9`, scientific otherwise, trailing zeros dropped.
pub fn fmt_sig9(v: f64) -> String {
    fmt_sig(v, 9)
}

/// `%g`-style formatting with `digits` significant digits.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.prec$e}", prec = digits - 1);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn write_log<W: Write>(log: &SimulationLog, mut w: W) -> io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for row in &log.rows {
        let fields = [
            row.t,
            row.r[0],
            row.r[1],
            row.h[0],
            row.h[1],
            row.u[0],
            row.u[1],
            row.u3,
            row.fi_abs[0],
            row.fi_abs[1],
        ];
        let line: Vec<String> = fields.iter().map(|v| fmt_sig9(*v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()
}

pub fn log_to_string(log: &SimulationLog) -> String {
    let mut buf = Vec::new();
    write_log(log, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}
