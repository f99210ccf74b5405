//! Trajectory CSV: header `t,x,v,regime,E` (or `T,X,V,regime,E` in
//! nondimensional units), one row per sample, then `# event,<kind>,<t>`
//! comment lines. Numbers carry 17 significant digits.

use std::fmt::Write as _;

use crate::dynamics::{EventKind, Regime, Trajectory};

use super::CliError;

const HEADER: &str = "t,x,v,regime,E";
const HEADER_NONDIM: &str = "T,X,V,regime,E";

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub regime: Regime,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryCsv {
    pub nondimensional: bool,
    pub rows: Vec<CsvRow>,
    pub events: Vec<(EventKind, f64)>,
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

impl TrajectoryCsv {
    pub fn from_trajectory(traj: &Trajectory, nondimensional: bool) -> Self {
        let s = &traj.scenario;
        let (ts, h, vs, es) = if nondimensional {
            (
                s.time_scale(),
                s.height(),
                s.speed_scale(),
                s.g * s.height(),
            )
        } else {
            (1.0, 1.0, 1.0, 1.0)
        };
        let rows = traj
            .samples
            .iter()
            .map(|smp| CsvRow {
                t: smp.state.t / ts,
                x: smp.state.x / h,
                v: smp.state.v / vs,
                regime: smp.regime,
                energy: smp.energy / es,
            })
            .collect();
        let events = traj
            .events
            .iter()
            .map(|e| (e.kind, e.state.t / ts))
            .collect();
        Self {
            nondimensional,
            rows,
            events,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(if self.nondimensional {
            HEADER_NONDIM
        } else {
            HEADER
        });
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_num(r.t),
                fmt_num(r.x),
                fmt_num(r.v),
                r.regime.label(),
                fmt_num(r.energy)
            );
        }
        for (kind, t) in &self.events {
            let _ = writeln!(out, "# event,{},{}", kind.label(), fmt_num(*t));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = |line: usize, msg: &str| CliError::Input(format!("csv line {}: {msg}", line + 1));
        let mut lines = text.lines().enumerate();
        let nondimensional = match lines.next() {
            Some((_, HEADER)) => false,
            Some((_, HEADER_NONDIM)) => true,
            _ => return Err(bad(0, "missing header")),
        };
        let num = |i: usize, s: &str| s.parse::<f64>().map_err(|_| bad(i, "bad number"));
        let mut rows = Vec::new();
        let mut events = Vec::new();
        for (i, line) in lines {
            if let Some(rest) = line.strip_prefix("# event,") {
                let (kind, t) = rest.split_once(',').ok_or_else(|| bad(i, "bad event"))?;
                let kind = EventKind::from_label(kind).ok_or_else(|| bad(i, "unknown event"))?;
                events.push((kind, num(i, t)?));
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(i, "expected 5 fields"));
            }
            let row = CsvRow {
                t: num(i, f[0])?,
                x: num(i, f[1])?,
                v: num(i, f[2])?,
                regime: Regime::from_label(f[3]).ok_or_else(|| bad(i, "unknown regime"))?,
                energy: num(i, f[4])?,
            };
            if rows.last().is_some_and(|p: &CsvRow| p.t >= row.t) {
                return Err(bad(i, "time not increasing"));
            }
            rows.push(row);
        }
        Ok(Self {
            nondimensional,
            rows,
            events,
        })
    }
}
