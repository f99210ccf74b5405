//! Density-ratio sweeps that locate the outcome boundary empirically.

use rayon::prelude::*;

use crate::dynamics::{
    bisect_critical_ratio, simulate_outcome, Controls, Outcome, Release, Scenario, SimError,
};
use crate::solids::Solid;

/// Bracket width at which the boundary bisection stops.
pub const BOUNDARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub ratio: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub solid: Solid,
    pub release: Release,
    pub rows: Vec<SweepRow>,
    /// Refined ratio at which the outcome flips, if it flips in range.
    pub boundary: Option<f64>,
}

pub fn run(
    solid: &Solid,
    release: Release,
    ratio_min: f64,
    ratio_max: f64,
    steps: usize,
    controls: &Controls,
) -> Result<Sweep, SimError> {
    let ratios: Vec<f64> = (0..steps)
        .map(|i| ratio_min + (ratio_max - ratio_min) * i as f64 / (steps - 1) as f64)
        .collect();
    let rows = ratios
        .par_iter()
        .map(|&ratio| {
            let s = Scenario::new(*solid, 1.0, ratio, 1.0, release).expect("validated ratio");
            simulate_outcome(&s, controls).map(|outcome| SweepRow { ratio, outcome })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let flip = rows
        .windows(2)
        .find(|w| w[0].outcome.reaches_boundary() != w[1].outcome.reaches_boundary());
    let boundary = match flip {
        Some(w) => Some(bisect_critical_ratio(
            solid,
            release,
            w[0].ratio,
            w[1].ratio,
            BOUNDARY_TOL,
            controls,
        )?),
        None => None,
    };
    Ok(Sweep {
        solid: *solid,
        release,
        rows,
        boundary,
    })
}

impl Sweep {
    /// Rows are `ratio,outcome,x_turn_over_h,t_event` in units of `h` and
    /// `√(h/g)`; a trailing `# boundary,<ratio>` line carries the refined
    /// boundary.
    pub fn render(&self) -> String {
        use super::csv::fmt_num;
        let h = self.solid.height();
        let mut out = String::from("ratio,outcome,x_turn_over_h,t_event\n");
        for row in &self.rows {
            let (x, t) = match row.outcome {
                Outcome::DoesNotSubmerge { x_max, t_max } => (Some(x_max), t_max),
                Outcome::StaysPartlySubmerged { x_min, t_min } => (Some(x_min), t_min),
                Outcome::Grazes { x_turn, t_graze } => (Some(x_turn), t_graze),
                Outcome::FullySubmerges { t_cross } => (None, t_cross),
                Outcome::Launches { t_exit } => (None, t_exit),
                Outcome::Sinks { t_cross } => (None, t_cross),
            };
            // sweeps run with g = 1, so the time unit √(h/g) is √h
            let t_unit = h.sqrt();
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_num(row.ratio),
                row.outcome.name(),
                x.map(|v| fmt_num(v / h)).unwrap_or_default(),
                t.map(|v| fmt_num(v / t_unit)).unwrap_or_default(),
            ));
        }
        match self.boundary {
            Some(b) => out.push_str(&format!("# boundary,{b:.9}\n")),
            None => out.push_str("# boundary,none\n"),
        }
        out
    }
}
