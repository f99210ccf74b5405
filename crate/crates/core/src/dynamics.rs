//! Vertical motion of a body released at the liquid surface.
//!
//! Depth `x` of the lowest point is measured downward from the surface. The
//! body is partly submerged for `0 ≤ x ≤ h`, fully submerged for `x > h`
//! (constant buoyancy) and airborne for `x < 0` (gravity only). Internally the
//! state is nondimensionalized as `X = x/h`, `T = t·√(g/h)`, so every shape
//! obeys `X″ = 1 − r·X^n` while partly submerged, with `r = ρ₀/ρ`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::{dopri_step, step_factor, Step, Vec2};
use crate::solids::Solid;

/// Relative tolerance on `ρ₀/ρ − (n+1)` within which a scenario is treated as
/// exactly critical.
pub const CRITICAL_RATIO_RTOL: f64 = 1e-12;

/// Speed (units of `√(gh)`) below which a boundary crossing is treated as a
/// grazing touch rather than a regime change.
pub const GRAZE_SPEED: f64 = 1e-5;

/// Distance (units of `h`) from a boundary within which a turning point counts
/// as grazing.
pub const GRAZE_DEPTH: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("{name} must be finite and strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("t_end must be finite and positive, got {0}")]
    BadHorizon(f64),
    #[error("tolerance {name} must lie in (0, 1), got {value}")]
    BadTolerance { name: &'static str, value: f64 },
    #[error("{name} must be finite and positive, got {value}")]
    BadControl { name: &'static str, value: f64 },
    #[error("step size underflow at t = {}, last good state x = {}, v = {}", .last.t, .last.x, .last.v)]
    StepUnderflow { last: State },
    #[error("non-finite state after t = {}", .last.t)]
    Blowup { last: State },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Release {
    /// At rest with the lowest point on the surface: `x(0) = 0`.
    Drop,
    /// At rest with the top flush with the surface: `x(0) = h`.
    Launch,
}

impl fmt::Display for Release {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Release::Drop => "drop",
            Release::Launch => "launch",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub solid: Solid,
    pub rho: f64,
    pub rho0: f64,
    pub g: f64,
    pub release: Release,
}

impl Scenario {
    pub fn new(
        solid: Solid,
        rho: f64,
        rho0: f64,
        g: f64,
        release: Release,
    ) -> Result<Self, ScenarioError> {
        for (name, value) in [("rho", rho), ("rho0", rho0), ("g", g)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ScenarioError::NonPositive { name, value });
            }
        }
        Ok(Self {
            solid,
            rho,
            rho0,
            g,
            release,
        })
    }

    /// Scenario with unit body density and liquid density `ratio`.
    pub fn with_ratio(
        solid: Solid,
        ratio: f64,
        g: f64,
        release: Release,
    ) -> Result<Self, ScenarioError> {
        Self::new(solid, 1.0, ratio, g, release)
    }

    /// Density ratio `ρ₀/ρ`.
    pub fn ratio(&self) -> f64 {
        self.rho0 / self.rho
    }

    pub fn height(&self) -> f64 {
        self.solid.height()
    }

    pub fn exponent(&self) -> f64 {
        self.solid.exponent()
    }

    pub fn initial_state(&self) -> State {
        let x = match self.release {
            Release::Drop => 0.0,
            Release::Launch => self.height(),
        };
        State { t: 0.0, x, v: 0.0 }
    }

    /// Time unit `√(h/g)`.
    pub fn time_scale(&self) -> f64 {
        (self.height() / self.g).sqrt()
    }

    /// Velocity unit `√(gh)`.
    pub fn speed_scale(&self) -> f64 {
        (self.height() * self.g).sqrt()
    }

    fn flow(&self) -> Flow {
        Flow {
            r: self.ratio(),
            n: self.exponent(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    PartlySubmerged,
    FullySubmerged,
    Airborne,
}

impl Regime {
    /// Boundaries `x = 0` and `x = h` belong to the partly submerged regime.
    pub fn of(x: f64, h: f64) -> Self {
        if x > h {
            Regime::FullySubmerged
        } else if x < 0.0 {
            Regime::Airborne
        } else {
            Regime::PartlySubmerged
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::PartlySubmerged => "partly",
            Regime::FullySubmerged => "fully",
            Regime::Airborne => "airborne",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "partly" => Some(Regime::PartlySubmerged),
            "fully" => Some(Regime::FullySubmerged),
            "airborne" => Some(Regime::Airborne),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    /// Downward through `x = h`.
    Submersion,
    /// Upward through `x = h`.
    Emersion,
    /// Upward through `x = 0`.
    Exit,
    /// Downward through `x = 0`.
    Reentry,
    /// `v = 0`.
    TurningPoint,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::Submersion => "submersion",
            EventKind::Emersion => "emersion",
            EventKind::Exit => "exit",
            EventKind::Reentry => "reentry",
            EventKind::TurningPoint => "turning_point",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        [
            EventKind::Submersion,
            EventKind::Emersion,
            EventKind::Exit,
            EventKind::Reentry,
            EventKind::TurningPoint,
        ]
        .into_iter()
        .find(|k| k.label() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub state: State,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: State,
    pub regime: Regime,
    /// Specific energy from [`first_integral`].
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scenario: Scenario,
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.samples.first().map_or(0.0, |s| s.energy);
        self.samples
            .iter()
            .map(|s| (s.energy - e0).abs())
            .fold(0.0, f64::max)
    }

    pub fn first_event(&self, kind: EventKind) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == kind)
    }

    /// Outcome read off the event log: the first decisive event for the
    /// release mode, or `None` if the horizon ended before one occurred.
    pub fn outcome(&self) -> Option<Outcome> {
        let h = self.scenario.height();
        let release = self.scenario.release;
        for e in &self.events {
            let s = e.state;
            match (release, e.kind) {
                (Release::Drop, EventKind::Submersion) => {
                    return Some(Outcome::FullySubmerges { t_cross: Some(s.t) })
                }
                (Release::Launch, EventKind::Exit) => {
                    return Some(Outcome::Launches { t_exit: Some(s.t) })
                }
                (Release::Launch, EventKind::Submersion) => {
                    return Some(Outcome::Sinks { t_cross: Some(s.t) })
                }
                (Release::Drop, EventKind::TurningPoint) => {
                    return Some(if (s.x - h).abs() <= GRAZE_DEPTH * h {
                        Outcome::Grazes {
                            x_turn: s.x,
                            t_graze: Some(s.t),
                        }
                    } else {
                        Outcome::DoesNotSubmerge {
                            x_max: s.x,
                            t_max: Some(s.t),
                        }
                    });
                }
                (Release::Launch, EventKind::TurningPoint) => {
                    return Some(if s.x.abs() <= GRAZE_DEPTH * h {
                        Outcome::Grazes {
                            x_turn: s.x,
                            t_graze: Some(s.t),
                        }
                    } else {
                        Outcome::StaysPartlySubmerged {
                            x_min: s.x,
                            t_min: Some(s.t),
                        }
                    });
                }
                _ => {}
            }
        }
        None
    }
}

/// Result of releasing a body from rest. Times are `None` when the outcome was
/// decided analytically without simulating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// Drop reaches `x = h` with nonzero speed.
    FullySubmerges { t_cross: Option<f64> },
    /// Drop turns around at `x_max < h`.
    DoesNotSubmerge { x_max: f64, t_max: Option<f64> },
    /// Launch reaches `x = 0` with nonzero speed.
    Launches { t_exit: Option<f64> },
    /// Launch turns around at `x_min > 0`.
    StaysPartlySubmerged { x_min: f64, t_min: Option<f64> },
    /// Turns around exactly on the boundary (`x = h` for drops, `x = 0` for
    /// launches).
    Grazes { x_turn: f64, t_graze: Option<f64> },
    /// Launch of a body denser than the liquid: it sinks from the flush
    /// position.
    Sinks { t_cross: Option<f64> },
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::FullySubmerges { .. } => "FullySubmerges",
            Outcome::DoesNotSubmerge { .. } => "DoesNotSubmerge",
            Outcome::Launches { .. } => "Launches",
            Outcome::StaysPartlySubmerged { .. } => "StaysPartlySubmerged",
            Outcome::Grazes { .. } => "Grazes",
            Outcome::Sinks { .. } => "Sinks",
        }
    }

    /// Whether the boundary opposite the release point is reached (full
    /// submersion for drops, exit for launches), counting grazing contact.
    pub fn reaches_boundary(&self) -> bool {
        matches!(
            self,
            Outcome::FullySubmerges { .. } | Outcome::Launches { .. } | Outcome::Grazes { .. }
        )
    }
}

/// Nondimensional right-hand side: `X″ = 1 − r·X^n` on `[0, 1]`.
#[derive(Debug, Clone, Copy)]
struct Flow {
    r: f64,
    n: f64,
}

impl Flow {
    fn accel(&self, x: f64) -> f64 {
        if x < 0.0 {
            1.0
        } else if x > 1.0 {
            1.0 - self.r
        } else {
            1.0 - self.r * x.powf(self.n)
        }
    }

    /// Potential with `U(0) = 0`, continuous and C¹ across both boundaries.
    fn potential(&self, x: f64) -> f64 {
        let top = -1.0 + self.r / (self.n + 1.0);
        if x < 0.0 {
            -x
        } else if x > 1.0 {
            top - (1.0 - self.r) * (x - 1.0)
        } else {
            -x + self.r * x.powf(self.n + 1.0) / (self.n + 1.0)
        }
    }

    fn energy(&self, y: Vec2) -> f64 {
        0.5 * y[1] * y[1] + self.potential(y[0])
    }

    fn rhs(&self) -> impl Fn(f64, Vec2) -> Vec2 + '_ {
        move |_t, y| [y[1], self.accel(y[0])]
    }
}

/// Acceleration `x″` at depth `x`.
pub fn acceleration(scenario: &Scenario, x: f64) -> f64 {
    scenario.g * scenario.flow().accel(x / scenario.height())
}

/// Specific energy `½v² + U(x)` with `U(x) = −g x + ρ₀g x^(n+1)/(ρ(n+1)hⁿ)`
/// on the partly submerged range, continued linearly outside it; zero at the
/// drop initial state and conserved along exact solutions.
pub fn first_integral(scenario: &Scenario, state: &State) -> f64 {
    let h = scenario.height();
    let gh = scenario.g * h;
    gh * scenario
        .flow()
        .energy([state.x / h, state.v / scenario.speed_scale()])
}

/// Nonzero root `h((n+1)ρ/ρ₀)^(1/n)` of the drop first integral at `v = 0`:
/// the maximum depth when it does not exceed `h`.
pub fn turning_depth(scenario: &Scenario) -> f64 {
    let n = scenario.exponent();
    scenario.height() * ((n + 1.0) / scenario.ratio()).powf(1.0 / n)
}

/// Density ratio `ρ₀/ρ = n + 1` separating full submersion from partial
/// flotation for a drop.
pub fn critical_ratio(solid: &Solid) -> f64 {
    solid.exponent() + 1.0
}

/// Density ratio separating launch from staying partly submerged. The launch
/// reaches `x = 0` exactly when `E(h, 0) ≥ E(0, 0)`, i.e. when
/// `−1 + r/(n+1) ≥ 0`, so it coincides with [`critical_ratio`].
pub fn launch_critical_ratio(solid: &Solid) -> f64 {
    let n = solid.exponent();
    // U(1) − U(0) = −1 + r/(n+1) vanishes at:
    n + 1.0
}

fn compare_to_critical(scenario: &Scenario) -> std::cmp::Ordering {
    let crit = critical_ratio(&scenario.solid);
    let r = scenario.ratio();
    if (r - crit).abs() <= CRITICAL_RATIO_RTOL * crit {
        std::cmp::Ordering::Equal
    } else {
        r.partial_cmp(&crit).unwrap()
    }
}

/// Highest point `x_min` reached by a launch that stays partly submerged: the
/// root in `(0, h)` of `U(x) = U(h)` below the equilibrium depth.
pub fn launch_turning_depth(scenario: &Scenario) -> f64 {
    let flow = scenario.flow();
    let h = scenario.height();
    if flow.r <= 1.0 {
        return h;
    }
    let target = flow.potential(1.0);
    // U decreases on [0, X_eq]
    let mut lo = 0.0;
    let mut hi = flow.r.powf(-1.0 / flow.n);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if flow.potential(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    h * 0.5 * (lo + hi)
}

/// Analytic outcome of a release from rest; times are left unset.
pub fn classify(scenario: &Scenario) -> Outcome {
    use std::cmp::Ordering::*;
    let h = scenario.height();
    match (scenario.release, compare_to_critical(scenario)) {
        (Release::Drop, Greater) => Outcome::DoesNotSubmerge {
            x_max: turning_depth(scenario),
            t_max: None,
        },
        (Release::Drop, Less) => Outcome::FullySubmerges { t_cross: None },
        (Release::Drop, Equal) => Outcome::Grazes {
            x_turn: h,
            t_graze: None,
        },
        (Release::Launch, Greater) => Outcome::Launches { t_exit: None },
        (Release::Launch, Equal) => Outcome::Grazes {
            x_turn: 0.0,
            t_graze: None,
        },
        (Release::Launch, Less) if scenario.ratio() < 1.0 => Outcome::Sinks { t_cross: None },
        (Release::Launch, Less) => Outcome::StaysPartlySubmerged {
            x_min: launch_turning_depth(scenario),
            t_min: None,
        },
    }
}

/// Integration controls. Tolerances apply to the nondimensional state
/// `(x/h, v/√(gh))`; `max_step` and `sample_interval` are in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    /// When set, samples are taken on this grid (plus at events); otherwise at
    /// every accepted step.
    pub sample_interval: Option<f64>,
    /// Project each accepted state back onto the initial energy level.
    pub project_energy: bool,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: None,
            sample_interval: None,
            project_energy: true,
        }
    }
}

impl Controls {
    fn validate(&self) -> Result<(), SimError> {
        for (name, value) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(SimError::BadTolerance { name, value });
            }
        }
        for (name, value) in [
            ("max_step", self.max_step),
            ("sample_interval", self.sample_interval),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(SimError::BadControl { name, value: v });
                }
            }
        }
        Ok(())
    }
}

/// When to stop integrating, besides the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    Horizon,
    /// Stop at the first event that decides the release outcome.
    FirstDecisive,
    /// Stop at the first turning point.
    FirstTurningPoint,
}

/// Integrate a release from rest up to `t_end` seconds.
pub fn simulate(
    scenario: &Scenario,
    t_end: f64,
    controls: &Controls,
) -> Result<Trajectory, SimError> {
    simulate_from(
        scenario,
        scenario.initial_state(),
        t_end,
        controls,
        StopRule::Horizon,
    )
}

/// Simulate until the outcome is decided and return it with event times.
pub fn simulate_outcome(scenario: &Scenario, controls: &Controls) -> Result<Outcome, SimError> {
    let analytic = classify(scenario);
    let r = scenario.ratio();
    // equilibrium start: nothing ever happens
    if scenario.release == Release::Launch && r == 1.0 {
        if let Outcome::StaysPartlySubmerged { x_min, .. } = analytic {
            return Ok(Outcome::StaysPartlySubmerged {
                x_min,
                t_min: Some(0.0),
            });
        }
    }
    // generous horizon: many nondimensional time units beyond any half-period
    let horizon = 1e3 * scenario.time_scale() * (1.0 + 1.0 / (r - 1.0).abs().max(1e-3));
    let traj = simulate_from(
        scenario,
        scenario.initial_state(),
        horizon,
        controls,
        StopRule::FirstDecisive,
    )?;
    Ok(traj.outcome().unwrap_or(analytic))
}

struct Located {
    t: f64,
    y: Vec2,
    kind: Option<EventKind>,
}

#[derive(Clone, Copy)]
enum Surface {
    Top,
    Waterline,
    Velocity,
}

impl Surface {
    fn value(&self, y: Vec2) -> f64 {
        match self {
            Surface::Top => y[0] - 1.0,
            Surface::Waterline => y[0],
            Surface::Velocity => y[1],
        }
    }

    fn rate(&self, y: Vec2, flow: &Flow) -> f64 {
        match self {
            Surface::Top | Surface::Waterline => y[1],
            Surface::Velocity => flow.accel(y[0]),
        }
    }

    fn snap(&self, y: &mut Vec2) {
        match self {
            Surface::Top => y[0] = 1.0,
            Surface::Waterline => y[0] = 0.0,
            Surface::Velocity => y[1] = 0.0,
        }
    }

    /// Event label for a crossing, or `None` for a grazing touch.
    fn classify(&self, y: Vec2) -> Option<EventKind> {
        match self {
            Surface::Velocity => Some(EventKind::TurningPoint),
            _ if y[1].abs() < GRAZE_SPEED => None,
            Surface::Top if y[1] > 0.0 => Some(EventKind::Submersion),
            Surface::Top => Some(EventKind::Emersion),
            Surface::Waterline if y[1] < 0.0 => Some(EventKind::Exit),
            Surface::Waterline => Some(EventKind::Reentry),
        }
    }
}

const SURFACES: [Surface; 3] = [Surface::Top, Surface::Waterline, Surface::Velocity];

/// Root of `surface` inside an accepted step: bisection on the continuous
/// extension, then Newton polish using genuine Runge–Kutta steps from the step
/// start so the restart state carries full step accuracy.
fn locate<F: Fn(f64, Vec2) -> Vec2>(
    rhs: &F,
    flow: &Flow,
    step: &Step,
    surface: Surface,
    time_tol: f64,
    controls: &Controls,
) -> Located {
    let mut tau = dense_root(step, surface, time_tol) - step.t0;
    let mut y = dopri_step(
        rhs,
        step.t0,
        step.y0,
        tau,
        controls.rel_tol,
        controls.abs_tol,
    )
    .y1;
    for _ in 0..3 {
        let rate = surface.rate(y, flow);
        if rate == 0.0 {
            break;
        }
        let dt = -surface.value(y) / rate;
        if dt.abs() > 2.0 * time_tol.max(1e-15) || !(tau + dt > 0.0 && tau + dt <= step.h) {
            break;
        }
        tau += dt;
        y = dopri_step(
            rhs,
            step.t0,
            step.y0,
            tau,
            controls.rel_tol,
            controls.abs_tol,
        )
        .y1;
    }
    let kind = surface.classify(y);
    if kind.is_some() {
        surface.snap(&mut y);
    }
    Located {
        t: step.t0 + tau,
        y,
        kind,
    }
}

fn crosses(start: f64, end: f64) -> bool {
    start != 0.0 && (end == 0.0 || (start > 0.0) != (end > 0.0))
}

/// Move `y` along the energy gradient onto the level `e0`.
fn project(flow: &Flow, y: Vec2, e0: f64) -> Vec2 {
    let mut y = y;
    for _ in 0..2 {
        let de = flow.energy(y) - e0;
        let grad = [-flow.accel(y[0]), y[1]];
        let norm2 = grad[0] * grad[0] + grad[1] * grad[1];
        if de == 0.0 || norm2 < 1e-12 {
            break;
        }
        y = [y[0] - de * grad[0] / norm2, y[1] - de * grad[1] / norm2];
    }
    y
}

/// Energy correction for a state snapped onto `surface`, moving only the
/// coordinate the snap left free.
fn project_on_surface(flow: &Flow, surface: Surface, y: Vec2, e0: f64) -> Vec2 {
    match surface {
        Surface::Top | Surface::Waterline => {
            let ke = e0 - flow.potential(y[0]);
            if ke > 0.0 {
                [y[0], (2.0 * ke).sqrt().copysign(y[1])]
            } else {
                y
            }
        }
        Surface::Velocity => {
            let slope = -flow.accel(y[0]);
            if slope.abs() < 1e-6 {
                return y;
            }
            let dx = (flow.potential(y[0]) - e0) / slope;
            // keep the turning point on its own side of a boundary
            let x = y[0] - dx;
            if (x - 1.0).signum() == (y[0] - 1.0).signum() && x.signum() == y[0].signum() {
                [x, 0.0]
            } else {
                y
            }
        }
    }
}

/// Time of the sign change of `surface` inside `step`, on the continuous
/// extension.
fn dense_root(step: &Step, surface: Surface, time_tol: f64) -> f64 {
    let g0 = surface.value(step.y0);
    let (mut lo, mut hi) = (step.t0, step.t0 + step.h);
    while hi - lo > time_tol {
        let mid = 0.5 * (lo + hi);
        let gm = surface.value(step.dense(mid));
        if (gm > 0.0) == (g0 > 0.0) && gm != 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Integrate from an arbitrary state (physical units) for `t_end` seconds
/// past `initial.t`.
pub fn simulate_from(
    scenario: &Scenario,
    initial: State,
    t_end: f64,
    controls: &Controls,
    stop: StopRule,
) -> Result<Trajectory, SimError> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(SimError::BadHorizon(t_end));
    }
    controls.validate()?;

    let flow = scenario.flow();
    let rhs = flow.rhs();
    let h = scenario.height();
    let ts = scenario.time_scale();
    let vs = scenario.speed_scale();
    let gh = scenario.g * h;

    let to_state = |t: f64, y: Vec2| State {
        t: initial.t + t * ts,
        x: y[0] * h,
        v: y[1] * vs,
    };
    let sample = |t: f64, y: Vec2| {
        let state = to_state(t, y);
        Sample {
            state,
            regime: Regime::of(state.x, h),
            energy: gh * flow.energy(y),
        }
    };

    let horizon = t_end / ts;
    let max_step = controls
        .max_step
        .map_or(horizon / 8.0, |m| m / ts)
        .min(horizon);
    let interval = controls.sample_interval.map(|s| s / ts);
    let time_tol = (1e-12 * horizon).max(4.0 * f64::EPSILON);

    let mut t = 0.0_f64;
    let mut y: Vec2 = [initial.x / h, initial.v / vs];
    let e0 = flow.energy(y);
    let mut dt = (1e-3_f64).min(max_step);
    let mut next_sample = interval.map(|i| (1, i));

    let mut samples = vec![sample(t, y)];
    let mut events = Vec::new();

    while t < horizon {
        let mut target = (t + dt.min(max_step)).min(horizon);
        if let Some((_, ts_next)) = next_sample {
            target = target.min(ts_next);
        }
        let trial = target - t;
        let step = dopri_step(&rhs, t, y, trial, controls.rel_tol, controls.abs_tol);
        if !(step.y1[0].is_finite() && step.y1[1].is_finite()) || !step.error.is_finite() {
            if trial <= 1e-14 * t.max(1.0) {
                return Err(SimError::Blowup {
                    last: to_state(t, y),
                });
            }
            dt = 0.25 * trial;
            continue;
        }
        if step.error > 1.0 {
            dt = trial * step_factor(step.error);
            if dt <= 1e-14 * t.max(1.0) {
                return Err(SimError::StepUnderflow {
                    last: to_state(t, y),
                });
            }
            continue;
        }

        // a turning point beyond a boundary the endpoints do not straddle
        // hides two crossings: end the step at the turning point instead
        if crosses(step.y0[1], step.y1[1]) {
            let tp = dense_root(&step, Surface::Velocity, time_tol);
            let xp = step.dense(tp)[0];
            let hidden = [(step.y0[0] - 1.0, xp - 1.0), (step.y0[0], xp)]
                .iter()
                .any(|&(a, b)| crosses(a, b) && b.abs() > GRAZE_DEPTH);
            let ends_beyond = [step.y1[0] - 1.0, step.y1[0]]
                .iter()
                .zip([step.y0[0] - 1.0, step.y0[0]])
                .any(|(&b, a)| crosses(a, b));
            if hidden && !ends_beyond && tp - t > time_tol {
                dt = tp - t;
                continue;
            }
        }

        // earliest genuine event in this step
        let mut found: Option<(Located, Surface)> = None;
        for surface in SURFACES {
            if !crosses(surface.value(step.y0), surface.value(step.y1)) {
                continue;
            }
            let loc = locate(&rhs, &flow, &step, surface, time_tol, controls);
            if loc.kind.is_none() {
                continue;
            }
            if found.as_ref().is_none_or(|(f, _)| loc.t < f.t) {
                found = Some((loc, surface));
            }
        }

        let grow = step_factor(step.error);
        if let Some((loc, surface)) = found {
            // restart exactly on the event
            t = t.max(loc.t);
            y = if controls.project_energy {
                project_on_surface(&flow, surface, loc.y, e0)
            } else {
                loc.y
            };
            let kind = loc.kind.unwrap();
            let s = sample(t, y);
            events.push(Event {
                kind,
                state: s.state,
            });
            if samples.last().is_none_or(|p| p.state.t < s.state.t) {
                samples.push(s);
            }
            let decisive = match stop {
                StopRule::Horizon => false,
                StopRule::FirstTurningPoint => kind == EventKind::TurningPoint,
                StopRule::FirstDecisive => {
                    let tmp = Trajectory {
                        scenario: *scenario,
                        samples: Vec::new(),
                        events: events.clone(),
                    };
                    tmp.outcome().is_some()
                }
            };
            if decisive {
                break;
            }
            dt = trial.max(1e-3 * max_step);
            continue;
        }

        t = target;
        y = if controls.project_energy {
            project(&flow, step.y1, e0)
        } else {
            step.y1
        };
        let on_grid = match next_sample {
            Some((k, ts_next)) if target >= ts_next => {
                let i = interval.unwrap();
                next_sample = Some((k + 1, (k + 1) as f64 * i));
                true
            }
            Some(_) => false,
            None => true,
        };
        if on_grid || t >= horizon {
            let s = sample(t, y);
            if samples.last().is_none_or(|p| p.state.t < s.state.t) {
                samples.push(s);
            }
        }
        dt = trial * grow;
    }

    Ok(Trajectory {
        scenario: *scenario,
        samples,
        events,
    })
}

/// Locate the density ratio at which the simulated outcome flips, by
/// bisection on `[lo, hi]` until the bracket is narrower than `tol`.
pub fn bisect_critical_ratio(
    solid: &Solid,
    release: Release,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    controls: &Controls,
) -> Result<f64, SimError> {
    let reaches = |r: f64| -> Result<bool, SimError> {
        let s = Scenario::new(*solid, 1.0, r, 1.0, release).expect("positive densities");
        Ok(simulate_outcome(&s, controls)?.reaches_boundary())
    };
    // drops reach h below the critical ratio, launches reach 0 above it
    let lo_reaches = reaches(lo)?;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if reaches(mid)? == lo_reaches {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
