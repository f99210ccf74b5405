//! Command-line front end.
//!
//! Exit codes: 0 ok, 2 input error, 3 integration failure, 4 verification
//! failure, 5 unsupported analytic request, 6 pole.

pub mod csv;
pub mod scenario_file;
pub mod sweep;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use thiserror::Error;

use crate::analytic::{compare_with_simulation, AnalyticError, ClosedForm};
use crate::dynamics::{
    classify, critical_ratio, first_integral, simulate, Controls, Outcome, Regime, Release,
    SimError,
};
use crate::elliptic::{EllipticError, EllipticInvariants, WeierstrassP};
use crate::solids::{Shape, Solid};

use self::csv::TrajectoryCsv;
use self::scenario_file::ScenarioFile;

/// Closed-form vs numerical depth discrepancy accepted by `verify`, in units
/// of `h`.
pub const VERIFY_DEPTH_TOL: f64 = 1e-8;
/// First-integral residual accepted by `verify`, in units of `g·h`.
pub const VERIFY_ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("integration failed: {0}")]
    Integration(#[from] SimError),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{0}")]
    Pole(EllipticError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Integration(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Unsupported(_) => 5,
            CliError::Pole(_) => 6,
        }
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        match e {
            AnalyticError::Simulation(s) => CliError::Integration(s),
            AnalyticError::Elliptic(p @ EllipticError::Pole { .. }) => CliError::Pole(p),
            AnalyticError::Elliptic(EllipticError::DegenerateLattice(d)) => CliError::Unsupported(format!(
                "degenerate lattice (discriminant {d:e}); the closed form reduces to elementary functions"
            )),
            AnalyticError::WrongShape { .. } | AnalyticError::Unsupported(_) => {
                CliError::Unsupported(e.to_string())
            }
            AnalyticError::OutsideValidity { .. } => CliError::Input(e.to_string()),
            other => CliError::Verification(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "flotation",
    version,
    about = "Vertical flotation of solids released at a liquid surface"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a scenario and write its trajectory as CSV.
    Simulate(SimulateArgs),
    /// Report the analytic outcome and the critical density ratio.
    Classify(ScenarioArg),
    /// Sweep the density ratio and locate the outcome boundary.
    Sweep(SweepArgs),
    /// Compare the closed-form solution with the integrator.
    Verify(VerifyArgs),
    /// Evaluate the closed-form solution at given times.
    Eval(EvalArgs),
    /// Evaluate the Weierstrass ℘ function at a point.
    #[command(allow_negative_numbers = true)]
    Wp(WpArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArg {
    #[arg(long)]
    pub scenario: PathBuf,
}

#[derive(Debug, Args, Default)]
pub struct Tolerances {
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
}

impl Tolerances {
    fn apply(&self, mut c: Controls) -> Controls {
        if let Some(r) = self.rel_tol {
            c.rel_tol = r;
        }
        if let Some(a) = self.abs_tol {
            c.abs_tol = a;
        }
        c
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub sample_interval: Option<f64>,
    #[command(flatten)]
    pub tol: Tolerances,
    /// Emit T = t√(g/h), X = x/h, V = v/√(gh) and E/(gh).
    #[arg(long)]
    pub nondimensional: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ShapeKind {
    Cylinder,
    Paraboloid,
    Cone,
    PowerLaw,
    PrismEdgeDown,
    PrismAxisVertical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReleaseArg {
    Drop,
    Launch,
}

impl From<ReleaseArg> for Release {
    fn from(r: ReleaseArg) -> Self {
        match r {
            ReleaseArg::Drop => Release::Drop,
            ReleaseArg::Launch => Release::Launch,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub shape: ShapeKind,
    /// Profile exponent for `power-law` (r ≤ k z^d).
    #[arg(long, default_value_t = 1.0)]
    pub d: f64,
    #[arg(long, default_value_t = 1.0)]
    pub h: f64,
    #[arg(long, value_enum, default_value = "drop")]
    pub release: ReleaseArg,
    #[arg(long)]
    pub ratio_min: f64,
    #[arg(long)]
    pub ratio_max: f64,
    #[arg(long, default_value_t = 21)]
    pub steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tol: Tolerances,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[command(flatten)]
    pub tol: Tolerances,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Times in seconds; repeat or separate with commas.
    #[arg(long = "t", value_delimiter = ',', required = true)]
    pub times: Vec<f64>,
    #[arg(long)]
    pub nondimensional: bool,
}

#[derive(Debug, Args)]
pub struct WpArgs {
    #[arg(long)]
    pub re: f64,
    #[arg(long, default_value_t = 0.0)]
    pub im: f64,
    #[arg(long)]
    pub g2: f64,
    #[arg(long)]
    pub g3: f64,
}

pub fn execute(cmd: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Classify(a) => cmd_classify(&a.scenario, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Wp(a) => cmd_wp(a, out),
    }
}

fn describe(outcome: &Outcome, h: f64) -> String {
    let t = |t: &Option<f64>| t.map_or(String::new(), |t| format!(" at t = {t:.12}"));
    match outcome {
        Outcome::FullySubmerges { t_cross } => format!("FullySubmerges{}", t(t_cross)),
        Outcome::DoesNotSubmerge { x_max, t_max } => format!(
            "DoesNotSubmerge x_max = {x_max:.12} ({:.12} h){}",
            x_max / h,
            t(t_max)
        ),
        Outcome::Launches { t_exit } => format!("Launches{}", t(t_exit)),
        Outcome::StaysPartlySubmerged { x_min, t_min } => format!(
            "StaysPartlySubmerged x_min = {x_min:.12} ({:.12} h){}",
            x_min / h,
            t(t_min)
        ),
        Outcome::Grazes { x_turn, t_graze } => {
            format!(
                "Grazes x = {x_turn:.12} ({:.12} h){}",
                x_turn / h,
                t(t_graze)
            )
        }
        Outcome::Sinks { t_cross } => format!("Sinks{}", t(t_cross)),
    }
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = ScenarioFile::load(&a.scenario)?;
    let scenario = file.scenario()?;
    let mut controls = a.tol.apply(file.controls());
    if a.sample_interval.is_some() {
        controls.sample_interval = a.sample_interval;
    }
    let t_end = a.t_end.unwrap_or(file.t_end());
    let traj = simulate(&scenario, t_end, &controls).map_err(|e| match e {
        SimError::BadHorizon(_) | SimError::BadTolerance { .. } | SimError::BadControl { .. } => {
            CliError::Input(e.to_string())
        }
        other => CliError::Integration(other),
    })?;
    let csv = TrajectoryCsv::from_trajectory(&traj, a.nondimensional).render();
    // keep the CSV clean when it goes to standard output
    let mut summary: Vec<u8> = Vec::new();
    let h = scenario.height();
    writeln!(
        summary,
        "shape: {} (n = {})",
        scenario.solid.shape().name(),
        scenario.exponent()
    )?;
    writeln!(summary, "release: {}", scenario.release)?;
    writeln!(summary, "ratio rho0/rho: {}", scenario.ratio())?;
    match traj.outcome() {
        Some(o) => writeln!(summary, "outcome: {}", describe(&o, h))?,
        None => writeln!(
            summary,
            "outcome: undecided by t = {t_end} (analytic: {})",
            describe(&classify(&scenario), h)
        )?,
    }
    writeln!(summary, "samples: {}", traj.samples.len())?;
    writeln!(
        summary,
        "max energy drift: {:e} J/kg",
        traj.max_energy_drift()
    )?;
    match &a.out {
        Some(p) => {
            write_output(Some(p), &csv, out)?;
            out.write_all(&summary)?;
        }
        None => {
            out.write_all(csv.as_bytes())?;
            std::io::stderr().write_all(&summary)?;
        }
    }
    Ok(())
}

pub fn cmd_classify(path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let file = ScenarioFile::load(path)?;
    let scenario = file.scenario()?;
    let outcome = classify(&scenario);
    writeln!(
        out,
        "shape: {} (n = {})",
        scenario.solid.shape().name(),
        scenario.exponent()
    )?;
    writeln!(out, "release: {}", scenario.release)?;
    writeln!(out, "ratio rho0/rho: {}", scenario.ratio())?;
    writeln!(out, "critical ratio: {}", critical_ratio(&scenario.solid))?;
    writeln!(out, "outcome: {}", describe(&outcome, scenario.height()))?;
    Ok(())
}

fn sweep_solid(a: &SweepArgs) -> Result<Solid, CliError> {
    let shape = match a.shape {
        ShapeKind::Cylinder => Shape::Cylinder { area: 1.0 },
        ShapeKind::Paraboloid => Shape::Paraboloid { p: 1.0 },
        ShapeKind::Cone => Shape::Cone { area: 1.0 },
        ShapeKind::PowerLaw => Shape::PowerLaw { k: 1.0, d: a.d },
        ShapeKind::PrismEdgeDown => Shape::PrismEdgeDown { length: 1.0 },
        ShapeKind::PrismAxisVertical => Shape::PrismAxisVertical { side: 1.0 },
    };
    Solid::new(shape, a.h).map_err(|e| CliError::Input(e.to_string()))
}

pub fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let in_range = |r: f64| r > 1.0 && r <= 20.0;
    if !(in_range(a.ratio_min) && in_range(a.ratio_max) && a.ratio_min < a.ratio_max) {
        return Err(CliError::Input(format!(
            "ratio range [{}, {}] must be increasing and within (1, 20]",
            a.ratio_min, a.ratio_max
        )));
    }
    if a.steps < 2 {
        return Err(CliError::Input(format!(
            "steps must be >= 2, got {}",
            a.steps
        )));
    }
    let solid = sweep_solid(a)?;
    let controls = a.tol.apply(Controls::default());
    let sw = sweep::run(
        &solid,
        a.release.into(),
        a.ratio_min,
        a.ratio_max,
        a.steps,
        &controls,
    )
    .map_err(|e| match e {
        SimError::BadTolerance { .. } => CliError::Input(e.to_string()),
        other => CliError::Integration(other),
    })?;
    let text = sw.render();
    write_output(a.out.as_deref(), &text, out)?;
    if a.out.is_some() {
        match sw.boundary {
            Some(b) => writeln!(
                out,
                "boundary: {b:.9} (critical n+1 = {})",
                critical_ratio(&solid)
            )?,
            None => writeln!(out, "boundary: none in range")?,
        }
    }
    Ok(())
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = ScenarioFile::load(&a.scenario)?;
    let scenario = file.scenario()?;
    let controls = a.tol.apply(file.controls());
    let cmp = compare_with_simulation(
        &scenario,
        &Controls {
            sample_interval: None,
            ..controls
        },
    )?;
    let h = scenario.height();
    let gh = scenario.g * h;
    writeln!(
        out,
        "shape: {} (n = {})",
        scenario.solid.shape().name(),
        scenario.exponent()
    )?;
    writeln!(out, "release: {}", scenario.release)?;
    writeln!(out, "span: [0, {:.12}] s", cmp.t_span)?;
    writeln!(
        out,
        "max |x_closed - x_numeric| / h: {:e}",
        cmp.max_depth_error / h
    )?;
    writeln!(
        out,
        "max first-integral residual / (g h): {:e}",
        cmp.max_energy_residual / gh
    )?;
    if let Some(dt) = cmp.event_time_error {
        writeln!(
            out,
            "event time error / sqrt(h/g): {:e}",
            dt / scenario.time_scale()
        )?;
    }
    let ok = cmp.max_depth_error <= VERIFY_DEPTH_TOL * h
        && cmp.max_energy_residual <= VERIFY_ENERGY_TOL * gh;
    if ok {
        writeln!(out, "verdict: ok")?;
        Ok(())
    } else {
        writeln!(out, "verdict: FAILED")?;
        Err(CliError::Verification(format!(
            "discrepancy {:e} h or residual {:e} g h above tolerance",
            cmp.max_depth_error / h,
            cmp.max_energy_residual / gh
        )))
    }
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = ScenarioFile::load(&a.scenario)?;
    let scenario = file.scenario()?;
    let cf = ClosedForm::new(&scenario)?;
    let (h, ts, vs) = (
        scenario.height(),
        scenario.time_scale(),
        scenario.speed_scale(),
    );
    let gh = scenario.g * h;
    let mut text = String::from(if a.nondimensional {
        "T,X,V,regime,E\n"
    } else {
        "t,x,v,regime,E\n"
    });
    for &t in &a.times {
        let st = cf.state(t)?;
        let e = first_integral(&scenario, &st);
        let regime = Regime::of(st.x, h).label();
        let (t, x, v, e) = if a.nondimensional {
            (st.t / ts, st.x / h, st.v / vs, e / gh)
        } else {
            (st.t, st.x, st.v, e)
        };
        let num = csv::fmt_num;
        text.push_str(&format!(
            "{},{},{},{regime},{}\n",
            num(t),
            num(x),
            num(v),
            num(e)
        ));
    }
    if let Some(end) = cf.validity_end() {
        text.push_str(&format!("# valid_until,{}\n", csv::fmt_num(end)));
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

pub fn cmd_wp(a: &WpArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if ![a.re, a.im, a.g2, a.g3].iter().all(|v| v.is_finite()) {
        return Err(CliError::Input("inputs must be finite".into()));
    }
    let wp = WeierstrassP::new(EllipticInvariants::new(a.g2, a.g3))
        .map_err(|e| CliError::Input(e.to_string()))?;
    let z = Complex64::new(a.re, a.im);
    let (p, dp) = wp.wp_and_prime(z).map_err(|e| match e {
        EllipticError::Pole { .. } => CliError::Pole(e),
        other => CliError::Input(other.to_string()),
    })?;
    let residual = dp * dp - wp.invariants().cubic(p);
    let lat = wp.lattice();
    let c = |z: Complex64| {
        let sign = if z.im.is_sign_negative() { '-' } else { '+' };
        format!(
            "{} {sign} {}i",
            csv::fmt_num(z.re),
            csv::fmt_num(z.im.abs())
        )
    };
    writeln!(out, "z: {}", c(z))?;
    writeln!(out, "wp: {}", c(p))?;
    writeln!(out, "wp': {}", c(dp))?;
    writeln!(out, "residual: {:e}", residual.norm())?;
    writeln!(out, "omega1: {}", c(lat.omega1))?;
    writeln!(out, "omega3: {}", c(lat.omega3))?;
    Ok(())
}
