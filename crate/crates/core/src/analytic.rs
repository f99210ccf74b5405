//! Closed-form trajectories on the first partly submerged interval.
//!
//! * cylinder (`n = 1`): circular functions;
//! * paraboloid (`n = 2`): `x(t) = −λ·℘(ωt + a; 1, g₃)`;
//! * cone (`n = 3`, drop only): `x(t) = λ / (4℘(ωt; 0, 1/16))`.

use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::{first_integral, simulate, Controls, Release, Scenario, SimError, State};
use crate::elliptic::{EllipticError, EllipticInvariants, WeierstrassP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("closed form needs submerged-fraction exponent {expected}, solid has {found}")]
    WrongShape { expected: f64, found: f64 },
    #[error("no closed form for {0}")]
    Unsupported(String),
    #[error("t = {t} lies outside the validity interval [0, {end}]")]
    OutsideValidity { t: f64, end: f64 },
    #[error("closed form is not real at t = {t} (imaginary part {imag:e})")]
    NotReal { t: f64, imag: f64 },
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error(transparent)]
    Simulation(#[from] SimError),
}

/// Dimensional parameters linking the physical depth to a canonical ℘
/// solution: `x(t) = sign·λ·u(ωt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescaling {
    pub lambda: f64,
    pub omega: f64,
    pub invariants: EllipticInvariants,
    /// Argument offset of ℘ at `t = 0`.
    pub shift: Complex64,
    pub sign: f64,
}

fn require_exponent(scenario: &Scenario, n: f64) -> Result<(), AnalyticError> {
    let found = scenario.exponent();
    if found == n {
        Ok(())
    } else {
        Err(AnalyticError::WrongShape { expected: n, found })
    }
}

/// Exact state of a cylinder (or vertical-axis prism) from the cosine solution.
pub fn cylinder_solution(scenario: &Scenario, t: f64) -> Result<State, AnalyticError> {
    ClosedForm::new(scenario)?.state(t)
}

/// `λ² = 12(ρ/ρ₀)h²`, `ω⁴ = (ρ₀/ρ)g²/(3h²)`; `g₃ = 0` for drops and
/// `g₃ = ½√(ρ₀/3ρ)(1 − ρ₀/3ρ)` for launches.
pub fn paraboloid_rescaling(scenario: &Scenario) -> Result<Rescaling, AnalyticError> {
    require_exponent(scenario, 2.0)?;
    let (r, h, g) = (scenario.ratio(), scenario.height(), scenario.g);
    let lambda = (12.0 / r).sqrt() * h;
    let omega = (r / 3.0 * g * g / (h * h)).powf(0.25);
    let (invariants, shift) = match scenario.release {
        Release::Drop => {
            let inv = EllipticInvariants::LEMNISCATIC;
            // the zero of the lemniscatic ℘ at ω₁ + ω₃, where e₂ = 0
            let shift = WeierstrassP::new(inv)?.lattice().omega2();
            (inv, shift)
        }
        Release::Launch => {
            let q = (r / 3.0).sqrt();
            let inv = EllipticInvariants::new(1.0, 0.5 * q * (1.0 - r / 3.0));
            // u(0) = −h/λ is a root of the cubic; start at the half-period
            // where ℘ takes that value so that u′(0) = 0
            let u0 = -h / lambda;
            let wp = WeierstrassP::new(inv)?;
            let lat = *wp.lattice();
            let shift = [lat.omega1, lat.omega2(), lat.omega3]
                .into_iter()
                .zip(lat.e_roots)
                .min_by(|a, b| (a.1 - u0).norm().partial_cmp(&(b.1 - u0).norm()).unwrap())
                .map(|(w, _)| w)
                .unwrap();
            (inv, shift)
        }
    };
    Ok(Rescaling {
        lambda,
        omega,
        invariants,
        shift,
        sign: -1.0,
    })
}

/// `λ = (4ρ/ρ₀)^(1/3) h`, `ω² = 2g/λ`, invariants `(0, 1/16)` for
/// `w = 1/(4u)`.
pub fn cone_rescaling(scenario: &Scenario) -> Result<Rescaling, AnalyticError> {
    require_exponent(scenario, 3.0)?;
    if scenario.release == Release::Launch {
        return Err(AnalyticError::Unsupported(
            "the cone launch (use the numerical path)".into(),
        ));
    }
    let lambda = (4.0 / scenario.ratio()).cbrt() * scenario.height();
    let omega = (2.0 * scenario.g / lambda).sqrt();
    Ok(Rescaling {
        lambda,
        omega,
        invariants: EllipticInvariants::new(0.0, 1.0 / 16.0),
        shift: Complex64::new(0.0, 0.0),
        sign: 1.0,
    })
}

pub fn paraboloid_solution(scenario: &Scenario, t: f64) -> Result<State, AnalyticError> {
    require_exponent(scenario, 2.0)?;
    ClosedForm::new(scenario)?.state(t)
}

pub fn cone_solution(scenario: &Scenario, t: f64) -> Result<State, AnalyticError> {
    require_exponent(scenario, 3.0)?;
    ClosedForm::new(scenario)?.state(t)
}

#[derive(Debug, Clone)]
enum Kind {
    Cylinder {
        omega: f64,
    },
    /// `e = ℘(a)` and `c = (e − e_k)(e − e_l)` for the half-period shift `a`.
    Paraboloid {
        rescaling: Rescaling,
        wp: WeierstrassP,
        e: f64,
        c: f64,
    },
    Cone {
        rescaling: Rescaling,
        wp: WeierstrassP,
    },
}

/// A prepared closed-form solution for one scenario.
#[derive(Debug, Clone)]
pub struct ClosedForm {
    scenario: Scenario,
    kind: Kind,
    /// End of the first partly submerged interval; `None` when the body never
    /// leaves it.
    end: Option<f64>,
}

/// Cone evaluation switches to the series of `1/(4℘)` below this `|ωt|`.
const CONE_SERIES_RADIUS: f64 = 1e-3;

impl ClosedForm {
    pub fn new(scenario: &Scenario) -> Result<Self, AnalyticError> {
        let n = scenario.exponent();
        let kind = if n == 1.0 {
            Kind::Cylinder {
                omega: (scenario.ratio() * scenario.g / scenario.height()).sqrt(),
            }
        } else if n == 2.0 {
            let rescaling = paraboloid_rescaling(scenario)?;
            let wp = WeierstrassP::new(rescaling.invariants)?;
            let lat = *wp.lattice();
            let tol = 1e-12 * lat.omega1.norm();
            let e = [lat.omega1, lat.omega2(), lat.omega3]
                .into_iter()
                .zip(lat.e_roots)
                .find(|(w, _)| (w - rescaling.shift).norm() <= tol)
                .map(|(_, e)| e)
                .filter(|e| e.im.abs() <= 1e-12 * (1.0 + e.re.abs()))
                .ok_or_else(|| {
                    AnalyticError::Unsupported(
                        "a paraboloid shift off the real half-periods".into(),
                    )
                })?
                .re;
            let c = 0.25 * (12.0 * e * e - rescaling.invariants.g2);
            Kind::Paraboloid {
                rescaling,
                wp,
                e,
                c,
            }
        } else if n == 3.0 {
            let rescaling = cone_rescaling(scenario)?;
            let wp = WeierstrassP::new(rescaling.invariants)?;
            Kind::Cone { rescaling, wp }
        } else {
            return Err(AnalyticError::Unsupported(format!(
                "submerged-fraction exponent {n} (hyperelliptic or non-integer)"
            )));
        };
        let mut cf = ClosedForm {
            scenario: *scenario,
            kind,
            end: None,
        };
        cf.end = cf.first_crossing()?;
        Ok(cf)
    }

    pub fn rescaling(&self) -> Option<&Rescaling> {
        match &self.kind {
            Kind::Cylinder { .. } => None,
            Kind::Paraboloid { rescaling, .. } | Kind::Cone { rescaling, .. } => Some(rescaling),
        }
    }

    /// End of the validity interval (first crossing of `x = h` for drops or
    /// `x = 0` for launches).
    pub fn validity_end(&self) -> Option<f64> {
        self.end
    }

    pub fn state(&self, t: f64) -> Result<State, AnalyticError> {
        let end = self.end.unwrap_or(f64::INFINITY);
        if !(t >= 0.0 && t <= end * (1.0 + 1e-12)) {
            return Err(AnalyticError::OutsideValidity { t, end });
        }
        self.eval(t)
    }

    fn eval(&self, t: f64) -> Result<State, AnalyticError> {
        let s = &self.scenario;
        let h = s.height();
        let q = 1.0 / s.ratio();
        match &self.kind {
            Kind::Cylinder { omega } => {
                let (sin, cos) = (omega * t).sin_cos();
                let (x, v) = match s.release {
                    Release::Drop => (q * h * (1.0 - cos), q * h * omega * sin),
                    Release::Launch => (q * h + (1.0 - q) * h * cos, -(1.0 - q) * h * omega * sin),
                };
                Ok(State { t, x, v })
            }
            Kind::Paraboloid {
                rescaling,
                wp,
                e,
                c,
            } => {
                let (u, du) = self.paraboloid_u(wp, *e, *c, rescaling.omega * t)?;
                Ok(State {
                    t,
                    x: rescaling.sign * rescaling.lambda * u,
                    v: rescaling.sign * rescaling.lambda * rescaling.omega * du,
                })
            }
            Kind::Cone { rescaling, wp } => {
                let (u, du) = self.cone_u(rescaling, wp, rescaling.omega * t)?;
                Ok(State {
                    t,
                    x: rescaling.lambda * u,
                    v: rescaling.lambda * rescaling.omega * du,
                })
            }
        }
    }

    /// `u = ℘(s + a)` and `du/ds` through `℘(s + a) = e + c/(℘(s) − e)`, which
    /// avoids cancellation where `u` is small.
    fn paraboloid_u(
        &self,
        wp: &WeierstrassP,
        e: f64,
        c: f64,
        s: f64,
    ) -> Result<(f64, f64), AnalyticError> {
        let period = 2.0 * wp.lattice().omega1.re;
        let red = s - (s / period).round() * period;
        match wp.wp_and_prime(Complex64::new(red, 0.0)) {
            Err(EllipticError::Pole { .. }) => Ok((e, 0.0)),
            Err(other) => Err(other.into()),
            Ok((p, dp)) => {
                self.check_real(s, p)?;
                self.check_real(s, dp)?;
                let d = p.re - e;
                Ok((e + c / d, -c * dp.re / (d * d)))
            }
        }
    }

    /// `u = 1/(4℘(s))` and `du/ds`, with `u` vanishing at the poles of ℘.
    fn cone_u(
        &self,
        _r: &Rescaling,
        wp: &WeierstrassP,
        s: f64,
    ) -> Result<(f64, f64), AnalyticError> {
        let period = 2.0 * wp.lattice().omega1.re;
        let red = s - (s / period).round() * period;
        if red.abs() < CONE_SERIES_RADIUS {
            // ℘(s) = s⁻² + s⁴/448 + O(s¹⁰)
            return Ok((
                0.25 * red * red - red.powi(8) / 1792.0,
                0.5 * red - red.powi(7) / 224.0,
            ));
        }
        let (p, dp) = wp.wp_and_prime(Complex64::new(s, 0.0))?;
        self.check_real(s, p)?;
        let u = 0.25 / p.re;
        Ok((u, -0.25 * dp.re / (p.re * p.re)))
    }

    fn check_real(&self, t: f64, p: Complex64) -> Result<(), AnalyticError> {
        if p.im.abs() > 1e-10 * (1.0 + p.re.abs()) {
            Err(AnalyticError::NotReal { t, imag: p.im })
        } else {
            Ok(())
        }
    }

    fn first_crossing(&self) -> Result<Option<f64>, AnalyticError> {
        let s = &self.scenario;
        let r = s.ratio();
        let h = s.height();
        let crit = s.exponent() + 1.0;
        match (&self.kind, s.release) {
            (_, Release::Launch) if r < 1.0 => Ok(Some(0.0)),
            (_, Release::Drop) if r >= crit => Ok(None),
            (_, Release::Launch) if r <= crit => Ok(None),
            (Kind::Cylinder { omega }, Release::Drop) => Ok(Some((1.0 - r).acos() / omega)),
            (Kind::Cylinder { omega }, Release::Launch) => {
                Ok(Some((-1.0 / (r - 1.0)).acos() / omega))
            }
            (
                Kind::Paraboloid {
                    rescaling,
                    wp,
                    e,
                    c,
                },
                release,
            ) => {
                // u runs monotonically over the first half-period of the line
                let target = match release {
                    Release::Drop => -h / rescaling.lambda,
                    Release::Launch => 0.0,
                };
                let half = wp.lattice().omega1.re;
                let f = |sv: f64| -> Result<f64, AnalyticError> {
                    Ok(self.paraboloid_u(wp, *e, *c, sv)?.0 - target)
                };
                let root = bisect_monotone(f, 0.0, half * (1.0 - 1e-12))?;
                Ok(Some(root / rescaling.omega))
            }
            (Kind::Cone { rescaling, wp }, Release::Drop) => {
                let u_target = h / rescaling.lambda;
                let half = wp.lattice().omega1.re;
                let f = |sv: f64| -> Result<f64, AnalyticError> {
                    Ok(self.cone_u(rescaling, wp, sv)?.0 - u_target)
                };
                let root = bisect_monotone(f, 0.0, half)?;
                Ok(Some(root / rescaling.omega))
            }
            (Kind::Cone { .. }, Release::Launch) => unreachable!("rejected by cone_rescaling"),
        }
    }
}

fn bisect_monotone<F>(f: F, mut lo: f64, mut hi: f64) -> Result<f64, AnalyticError>
where
    F: Fn(f64) -> Result<f64, AnalyticError>,
{
    let f_lo = f(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if (fm > 0.0) == (f_lo > 0.0) && fm != 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed form against the integrator over the first partly submerged
/// interval (one oscillation period when that interval is unbounded).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// Compared span `[0, t_span]`.
    pub t_span: f64,
    /// `sup |x_closed − x_numeric|` over the span.
    pub max_depth_error: f64,
    /// `sup |E(closed state) − E(0)|` over the span.
    pub max_energy_residual: f64,
    /// `|t_end_closed − t_event_numeric|` for the first crossing, if any.
    pub event_time_error: Option<f64>,
}

pub fn compare_with_simulation(
    scenario: &Scenario,
    controls: &Controls,
) -> Result<Comparison, AnalyticError> {
    let cf = ClosedForm::new(scenario)?;
    let ts = scenario.time_scale();
    let e0 = first_integral(scenario, &scenario.initial_state());

    // span: first crossing, or two turning points (one period) otherwise
    let (span, event_error) = match cf.validity_end() {
        Some(end) => {
            let traj = simulate(scenario, end + 0.5 * ts, controls)?;
            let numeric = traj
                .events
                .iter()
                .find(|e| e.kind != crate::dynamics::EventKind::TurningPoint)
                .map(|e| e.state.t);
            (end, numeric.map(|tn| (tn - end).abs()))
        }
        None => {
            let probe = simulate(scenario, 200.0 * ts, controls)?;
            let turns: Vec<f64> = probe
                .events
                .iter()
                .filter(|e| e.kind == crate::dynamics::EventKind::TurningPoint)
                .map(|e| e.state.t)
                .take(2)
                .collect();
            let span = turns.get(1).copied().unwrap_or(200.0 * ts);
            (span, None)
        }
    };
    let traj = simulate(scenario, span, controls)?;
    let mut max_dx: f64 = 0.0;
    let mut max_de: f64 = 0.0;
    for smp in traj.samples.iter().filter(|s| s.state.t <= span) {
        let st = cf.state(smp.state.t)?;
        max_dx = max_dx.max((st.x - smp.state.x).abs());
        max_de = max_de.max((first_integral(scenario, &st) - e0).abs());
    }
    Ok(Comparison {
        t_span: span,
        max_depth_error: max_dx,
        max_energy_residual: max_de,
        event_time_error: event_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solids::Solid;
    use std::f64::consts::PI;

    const G: f64 = 9.81;

    fn scen(solid: Solid, r: f64, release: Release) -> Scenario {
        Scenario::new(solid, 1.0, r, G, release).unwrap()
    }

    fn par(h: f64) -> Solid {
        Solid::paraboloid(1.0, h).unwrap()
    }

    #[test]
    fn cylinder_examples() {
        let cyl = Solid::cylinder(1.0, 2.0).unwrap();
        let s = scen(cyl, 4.0, Release::Drop);
        assert_eq!(
            cylinder_solution(&s, 0.0).unwrap(),
            State {
                t: 0.0,
                x: 0.0,
                v: 0.0
            }
        );
        let omega = (4.0 * G / 2.0).sqrt();
        let st = cylinder_solution(&s, PI / omega).unwrap();
        assert!((st.x - 1.0).abs() < 1e-14 && st.v.abs() < 1e-13);
        let l = scen(cyl, 2.0, Release::Launch);
        let st = cylinder_solution(&l, PI / omega.min((2.0 * G / 2.0).sqrt())).unwrap();
        assert!(st.x.abs() < 1e-14, "{st:?}");
    }

    #[test]
    fn cylinder_validity() {
        let s = scen(Solid::cylinder(1.0, 1.0).unwrap(), 1.5, Release::Drop);
        let cf = ClosedForm::new(&s).unwrap();
        let end = cf.validity_end().unwrap();
        assert!((cf.state(end).unwrap().x - 1.0).abs() < 1e-14);
        assert!(matches!(
            cf.state(1.01 * end),
            Err(AnalyticError::OutsideValidity { .. })
        ));
        assert!(cf.state(-1.0).is_err());
    }

    #[test]
    fn paraboloid_rescaling_examples() {
        let h = 0.7;
        let r = paraboloid_rescaling(&scen(par(h), 1.0, Release::Drop)).unwrap();
        assert!((r.lambda - h * 12f64.sqrt()).abs() < 1e-14);
        assert!((r.omega.powi(4) - G * G / (3.0 * h * h)).abs() < 1e-10);
        assert_eq!(r.invariants, EllipticInvariants::LEMNISCATIC);
        assert_eq!(r.sign, -1.0);
        for ratio in [1.5, 2.0, 5.0] {
            let r = paraboloid_rescaling(&scen(par(h), ratio, Release::Drop)).unwrap();
            assert!((r.lambda * r.omega * r.omega - 2.0 * G).abs() < 1e-12);
        }
        let launch = paraboloid_rescaling(&scen(par(h), 3.0, Release::Launch)).unwrap();
        assert!(launch.invariants.g3.abs() < 1e-16);
    }

    #[test]
    fn paraboloid_drop() {
        let s = scen(par(1.3), 6.0, Release::Drop);
        let st = paraboloid_solution(&s, 0.0).unwrap();
        assert!(st.x.abs() < 1e-14 && st.v.abs() < 1e-12);
        // x″(0) = g by central differences
        let dt = 1e-5 * s.time_scale();
        let x1 = paraboloid_solution(&s, dt).unwrap().x;
        let x2 = paraboloid_solution(&s, 2.0 * dt).unwrap().x;
        // one-sided: x(0)=0, x′(0)=0 ⇒ x(2δ) − 2x(δ) = g δ² + O(δ³)
        let acc = (x2 - 2.0 * x1) / (dt * dt);
        assert!((acc - G).abs() < 1e-4 * G, "{acc}");
        // turning point at ω₁/ω reaches h√(3ρ/ρ₀)
        let cf = ClosedForm::new(&s).unwrap();
        let resc = cf.rescaling().unwrap();
        let wp = WeierstrassP::new(resc.invariants).unwrap();
        let t_turn = wp.lattice().omega1.re / resc.omega;
        let tp = cf.state(t_turn).unwrap();
        assert!((tp.x - 1.3 * (3.0f64 / 6.0).sqrt()).abs() < 1e-12);
        assert!(tp.v.abs() < 1e-6);
    }

    #[test]
    fn paraboloid_launch_initial_conditions() {
        for r in [1.5, 2.5, 3.5, 5.0, 8.0] {
            let s = scen(par(1.0), r, Release::Launch);
            let st = paraboloid_solution(&s, 0.0).unwrap();
            assert!((st.x - 1.0).abs() < 1e-10, "r={r}: {st:?}");
            assert!(st.v.abs() < 1e-6, "r={r}: {st:?}");
        }
    }

    #[test]
    fn cone_examples() {
        let cone = Solid::cone(1.0, 1.0).unwrap();
        let r = cone_rescaling(&scen(cone, 4.0, Release::Drop)).unwrap();
        assert!((r.lambda - 1.0).abs() < 1e-15);
        assert!((r.omega * r.omega - 2.0 * G).abs() < 1e-12);
        for ratio in [1.5, 3.0, 7.0] {
            let s = scen(cone, ratio, Release::Drop);
            let r = cone_rescaling(&s).unwrap();
            assert!((r.lambda * r.omega * r.omega - 2.0 * G).abs() < 1e-12);
            assert!((r.lambda - crate::dynamics::turning_depth(&s)).abs() < 1e-14);
        }
        assert!(matches!(
            cone_rescaling(&scen(cone, 3.0, Release::Launch)),
            Err(AnalyticError::Unsupported(_))
        ));
        let s = scen(cone, 5.0, Release::Drop);
        assert_eq!(cone_solution(&s, 0.0).unwrap().x, 0.0);
        for t in [1e-6, 1e-5, 1e-4] {
            let x = cone_solution(&s, t).unwrap().x;
            assert!((x - 0.5 * G * t * t).abs() < 1e-6 * x, "t={t}");
        }
        // turning point reaches (4ρ/ρ₀)^(1/3) h
        let cf = ClosedForm::new(&s).unwrap();
        let resc = *cf.rescaling().unwrap();
        let w1 = WeierstrassP::new(resc.invariants)
            .unwrap()
            .lattice()
            .omega1
            .re;
        let x = cf.state(w1 / resc.omega).unwrap().x;
        assert!((x - (4.0f64 / 5.0).cbrt()).abs() < 1e-12);
        // and the body touches the surface again a period later
        let back = cf.state(2.0 * w1 / resc.omega).unwrap();
        assert!(back.x.abs() < 1e-12);
    }

    #[test]
    fn wrong_shapes() {
        let cone = scen(Solid::cone(1.0, 1.0).unwrap(), 3.0, Release::Drop);
        assert!(matches!(
            paraboloid_solution(&cone, 0.1),
            Err(AnalyticError::WrongShape { .. })
        ));
        let pl = scen(Solid::power_law(1.0, 2.0, 1.0).unwrap(), 3.0, Release::Drop);
        assert!(matches!(
            ClosedForm::new(&pl),
            Err(AnalyticError::Unsupported(_))
        ));
    }
}
