//! Weierstrass ℘ for real invariants.
//!
//! Evaluation reduces the argument to the Voronoi cell of the period lattice
//! around the origin, sums the Laurent series on a disc of half the shortest
//! period, and climbs back out with the duplication formula when the reduced
//! point lies outside that disc. Half-periods come from the arithmetic-geometric
//! mean of the cubic roots.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticError {
    #[error("degenerate lattice: discriminant g2^3 - 27 g3^2 = {0:e} vanishes")]
    DegenerateLattice(f64),
    #[error("invariants must be finite, got g2 = {g2}, g3 = {g3}")]
    NonFinite { g2: f64, g3: f64 },
    #[error("argument {z} lies on the pole at lattice point {lattice_point}")]
    Pole {
        z: Complex64,
        lattice_point: Complex64,
    },
    #[error("zero refinement did not converge (residual {0:e})")]
    NoConvergence(f64),
}

/// Coefficients of `(℘')² = 4℘³ − g2·℘ − g3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticInvariants {
    pub g2: f64,
    pub g3: f64,
}

impl EllipticInvariants {
    pub const LEMNISCATIC: Self = Self { g2: 1.0, g3: 0.0 };

    pub fn new(g2: f64, g3: f64) -> Self {
        Self { g2, g3 }
    }

    pub fn discriminant(&self) -> f64 {
        self.g2.powi(3) - 27.0 * self.g3 * self.g3
    }

    fn is_degenerate(&self) -> bool {
        let scale = self.g2.abs().powi(3) + 27.0 * self.g3 * self.g3;
        scale == 0.0 || self.discriminant().abs() <= 1e-14 * scale
    }

    /// Invariants of the lattice scaled by `lam`:
    /// `℘(λz; λ⁻⁴g2, λ⁻⁶g3) = λ⁻²℘(z; g2, g3)`.
    pub fn rescale(&self, lam: f64) -> Self {
        Self {
            g2: self.g2 / lam.powi(4),
            g3: self.g3 / lam.powi(6),
        }
    }

    /// Right-hand side of the defining equation at `p`.
    pub fn cubic(&self, p: Complex64) -> Complex64 {
        4.0 * p * p * p - self.g2 * p - self.g3
    }

    /// Roots of `4t³ − g2·t − g3`, by descending real part (ties broken by
    /// descending imaginary part).
    pub fn cubic_roots(&self) -> [Complex64; 3] {
        cubic_roots(self)
    }
}

/// Roots of `4t³ − g2·t − g3`, by descending real part (ties broken by
/// descending imaginary part). Real whenever the discriminant is positive.
pub fn cubic_roots(inv: &EllipticInvariants) -> [Complex64; 3] {
    // depressed form t³ + pt + q
    let p = -inv.g2 / 4.0;
    let q = -inv.g3 / 4.0;
    let mut roots = if p == 0.0 {
        let r = (-q).cbrt();
        let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        [Complex64::new(r, 0.0), r * w, r * w * w]
    } else if inv.discriminant() > 0.0 {
        // three real roots, trigonometric form
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mk = |k: f64| Complex64::new(m * (theta - 2.0 * PI * k / 3.0).cos(), 0.0);
        [mk(0.0), mk(1.0), mk(2.0)]
    } else {
        // one real root, Cardano
        let disc = (q * q / 4.0 + p * p * p / 27.0).max(0.0).sqrt();
        let u = (-q / 2.0 + disc).cbrt();
        let v = (-q / 2.0 - disc).cbrt();
        let real = u + v;
        let re = -real / 2.0;
        let im = (u - v).abs() * 3f64.sqrt() / 2.0;
        [
            Complex64::new(real, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
        ]
    };
    // Newton polish against the undepressed cubic
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let f = inv.cubic(*r);
            let df = 12.0 * *r * *r - inv.g2;
            if df.norm() == 0.0 {
                break;
            }
            let step = f / df;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
        if r.im.abs() <= 1e-15 * r.norm().max(1e-300) {
            r.im = 0.0;
        }
    }
    roots.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    // equal real parts for the conjugate pair may have been perturbed by polish
    if (roots[0].re - roots[1].re).abs() <= 1e-14 * roots[0].norm() && roots[0].im < roots[1].im {
        roots.swap(0, 1);
    }
    roots
}

fn agm(mut a: Complex64, mut b: Complex64) -> Complex64 {
    for _ in 0..64 {
        let next_a = 0.5 * (a + b);
        let mut next_b = (a * b).sqrt();
        if (next_a - next_b).norm() > (next_a + next_b).norm() {
            next_b = -next_b;
        }
        a = next_a;
        b = next_b;
        if (a - b).norm() <= 1e-16 * a.norm() {
            break;
        }
    }
    0.5 * (a + b)
}

/// Real half-period `∫_{e₁}^∞ dt/√(4t³ − g2 t − g3)` with `e₁` the largest
/// real root.
fn real_half_period(inv: &EllipticInvariants) -> f64 {
    let [e1, e2, e3] = lattice_ordered_roots(inv);
    let m = agm((e1 - e3).sqrt(), (e1 - e2).sqrt());
    PI / (2.0 * m.re)
}

/// Roots reordered as `[℘(ω₁), ℘(ω₁+ω₃), ℘(ω₃)]`: the real root first, then
/// the upper and lower members of a conjugate pair.
fn lattice_ordered_roots(inv: &EllipticInvariants) -> [Complex64; 3] {
    let mut r = inv.cubic_roots();
    if inv.discriminant() < 0.0 {
        let real = r.iter().position(|z| z.im == 0.0).unwrap_or(0);
        r[..=real].rotate_right(1);
        if r[1].im < r[2].im {
            r.swap(1, 2);
        }
    }
    r
}

/// Fundamental half-periods and the values of ℘ at them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    /// Real half-period, `℘(ω₁) = e₁`.
    pub omega1: Complex64,
    /// Second half-period, `℘(ω₃) = e₃`; purely imaginary for positive
    /// discriminant.
    pub omega3: Complex64,
    /// `[℘(ω₁), ℘(ω₁+ω₃), ℘(ω₃)]`. Matches the descending-real-part order
    /// of [`cubic_roots`] except when the discriminant is negative and the
    /// real root is negative, in which case the real root still comes first.
    pub e_roots: [Complex64; 3],
}

impl Lattice {
    pub fn omega2(&self) -> Complex64 {
        self.omega1 + self.omega3
    }

    pub fn is_rectangular(&self) -> bool {
        self.omega3.re == 0.0
    }

    /// Gauss-reduced period basis: `|a| ≤ |b|` and `|a| ≤ |b ± a|`, so `a` is a
    /// shortest period and the Voronoi cell is spanned by small multiples.
    fn reduced_basis(&self) -> (Complex64, Complex64) {
        let (mut a, mut b) = (2.0 * self.omega1, 2.0 * self.omega3);
        if a.norm_sqr() > b.norm_sqr() {
            std::mem::swap(&mut a, &mut b);
        }
        for _ in 0..64 {
            let mu = ((b * a.conj()).re / a.norm_sqr()).round();
            b -= mu * a;
            if b.norm_sqr() >= a.norm_sqr() {
                break;
            }
            std::mem::swap(&mut a, &mut b);
        }
        (a, b)
    }

    /// Shortest nonzero lattice vector length.
    pub fn shortest_period(&self) -> f64 {
        self.reduced_basis().0.norm()
    }

    /// Lattice point nearest to `z`.
    pub fn nearest_point(&self, z: Complex64) -> Complex64 {
        let (a, b) = self.reduced_basis();
        // z = s·a + t·b with s, t real
        let det = a.re * b.im - a.im * b.re;
        let s = (z.re * b.im - z.im * b.re) / det;
        let t = (a.re * z.im - a.im * z.re) / det;
        let base = s.round() * a + t.round() * b;
        let mut best = base;
        let mut best_d = (z - base).norm();
        for i in -1..=1 {
            for j in -1..=1 {
                let cand = base + i as f64 * a + j as f64 * b;
                let d = (z - cand).norm();
                if d < best_d {
                    best = cand;
                    best_d = d;
                }
            }
        }
        best
    }
}

/// Half-periods for real, non-degenerate invariants.
pub fn half_periods(inv: &EllipticInvariants) -> Result<Lattice, EllipticError> {
    if !(inv.g2.is_finite() && inv.g3.is_finite()) {
        return Err(EllipticError::NonFinite {
            g2: inv.g2,
            g3: inv.g3,
        });
    }
    if inv.is_degenerate() {
        return Err(EllipticError::DegenerateLattice(inv.discriminant()));
    }
    let e_roots = lattice_ordered_roots(inv);
    let real = real_half_period(inv);
    // ℘(iz; g2, g3) = −℘(z; g2, −g3) turns the real period of the mirrored
    // invariants into an imaginary period of these.
    let mirrored = real_half_period(&EllipticInvariants::new(inv.g2, -inv.g3));
    let omega1 = Complex64::new(real, 0.0);
    let omega3 = if inv.discriminant() > 0.0 {
        Complex64::new(0.0, mirrored)
    } else {
        Complex64::new(real / 2.0, mirrored / 2.0)
    };
    Ok(Lattice {
        omega1,
        omega3,
        e_roots,
    })
}

/// ℘ and ℘′ for one pair of invariants, with cached Laurent coefficients.
#[derive(Debug, Clone)]
pub struct WeierstrassP {
    inv: EllipticInvariants,
    lattice: Lattice,
    /// `coeffs[j]` multiplies `z^(2j+2)` in `℘(z) − z⁻²`.
    coeffs: Vec<f64>,
    series_radius: f64,
    pole_tol: f64,
}

const SERIES_TERMS: usize = 40;

impl WeierstrassP {
    pub fn new(inv: EllipticInvariants) -> Result<Self, EllipticError> {
        let lattice = half_periods(&inv)?;
        let coeffs = laurent_coefficients(&inv, SERIES_TERMS);
        let series_radius = 0.5 * lattice.shortest_period();
        Ok(Self {
            inv,
            lattice,
            coeffs,
            series_radius,
            pole_tol: 1e-14 * lattice.omega1.norm(),
        })
    }

    pub fn invariants(&self) -> EllipticInvariants {
        self.inv
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn wp(&self, z: Complex64) -> Result<Complex64, EllipticError> {
        self.wp_and_prime(z).map(|(p, _)| p)
    }

    pub fn wp_prime(&self, z: Complex64) -> Result<Complex64, EllipticError> {
        self.wp_and_prime(z).map(|(_, dp)| dp)
    }

    /// `(℘(z), ℘′(z))`.
    pub fn wp_and_prime(&self, z: Complex64) -> Result<(Complex64, Complex64), EllipticError> {
        let lp = self.lattice.nearest_point(z);
        let mut w = z - lp;
        if w.norm() <= self.pole_tol {
            return Err(EllipticError::Pole {
                z,
                lattice_point: lp,
            });
        }
        let mut doublings = 0;
        while w.norm() > self.series_radius {
            w *= 0.5;
            doublings += 1;
        }
        let (mut p, mut dp) = self.series(w);
        for _ in 0..doublings {
            // tangent at (p, p′) on y² = 4x³ − g2 x − g3 meets the curve again
            // at (℘(2w), −℘′(2w))
            let slope = (6.0 * p * p - 0.5 * self.inv.g2) / dp;
            let p2 = 0.25 * slope * slope - 2.0 * p;
            dp = -(slope * (p2 - p) + dp);
            p = p2;
        }
        Ok((p, dp))
    }

    /// Defining-equation residual `℘′² − (4℘³ − g2℘ − g3)` at `z`.
    pub fn residual(&self, z: Complex64) -> Result<Complex64, EllipticError> {
        let (p, dp) = self.wp_and_prime(z)?;
        Ok(dp * dp - self.inv.cubic(p))
    }

    fn series(&self, z: Complex64) -> (Complex64, Complex64) {
        let z2 = z * z;
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        // Horner in z²: Σ c_j z^(2j+2), derivative Σ (2j+2) c_j z^(2j+1)
        for (j, &c) in self.coeffs.iter().enumerate().rev() {
            p = p * z2 + c;
            dp = dp * z2 + (2 * j + 2) as f64 * c;
        }
        let inv_z = z.inv();
        let inv_z2 = inv_z * inv_z;
        (inv_z2 + p * z2, -2.0 * inv_z2 * inv_z + dp * z)
    }

    /// A zero of ℘ in the fundamental domain.
    pub fn zero(&self) -> Result<WpZero, EllipticError> {
        let lat = self.lattice;
        let [e1, e2, _] = lat.e_roots;
        let origin = Complex64::new(0.0, 0.0);
        let (start, dir, len) = if !lat.is_rectangular() && e1.re > 0.0 {
            // ℘(iy) runs from −∞ up to e₁ > 0 along (0, 2ω₃ − ω₁]
            let end = 2.0 * lat.omega3 - lat.omega1;
            (origin, end / end.norm(), end.norm())
        } else if !lat.is_rectangular() {
            // ℘ falls from +∞ to e₁ ≤ 0 along (0, ω₁]
            (origin, Complex64::new(1.0, 0.0), lat.omega1.norm())
        } else if e2.re <= 0.0 {
            // ℘ falls from e₁ to e₂ along [ω₁, ω₁ + ω₃]
            (lat.omega1, Complex64::i(), lat.omega3.norm())
        } else {
            // ℘ rises from e₃ to e₂ along [ω₃, ω₃ + ω₁]
            (lat.omega3, Complex64::new(1.0, 0.0), lat.omega1.norm())
        };
        let f = |s: f64| -> Result<f64, EllipticError> { Ok(self.wp(start + s * dir)?.re) };
        let (mut lo, mut hi) = (0.0_f64, len);
        let f_hi = f(hi)?;
        // pole at the origin: begin just inside
        if start == origin {
            lo = 1e-6 * len;
        }
        let f_lo = f(lo)?;
        let increasing = f_hi > f_lo;
        if f_hi == 0.0 {
            lo = hi;
        } else if f_lo == 0.0 {
            hi = lo;
        }
        for _ in 0..200 {
            if hi - lo <= 4.0 * f64::EPSILON * len {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let fm = f(mid)?;
            if (fm < 0.0) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut a = start + 0.5 * (lo + hi) * dir;
        // Newton polish, skipped where ℘′ vanishes with the zero
        for _ in 0..4 {
            let (p, dp) = self.wp_and_prime(a)?;
            if p.norm() <= 1e-16 || dp.norm() <= 1e-8 {
                break;
            }
            a -= p / dp;
        }
        let residual = self.wp(a)?.norm();
        if residual > 1e-12 {
            return Err(EllipticError::NoConvergence(residual));
        }
        Ok(WpZero { a })
    }
}

/// A point with `℘(a) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WpZero {
    pub a: Complex64,
}

/// Coefficients `c_k` (k = 2, 3, …) of `℘(z) = z⁻² + Σ c_k z^(2k−2)`, returned
/// from `c_2` onward.
pub fn laurent_coefficients(inv: &EllipticInvariants, terms: usize) -> Vec<f64> {
    let mut c = vec![0.0; terms + 2];
    c[2] = inv.g2 / 20.0;
    if terms > 1 {
        c[3] = inv.g3 / 28.0;
    }
    for k in 4..terms + 2 {
        let s: f64 = (2..=k - 2).map(|m| c[m] * c[k - m]).sum();
        c[k] = 3.0 * s / (((2 * k + 1) * (k - 3)) as f64);
    }
    c.drain(..2);
    c
}

/// ℘(z; g2, g3), building the lattice on the fly.
pub fn wp(z: Complex64, inv: &EllipticInvariants) -> Result<Complex64, EllipticError> {
    WeierstrassP::new(*inv)?.wp(z)
}

/// ℘′(z; g2, g3), building the lattice on the fly.
pub fn wp_prime(z: Complex64, inv: &EllipticInvariants) -> Result<Complex64, EllipticError> {
    WeierstrassP::new(*inv)?.wp_prime(z)
}

pub fn wp_zero(inv: &EllipticInvariants) -> Result<WpZero, EllipticError> {
    WeierstrassP::new(*inv)?.zero()
}

pub fn rescale_invariants(inv: &EllipticInvariants, lam: f64) -> EllipticInvariants {
    inv.rescale(lam)
}
