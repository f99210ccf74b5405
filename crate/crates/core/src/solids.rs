//! Geometry of the floating bodies.
//!
//! Every supported body reduces to a submerged-fraction exponent `n`: when the
//! lowest point sits at depth `x` the displaced volume is `V·(x/h)^n`. The
//! dynamics only ever read `n` and `h`; the remaining parameters exist so the
//! volumes can be reported.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolidError {
    #[error("parameter `{name}` must be finite and strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("profile exponent d must be finite and >= 0, got {0}")]
    BadExponent(f64),
    #[error("depth must be finite and >= 0, got {0}")]
    NegativeDepth(f64),
}

/// Cross-section family of a body, with the parameters native to each one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// Right circular cylinder with base area `area`.
    Cylinder { area: f64 },
    /// Solid paraboloid `r² ≤ 2pz`.
    Paraboloid { p: f64 },
    /// Right circular cone, vertex down, base area `area`.
    Cone { area: f64 },
    /// Solid of revolution `r ≤ k z^d`.
    PowerLaw { k: f64, d: f64 },
    /// Equilateral triangular prism with one lateral edge down; `h` is the
    /// height of the triangular section and `length` the prism length.
    PrismEdgeDown { length: f64 },
    /// Equilateral triangular prism with its axis vertical; `h` is the axial
    /// length and `side` the side of the triangular section.
    PrismAxisVertical { side: f64 },
}

impl Shape {
    pub fn name(&self) -> &'static str {
        match self {
            Shape::Cylinder { .. } => "cylinder",
            Shape::Paraboloid { .. } => "paraboloid",
            Shape::Cone { .. } => "cone",
            Shape::PowerLaw { .. } => "power_law",
            Shape::PrismEdgeDown { .. } => "prism_edge_down",
            Shape::PrismAxisVertical { .. } => "prism_axis_vertical",
        }
    }
}

/// A validated body: a shape together with its height `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSolid", into = "RawSolid")]
pub struct Solid {
    shape: Shape,
    h: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSolid {
    #[serde(flatten)]
    shape: Shape,
    h: f64,
}

impl TryFrom<RawSolid> for Solid {
    type Error = SolidError;

    fn try_from(raw: RawSolid) -> Result<Self, Self::Error> {
        Solid::new(raw.shape, raw.h)
    }
}

impl From<Solid> for RawSolid {
    fn from(s: Solid) -> Self {
        RawSolid {
            shape: s.shape,
            h: s.h,
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, SolidError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(SolidError::NonPositive { name, value })
    }
}

impl Solid {
    pub fn new(shape: Shape, h: f64) -> Result<Self, SolidError> {
        positive("h", h)?;
        match shape {
            Shape::Cylinder { area } | Shape::Cone { area } => {
                positive("area", area)?;
            }
            Shape::Paraboloid { p } => {
                positive("p", p)?;
            }
            Shape::PowerLaw { k, d } => {
                positive("k", k)?;
                if !(d.is_finite() && d >= 0.0) {
                    return Err(SolidError::BadExponent(d));
                }
            }
            Shape::PrismEdgeDown { length } => {
                positive("length", length)?;
            }
            Shape::PrismAxisVertical { side } => {
                positive("side", side)?;
            }
        }
        Ok(Solid { shape, h })
    }

    pub fn cylinder(area: f64, h: f64) -> Result<Self, SolidError> {
        Self::new(Shape::Cylinder { area }, h)
    }

    pub fn paraboloid(p: f64, h: f64) -> Result<Self, SolidError> {
        Self::new(Shape::Paraboloid { p }, h)
    }

    pub fn cone(area: f64, h: f64) -> Result<Self, SolidError> {
        Self::new(Shape::Cone { area }, h)
    }

    pub fn power_law(k: f64, d: f64, h: f64) -> Result<Self, SolidError> {
        Self::new(Shape::PowerLaw { k, d }, h)
    }

    pub fn prism_edge_down(length: f64, h: f64) -> Result<Self, SolidError> {
        Self::new(Shape::PrismEdgeDown { length }, h)
    }

    pub fn prism_axis_vertical(side: f64, h: f64) -> Result<Self, SolidError> {
        Self::new(Shape::PrismAxisVertical { side }, h)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn height(&self) -> f64 {
        self.h
    }

    /// Submerged-fraction exponent `n`.
    pub fn exponent(&self) -> f64 {
        match self.shape {
            Shape::Cylinder { .. } | Shape::PrismAxisVertical { .. } => 1.0,
            Shape::Paraboloid { .. } | Shape::PrismEdgeDown { .. } => 2.0,
            Shape::Cone { .. } => 3.0,
            Shape::PowerLaw { d, .. } => 2.0 * d + 1.0,
        }
    }

    /// Fraction of the body below the surface when its lowest point is at
    /// depth `x`. Saturates at exactly 1 for `x >= h`.
    pub fn submerged_fraction(&self, x: f64) -> Result<f64, SolidError> {
        if !(x.is_finite() && x >= 0.0) {
            return Err(SolidError::NegativeDepth(x));
        }
        Ok(self.fraction_unchecked(x))
    }

    pub(crate) fn fraction_unchecked(&self, x: f64) -> f64 {
        if x >= self.h {
            1.0
        } else if x <= 0.0 {
            0.0
        } else {
            (x / self.h).powf(self.exponent())
        }
    }

    pub fn total_volume(&self) -> f64 {
        let h = self.h;
        match self.shape {
            Shape::Cylinder { area } => area * h,
            Shape::Paraboloid { p } => PI * p * h * h,
            Shape::Cone { area } => area * h / 3.0,
            Shape::PowerLaw { k, d } => {
                let n = 2.0 * d + 1.0;
                PI * k * k * h.powf(n) / n
            }
            // section of height h has side 2h/√3
            Shape::PrismEdgeDown { length } => h * h / 3f64.sqrt() * length,
            Shape::PrismAxisVertical { side } => 3f64.sqrt() / 4.0 * side * side * h,
        }
    }

    pub fn displaced_volume(&self, x: f64) -> Result<f64, SolidError> {
        Ok(self.total_volume() * self.submerged_fraction(x)?)
    }
}
