//! Analytic target curves: the six benchmark families, their implicit
//! residuals, parametric samplers, equation text and dataset generation.

mod dataset;
mod equation;
pub mod naca;
mod sample;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::scalar::Scalar;

pub use dataset::{generate_dataset, DatasetConfig, ParamRanges, TaskInstance};
pub use equation::{equation_text, parse_equation};
pub use naca::{NacaProfile, Surface};
pub use sample::{reference_path, sample_points, SampleMode, SamplingConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("invalid {family} parameters: {reason}")]
    InvalidParams { family: CurveFamily, reason: &'static str },
    #[error("cannot parse equation text: {0:?}")]
    Unparseable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveFamily {
    Circle,
    Ellipse,
    Line,
    Parabola,
    Lemniscate,
    Naca,
}

impl CurveFamily {
    pub const ALL: [CurveFamily; 6] = [
        CurveFamily::Circle,
        CurveFamily::Ellipse,
        CurveFamily::Line,
        CurveFamily::Parabola,
        CurveFamily::Lemniscate,
        CurveFamily::Naca,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CurveFamily::Circle => "circle",
            CurveFamily::Ellipse => "ellipse",
            CurveFamily::Line => "line",
            CurveFamily::Parabola => "parabola",
            CurveFamily::Lemniscate => "lemniscate",
            CurveFamily::Naca => "naca",
        }
    }

    /// Display label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            CurveFamily::Circle => "Circle",
            CurveFamily::Ellipse => "Ellipse",
            CurveFamily::Line => "Line",
            CurveFamily::Parabola => "Parabola",
            CurveFamily::Lemniscate => "Lemniscate",
            CurveFamily::Naca => "Naca",
        }
    }
}

impl fmt::Display for CurveFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CurveFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        CurveFamily::ALL
            .into_iter()
            .find(|f| f.name() == lower || (lower == "lb" && *f == CurveFamily::Lemniscate))
            .ok_or_else(|| format!("unknown curve family {s:?}"))
    }
}

/// One analytic target curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "lowercase")]
pub enum CurveSpec<T> {
    Circle { r: T, x1: T, y1: T },
    Ellipse { a: T, b: T, x1: T, y1: T },
    Line { x1: T, y1: T, x2: T, y2: T },
    Parabola { a: T, h: T, k: T },
    Lemniscate { a: T },
    Naca { series: u16 },
}

impl<T: Scalar> CurveSpec<T> {
    pub fn family(&self) -> CurveFamily {
        match self {
            CurveSpec::Circle { .. } => CurveFamily::Circle,
            CurveSpec::Ellipse { .. } => CurveFamily::Ellipse,
            CurveSpec::Line { .. } => CurveFamily::Line,
            CurveSpec::Parabola { .. } => CurveFamily::Parabola,
            CurveSpec::Lemniscate { .. } => CurveFamily::Lemniscate,
            CurveSpec::Naca { .. } => CurveFamily::Naca,
        }
    }

    pub fn validate(&self) -> Result<(), CurveError> {
        let family = self.family();
        let bad = |reason| Err(CurveError::InvalidParams { family, reason });
        let finite = |vals: &[T]| vals.iter().all(|v| v.is_finite());
        match *self {
            CurveSpec::Circle { r, x1, y1 } => {
                if !finite(&[r, x1, y1]) {
                    return bad("non-finite parameter");
                }
                if !(r > T::zero()) {
                    return bad("radius must be positive");
                }
            }
            CurveSpec::Ellipse { a, b, x1, y1 } => {
                if !finite(&[a, b, x1, y1]) {
                    return bad("non-finite parameter");
                }
                if !(a > T::zero() && b > T::zero()) {
                    return bad("semi-axes must be positive");
                }
            }
            CurveSpec::Line { x1, y1, x2, y2 } => {
                if !finite(&[x1, y1, x2, y2]) {
                    return bad("non-finite parameter");
                }
                if x1 == x2 && y1 == y2 {
                    return bad("endpoints coincide");
                }
            }
            CurveSpec::Parabola { a, h, k } => {
                if !finite(&[a, h, k]) {
                    return bad("non-finite parameter");
                }
                if a == T::zero() {
                    return bad("leading coefficient must be non-zero");
                }
            }
            CurveSpec::Lemniscate { a } => {
                if !(a.is_finite() && a > T::zero()) {
                    return bad("scale must be positive");
                }
            }
            CurveSpec::Naca { series } => {
                if NacaProfile::<T>::from_code(series).is_none() {
                    return bad("not an evaluable four-digit code");
                }
            }
        }
        Ok(())
    }

    /// Implicit-equation residual; zero on the curve.
    ///
    /// NACA sections have no closed implicit form, so their residual is the
    /// signed distance to the nearer surface.
    pub fn implicit_residual(&self, p: Point2<T>) -> T {
        let (x, y) = (p.x, p.y);
        match *self {
            CurveSpec::Circle { r, x1, y1 } => {
                let (dx, dy) = (x - x1, y - y1);
                dx * dx + dy * dy - r * r
            }
            CurveSpec::Ellipse { a, b, x1, y1 } => {
                let (dx, dy) = (x - x1, y - y1);
                dx * dx / (a * a) + dy * dy / (b * b) - T::one()
            }
            CurveSpec::Line { x1, y1, x2, y2 } => (y - y1) * (x2 - x1) - (y2 - y1) * (x - x1),
            CurveSpec::Parabola { a, h, k } => {
                let dx = x - h;
                y - a * dx * dx - k
            }
            CurveSpec::Lemniscate { a } => {
                let (x2, y2) = (x * x, y * y);
                let s = x2 + y2;
                s * s - T::lit(2.0) * a * a * (x2 - y2)
            }
            CurveSpec::Naca { series } => match NacaProfile::from_code(series) {
                Some(profile) => profile.signed_distance(p),
                None => T::nan(),
            },
        }
    }

    /// Whether a full sweep of the parameter returns to its start.
    pub fn is_closed(&self) -> bool {
        !matches!(self, CurveSpec::Line { .. } | CurveSpec::Parabola { .. })
    }

    /// Plain-language task statement for prompts.
    pub fn describe(&self) -> String {
        let head = "Design a planar mechanism whose joint named \"target\"";
        match *self {
            CurveSpec::Circle { r, x1, y1 } => {
                format!("{head} traces a circle of radius {r} centred at ({x1}, {y1}).")
            }
            CurveSpec::Ellipse { a, b, x1, y1 } => format!(
                "{head} traces an axis-aligned ellipse centred at ({x1}, {y1}) with horizontal semi-axis {a} and vertical semi-axis {b}."
            ),
            CurveSpec::Line { x1, y1, x2, y2 } => {
                format!("{head} moves along the straight segment from ({x1}, {y1}) to ({x2}, {y2}).")
            }
            CurveSpec::Parabola { a, h, k } => format!(
                "{head} follows the parabola y = a(x - h)^2 + k with a = {a}, vertex at ({h}, {k})."
            ),
            CurveSpec::Lemniscate { a } => format!(
                "{head} traces a lemniscate of Bernoulli (figure-eight) centred at the origin with scale a = {a}."
            ),
            CurveSpec::Naca { series } => format!(
                "{head} traces the outline of a NACA {series:04} airfoil with unit chord, leading edge at the origin."
            ),
        }
    }
}
