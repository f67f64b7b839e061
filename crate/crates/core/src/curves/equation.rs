//! Canonical equation strings for target curves, and their inverse.
//!
//! Numbers use `Display`, which for `f32`/`f64` is the shortest string that
//! parses back exactly and never switches to exponent notation.

use std::sync::LazyLock;

use regex::Regex;

use super::{CurveError, CurveSpec};
use crate::scalar::Scalar;

/// Renders `var` shifted by `c`: `x`, `(x - c)` or `(x + |c|)`.
fn shifted<T: Scalar>(var: &str, c: T) -> String {
    if c == T::zero() {
        var.to_string()
    } else if c > T::zero() {
        format!("({var} - {c})")
    } else {
        format!("({var} + {})", -c)
    }
}

/// ` + c`, ` - |c|`, or nothing for zero.
fn offset<T: Scalar>(c: T) -> String {
    if c == T::zero() {
        String::new()
    } else if c > T::zero() {
        format!(" + {c}")
    } else {
        format!(" - {}", -c)
    }
}

/// Coefficient prefix: empty for 1, `-` for −1, `c*` otherwise.
fn coefficient<T: Scalar>(c: T) -> String {
    if c == T::one() {
        String::new()
    } else if c == -T::one() {
        "-".to_string()
    } else {
        format!("{c}*")
    }
}

pub fn equation_text<T: Scalar>(curve: &CurveSpec<T>) -> String {
    match *curve {
        CurveSpec::Circle { r, x1, y1 } => {
            format!("{}^2 + {}^2 = {}", shifted("x", x1), shifted("y", y1), r * r)
        }
        CurveSpec::Ellipse { a, b, x1, y1 } => {
            format!("{}^2/{} + {}^2/{} = 1", shifted("x", x1), a * a, shifted("y", y1), b * b)
        }
        CurveSpec::Line { x1, y1, x2, y2 } => {
            if x1 == x2 {
                return format!("x = {x1}");
            }
            let slope = (y2 - y1) / (x2 - x1);
            let intercept = y1 - slope * x1;
            if slope == T::zero() {
                format!("y = {intercept}")
            } else {
                format!("y = {}x{}", coefficient(slope), offset(intercept))
            }
        }
        CurveSpec::Parabola { a, h, k } => {
            format!("y = {}{}^2{}", coefficient(a), shifted("x", h), offset(k))
        }
        CurveSpec::Lemniscate { a } => {
            format!("(x^2 + y^2)^2 = {}*(x^2 - y^2)", T::lit(2.0) * a * a)
        }
        CurveSpec::Naca { series } => format!("NACA {series:04} four-digit airfoil, unit chord"),
    }
}

const NUM: &str = r"-?[0-9]+(?:\.[0-9]+)?(?:[eE][-+]?[0-9]+)?";

fn shifted_pattern(var: &str) -> String {
    format!(r"(?:{var}|\({var} ([-+]) ({NUM})\))")
}

static CIRCLE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"^{}\^2 \+ {}\^2 = ({NUM})$", shifted_pattern("x"), shifted_pattern("y"))).unwrap()
});
static ELLIPSE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"^{}\^2/({NUM}) \+ {}\^2/({NUM}) = 1$",
        shifted_pattern("x"),
        shifted_pattern("y")
    ))
    .unwrap()
});
static VERTICAL: LazyLock<Regex> = LazyLock::new(|| Regex::new(&format!(r"^x = ({NUM})$")).unwrap());
static CONSTANT: LazyLock<Regex> = LazyLock::new(|| Regex::new(&format!(r"^y = ({NUM})$")).unwrap());
static SLOPED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"^y = (-|{NUM}\*)?x(?: ([-+]) ({NUM}))?$")).unwrap());
static PARABOLA: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"^y = (-|{NUM}\*)?{}\^2(?: ([-+]) ({NUM}))?$", shifted_pattern("x"))).unwrap()
});
static LEMNISCATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"^\(x\^2 \+ y\^2\)\^2 = ({NUM})\*\(x\^2 - y\^2\)$")).unwrap());
static NACA: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^NACA ([0-9]{4}) four-digit airfoil, unit chord$").unwrap());

/// Inverse of [`equation_text`].
///
/// A line's equation fixes the line but not the segment, so lines come back
/// with endpoints at `x = 0` and `x = 1` (or `y = 0`, `y = 1` when vertical).
pub fn parse_equation<T: Scalar>(text: &str) -> Result<CurveSpec<T>, CurveError> {
    let text = text.trim();
    let fail = || CurveError::Unparseable(text.to_string());
    let num = |s: &str| s.parse::<T>().map_err(|_| fail());
    let shift = |sign: Option<regex::Match>, v: Option<regex::Match>| -> Result<T, CurveError> {
        match (sign, v) {
            (Some(sign), Some(v)) => {
                let v = num(v.as_str())?;
                Ok(if sign.as_str() == "-" { v } else { -v })
            }
            _ => Ok(T::zero()),
        }
    };
    let signed = |sign: Option<regex::Match>, v: Option<regex::Match>| -> Result<T, CurveError> {
        match (sign, v) {
            (Some(sign), Some(v)) => {
                let v = num(v.as_str())?;
                Ok(if sign.as_str() == "-" { -v } else { v })
            }
            _ => Ok(T::zero()),
        }
    };
    let coef = |m: Option<regex::Match>| -> Result<T, CurveError> {
        match m.map(|m| m.as_str()) {
            None => Ok(T::one()),
            Some("-") => Ok(-T::one()),
            Some(s) => num(s.trim_end_matches('*')),
        }
    };

    let curve = if let Some(c) = CIRCLE.captures(text) {
        CurveSpec::Circle {
            x1: shift(c.get(1), c.get(2))?,
            y1: shift(c.get(3), c.get(4))?,
            r: num(&c[5])?.sqrt(),
        }
    } else if let Some(c) = ELLIPSE.captures(text) {
        CurveSpec::Ellipse {
            x1: shift(c.get(1), c.get(2))?,
            a: num(&c[3])?.sqrt(),
            y1: shift(c.get(4), c.get(5))?,
            b: num(&c[6])?.sqrt(),
        }
    } else if let Some(c) = VERTICAL.captures(text) {
        let x = num(&c[1])?;
        CurveSpec::Line { x1: x, y1: T::zero(), x2: x, y2: T::one() }
    } else if let Some(c) = CONSTANT.captures(text) {
        let y = num(&c[1])?;
        CurveSpec::Line { x1: T::zero(), y1: y, x2: T::one(), y2: y }
    } else if let Some(c) = SLOPED.captures(text) {
        let m = coef(c.get(1))?;
        let b = signed(c.get(2), c.get(3))?;
        CurveSpec::Line { x1: T::zero(), y1: b, x2: T::one(), y2: m + b }
    } else if let Some(c) = PARABOLA.captures(text) {
        CurveSpec::Parabola { a: coef(c.get(1))?, h: shift(c.get(2), c.get(3))?, k: signed(c.get(4), c.get(5))? }
    } else if let Some(c) = LEMNISCATE.captures(text) {
        CurveSpec::Lemniscate { a: (num(&c[1])? / T::lit(2.0)).sqrt() }
    } else if let Some(c) = NACA.captures(text) {
        CurveSpec::Naca { series: c[1].parse().map_err(|_| fail())? }
    } else {
        return Err(fail());
    };
    curve.validate().map_err(|_| fail())?;
    Ok(curve)
}
