//! Compact analytic surrogates `x(t), y(t)` of simulated traces.
//!
//! Fitting is deterministic basis pursuit: least squares over the dictionary
//! `{1, t, t², cos(kt), sin(kt) : k = 1..K}`, then greedy backward
//! elimination. Paired `cos(kt)`/`sin(kt)` terms are folded into one
//! `A*sin(k*t + φ)` term. Among all visited models within the configured
//! RMSE tolerance of the best, the one with the fewest expression nodes wins.

mod lstsq;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point2, Trajectory};
use crate::scalar::Scalar;
use lstsq::lstsq;

pub const MIN_TRACE_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SurrogateError {
    #[error("trace too short for a surrogate fit: need at least {need} points, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("parameter values must be finite and match the trace length")]
    BadParameters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig<T> {
    /// Highest harmonic in the dictionary.
    pub max_frequency: u32,
    /// Node cap per coordinate.
    pub complexity_cap: usize,
    /// Relative RMSE slack for preferring a smaller model.
    pub rmse_tolerance: T,
    /// Spacing of `t` between samples. `None` spreads the samples uniformly over `[0, 2π)`.
    pub t_step: Option<T>,
}

impl<T: Scalar> Default for SurrogateConfig<T> {
    fn default() -> Self {
        Self { max_frequency: 4, complexity_cap: 25, rmse_tolerance: T::lit(0.01), t_step: None }
    }
}

/// Dictionary atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    One,
    T,
    TSquared,
    Cos(u32),
    Sin(u32),
}

impl Basis {
    fn eval<T: Scalar>(self, t: T) -> T {
        match self {
            Basis::One => T::one(),
            Basis::T => t,
            Basis::TSquared => t * t,
            Basis::Cos(k) => (T::lit(k as f64) * t).cos(),
            Basis::Sin(k) => (T::lit(k as f64) * t).sin(),
        }
    }
}

/// One additive term of a coordinate expression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum Term<T> {
    Constant { value: T },
    Linear { coef: T },
    Quadratic { coef: T },
    Cos { coef: T, k: u32 },
    Sin { coef: T, k: u32 },
    /// `amplitude * sin(k*t + phase)`.
    Harmonic { amplitude: T, k: u32, phase: T },
}

impl<T: Scalar> Term<T> {
    fn eval(&self, t: T) -> T {
        let kt = |k: u32| T::lit(k as f64) * t;
        match *self {
            Term::Constant { value } => value,
            Term::Linear { coef } => coef * t,
            Term::Quadratic { coef } => coef * t * t,
            Term::Cos { coef, k } => coef * kt(k).cos(),
            Term::Sin { coef, k } => coef * kt(k).sin(),
            Term::Harmonic { amplitude, k, phase } => amplitude * (kt(k) + phase).sin(),
        }
    }

    fn coef(&self) -> T {
        match *self {
            Term::Constant { value } => value,
            Term::Linear { coef } | Term::Quadratic { coef } | Term::Cos { coef, .. } | Term::Sin { coef, .. } => coef,
            Term::Harmonic { amplitude, .. } => amplitude,
        }
    }

    /// Nodes of the factor multiplied by the coefficient.
    fn basis_nodes(&self) -> usize {
        let kt = |k: u32| if k == 1 { 1 } else { 3 };
        match *self {
            Term::Constant { .. } => 0,
            Term::Linear { .. } => 1,
            Term::Quadratic { .. } => 2,
            Term::Cos { k, .. } | Term::Sin { k, .. } => 1 + kt(k),
            // sin(add(kt, phase))
            Term::Harmonic { k, .. } => 3 + kt(k),
        }
    }

    fn factor_text(&self) -> String {
        let kt = |k: u32| if k == 1 { "t".to_string() } else { format!("{k}*t") };
        match *self {
            Term::Constant { .. } => String::new(),
            Term::Linear { .. } => "t".into(),
            Term::Quadratic { .. } => "t^2".into(),
            Term::Cos { k, .. } => format!("cos({})", kt(k)),
            Term::Sin { k, .. } => format!("sin({})", kt(k)),
            Term::Harmonic { k, phase, .. } => {
                let sign = if phase < T::zero() { "-" } else { "+" };
                format!("sin({} {sign} {})", kt(k), sig4(phase.abs()))
            }
        }
    }
}

/// Fitted expression for one coordinate: a sum of terms in canonical order
/// (harmonics by ascending frequency, then `t²`, `t`, constant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordExpr<T> {
    pub terms: Vec<Term<T>>,
}

impl<T: Scalar> CoordExpr<T> {
    pub fn constant(value: T) -> Self {
        Self { terms: vec![Term::Constant { value }] }
    }

    pub fn eval(&self, t: T) -> T {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }

    /// Expression-tree node count: leaves (`t`, constants), unary ops
    /// (`sin`, `cos`, negation, `^2`) and binary ops (`+`, `-`, `*`).
    pub fn complexity(&self) -> usize {
        if self.terms.is_empty() {
            return 1;
        }
        let mut nodes = self.terms.len() - 1;
        for (i, term) in self.terms.iter().enumerate() {
            nodes += match term {
                Term::Constant { .. } => 1,
                _ => term.basis_nodes() + coef_nodes(term.coef(), i == 0),
            };
        }
        nodes
    }

    /// Infix text with 4 significant digits, e.g. `2.000*cos(t) - 1.500`.
    pub fn to_text(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, term) in self.terms.iter().enumerate() {
            let c = term.coef();
            let negative = c < T::zero();
            if i == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let factor = term.factor_text();
            let mag = c.abs();
            if factor.is_empty() {
                out.push_str(&sig4(mag));
            } else if mag == T::one() {
                out.push_str(&factor);
            } else {
                out.push_str(&sig4(mag));
                out.push('*');
                out.push_str(&factor);
            }
        }
        out
    }
}

fn coef_nodes<T: Scalar>(c: T, first: bool) -> usize {
    if c == T::one() {
        0
    } else if c == -T::one() {
        // Leading negation is a node; later ones fold into subtraction.
        usize::from(first)
    } else {
        2
    }
}

/// Rounds to 4 significant digits, keeping trailing zeros.
fn sig4<T: Scalar>(v: T) -> String {
    let v = v.to_f64_lossy();
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.3e}", v);
    let exp: i32 = sci.split('e').nth(1).and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-4..4).contains(&exp) {
        let decimals = (3 - exp).max(0) as usize;
        format!("{:.*}", decimals, v)
    } else {
        sci
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateExpr<T> {
    pub x: CoordExpr<T>,
    pub y: CoordExpr<T>,
    /// RMSE of the evaluated surrogate against the fitted trace.
    pub fit_error: T,
}

impl<T: Scalar> SurrogateExpr<T> {
    pub fn eval(&self, t: T) -> Point2<T> {
        Point2::new(self.x.eval(t), self.y.eval(t))
    }

    /// Total node count over both coordinates.
    pub fn complexity(&self) -> usize {
        self.x.complexity() + self.y.complexity()
    }
}

impl<T: Scalar> fmt::Display for SurrogateExpr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&expr_to_text(self))
    }
}

/// Prompt rendering: `x(t) = ...` and `y(t) = ...` on separate lines.
pub fn expr_to_text<T: Scalar>(expr: &SurrogateExpr<T>) -> String {
    format!("x(t) = {}\ny(t) = {}", expr.x.to_text(), expr.y.to_text())
}

/// Evaluates the surrogate at each `t`.
pub fn eval_surrogate<T: Scalar>(expr: &SurrogateExpr<T>, ts: &[T]) -> Vec<Point2<T>> {
    ts.iter().map(|&t| expr.eval(t)).collect()
}

/// Parameter values for `n` samples under `config`.
pub fn parameter_values<T: Scalar>(n: usize, config: &SurrogateConfig<T>) -> Vec<T> {
    let step = config.t_step.unwrap_or_else(|| T::TAU() / T::from_usize_lossy(n.max(1)));
    (0..n).map(|i| step * T::from_usize_lossy(i)).collect()
}

/// Fits a surrogate to `trace`, sampled at the parameter values implied by `config`.
pub fn fit_surrogate<T: Scalar>(trace: &Trajectory<T>, config: &SurrogateConfig<T>) -> Result<SurrogateExpr<T>, SurrogateError> {
    let ts = parameter_values(trace.len(), config);
    fit_surrogate_at(trace.points(), &ts, config)
}

/// Fits a surrogate to `points` observed at explicit parameter values `ts`.
pub fn fit_surrogate_at<T: Scalar>(
    points: &[Point2<T>],
    ts: &[T],
    config: &SurrogateConfig<T>,
) -> Result<SurrogateExpr<T>, SurrogateError> {
    if points.len() < MIN_TRACE_LEN {
        return Err(SurrogateError::TooShort { need: MIN_TRACE_LEN, got: points.len() });
    }
    if ts.len() != points.len() || ts.iter().any(|t| !t.is_finite()) {
        return Err(SurrogateError::BadParameters);
    }
    let xs: Vec<T> = points.iter().map(|p| p.x).collect();
    let ys: Vec<T> = points.iter().map(|p| p.y).collect();
    let (x, ex) = fit_coord(ts, &xs, config);
    let (y, ey) = fit_coord(ts, &ys, config);
    let n = T::from_usize_lossy(points.len());
    Ok(SurrogateExpr { x, y, fit_error: ((ex + ey) / n).sqrt() })
}

struct Candidate<T> {
    expr: CoordExpr<T>,
    sse: T,
}

/// Returns the chosen expression and its sum of squared errors.
fn fit_coord<T: Scalar>(ts: &[T], vals: &[T], config: &SurrogateConfig<T>) -> (CoordExpr<T>, T) {
    let first = vals[0];
    if vals.iter().all(|v| *v == first) {
        return (CoordExpr::constant(first), T::zero());
    }

    let n = ts.len();
    // Keep the system overdetermined.
    let max_k = (config.max_frequency as usize).min(n.saturating_sub(4) / 2) as u32;
    let mut active: Vec<Basis> = vec![Basis::One, Basis::T, Basis::TSquared];
    for k in 1..=max_k {
        active.push(Basis::Cos(k));
        active.push(Basis::Sin(k));
    }
    let columns: Vec<(Basis, Vec<T>)> = active.iter().map(|b| (*b, ts.iter().map(|t| b.eval(*t)).collect())).collect();
    let column = |b: Basis| &columns.iter().find(|(c, _)| *c == b).expect("in dictionary").1;

    let scale = vals.iter().fold(T::zero(), |m, v| m.max(v.abs())).max(T::one());
    let fit = |set: &[Basis]| -> Candidate<T> {
        let cols: Vec<Vec<T>> = set.iter().map(|b| column(*b).clone()).collect();
        let coef = lstsq(&cols, vals);
        let expr = build_expr(set, &coef, scale);
        let sse = ts.iter().zip(vals).map(|(t, v)| (expr.eval(*t) - *v).powi(2)).sum();
        Candidate { expr, sse }
    };

    let mut path = vec![fit(&active)];
    while active.len() > 1 {
        let mut best: Option<(usize, Candidate<T>)> = None;
        // The constant column is never dropped.
        for i in 1..active.len() {
            let mut trial = active.clone();
            trial.remove(i);
            let cand = fit(&trial);
            if best.as_ref().is_none_or(|(_, b)| cand.sse < b.sse) {
                best = Some((i, cand));
            }
        }
        let (i, cand) = best.expect("at least one removable column");
        active.remove(i);
        path.push(cand);
    }

    let nf = T::from_usize_lossy(n);
    let rmse = |c: &Candidate<T>| (c.sse / nf).sqrt();
    let feasible: Vec<&Candidate<T>> = path.iter().filter(|c| c.expr.complexity() <= config.complexity_cap).collect();
    let best_rmse = feasible.iter().map(|c| rmse(c)).fold(T::infinity(), T::min);
    let limit = best_rmse * (T::one() + config.rmse_tolerance) + T::lit(1e-9) * scale;
    let chosen = feasible
        .into_iter()
        .filter(|c| rmse(c) <= limit)
        .min_by(|a, b| {
            a.expr
                .complexity()
                .cmp(&b.expr.complexity())
                .then(rmse(a).partial_cmp(&rmse(b)).unwrap_or(std::cmp::Ordering::Equal))
        })
        .expect("constant model is always feasible");
    (chosen.expr.clone(), chosen.sse)
}

/// Turns fitted coefficients into canonical terms: near-integers snap,
/// negligible coefficients vanish, sin/cos pairs fold into one harmonic.
fn build_expr<T: Scalar>(set: &[Basis], coef: &[T], scale: T) -> CoordExpr<T> {
    let negligible = T::lit(1e-12) * scale;
    let snap = |c: T| {
        let r = c.round();
        if (c - r).abs() <= T::lit(1e-9) * c.abs().max(T::one()) {
            r
        } else {
            c
        }
    };
    let get = |b: Basis| {
        set.iter()
            .position(|x| *x == b)
            .map(|i| snap(coef[i]))
            .filter(|c| c.abs() > negligible)
    };

    let mut terms = Vec::new();
    let max_k = set.iter().filter_map(|b| if let Basis::Cos(k) | Basis::Sin(k) = b { Some(*k) } else { None }).max();
    for k in 1..=max_k.unwrap_or(0) {
        match (get(Basis::Cos(k)), get(Basis::Sin(k))) {
            (Some(a), Some(b)) => {
                // a cos + b sin = A sin(kt + φ)
                terms.push(Term::Harmonic { amplitude: snap(a.hypot(b)), k, phase: a.atan2(b) })
            }
            (Some(a), None) => terms.push(Term::Cos { coef: a, k }),
            (None, Some(b)) => terms.push(Term::Sin { coef: b, k }),
            (None, None) => {}
        }
    }
    if let Some(c) = get(Basis::TSquared) {
        terms.push(Term::Quadratic { coef: c });
    }
    if let Some(c) = get(Basis::T) {
        terms.push(Term::Linear { coef: c });
    }
    if let Some(c) = get(Basis::One) {
        terms.push(Term::Constant { value: c });
    }
    if terms.is_empty() {
        terms.push(Term::Constant { value: T::zero() });
    }
    CoordExpr { terms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn trace(n: usize, f: impl Fn(f64) -> (f64, f64)) -> Trajectory<f64> {
        let pts = (0..n).map(|i| TAU * i as f64 / n as f64).map(|t| {
            let (x, y) = f(t);
            Point2::new(x, y)
        });
        Trajectory::new(pts.collect(), true).unwrap()
    }

    #[test]
    fn rendering_contract() {
        let x = CoordExpr { terms: vec![Term::Cos { coef: 1.0, k: 1 }] };
        assert_eq!(x.to_text(), "cos(t)");
        assert_eq!(x.complexity(), 2);
        let x = CoordExpr { terms: vec![Term::Cos { coef: 2.0, k: 1 }] };
        assert_eq!(x.to_text(), "2.000*cos(t)");
        assert_eq!(x.complexity(), 4);
        let y = CoordExpr { terms: vec![Term::Sin { coef: 0.5, k: 2 }, Term::Constant { value: 1.25 }] };
        assert_eq!(y.to_text(), "0.5000*sin(2*t) + 1.250");
        let z = CoordExpr {
            terms: vec![
                Term::Harmonic { amplitude: -1.0, k: 3, phase: -0.785398 },
                Term::Quadratic { coef: -0.25 },
                Term::Linear { coef: -1.0 },
                Term::Constant { value: -12345.6 },
            ],
        };
        assert_eq!(z.to_text(), "-sin(3*t - 0.7854) - 0.2500*t^2 - t - 1.235e4");
        // neg, sin, add, mul, 3, t, phase | sub, mul, 0.25, sq, t | sub, t | sub, const
        assert_eq!(z.complexity(), 7 + 5 + 2 + 2);
    }

    #[test]
    fn sig4_rounding() {
        assert_eq!(sig4(9.99996), "10.00");
        assert_eq!(sig4(0.000123456), "0.0001235");
        assert_eq!(sig4(0.0000123456), "1.235e-5");
        assert_eq!(sig4(0.00123456), "0.001235");
        assert_eq!(sig4(1234.4), "1234");
    }

    #[test]
    fn evaluation_examples() {
        let e = SurrogateExpr {
            x: CoordExpr { terms: vec![Term::Cos { coef: 1.0, k: 1 }] },
            y: CoordExpr { terms: vec![Term::Sin { coef: 1.0, k: 1 }] },
            fit_error: 0.0,
        };
        assert_eq!(eval_surrogate(&e, &[0.0]), vec![Point2::new(1.0, 0.0)]);
        let c = SurrogateExpr { x: CoordExpr::constant(3.0), y: CoordExpr::constant(4.0), fit_error: 0.0 };
        assert!(eval_surrogate(&c, &[0.0, 1.7, -9.0]).iter().all(|p| *p == Point2::new(3.0, 4.0)));
        let poly = SurrogateExpr {
            x: CoordExpr { terms: vec![Term::Linear { coef: 1.0 }] },
            y: CoordExpr { terms: vec![Term::Quadratic { coef: 1.0 }] },
            fit_error: 0.0,
        };
        let pts = eval_surrogate(&poly, &[0.0, 1.0, 2.0]);
        assert_eq!(pts, vec![Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), Point2::new(2.0, 4.0)]);
    }

    #[test]
    fn unit_circle_recovers_cos_sin() {
        let s = fit_surrogate(&trace(64, |t| (t.cos(), t.sin())), &SurrogateConfig::default()).unwrap();
        assert!(s.fit_error <= 1e-3);
        assert_eq!(expr_to_text(&s), "x(t) = cos(t)\ny(t) = sin(t)");
        assert!(s.x.complexity() <= 5 && s.y.complexity() <= 5);
    }

    #[test]
    fn ellipse_recovers_scaled_cos() {
        let s = fit_surrogate(&trace(50, |t| (2.0 * t.cos(), t.sin())), &SurrogateConfig::default()).unwrap();
        assert!(s.fit_error <= 1e-3);
        assert_eq!(s.x.to_text(), "2.000*cos(t)");
        assert_eq!(s.y.to_text(), "sin(t)");
    }

    #[test]
    fn constant_trace_is_exact() {
        let s = fit_surrogate(&trace(10, |_| (3.0, -4.0)), &SurrogateConfig::default()).unwrap();
        assert_eq!(s.fit_error, 0.0);
        assert_eq!(expr_to_text(&s), "x(t) = 3.000\ny(t) = -4.000");
    }

    #[test]
    fn phase_shifted_harmonic_folds() {
        let s = fit_surrogate(&trace(40, |t| (0.5 * (2.0 * t + 0.3).sin() + 1.0, t)), &SurrogateConfig::default()).unwrap();
        assert!(s.fit_error < 1e-9);
        assert_eq!(s.x.to_text(), "0.5000*sin(2*t + 0.3000) + 1.000");
        assert_eq!(s.y.to_text(), "t");
    }

    #[test]
    fn explicit_t_step() {
        let pts: Vec<_> = (0..63).map(|i| 0.1 * i as f64).map(|t| Point2::new(t.cos(), t.sin())).collect();
        let cfg = SurrogateConfig { t_step: Some(0.1), ..Default::default() };
        let s = fit_surrogate(&Trajectory::new(pts, false).unwrap(), &cfg).unwrap();
        assert_eq!(expr_to_text(&s), "x(t) = cos(t)\ny(t) = sin(t)");
    }

    #[test]
    fn rejects_short_traces() {
        let t = trace(7, |t| (t, t));
        assert_eq!(
            fit_surrogate(&t, &SurrogateConfig::default()),
            Err(SurrogateError::TooShort { need: 8, got: 7 })
        );
    }

    #[test]
    fn respects_complexity_cap() {
        let cfg = SurrogateConfig { complexity_cap: 6, ..Default::default() };
        let t = trace(80, |t| ((3.0 * t).cos() + 0.4 * t.sin() - 0.1 * t, (2.0 * t).sin() + 0.2 * t * t));
        let s = fit_surrogate(&t, &cfg).unwrap();
        assert!(s.x.complexity() <= 6 && s.y.complexity() <= 6);
    }
}
