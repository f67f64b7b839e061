use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{JointKind, MechanismSpec, Parent, ValidationError};
use crate::geometry::Point2;
use crate::scalar::Scalar;

/// Why a joint could not be placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// The two circles are too far apart to meet.
    CirclesDisjoint,
    /// One circle lies strictly inside the other.
    CircleContained,
    /// Both circles share a centre.
    ConcentricCircles,
    /// The circle does not reach the slider line.
    LineMissed,
    /// The slider line's two reference points coincide.
    DegenerateLine,
    /// Arithmetic overflowed or produced NaN.
    NonFinite,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureReason::CirclesDisjoint => "link circles do not intersect (links too short)",
            FailureReason::CircleContained => "one link circle lies inside the other (links too long)",
            FailureReason::ConcentricCircles => "both parents coincide",
            FailureReason::LineMissed => "slider circle does not reach its line",
            FailureReason::DegenerateLine => "slider line reference points coincide",
            FailureReason::NonFinite => "position is not finite",
        })
    }
}

/// First step at which the mechanism locks up.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("unreachable configuration at step {step}, joint {joint}: {reason}")]
pub struct StepFailure {
    pub step: usize,
    pub joint: String,
    pub reason: FailureReason,
}

#[derive(Debug, Clone, Copy)]
enum Ref<T> {
    Joint(usize),
    Fixed(Point2<T>),
}

#[derive(Debug, Clone, Copy)]
enum Compiled<T> {
    Static(Point2<T>),
    Crank { parent: Ref<T>, distance: T, step: T, phase: T },
    Revolute { p0: Ref<T>, d0: T, p1: Ref<T>, d1: T },
    Linear { p0: Ref<T>, radius: T, a: Ref<T>, b: Ref<T> },
}

/// Validated mechanism with joint references resolved to indices.
#[derive(Debug, Clone)]
pub struct Linkage<T> {
    names: Vec<String>,
    joints: Vec<Compiled<T>>,
    guesses: Vec<Option<Point2<T>>>,
    target: usize,
}

// Absolute slack for tangent configurations.
fn slack<T: Scalar>() -> T {
    T::lit(1e-9)
}

impl<T: Scalar> Linkage<T> {
    pub fn compile(spec: &MechanismSpec<T>) -> Result<Self, Vec<ValidationError>> {
        spec.validate()?;
        let names: Vec<String> = spec.joints.iter().map(|j| j.name.clone()).collect();
        let index = |p: &Parent<T>| match p {
            Parent::Fixed(pt) => Ref::Fixed(*pt),
            Parent::Joint(n) => Ref::Joint(names.iter().position(|m| m == n).expect("validated")),
        };
        let guesses: Vec<Option<Point2<T>>> = spec
            .joints
            .iter()
            .map(|j| match &j.kind {
                JointKind::Static { x, y } => Some(Point2::new(*x, *y)),
                JointKind::Crank { initial, .. }
                | JointKind::Revolute { initial, .. }
                | JointKind::Linear { initial, .. } => *initial,
            })
            .collect();
        let declared = |r: Ref<T>| match r {
            Ref::Fixed(p) => Some(p),
            Ref::Joint(i) => guesses[i],
        };

        let joints = spec
            .joints
            .iter()
            .map(|j| match &j.kind {
                JointKind::Static { x, y } => Compiled::Static(Point2::new(*x, *y)),
                JointKind::Crank { parent, distance, angle_step, initial } => {
                    let parent = index(parent);
                    let phase = match (initial, declared(parent)) {
                        (Some(g), Some(c)) if *g != c => {
                            let v = *g - c;
                            v.y.atan2(v.x)
                        }
                        _ => T::zero(),
                    };
                    Compiled::Crank { parent, distance: *distance, step: *angle_step, phase }
                }
                JointKind::Revolute { parent0, distance0, parent1, distance1, .. } => Compiled::Revolute {
                    p0: index(parent0),
                    d0: *distance0,
                    p1: index(parent1),
                    d1: *distance1,
                },
                JointKind::Linear { parent0, revolute_radius, line_a, line_b, .. } => Compiled::Linear {
                    p0: index(parent0),
                    radius: *revolute_radius,
                    a: index(line_a),
                    b: index(line_b),
                },
            })
            .collect();
        let target = names.iter().position(|n| n == &spec.target_name).expect("validated");
        Ok(Self { names, joints, guesses, target })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn target_index(&self) -> usize {
        self.target
    }

    /// Declared positions used to pick branches at step 0.
    pub fn initial_guesses(&self) -> Vec<Option<Point2<T>>> {
        self.guesses.clone()
    }

    /// Positions every joint at `step`, choosing for each two-solution joint
    /// the branch closest to its entry in `prev`.
    pub fn solve_step(&self, prev: &[Option<Point2<T>>], step: usize) -> Result<Vec<Point2<T>>, StepFailure> {
        let mut pos: Vec<Point2<T>> = Vec::with_capacity(self.joints.len());
        for (i, joint) in self.joints.iter().enumerate() {
            let at = |r: Ref<T>, pos: &[Point2<T>]| match r {
                Ref::Fixed(p) => p,
                Ref::Joint(j) => pos[j],
            };
            let hint = prev.get(i).copied().flatten();
            let placed = match *joint {
                Compiled::Static(p) => Ok(p),
                Compiled::Crank { parent, distance, step: dphi, phase } => {
                    let angle = phase + dphi * T::from_usize_lossy(step);
                    Ok(at(parent, &pos) + Point2::from_angle(angle) * distance)
                }
                Compiled::Revolute { p0, d0, p1, d1 } => circle_circle(at(p0, &pos), d0, at(p1, &pos), d1, hint),
                Compiled::Linear { p0, radius, a, b } => circle_line(at(p0, &pos), radius, at(a, &pos), at(b, &pos), hint),
            };
            match placed {
                Ok(p) if p.is_finite() => pos.push(p),
                Ok(_) => return Err(self.failure(step, i, FailureReason::NonFinite)),
                Err(reason) => return Err(self.failure(step, i, reason)),
            }
        }
        Ok(pos)
    }

    fn failure(&self, step: usize, joint: usize, reason: FailureReason) -> StepFailure {
        StepFailure { step, joint: self.names[joint].clone(), reason }
    }
}

fn pick<T: Scalar>(a: Point2<T>, b: Point2<T>, hint: Option<Point2<T>>) -> Point2<T> {
    match hint {
        Some(h) if b.distance_squared(h) < a.distance_squared(h) => b,
        _ => a,
    }
}

/// Without a hint the solution left of `c0 -> c1` wins.
fn circle_circle<T: Scalar>(c0: Point2<T>, r0: T, c1: Point2<T>, r1: T, hint: Option<Point2<T>>) -> Result<Point2<T>, FailureReason> {
    let d = c0.distance(c1);
    if d <= T::lit(1e-12) {
        return Err(FailureReason::ConcentricCircles);
    }
    if d > r0 + r1 + slack() {
        return Err(FailureReason::CirclesDisjoint);
    }
    if d < (r0 - r1).abs() - slack() {
        return Err(FailureReason::CircleContained);
    }
    let u = (c1 - c0) * (T::one() / d);
    let a = (d * d + r0 * r0 - r1 * r1) / (T::lit(2.0) * d);
    let h = (r0 * r0 - a * a).max(T::zero()).sqrt();
    let base = c0 + u * a;
    let off = u.perp() * h;
    Ok(pick(base + off, base - off, hint))
}

/// Without a hint the solution further along `a -> b` wins.
fn circle_line<T: Scalar>(
    c: Point2<T>,
    r: T,
    a: Point2<T>,
    b: Point2<T>,
    hint: Option<Point2<T>>,
) -> Result<Point2<T>, FailureReason> {
    let len = a.distance(b);
    if len <= T::lit(1e-12) {
        return Err(FailureReason::DegenerateLine);
    }
    let u = (b - a) * (T::one() / len);
    let foot = a + u * (c - a).dot(u);
    let dist = c.distance(foot);
    if dist > r + slack() {
        return Err(FailureReason::LineMissed);
    }
    let h = (r * r - dist * dist).max(T::zero()).sqrt();
    Ok(pick(foot + u * h, foot - u * h, hint))
}

/// Error from the name-keyed [`solve_step`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid mechanism: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ValidationError>),
    #[error(transparent)]
    Failure(#[from] StepFailure),
}

/// Positions every joint of `spec` at `step`. `prev` holds last-step
/// positions by joint name; missing joints fall back to their declared guess.
pub fn solve_step<T: Scalar>(
    spec: &MechanismSpec<T>,
    prev: &BTreeMap<String, Point2<T>>,
    step: usize,
) -> Result<BTreeMap<String, Point2<T>>, SolveError> {
    let linkage = Linkage::compile(spec).map_err(SolveError::Invalid)?;
    let hints: Vec<Option<Point2<T>>> = linkage
        .names
        .iter()
        .zip(&linkage.guesses)
        .map(|(n, g)| prev.get(n).copied().or(*g))
        .collect();
    let pos = linkage.solve_step(&hints, step)?;
    Ok(linkage.names.iter().cloned().zip(pos).collect())
}
