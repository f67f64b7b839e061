//! Planar linkage kinematics.
//!
//! A mechanism is an ordered list of joints; each joint may only reference
//! joints declared before it, so one forward pass per step positions
//! everything. Infeasible configurations are reported as data in
//! [`SimResult::failure`], never as panics.

mod solve;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point2, Trajectory};
use crate::scalar::Scalar;

pub use solve::{solve_step, FailureReason, Linkage, SolveError, StepFailure};

/// Name every mechanism must give its end-effector joint.
pub const TARGET: &str = "target";

/// Where a joint hangs from: an earlier joint, or a fixed point in the frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parent<T> {
    Joint(String),
    Fixed(Point2<T>),
}

impl<T> Parent<T> {
    pub fn joint(name: impl Into<String>) -> Self {
        Parent::Joint(name.into())
    }

    pub fn joint_name(&self) -> Option<&str> {
        match self {
            Parent::Joint(n) => Some(n),
            Parent::Fixed(_) => None,
        }
    }
}

impl<T: Scalar> Parent<T> {
    pub fn fixed(x: T, y: T) -> Self {
        Parent::Fixed(Point2::new(x, y))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum JointKind<T> {
    /// Frame-fixed pivot.
    Static { x: T, y: T },
    /// Driven link rotating about `parent` by `angle_step` radians per step.
    Crank { parent: Parent<T>, distance: T, angle_step: T, initial: Option<Point2<T>> },
    /// Two-circle dyad: at `distance0` from `parent0` and `distance1` from `parent1`.
    Revolute { parent0: Parent<T>, distance0: T, parent1: Parent<T>, distance1: T, initial: Option<Point2<T>> },
    /// Slider: at `revolute_radius` from `parent0`, constrained to the line through `line_a` and `line_b`.
    Linear { parent0: Parent<T>, revolute_radius: T, line_a: Parent<T>, line_b: Parent<T>, initial: Option<Point2<T>> },
}

impl<T> JointKind<T> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            JointKind::Static { .. } => "Static",
            JointKind::Crank { .. } => "Crank",
            JointKind::Revolute { .. } => "Revolute",
            JointKind::Linear { .. } => "Linear",
        }
    }

    pub fn parents(&self) -> Vec<&Parent<T>> {
        match self {
            JointKind::Static { .. } => vec![],
            JointKind::Crank { parent, .. } => vec![parent],
            JointKind::Revolute { parent0, parent1, .. } => vec![parent0, parent1],
            JointKind::Linear { parent0, line_a, line_b, .. } => vec![parent0, line_a, line_b],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint<T> {
    pub name: String,
    #[serde(flatten)]
    pub kind: JointKind<T>,
}

impl<T> Joint<T> {
    pub fn new(name: impl Into<String>, kind: JointKind<T>) -> Self {
        Self { name: name.into(), kind }
    }
}

/// Declarative joint graph with a designated end-effector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismSpec<T> {
    pub joints: Vec<Joint<T>>,
    pub target_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("missing target joint")]
    MissingTarget,
    #[error("target joint must be named \"target\", got {0:?}")]
    WrongTargetName(String),
    #[error("no crank: the mechanism is not actuated")]
    NoCrank,
    #[error("duplicate joint name {0:?}")]
    DuplicateName(String),
    #[error("forward reference: joint {joint:?} references {reference:?}, which is not declared before it")]
    ForwardReference { joint: String, reference: String },
    #[error("joint {joint:?}: {field} must be positive")]
    NonPositiveDistance { joint: String, field: &'static str },
    #[error("joint {0:?}: crank angle step must be non-zero")]
    ZeroAngleStep(String),
    #[error("joint {joint:?}: {field} is not finite")]
    NonFinite { joint: String, field: &'static str },
    #[error("joint {0:?}: slider line needs two different references")]
    SameLineReferences(String),
}

impl ValidationError {
    /// Joint the violation is attached to, if any.
    pub fn joint(&self) -> Option<&str> {
        match self {
            ValidationError::DuplicateName(j)
            | ValidationError::ZeroAngleStep(j)
            | ValidationError::SameLineReferences(j)
            | ValidationError::ForwardReference { joint: j, .. }
            | ValidationError::NonPositiveDistance { joint: j, .. }
            | ValidationError::NonFinite { joint: j, .. } => Some(j),
            ValidationError::MissingTarget | ValidationError::WrongTargetName(_) | ValidationError::NoCrank => None,
        }
    }
}

impl<T: Scalar> MechanismSpec<T> {
    pub fn new(joints: Vec<Joint<T>>) -> Self {
        Self { joints, target_name: TARGET.to_string() }
    }

    pub fn joint(&self, name: &str) -> Option<&Joint<T>> {
        self.joints.iter().find(|j| j.name == name)
    }

    /// Checks every structural rule and returns all violations, in joint order.
    pub fn validate(&self) -> Result<(), Vec<ValidationError>> {
        let mut errors = Vec::new();
        let mut declared: Vec<&str> = Vec::new();

        for joint in &self.joints {
            let name = joint.name.as_str();
            if declared.contains(&name) {
                errors.push(ValidationError::DuplicateName(name.to_string()));
            }
            for parent in joint.kind.parents() {
                if let Some(r) = parent.joint_name() {
                    if !declared.contains(&r) {
                        errors.push(ValidationError::ForwardReference { joint: name.to_string(), reference: r.to_string() });
                    }
                }
            }
            check_values(joint, &mut errors);
            declared.push(name);
        }

        if self.target_name != TARGET {
            errors.push(ValidationError::WrongTargetName(self.target_name.clone()));
        } else if !self.joints.iter().any(|j| j.name == TARGET) {
            errors.push(ValidationError::MissingTarget);
        }
        if !self.joints.iter().any(|j| matches!(j.kind, JointKind::Crank { .. })) {
            errors.push(ValidationError::NoCrank);
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Structural complexity: the joint count.
    pub fn complexity(&self) -> usize {
        self.joints.len()
    }

    /// One full revolution of the slowest crank.
    pub fn default_steps(&self) -> usize {
        let slowest = self
            .joints
            .iter()
            .filter_map(|j| match j.kind {
                JointKind::Crank { angle_step, .. } => Some(angle_step.abs()),
                _ => None,
            })
            .fold(T::infinity(), T::min);
        if !(slowest > T::zero() && slowest.is_finite()) {
            return 1;
        }
        // Tiny slack so 2π/(2π/N) lands on N rather than N + 1.
        let revs = T::TAU() / slowest - T::lit(1e-9);
        revs.ceil().to_usize().unwrap_or(1).max(1)
    }
}

fn check_values<T: Scalar>(joint: &Joint<T>, errors: &mut Vec<ValidationError>) {
    let name = &joint.name;
    let mut bad: Vec<&'static str> = Vec::new();
    let mut finite = |v: T, field: &'static str| {
        if !v.is_finite() {
            if !bad.contains(&field) {
                bad.push(field);
            }
            false
        } else {
            true
        }
    };
    let mut positive = Vec::new();
    match &joint.kind {
        JointKind::Static { x, y } => {
            finite(*x, "x");
            finite(*y, "y");
        }
        JointKind::Crank { distance, angle_step, initial, parent } => {
            if finite(*distance, "distance") {
                positive.push((*distance, "distance"));
            }
            if finite(*angle_step, "angle_step") && *angle_step == T::zero() {
                errors.push(ValidationError::ZeroAngleStep(name.clone()));
            }
            check_initial(initial, &mut finite);
            check_fixed(parent, "parent", &mut finite);
        }
        JointKind::Revolute { parent0, distance0, parent1, distance1, initial } => {
            if finite(*distance0, "distance0") {
                positive.push((*distance0, "distance0"));
            }
            if finite(*distance1, "distance1") {
                positive.push((*distance1, "distance1"));
            }
            check_initial(initial, &mut finite);
            check_fixed(parent0, "parent0", &mut finite);
            check_fixed(parent1, "parent1", &mut finite);
        }
        JointKind::Linear { parent0, revolute_radius, line_a, line_b, initial } => {
            if finite(*revolute_radius, "revolute_radius") {
                positive.push((*revolute_radius, "revolute_radius"));
            }
            check_initial(initial, &mut finite);
            check_fixed(parent0, "parent0", &mut finite);
            check_fixed(line_a, "line_a", &mut finite);
            check_fixed(line_b, "line_b", &mut finite);
            if line_a == line_b {
                errors.push(ValidationError::SameLineReferences(name.clone()));
            }
        }
    }
    for field in bad {
        errors.push(ValidationError::NonFinite { joint: name.clone(), field });
    }
    for (v, field) in positive {
        if !(v > T::zero()) {
            errors.push(ValidationError::NonPositiveDistance { joint: name.clone(), field });
        }
    }
}

fn check_initial<T: Scalar>(initial: &Option<Point2<T>>, finite: &mut impl FnMut(T, &'static str) -> bool) {
    if let Some(p) = initial {
        finite(p.x, "x");
        finite(p.y, "y");
    }
}

fn check_fixed<T: Scalar>(parent: &Parent<T>, field: &'static str, finite: &mut impl FnMut(T, &'static str) -> bool) {
    if let Parent::Fixed(p) = parent {
        finite(p.x, field);
        finite(p.y, field);
    }
}

/// Output of [`simulate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult<T> {
    /// Trace of the target joint; truncated at the failing step on failure.
    pub trajectory: Vec<Point2<T>>,
    pub per_joint_traces: BTreeMap<String, Vec<Point2<T>>>,
    /// Steps requested.
    pub steps: usize,
    pub success: bool,
    pub failure: Option<StepFailure>,
    /// Whether the run covers one full revolution of the slowest crank.
    pub full_cycle: bool,
}

impl<T: Scalar> SimResult<T> {
    /// The target trace as a [`Trajectory`]; `None` when nothing was solved.
    pub fn target_trajectory(&self) -> Option<Trajectory<T>> {
        Trajectory::new(self.trajectory.clone(), self.success && self.full_cycle).ok()
    }

    /// One-paragraph summary for prompts and logs.
    pub fn summary(&self) -> String {
        match &self.failure {
            None => format!(
                "Simulation succeeded: {} steps solved, target joint trace has {} points.",
                self.steps,
                self.trajectory.len()
            ),
            Some(f) => format!("Simulation failed: {f}. {} of {} steps solved before the failure.", f.step, self.steps),
        }
    }
}

impl<T: fmt::Display> fmt::Display for SimResult<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => write!(f, "success ({} steps)", self.steps),
            Some(e) => write!(f, "failure: {e}"),
        }
    }
}

/// Runs the mechanism for `steps` steps, or one full revolution of the
/// slowest crank when `None`.
pub fn simulate<T: Scalar>(spec: &MechanismSpec<T>, steps: Option<usize>) -> Result<SimResult<T>, Vec<ValidationError>> {
    let linkage = Linkage::compile(spec)?;
    let default_steps = spec.default_steps();
    let steps = steps.unwrap_or(default_steps).max(1);

    let names = linkage.names();
    let mut traces: Vec<Vec<Point2<T>>> = vec![Vec::with_capacity(steps); names.len()];
    let mut prev = linkage.initial_guesses();
    let mut failure = None;
    for k in 0..steps {
        match linkage.solve_step(&prev, k) {
            Ok(pos) => {
                for (trace, p) in traces.iter_mut().zip(&pos) {
                    trace.push(*p);
                }
                prev = pos.into_iter().map(Some).collect();
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }

    let target = linkage.target_index();
    Ok(SimResult {
        trajectory: traces[target].clone(),
        per_joint_traces: names.iter().cloned().zip(traces).collect(),
        steps,
        success: failure.is_none(),
        failure,
        full_cycle: steps >= default_steps,
    })
}

/// Structural complexity of a mechanism (joint count).
pub fn complexity<T: Scalar>(spec: &MechanismSpec<T>) -> usize {
    spec.complexity()
}
