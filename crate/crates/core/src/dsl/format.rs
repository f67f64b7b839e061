use crate::geometry::Point2;
use crate::linkage::{Joint, JointKind, MechanismSpec, Parent};
use crate::scalar::Scalar;

fn parent<T: Scalar>(p: &Parent<T>) -> String {
    match p {
        Parent::Joint(n) => n.clone(),
        Parent::Fixed(pt) => format!("({}, {})", pt.x, pt.y),
    }
}

fn initial<T: Scalar>(p: &Option<Point2<T>>) -> String {
    p.map(|p| format!(", x={}, y={}", p.x, p.y)).unwrap_or_default()
}

/// One canonical statement line: every argument by keyword, fixed order.
pub fn format_joint<T: Scalar>(joint: &Joint<T>) -> String {
    let args = match &joint.kind {
        JointKind::Static { x, y } => format!("Static(x={x}, y={y})"),
        JointKind::Crank { parent: p, distance, angle_step, initial: i } => {
            format!("Crank(parent={}, distance={distance}, angle_step={angle_step}{})", parent(p), initial(i))
        }
        JointKind::Revolute { parent0, distance0, parent1, distance1, initial: i } => format!(
            "Revolute(p0={}, d0={distance0}, p1={}, d1={distance1}{})",
            parent(parent0),
            parent(parent1),
            initial(i)
        ),
        JointKind::Linear { parent0, revolute_radius, line_a, line_b, initial: i } => format!(
            "Linear(p0={}, revolute_radius={revolute_radius}, la={}, lb={}{})",
            parent(parent0),
            parent(line_a),
            parent(line_b),
            initial(i)
        ),
    };
    format!("{} = {args}", joint.name)
}

/// Canonical text of a mechanism, one statement per line with a trailing newline.
pub fn format_canonical<T: Scalar>(spec: &MechanismSpec<T>) -> String {
    spec.joints.iter().map(|j| format_joint(j) + "\n").collect()
}
