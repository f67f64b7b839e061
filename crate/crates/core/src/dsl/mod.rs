//! Line-oriented mechanism description language.
//!
//! ```text
//! # one joint per line
//! crank  = Crank((0, 0), distance=1, angle=0.1)
//! target = Linear(crank, revolute_radius=1.5, la=(0, 0), lb=(1, 0))
//! ```
//!
//! Joint kinds mirror the linkage model: `Static(x, y)`,
//! `Crank(parent, distance, angle_step[, x, y])`,
//! `Revolute(p0, d0, p1, d1[, x, y])` and
//! `Linear(p0, revolute_radius, la, lb[, x, y])`. Parent slots take an
//! earlier joint name or a literal `(x, y)` anchor. The optional trailing
//! `x, y` is the initial position guess.

mod extract;
mod format;
mod lexer;
mod parse;

use std::fmt;

use thiserror::Error;

use crate::linkage::{Joint, MechanismSpec, ValidationError};
use crate::scalar::Scalar;

pub use extract::extract_block;
pub use format::{format_canonical, format_joint};
pub use parse::{parse, parse_document};

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslErrorKind {
    #[error("no statements")]
    NoStatements,
    #[error("lexical error: {0}")]
    Lexical(String),
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown joint kind {0:?}")]
    UnknownKind(String),
    #[error("argument error: {0}")]
    Arity(String),
    #[error("keyword error: {0}")]
    Keyword(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("{0}")]
    Validation(ValidationError),
}

/// One diagnostic. Document-level problems (such as a missing target) have no span.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct DslError {
    pub span: Option<Span>,
    pub kind: DslErrorKind,
}

impl DslError {
    pub(crate) fn at(line: usize, column: usize, kind: DslErrorKind) -> Self {
        Self { span: Some(Span { line, column }), kind }
    }

    pub fn line(&self) -> Option<usize> {
        self.span.map(|s| s.line)
    }
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(f, "{s}: {}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

/// Renders an error list one per line, as fed back to designers.
pub fn render_errors(errors: &[DslError]) -> String {
    errors.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n")
}

/// A parsed joint declaration and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Statement<T> {
    pub joint: Joint<T>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DslDocument<T> {
    pub statements: Vec<Statement<T>>,
}

impl<T: Scalar> DslDocument<T> {
    pub fn to_spec(&self) -> MechanismSpec<T> {
        MechanismSpec::new(self.statements.iter().map(|s| s.joint.clone()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::linkage::{simulate, JointKind, Parent};

    const PROMPT_EXAMPLE: &str = "crank = Crank((0,0), distance=1, angle=0.1)\n\
                                  target = Linear(crank, revolute_radius=1.5, la=(0,0), lb=(1,0))\n";

    #[test]
    fn parses_prompt_example() {
        let spec = parse::<f64>(PROMPT_EXAMPLE).unwrap();
        assert_eq!(spec.joints.len(), 2);
        assert_eq!(
            spec.joints[0].kind,
            JointKind::Crank { parent: Parent::fixed(0.0, 0.0), distance: 1.0, angle_step: 0.1, initial: None }
        );
        assert!(matches!(
            &spec.joints[1].kind,
            JointKind::Linear { parent0: Parent::Joint(p), revolute_radius, .. } if p == "crank" && *revolute_radius == 1.5
        ));
        assert!(simulate(&spec, None).unwrap().success);
    }

    #[test]
    fn empty_input_has_no_statements() {
        for text in ["", "\n\n", "# just a comment\n"] {
            let errs = parse::<f64>(text).unwrap_err();
            assert_eq!(errs.len(), 1);
            assert_eq!(errs[0].to_string(), "no statements");
        }
    }

    #[test]
    fn forward_reference_has_line_number() {
        let errs = parse::<f64>("a = Crank(b, 1, 0.1)").unwrap_err();
        let fwd = errs
            .iter()
            .find(|e| matches!(e.kind, DslErrorKind::Validation(crate::linkage::ValidationError::ForwardReference { .. })))
            .expect("forward reference reported");
        assert_eq!(fwd.line(), Some(1));
    }

    #[test]
    fn duplicate_name_blames_second_line() {
        let text = "a = Static(0, 0)\ntarget = Crank(a, 1, 0.1)\na = Static(1, 1)\n";
        let errs = parse::<f64>(text).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].line(), Some(3));
    }

    #[test]
    fn errors_are_collected_across_lines() {
        let text = "a = Static(0, 0)\nb = Hinge(a)\nc = Crank(a, 1)\nd = Revolute(a, 1, a, 2, x=1)\ne = Static(0 0)\nf = Crank(a, 1, 0.1, speed=2)\n";
        let errs = parse::<f64>(text).unwrap_err();
        let lines: Vec<_> = errs.iter().map(|e| e.line().unwrap()).collect();
        assert_eq!(lines, vec![2, 3, 4, 5, 6]);
        assert!(matches!(errs[0].kind, DslErrorKind::UnknownKind(ref k) if k == "Hinge"));
        assert!(errs[1].to_string().contains("missing argument(s): angle_step"));
        assert!(errs[2].to_string().contains("x and y must be given together"));
        assert!(matches!(errs[3].kind, DslErrorKind::Syntax(_)));
        assert!(matches!(errs[4].kind, DslErrorKind::Keyword(_)));
    }

    #[test]
    fn argument_rules() {
        let cases = [
            ("target = Crank(parent=(0,0), 1, 0.1)", "positional argument after keyword"),
            ("target = Crank((0,0), 1, 0.1, 1, 2, 3)", "at most 5"),
            ("target = Crank((0,0), 1, 0.1, distance=2)", "more than once"),
            ("target = Crank(1, 1, 0.1)", "joint name or (x, y) anchor"),
            ("target = Crank((0,0), a, 0.1)", "must be a number"),
            ("target = np.Crank((0,0), 1, 0.1)", "module prefix"),
        ];
        for (text, needle) in cases {
            let errs = parse::<f64>(text).unwrap_err();
            assert!(errs.iter().any(|e| e.to_string().contains(needle)), "{text}: {}", render_errors(&errs));
        }
    }

    #[test]
    fn accepts_prefix_comments_and_initial_guess() {
        let text = "# four-bar\nA = pl.Static(x=0, y=0)  # ground\nC = pl.Crank(A, 1, 0.1, 0, 1)\n\ntarget = Revolute(p1=(3, 0), d1=2.5, p0=C, d0=3, y=2, x=1.5)\n";
        let doc = parse_document::<f64>(text).unwrap();
        assert_eq!(doc.statements[1].span, Span { line: 3, column: 1 });
        let spec = doc.to_spec();
        assert!(matches!(spec.joints[1].kind, JointKind::Crank { initial: Some(p), .. } if p == Point2::new(0.0, 1.0)));
        assert!(matches!(
            spec.joints[2].kind,
            JointKind::Revolute { initial: Some(p), distance0, .. } if p == Point2::new(1.5, 2.0) && distance0 == 3.0
        ));
    }

    #[test]
    fn canonical_form_is_fixed() {
        let spec = parse::<f64>(PROMPT_EXAMPLE).unwrap();
        assert_eq!(
            format_canonical(&spec),
            "crank = Crank(parent=(0, 0), distance=1, angle_step=0.1)\n\
             target = Linear(p0=crank, revolute_radius=1.5, la=(0, 0), lb=(1, 0))\n"
        );
    }

    #[test]
    fn keyword_order_does_not_change_canonical_text() {
        let a = parse::<f64>("A = Crank((0, 0), 1, 0.1)\ntarget = Revolute(A, 2, (4, 0), 3, 1, 1)\n").unwrap();
        let b = parse::<f64>("A = Crank(angle=0.1, r=1, parent=(0,0))\ntarget = Revolute(d1=3, x=1, p1=(4,0), y=1, d0=2, p0=A)\n").unwrap();
        assert_eq!(format_canonical(&a), format_canonical(&b));
    }

    #[test]
    fn extract_prefers_last_fence() {
        let reply = "Here is a first try:\n```python\na = Static(0, 0)\n```\nAnd the fix:\n```\ntarget = Crank((0,0), 1, 0.1)\n```\nDone.";
        assert_eq!(extract_block(reply).as_deref(), Some("target = Crank((0,0), 1, 0.1)"));
    }

    #[test]
    fn extract_falls_back_to_statement_run() {
        assert_eq!(extract_block("This design should trace the curve well."), None);
        let reply = "Try:\na = Static(0, 0)\nSo:\nA = Static(0, 0)\n# drive\ntarget = Crank(A, 1, 0.1)\nthat's it";
        assert_eq!(extract_block(reply).as_deref(), Some("A = Static(0, 0)\n# drive\ntarget = Crank(A, 1, 0.1)"));
        let unterminated = "```\ntarget = Crank((0,0), 1, 0.1)\n";
        assert_eq!(extract_block(unterminated).as_deref(), Some("target = Crank((0,0), 1, 0.1)"));
    }

    #[test]
    fn parses_f32() {
        let spec = parse::<f32>(PROMPT_EXAMPLE).unwrap();
        assert!(simulate(&spec, None).unwrap().success);
    }
}
