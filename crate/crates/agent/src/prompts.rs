//! Designer, critic and revision prompts.
//!
//! Templates are line based. `{name}` is substituted from the context; a line
//! whose placeholder has no value is dropped entirely, and `{?name}` at the
//! start of a line keeps the line only when `name` has a value.

use std::fmt::Write as _;

use mechsynth_core::geometry::Point2;
use thiserror::Error;

pub const DESIGNER_TEMPLATE: &str = include_str!("../templates/designer.txt");
pub const CRITIC_TEMPLATE: &str = include_str!("../templates/critic.txt");
pub const REVISION_TEMPLATE: &str = include_str!("../templates/revision.txt");
/// Reference for the mechanism language, shown to designers as the API documentation.
pub const API_DOC: &str = include_str!("../templates/api_doc.txt");

/// Built-in example mechanisms for the `Examples` section.
pub const BUILTIN_EXAMPLES: [&str; 3] = [
    "crank = Crank((0, 0), distance=1, angle=0.1, x=0, y=0)\n\
     target = Linear(crank, revolute_radius=1.5, la=(0, 0), lb=(1, 0), x=2, y=0)",
    "A = Static(0, 0)\n\
     B = Static(5, 0)\n\
     crank = Crank(A, distance=2, angle=0.1)\n\
     rocker = Revolute(crank, 5, B, 4)\n\
     target = Revolute(crank, 3, rocker, 3)",
    "crank = Crank((0, 0), distance=1, angle=0.1)\n\
     slider = Linear(crank, revolute_radius=3, la=(0, 0), lb=(1, 0))\n\
     target = Revolute(crank, 2, slider, 2)",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("prompt field {0:?} is required but missing")]
    MissingField(&'static str),
    #[error("template references unknown placeholder {0:?}")]
    UnknownPlaceholder(String),
}

/// Everything a prompt may show. Optional fields drop their template lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PromptContext {
    pub api_doc: String,
    /// `(mechanism_text, score)` pairs.
    pub examples: Vec<(String, Option<f64>)>,
    pub memory_block: Option<String>,
    pub surrogate_line: Option<String>,
    pub score_line: Option<String>,
    pub description: String,
    pub points: String,
    pub target_equation: String,
    pub designer_response: Option<String>,
    pub critique_response: Option<String>,
    pub simulator_output: Option<String>,
}

impl PromptContext {
    /// Context with the built-in API doc and the first `num_examples` built-in examples.
    pub fn with_defaults(num_examples: usize) -> Self {
        Self {
            api_doc: API_DOC.trim_end().to_string(),
            examples: builtin_examples(num_examples),
            ..Self::default()
        }
    }

    fn examples_text(&self) -> Option<String> {
        if self.examples.is_empty() {
            return None;
        }
        let mut out = String::new();
        for (i, (text, score)) in self.examples.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = write!(out, "# Example {}\n{}", i + 1, text.trim_end());
            if let Some(s) = score {
                let _ = write!(out, "\n# Chamfer distance: {s:.4}");
            }
        }
        Some(out)
    }

    fn value(&self, name: &str) -> Result<Option<String>, PromptError> {
        let non_empty = |s: &str| (!s.trim().is_empty()).then(|| s.to_string());
        Ok(match name {
            "api_doc" => non_empty(&self.api_doc),
            "examples" => self.examples_text(),
            "memory" => self.memory_block.clone(),
            "equation" => self.surrogate_line.clone(),
            "score" => self.score_line.clone(),
            "description" => non_empty(&self.description),
            "points" => non_empty(&self.points),
            "target_equation" => non_empty(&self.target_equation),
            "designer_response" => self.designer_response.clone(),
            "critique_response" => self.critique_response.clone(),
            "simulator_output" => self.simulator_output.clone(),
            other => return Err(PromptError::UnknownPlaceholder(other.to_string())),
        })
    }
}

pub fn builtin_examples(n: usize) -> Vec<(String, Option<f64>)> {
    BUILTIN_EXAMPLES.iter().take(n).map(|e| (e.to_string(), None)).collect()
}

/// Target points as `(x, y), (x, y), ...` with four decimals.
pub fn format_points(points: &[Point2<f64>]) -> String {
    points.iter().map(|p| format!("({:.4}, {:.4})", p.x, p.y)).collect::<Vec<_>>().join(", ")
}

/// Renders `template` against `ctx`; `required` names fields that must be present.
pub fn render(template: &str, ctx: &PromptContext, required: &[&'static str]) -> Result<String, PromptError> {
    for field in required {
        if ctx.value(field)?.is_none() {
            return Err(PromptError::MissingField(field));
        }
    }
    let mut out = String::new();
    'lines: for line in template.lines() {
        let mut line = line;
        if let Some(rest) = line.strip_prefix("{?") {
            let Some(end) = rest.find('}') else {
                return Err(PromptError::UnknownPlaceholder(rest.to_string()));
            };
            if ctx.value(&rest[..end])?.is_none() {
                continue;
            }
            line = &rest[end + 1..];
        }
        let mut rendered = String::new();
        let mut rest = line;
        while let Some(start) = rest.find('{') {
            let Some(len) = rest[start..].find('}') else { break };
            let name = &rest[start + 1..start + len];
            let Some(value) = ctx.value(name)? else { continue 'lines };
            rendered.push_str(&rest[..start]);
            rendered.push_str(&value);
            rest = &rest[start + len + 1..];
        }
        rendered.push_str(rest);
        out.push_str(&rendered);
        out.push('\n');
    }
    Ok(out)
}

pub fn compose_designer_prompt(ctx: &PromptContext) -> Result<String, PromptError> {
    render(DESIGNER_TEMPLATE, ctx, &["api_doc", "examples", "description", "points", "target_equation"])
}

pub fn compose_critic_prompt(ctx: &PromptContext) -> Result<String, PromptError> {
    render(CRITIC_TEMPLATE, ctx, &["description", "simulator_output", "designer_response"])
}

pub fn compose_revision_prompt(ctx: &PromptContext) -> Result<String, PromptError> {
    render(REVISION_TEMPLATE, ctx, &["designer_response", "critique_response", "simulator_output"])
}

#[cfg(test)]
mod tests {
    use super::*;
    use mechsynth_core::dsl::parse;
    use mechsynth_core::linkage::simulate;

    fn base() -> PromptContext {
        PromptContext {
            description: "Design a planar mechanism whose joint named \"target\" traces a circle of radius 1 centred at (0, 0).".into(),
            points: format_points(&[Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]),
            target_equation: "x^2 + y^2 = 1".into(),
            ..PromptContext::with_defaults(2)
        }
    }

    #[test]
    fn builtin_examples_simulate() {
        for e in BUILTIN_EXAMPLES {
            let spec = parse::<f64>(e).unwrap();
            assert!(simulate(&spec, None).unwrap().success, "{e}");
        }
    }

    #[test]
    fn minimal_designer_prompt_omits_optional_sections() {
        let p = compose_designer_prompt(&base()).unwrap();
        assert!(p.contains("# Example 1\ncrank = Crank") && p.contains("# Example 2\nA = Static"));
        assert!(!p.contains("# Example 3"));
        assert!(!p.contains("Previously validated"));
        assert!(!p.contains("The analytical equation describing"));
        assert!(!p.contains("Our goal is to minimise"));
        assert!(p.ends_with("Planar Mechanism Code:\n"));
        assert!(p.contains("all these points: (1.0000, 0.0000), (0.0000, 1.0000)\n"));
    }

    #[test]
    fn surrogate_and_score_lines() {
        let ctx = PromptContext {
            surrogate_line: Some("x(t)=cos(t)".into()),
            score_line: Some("3.2".into()),
            ..base()
        };
        let p = compose_designer_prompt(&ctx).unwrap();
        assert!(p.contains(
            "The analytical equation describing the motion of the target joint in the above code is given by: x(t)=cos(t)\n\
             The Chamfer distance of the target equation in the above code is: 3.2\n\
             Our goal is to minimise the distance."
        ));
    }

    #[test]
    fn missing_field_is_named() {
        let ctx = PromptContext { target_equation: String::new(), ..base() };
        assert_eq!(compose_designer_prompt(&ctx), Err(PromptError::MissingField("target_equation")));
        assert_eq!(compose_critic_prompt(&base()), Err(PromptError::MissingField("simulator_output")));
        let ctx = PromptContext { designer_response: Some("x".into()), simulator_output: Some("ok".into()), ..base() };
        assert_eq!(compose_revision_prompt(&ctx), Err(PromptError::MissingField("critique_response")));
    }

    #[test]
    fn critic_places_memory_before_response() {
        let ctx = PromptContext {
            memory_block: Some("MEMORY".into()),
            designer_response: Some("RESPONSE".into()),
            simulator_output: Some("Simulation failed: unreachable configuration at step 9, joint target".into()),
            ..base()
        };
        let p = compose_critic_prompt(&ctx).unwrap();
        assert!(p.find("MEMORY").unwrap() < p.find("Response: RESPONSE").unwrap());
        assert!(p.contains("Simulator Output: Simulation failed: unreachable configuration at step 9, joint target"));
        assert!(p.contains("Structural Complexity:") && p.contains("Design Elegance:"));
    }

    #[test]
    fn placeholder_in_values_is_not_expanded() {
        let ctx = PromptContext { description: "uses {memory} literally".into(), ..base() };
        let p = compose_designer_prompt(&ctx).unwrap();
        assert!(p.contains("uses {memory} literally"));
    }

    #[test]
    fn unknown_placeholder_is_an_error() {
        assert_eq!(render("a {nope} b", &base(), &[]), Err(PromptError::UnknownPlaceholder("nope".into())));
    }
}
