//! Offline designer that reads the target equation out of the prompt and
//! answers with a closed-form mechanism.
//!
//! Circles and line segments are traced exactly (a crank, and a slider-crank
//! whose stroke spans the segment). Other families get the nearest single
//! crank circle. `jitter` scales every size parameter by a seeded random
//! factor in `1 ± jitter`; each revision halves it, so feedback pays off.

use std::sync::Mutex;

use mechsynth_core::curves::{parse_equation, CurveSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backend::{AgentBackend, BackendError, GenerationParams};

const TARGET_LINE: &str = "Target analytical equation of the motion of the target joint: ";

#[derive(Debug, Default)]
struct State {
    target: Option<CurveSpec<f64>>,
    revisions: u32,
}

#[derive(Debug)]
pub struct OracleBackend {
    name: String,
    angle_step: f64,
    jitter: f64,
    state: Mutex<State>,
}

impl OracleBackend {
    pub fn new(name: impl Into<String>, angle_step: f64, jitter: f64) -> Self {
        Self { name: name.into(), angle_step, jitter, state: Mutex::new(State::default()) }
    }

    fn scale(&self, revisions: u32, seed: Option<u64>) -> f64 {
        if self.jitter == 0.0 {
            return 1.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
        let u: f64 = rng.random_range(-1.0..=1.0);
        1.0 + self.jitter * 0.5f64.powi(revisions as i32) * u
    }
}

/// Mechanism text for `curve` with every size multiplied by `f`.
pub fn oracle_design(curve: &CurveSpec<f64>, angle_step: f64, f: f64) -> String {
    let crank = |cx: f64, cy: f64, r: f64| format!("target = Crank(({cx}, {cy}), distance={}, angle={angle_step})", r * f);
    match *curve {
        CurveSpec::Circle { r, x1, y1 } => crank(x1, y1, r),
        CurveSpec::Ellipse { a, b, x1, y1 } => crank(x1, y1, 0.5 * (a + b)),
        CurveSpec::Line { x1, y1, x2, y2 } => {
            // Crank pivot on the line, one link length behind the midpoint: the
            // slider then sweeps midpoint ± crank radius.
            let len = (x2 - x1).hypot(y2 - y1);
            let (ux, uy) = ((x2 - x1) / len, (y2 - y1) / len);
            let (mx, my) = (0.5 * (x1 + x2), 0.5 * (y1 + y2));
            let (cx, cy) = (mx - len * ux, my - len * uy);
            format!(
                "crank = Crank(({cx}, {cy}), distance={}, angle={angle_step})\n\
                 target = Linear(crank, revolute_radius={len}, la=({x1}, {y1}), lb=({x2}, {y2}))",
                0.5 * len * f
            )
        }
        // Osculating circle at the vertex.
        CurveSpec::Parabola { a, h, k } => crank(h, k + 0.5 / a, 0.5 / a.abs()),
        CurveSpec::Lemniscate { a } => crank(0.0, 0.0, a * std::f64::consts::FRAC_1_SQRT_2),
        CurveSpec::Naca { .. } => crank(0.5, 0.0, 0.5),
    }
}

fn reply(code: &str) -> String {
    format!(
        "Step 1: choose the driving crank and its pivot from the target geometry.\n\
         Step 2: size the links so the target joint follows the requested path.\n\
         ```\n{code}\n```\n"
    )
}

impl AgentBackend for OracleBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, BackendError> {
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        if prompt.starts_with("You are a reviewer") {
            return Ok("The mechanism has the right topology. The traced path differs in size from the target; \
                       adjust the link lengths so the target joint matches the required dimensions."
                .into());
        }
        if prompt.starts_with("You previously generated") {
            state.revisions += 1;
        } else if let Some(eq) = prompt.lines().find_map(|l| l.strip_prefix(TARGET_LINE)) {
            let curve = parse_equation::<f64>(eq).map_err(|e| BackendError::Malformed(e.to_string()))?;
            state.target = Some(curve);
        }
        let Some(curve) = state.target else {
            return Err(BackendError::Malformed("no target equation seen yet".into()));
        };
        let f = self.scale(state.revisions, params.seed);
        Ok(reply(&oracle_design(&curve, self.angle_step, f)))
    }
}
