//! The benchmark generator: random instances of each curve family with their
//! sampled target profiles.
//!
//! Randomness comes from ChaCha8 seeded through `seed_from_u64`, so a dataset
//! is a pure function of its seed and configuration on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{equation_text, sample_points, CurveFamily, CurveSpec, NacaProfile, SampleMode, SamplingConfig};
use crate::geometry::Trajectory;
use crate::scalar::Scalar;

/// Uniform sampling domains for every family parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamRanges {
    /// Circle radius and ellipse/lemniscate scale.
    pub size: (f64, f64),
    /// Centres, vertices and line endpoints, per coordinate.
    pub position: (f64, f64),
    /// Magnitude of the parabola's leading coefficient; the sign is drawn separately.
    pub parabola_a: (f64, f64),
    pub line_min_separation: f64,
    /// Inclusive code range; codes the formulas cannot evaluate are skipped.
    pub naca_codes: (u16, u16),
}

impl Default for ParamRanges {
    fn default() -> Self {
        Self {
            size: (0.5, 5.0),
            position: (-5.0, 5.0),
            parabola_a: (0.2, 3.0),
            line_min_separation: 0.5,
            naca_codes: (2000, 3000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub families: Vec<CurveFamily>,
    pub instances_per_family: usize,
    pub n_points: usize,
    pub ranges: ParamRanges,
    pub sampling: SamplingConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            families: CurveFamily::ALL.to_vec(),
            instances_per_family: 5,
            n_points: 4,
            ranges: ParamRanges::default(),
            sampling: SamplingConfig { mode: SampleMode::Random, ..SamplingConfig::default() },
        }
    }
}

/// One benchmark task: a target curve, its sampled profile and equation text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Scalar"))]
pub struct TaskInstance<T> {
    pub id: String,
    #[serde(flatten)]
    pub curve: CurveSpec<T>,
    #[serde(rename = "points")]
    pub target_points: Trajectory<T>,
    pub equation_text: String,
    pub seed: u64,
}

impl<T: Scalar> TaskInstance<T> {
    pub fn new(id: impl Into<String>, curve: CurveSpec<T>, n_points: usize, sampling: &SamplingConfig, seed: u64) -> Self {
        Self {
            id: id.into(),
            target_points: sample_points(&curve, n_points, sampling, seed),
            equation_text: equation_text(&curve),
            curve,
            seed,
        }
    }
}

fn draw<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo < hi {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn random_curve<T: Scalar, R: Rng>(family: CurveFamily, ranges: &ParamRanges, rng: &mut R) -> CurveSpec<T> {
    let pos = ranges.position;
    match family {
        CurveFamily::Circle => CurveSpec::Circle {
            r: T::lit(draw(rng, ranges.size)),
            x1: T::lit(draw(rng, pos)),
            y1: T::lit(draw(rng, pos)),
        },
        CurveFamily::Ellipse => CurveSpec::Ellipse {
            a: T::lit(draw(rng, ranges.size)),
            b: T::lit(draw(rng, ranges.size)),
            x1: T::lit(draw(rng, pos)),
            y1: T::lit(draw(rng, pos)),
        },
        CurveFamily::Line => loop {
            let (x1, y1, x2, y2) = (draw(rng, pos), draw(rng, pos), draw(rng, pos), draw(rng, pos));
            if (x2 - x1).hypot(y2 - y1) >= ranges.line_min_separation {
                break CurveSpec::Line { x1: T::lit(x1), y1: T::lit(y1), x2: T::lit(x2), y2: T::lit(y2) };
            }
        },
        CurveFamily::Parabola => {
            let magnitude = draw(rng, ranges.parabola_a);
            let a = if rng.random_bool(0.5) { magnitude } else { -magnitude };
            CurveSpec::Parabola { a: T::lit(a), h: T::lit(draw(rng, pos)), k: T::lit(draw(rng, pos)) }
        }
        CurveFamily::Lemniscate => CurveSpec::Lemniscate { a: T::lit(draw(rng, ranges.size)) },
        CurveFamily::Naca => {
            let (lo, hi) = ranges.naca_codes;
            let valid: Vec<u16> = (lo..=hi).filter(|&c| NacaProfile::<T>::from_code(c).is_some()).collect();
            assert!(!valid.is_empty(), "NACA code range {lo}..={hi} has no evaluable codes");
            CurveSpec::Naca { series: valid[rng.random_range(0..valid.len())] }
        }
    }
}

/// `families × instances_per_family` tasks, family-major. Each instance gets
/// its own derived seed, which alone reproduces its parameters and profile.
pub fn generate_dataset<T: Scalar>(seed: u64, cfg: &DatasetConfig) -> Vec<TaskInstance<T>> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(cfg.families.len() * cfg.instances_per_family);
    for &family in &cfg.families {
        for j in 0..cfg.instances_per_family {
            let instance_seed: u64 = master.random();
            let mut rng = ChaCha8Rng::seed_from_u64(instance_seed);
            let curve = random_curve::<T, _>(family, &cfg.ranges, &mut rng);
            let id = format!("{}-{j}", family.name());
            out.push(TaskInstance::new(id, curve, cfg.n_points, &cfg.sampling, instance_seed));
        }
    }
    out
}
