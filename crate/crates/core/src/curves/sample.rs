use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::naca::{NacaProfile, Surface};
use super::CurveSpec;
use crate::geometry::{Point2, Trajectory};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    /// Evenly spaced parameter values.
    #[default]
    Uniform,
    /// Parameter values drawn uniformly at random, then sorted.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub mode: SampleMode,
    /// Parabolas are sampled over `x ∈ [h − w, h + w]`.
    pub parabola_half_width: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { mode: SampleMode::Uniform, parabola_half_width: 2.0 }
    }
}

/// Parameter in `[0, 1]` mapped onto the family's natural parametrisation.
fn point_at<T: Scalar>(curve: &CurveSpec<T>, s: T, cfg: &SamplingConfig, surface: Surface) -> Point2<T> {
    let tau = T::TAU();
    match *curve {
        CurveSpec::Circle { r, x1, y1 } => Point2::new(x1, y1) + Point2::from_angle(s * tau) * r,
        CurveSpec::Ellipse { a, b, x1, y1 } => {
            let (sn, cs) = (s * tau).sin_cos();
            Point2::new(x1 + a * cs, y1 + b * sn)
        }
        CurveSpec::Line { x1, y1, x2, y2 } => Point2::new(x1 + s * (x2 - x1), y1 + s * (y2 - y1)),
        CurveSpec::Parabola { a, h, k } => {
            let w = T::lit(cfg.parabola_half_width);
            let x = h - w + T::lit(2.0) * w * s;
            let dx = x - h;
            Point2::new(x, a * dx * dx + k)
        }
        CurveSpec::Lemniscate { a } => lemniscate_point(a, s * tau),
        CurveSpec::Naca { series } => {
            let profile = NacaProfile::<T>::from_code(series).expect("validated NACA code");
            // Cosine clustering toward both edges.
            let x = (T::one() - (s * T::PI()).cos()) / T::lit(2.0);
            profile.surface_point_u(x.max(T::zero()).sqrt(), surface)
        }
    }
}

/// Standard rational parametrisation of the lemniscate of Bernoulli.
pub(crate) fn lemniscate_point<T: Scalar>(a: T, theta: T) -> Point2<T> {
    let (s, c) = theta.sin_cos();
    let scale = a * T::SQRT_2() / (T::one() + s * s);
    Point2::new(scale * c, scale * c * s)
}

/// `n` points on `curve`.
///
/// Periodic families spread parameters over `[0, 2π)`, open ones over their
/// full extent; NACA points alternate upper and lower surfaces along the chord.
/// `seed` only matters in [`SampleMode::Random`].
pub fn sample_points<T: Scalar>(curve: &CurveSpec<T>, n: usize, cfg: &SamplingConfig, seed: u64) -> Trajectory<T> {
    assert!(n >= 1, "sample_points needs n >= 1");
    let periodic = matches!(curve, CurveSpec::Circle { .. } | CurveSpec::Ellipse { .. } | CurveSpec::Lemniscate { .. });
    let params: Vec<T> = match cfg.mode {
        SampleMode::Uniform => (0..n)
            .map(|i| {
                if periodic {
                    T::from_usize_lossy(i) / T::from_usize_lossy(n)
                } else if n == 1 {
                    T::lit(0.5)
                } else {
                    T::from_usize_lossy(i) / T::from_usize_lossy(n - 1)
                }
            })
            .collect(),
        SampleMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            v.sort_by(f64::total_cmp);
            v.into_iter().map(T::lit).collect()
        }
    };
    let points = params
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let surface = if i % 2 == 0 { Surface::Upper } else { Surface::Lower };
            point_at(curve, s, cfg, surface)
        })
        .collect();
    Trajectory::new(points, false).expect("curve samples are finite")
}

/// Dense ordered outline of the curve, used as the scoring reference.
/// Closed families return a closed trajectory; NACA runs trailing edge → nose
/// along the upper surface and back along the lower.
pub fn reference_path<T: Scalar>(curve: &CurveSpec<T>, n: usize, cfg: &SamplingConfig) -> Trajectory<T> {
    let n = n.max(4);
    let points: Vec<Point2<T>> = match curve {
        CurveSpec::Naca { .. } => {
            let half = n / 2;
            let step = |i: usize| T::from_usize_lossy(i) / T::from_usize_lossy(half);
            let upper = (0..=half).rev().map(|i| point_at(curve, step(i), cfg, Surface::Upper));
            let lower = (1..=half).map(|i| point_at(curve, step(i), cfg, Surface::Lower));
            upper.chain(lower).collect()
        }
        _ if curve.is_closed() => (0..n)
            .map(|i| point_at(curve, T::from_usize_lossy(i) / T::from_usize_lossy(n), cfg, Surface::Upper))
            .collect(),
        _ => (0..n)
            .map(|i| point_at(curve, T::from_usize_lossy(i) / T::from_usize_lossy(n - 1), cfg, Surface::Upper))
            .collect(),
    };
    Trajectory::new(points, curve.is_closed()).expect("curve samples are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_circle_quarter_points() {
        let c = CurveSpec::Circle { r: 1.0, x1: 0.0, y1: 0.0 };
        let t = sample_points(&c, 4, &SamplingConfig::default(), 0);
        let expected: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (p, (x, y)) in t.points().iter().zip(expected) {
            assert!((p.x - x).abs() < 1e-15 && (p.y - y).abs() < 1e-15, "{p:?}");
        }
    }

    #[test]
    fn lemniscate_vertex() {
        let p = lemniscate_point(1.0f64, 0.0);
        assert_eq!(p, Point2::new(2f64.sqrt(), 0.0));
    }

    #[test]
    fn naca_first_sample_is_leading_edge() {
        let c = CurveSpec::<f64>::Naca { series: 12 };
        let t = sample_points(&c, 4, &SamplingConfig::default(), 0);
        assert_eq!(t.points()[0], Point2::new(0.0, 0.0));
    }

    #[test]
    fn every_sample_is_on_curve() {
        let curves: [CurveSpec<f64>; 6] = [
            CurveSpec::Circle { r: 2.5, x1: -1.0, y1: 3.0 },
            CurveSpec::Ellipse { a: 4.0, b: 0.7, x1: 2.0, y1: -3.0 },
            CurveSpec::Line { x1: -4.0, y1: 1.0, x2: 3.0, y2: -2.5 },
            CurveSpec::Parabola { a: -1.7, h: 2.0, k: 4.0 },
            CurveSpec::Lemniscate { a: 3.3 },
            CurveSpec::Naca { series: 2715 },
        ];
        for mode in [SampleMode::Uniform, SampleMode::Random] {
            let cfg = SamplingConfig { mode, ..Default::default() };
            for c in &curves {
                for p in sample_points(c, 25, &cfg, 3).points() {
                    assert!(c.implicit_residual(*p).abs() <= 1e-9, "{c:?} {p:?}");
                }
                for p in reference_path(c, 200, &cfg).points() {
                    assert!(c.implicit_residual(*p).abs() <= 1e-9, "{c:?} {p:?}");
                }
            }
        }
    }

    #[test]
    fn random_mode_depends_on_seed() {
        let c = CurveSpec::Circle { r: 1.0, x1: 0.0, y1: 0.0 };
        let cfg = SamplingConfig { mode: SampleMode::Random, ..Default::default() };
        assert_eq!(sample_points(&c, 4, &cfg, 1), sample_points(&c, 4, &cfg, 1));
        assert_ne!(sample_points(&c, 4, &cfg, 1), sample_points(&c, 4, &cfg, 2));
    }
}
