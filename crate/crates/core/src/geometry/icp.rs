use serde::{Deserialize, Serialize};

use super::{apply_transform, centroid, chamfer_distance, GeometryError, NearestIndex, Point2, RigidTransform2, Trajectory};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcpOptions<T> {
    pub max_iters: usize,
    /// Stop once an iteration lowers the objective by less than this.
    pub tol: T,
}

impl<T: Scalar> Default for IcpOptions<T> {
    fn default() -> Self {
        Self { max_iters: 100, tol: T::lit(1e-9) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult<T> {
    /// Maps the original source frame onto the target frame.
    pub transform: RigidTransform2<T>,
    pub aligned: Trajectory<T>,
    /// Chamfer distance between `aligned` and the target.
    pub chamfer: T,
    /// Mean squared nearest-neighbour distance after seeding and after every
    /// accepted iteration. Nonincreasing.
    pub objective: Vec<T>,
    pub iterations: usize,
}

/// Point-to-point ICP.
///
/// Seeds by moving the source centroid onto the target centroid, then alternates
/// nearest-neighbour correspondence with the closed-form orientation-preserving
/// least-squares fit. In the plane the SVD solution with reflection correction
/// reduces to `θ = atan2(Σ s×d, Σ s·d)` over the centred pairs, used directly here.
/// An update that would raise the objective is rejected and iteration stops.
pub fn icp_align<T: Scalar>(
    source: &Trajectory<T>,
    target: &Trajectory<T>,
    opts: &IcpOptions<T>,
) -> Result<IcpResult<T>, GeometryError> {
    for t in [source, target] {
        if t.len() < 3 {
            return Err(GeometryError::TooFewPoints { need: 3, got: t.len() });
        }
    }
    if source.distinct_count() < 3 {
        return Err(GeometryError::Degenerate);
    }

    let src = source.points();
    let index = NearestIndex::new(target.points());
    let mut transform = RigidTransform2::translation_only(target.centroid() - source.centroid());

    let mut matches = correspond(src, &transform, &index);
    let mut error = mean_error(&matches);
    let mut objective = vec![error];
    let mut iterations = 0;

    for _ in 0..opts.max_iters {
        let pairs: Vec<Point2<T>> = matches.iter().map(|&(i, _)| index.points()[i]).collect();
        let candidate = fit_rigid(src, &pairs);
        let next = correspond(src, &candidate, &index);
        let next_error = mean_error(&next);
        if !(next_error <= error) {
            break;
        }
        let improvement = error - next_error;
        transform = candidate;
        matches = next;
        error = next_error;
        objective.push(error);
        iterations += 1;
        if improvement < opts.tol {
            break;
        }
    }

    let aligned = apply_transform(&transform, source);
    let chamfer = chamfer_distance(&aligned, target);
    Ok(IcpResult { transform, aligned, chamfer, objective, iterations })
}

fn correspond<T: Scalar>(src: &[Point2<T>], transform: &RigidTransform2<T>, index: &NearestIndex<T>) -> Vec<(usize, T)> {
    src.iter()
        .map(|&p| index.nearest(transform.apply(p)).expect("target is non-empty"))
        .collect()
}

fn mean_error<T: Scalar>(matches: &[(usize, T)]) -> T {
    let sum: T = matches.iter().map(|&(_, d)| d).sum();
    sum / T::from_usize_lossy(matches.len())
}

/// Least-squares proper rigid motion taking `src[i]` to `dst[i]`.
pub(crate) fn fit_rigid<T: Scalar>(src: &[Point2<T>], dst: &[Point2<T>]) -> RigidTransform2<T> {
    let cs = centroid(src);
    let cd = centroid(dst);
    let (mut dot, mut cross) = (T::zero(), T::zero());
    for (&s, &d) in src.iter().zip(dst) {
        let (s, d) = (s - cs, d - cd);
        dot = dot + s.dot(d);
        cross = cross + s.cross(d);
    }
    let theta = if dot == T::zero() && cross == T::zero() { T::zero() } else { cross.atan2(dot) };
    let rot = RigidTransform2::from_angle(theta, Point2::origin());
    RigidTransform2::from_angle(theta, cd - rot.apply(cs))
}
