use super::{check_points, GeometryError, NearestIndex, Point2, Trajectory};
use crate::scalar::Scalar;

/// Symmetric Chamfer distance with squared Euclidean terms, each direction
/// averaged over its own set:
///
/// `Σ_p min_q ‖p−q‖² / |P|  +  Σ_q min_p ‖q−p‖² / |Q|`
///
/// No square root is taken.
pub fn chamfer_distance<T: Scalar>(p: &Trajectory<T>, q: &Trajectory<T>) -> T {
    directed(p.points(), &NearestIndex::new(q.points())) + directed(q.points(), &NearestIndex::new(p.points()))
}

/// Slice form of [`chamfer_distance`] that validates its inputs.
pub fn chamfer_points<T: Scalar>(p: &[Point2<T>], q: &[Point2<T>]) -> Result<T, GeometryError> {
    check_points(p)?;
    check_points(q)?;
    Ok(directed(p, &NearestIndex::new(q)) + directed(q, &NearestIndex::new(p)))
}

/// Mean squared distance from each point of `from` to the indexed set.
pub(crate) fn directed<T: Scalar>(from: &[Point2<T>], to: &NearestIndex<T>) -> T {
    let sum: T = from.iter().map(|&a| to.nearest(a).map_or(T::zero(), |(_, d)| d)).sum();
    sum / T::from_usize_lossy(from.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point2<f64>> {
        v.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    #[test]
    fn identical_sets_score_zero() {
        let a = pts(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(chamfer_points(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn single_points_one_apart() {
        assert_eq!(chamfer_points(&pts(&[(0.0, 0.0)]), &pts(&[(1.0, 0.0)])).unwrap(), 2.0);
    }

    #[test]
    fn each_direction_uses_its_own_denominator() {
        let p = pts(&[(0.0, 0.0), (2.0, 0.0)]);
        let q = pts(&[(1.0, 0.0)]);
        assert_eq!(chamfer_points(&p, &q).unwrap(), 2.0);
        assert_eq!(chamfer_points(&q, &p).unwrap(), 2.0);
    }

    #[test]
    fn empty_set_is_invalid_input() {
        assert_eq!(chamfer_points::<f64>(&[], &pts(&[(0.0, 0.0)])), Err(GeometryError::Empty));
    }
}
