//! Planar point sets and the metrics used to score them.
//!
//! Everything here is a pure function of its inputs.

mod chamfer;
mod icp;
mod nearest;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scalar::Scalar;

pub use chamfer::{chamfer_distance, chamfer_points};
pub use icp::{icp_align, IcpOptions, IcpResult};
pub use nearest::NearestIndex;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid input: point set is empty")]
    Empty,
    #[error("invalid input: point {index} is not finite")]
    NonFinite { index: usize },
    #[error("invalid input: need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("degenerate geometry: fewer than three distinct points")]
    Degenerate,
    #[error("invalid rigid transform: {0}")]
    InvalidTransform(&'static str),
}

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance_squared(self, other: Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn distance(self, other: Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Counter-clockwise quarter turn.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Unit vector at angle `theta` from the +x axis.
    #[inline]
    pub fn from_angle(theta: T) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, s)
    }

    pub fn cast<U: Scalar>(self) -> Point2<U> {
        Point2::new(U::lit(self.x.to_f64_lossy()), U::lit(self.y.to_f64_lossy()))
    }
}

impl<T: Scalar> Add for Point2<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Scalar> Sub for Point2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Scalar> Mul<T> for Point2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl<T: Scalar> Neg for Point2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: fmt::Display> fmt::Display for Point2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

// Points travel as `[x, y]` pairs in every JSON artifact.
impl<T: Serialize> Serialize for Point2<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut tup = serializer.serialize_tuple(2)?;
        tup.serialize_element(&self.x)?;
        tup.serialize_element(&self.y)?;
        tup.end()
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Point2<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct PairVisitor<T>(std::marker::PhantomData<T>);

        impl<'de, T: Deserialize<'de>> Visitor<'de> for PairVisitor<T> {
            type Value = Point2<T>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an [x, y] pair")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
                let x = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let y = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(Point2 { x, y })
            }
        }

        deserializer.deserialize_tuple(2, PairVisitor(std::marker::PhantomData))
    }
}

/// Ordered, non-empty, finite sequence of planar points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: Deserialize<'de> + Scalar"
))]
#[serde(try_from = "RawTrajectory<T>")]
pub struct Trajectory<T> {
    points: Vec<Point2<T>>,
    closed: bool,
}

#[derive(Deserialize)]
struct RawTrajectory<T> {
    points: Vec<Point2<T>>,
    #[serde(default)]
    closed: bool,
}

impl<T: Scalar> TryFrom<RawTrajectory<T>> for Trajectory<T> {
    type Error = GeometryError;
    fn try_from(raw: RawTrajectory<T>) -> Result<Self, Self::Error> {
        Trajectory::new(raw.points, raw.closed)
    }
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(points: Vec<Point2<T>>, closed: bool) -> Result<Self, GeometryError> {
        check_points(&points)?;
        Ok(Self { points, closed })
    }

    pub fn open(points: Vec<Point2<T>>) -> Result<Self, GeometryError> {
        Self::new(points, false)
    }

    #[inline]
    pub fn points(&self) -> &[Point2<T>] {
        &self.points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn into_points(self) -> Vec<Point2<T>> {
        self.points
    }

    pub fn centroid(&self) -> Point2<T> {
        centroid(&self.points)
    }

    /// Largest pairwise distance. Quadratic, fine for the sizes used here.
    pub fn diameter(&self) -> T {
        let mut best = T::zero();
        for (i, &p) in self.points.iter().enumerate() {
            for &q in &self.points[i + 1..] {
                best = best.max(p.distance(q));
            }
        }
        best
    }

    /// Number of pairwise-distinct points (exact comparison).
    pub fn distinct_count(&self) -> usize {
        let mut seen: Vec<Point2<T>> = Vec::new();
        for &p in &self.points {
            if !seen.contains(&p) {
                seen.push(p);
            }
        }
        seen.len()
    }
}

pub(crate) fn check_points<T: Scalar>(points: &[Point2<T>]) -> Result<(), GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::Empty);
    }
    if let Some(index) = points.iter().position(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite { index });
    }
    Ok(())
}

pub(crate) fn centroid<T: Scalar>(points: &[Point2<T>]) -> Point2<T> {
    let n = T::from_usize_lossy(points.len());
    let sum = points.iter().fold(Point2::origin(), |acc, &p| acc + p);
    Point2::new(sum.x / n, sum.y / n)
}

/// Orientation-preserving rigid motion `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform2<T> {
    /// Row-major 2×2 rotation.
    rotation: [[T; 2]; 2],
    translation: Point2<T>,
}

const ORTHONORMAL_TOL: f64 = 1e-12;

impl<T: Scalar> RigidTransform2<T> {
    pub fn identity() -> Self {
        Self::from_angle(T::zero(), Point2::origin())
    }

    pub fn from_angle(theta: T, translation: Point2<T>) -> Self {
        let (s, c) = theta.sin_cos();
        Self { rotation: [[c, -s], [s, c]], translation }
    }

    pub fn translation_only(translation: Point2<T>) -> Self {
        Self::from_angle(T::zero(), translation)
    }

    /// Builds from an explicit matrix, rejecting anything that is not a proper rotation.
    pub fn from_matrix(rotation: [[T; 2]; 2], translation: Point2<T>) -> Result<Self, GeometryError> {
        let tol = T::lit(ORTHONORMAL_TOL);
        let [[a, b], [c, d]] = rotation;
        let all_finite = [a, b, c, d].iter().all(|v| v.is_finite()) && translation.is_finite();
        if !all_finite {
            return Err(GeometryError::InvalidTransform("non-finite entry"));
        }
        // RᵀR = I
        let e00 = a * a + c * c - T::one();
        let e11 = b * b + d * d - T::one();
        let e01 = a * b + c * d;
        if e00.abs() > tol || e11.abs() > tol || e01.abs() > tol {
            return Err(GeometryError::InvalidTransform("rotation is not orthonormal"));
        }
        if (a * d - b * c - T::one()).abs() > tol {
            return Err(GeometryError::InvalidTransform("determinant is not +1"));
        }
        Ok(Self { rotation, translation })
    }

    #[inline]
    pub fn rotation(&self) -> [[T; 2]; 2] {
        self.rotation
    }

    #[inline]
    pub fn translation(&self) -> Point2<T> {
        self.translation
    }

    /// Rotation angle in `(-π, π]`.
    pub fn angle(&self) -> T {
        self.rotation[1][0].atan2(self.rotation[0][0])
    }

    #[inline]
    pub fn rotate(&self, p: Point2<T>) -> Point2<T> {
        let [[a, b], [c, d]] = self.rotation;
        Point2::new(a * p.x + b * p.y, c * p.x + d * p.y)
    }

    #[inline]
    pub fn apply(&self, p: Point2<T>) -> Point2<T> {
        self.rotate(p) + self.translation
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let [[a, b], [c, d]] = self.rotation;
        let [[e, f], [g, h]] = other.rotation;
        Self {
            rotation: [[a * e + b * g, a * f + b * h], [c * e + d * g, c * f + d * h]],
            translation: self.apply(other.translation),
        }
    }

    pub fn inverse(&self) -> Self {
        let [[a, b], [c, d]] = self.rotation;
        let rt = [[a, c], [b, d]];
        let inv = Self { rotation: rt, translation: Point2::origin() };
        Self { rotation: rt, translation: -inv.rotate(self.translation) }
    }
}

/// Maps every point through `transform`, keeping order and the closed flag.
pub fn apply_transform<T: Scalar>(transform: &RigidTransform2<T>, path: &Trajectory<T>) -> Trajectory<T> {
    Trajectory {
        points: path.points.iter().map(|&p| transform.apply(p)).collect(),
        closed: path.closed,
    }
}
