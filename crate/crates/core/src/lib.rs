//! Numerical core for planar mechanism synthesis.
//!
//! All math is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! it to `f64`, which the rest of the workspace uses.

pub mod curves;
pub mod dsl;
pub mod geometry;
pub mod linkage;
pub mod scalar;
pub mod surrogate;

pub use scalar::Scalar;

pub type Point = geometry::Point2<f64>;
pub type Path = geometry::Trajectory<f64>;
pub type Transform = geometry::RigidTransform2<f64>;
pub type Curve = curves::CurveSpec<f64>;
pub type Task = curves::TaskInstance<f64>;
pub type Mechanism = linkage::MechanismSpec<f64>;
pub type Simulation = linkage::SimResult<f64>;
pub type Surrogate = surrogate::SurrogateExpr<f64>;
