//! Closed-form first-order Melnikov functions for the perturbed linear center
//! `x' = y + eps p(x, y)`, `y' = -x + eps q(x, y)` whose perturbation switches
//! across the curve `y = x^m`.
//!
//! Exact parts (integral recursions, expansions, zero counting) work over
//! [`Rational`]; numeric parts (quadrature, simulation) are generic over
//! [`Real`] with `f64` aliases provided below.

pub mod abelian;
pub mod error;
pub mod linalg;
pub mod melnikov;
pub mod model;
pub mod oracle;
pub mod poly;
pub mod precise;
pub mod qpi;
pub mod rational;
pub mod roots;
pub mod simulate;
pub mod sturm;

pub use error::{Error, Result};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Exact scalar used by the symbolic layer.
pub type Rational = num_rational::BigRational;

/// Floating-point scalar used by the numeric layer.
pub trait Real: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

pub type Poly = poly::Poly<Rational>;
pub type OrbitParam64 = model::OrbitParam<f64>;
pub type QuadratureResult64 = oracle::QuadratureResult<f64>;
pub type Trajectory64 = simulate::Trajectory<f64>;
pub type PiecewiseState64 = simulate::PiecewiseState<f64>;
pub type CycleFinding64 = simulate::CycleFinding<f64>;
