//! Quasi-Newton optimization with coordinate-wise step sizes.
//!
//! The crate is organized around a BFGS state machine whose scalar step size
//! is generalized to a positive diagonal matrix. Three interchangeable
//! strategies produce that matrix (backtracking line search, hypergradient
//! descent, and a learned coordinate-wise LSTM), and the `theory` module
//! turns the sufficient conditions for convergence into runtime monitors.
//!
//! All numeric code is generic over [`Scalar`]; the `*64` aliases at the
//! crate root pin the concrete `f64` types used by the benchmark harness.

use num_traits::{Float, FromPrimitive};

pub mod bfgs;
pub mod error;
pub mod hexfloat;
pub mod l2o;
pub mod numerics;
pub mod problems;
pub mod sampling;
pub mod strategies;
pub mod theory;

pub use error::{Error, Result};

/// Floating-point scalar the core math is generic over.
///
/// `of`/`as_f64` exist so that tolerances and config constants can be written
/// as plain `f64` literals regardless of the instantiated scalar type.
pub trait Scalar:
    Float
    + FromPrimitive
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 representable in Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type Vector64 = numerics::DenseVector<f64>;
pub type Matrix64 = numerics::DenseMatrix<f64>;
pub type Problem64 = problems::ObjectiveProblem<f64>;
pub type BfgsState64 = bfgs::BfgsState<f64>;
pub type CwssMatrix64 = bfgs::CwssMatrix<f64>;
pub type StopCriteria64 = bfgs::StopCriteria<f64>;
pub type ConvergenceRecord64 = bfgs::ConvergenceRecord<f64>;
pub type L2OModel64 = l2o::L2OModel<f64>;
pub type MetaConfig64 = l2o::MetaConfig<f64>;
pub type ConditionReport64 = theory::ConditionReport<f64>;
