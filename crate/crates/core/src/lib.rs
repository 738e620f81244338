//! Finite-model computations from information economics.
//!
//! Every module works on small, explicit objects (partition models, signal
//! matrices, belief distributions, decision problems) and exposes pure
//! functions over them. Routines that only add, multiply and compare are
//! generic over [`Scalar`], so they run on `f64` or on exact
//! [`BigRational`](num_rational::BigRational) values.

pub mod blackwell;
pub mod error;
pub mod event;
pub mod gaussian;
pub mod infocost;
pub mod knowledge;
pub mod learning;
pub mod lp;
pub mod misspec;
pub mod orders;
pub mod persuasion;
pub mod scalar;
pub mod signals;

pub use blackwell::{DecisionProblem, GarblingCertificate};
pub use error::{Error, Result};
pub use event::EventSet;
pub use knowledge::PartitionModel;
pub use scalar::{Rational, Scalar};
pub use signals::{BeliefDistribution, SignalStructure};
