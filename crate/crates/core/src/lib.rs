//! Nearest-neighbour classification with certified, redundancy-based risk bounds.
//!
//! The crate is organised bottom-up:
//!
//! * [`data`], [`metric`], [`distance`], [`probe`]: samples, labels, distance
//!   functions and the finite probe sets that stand in for the object space.
//! * [`knn`]: the K-NN rule with index-ordered tie breaking, margins and the
//!   (K, L) rejection rule.
//! * [`kernel`]: the RBF kernel view of 1-NN, ternary kernel expansions, the
//!   Parzen classifier and bandwidth sweeps.
//! * [`redundancy`]: redundant training subsets and hypothesis equivalence
//!   relative to a probe domain.
//! * [`bounds`]: closed-form PAC-Bayesian bounds and sparsity optimisation.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the common double-precision instantiations. Training indices are
//! 0-based throughout.

pub mod bounds;
pub mod data;
pub mod distance;
mod error;
pub mod kernel;
pub mod knn;
pub mod metric;
mod num;
pub mod probe;
pub mod redundancy;

pub use error::{Error, Result};
pub use num::Scalar;

pub use data::{Label, LabeledSample};
pub use distance::DistanceMatrix;
pub use knn::{KnnModel, Prediction};
pub use metric::{Euclidean, Metric, Squared};
pub use probe::{ProbeDomain, Provenance};

/// A point in `R^n`.
pub type Point<T = f64> = Vec<T>;
/// Labelled vectors in double precision.
pub type Sample = LabeledSample<Point<f64>>;
/// Labelled vectors in single precision.
pub type Sample32 = LabeledSample<Point<f32>>;
/// Probe grid or probe set of double-precision vectors.
pub type Probes = ProbeDomain<Point<f64>>;
/// Bound evaluation in double precision.
pub type BoundResult = bounds::BoundResult<f64>;
/// Natural-log prior mass in double precision.
pub type LogPriorMass = bounds::LogPriorMass<f64>;
/// Euclidean K-NN over double-precision vectors.
pub type EuclideanKnn = KnnModel<Point<f64>, Euclidean>;
