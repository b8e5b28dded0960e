//! Distance functions between objects.
//!
//! K-NN only needs distances to be comparable; the metric axioms are never
//! enforced. [`check_metric_axioms`] reports sampled violations for
//! diagnostics.

use num_traits::{Float, Zero};
use rand::Rng;
use serde::Serialize;

use crate::Scalar;

/// Failure to evaluate a distance (for instance mismatched dimensions).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricError(pub String);

impl std::fmt::Display for MetricError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub trait Metric<O: ?Sized> {
    type Scalar: Scalar;

    fn distance(&self, a: &O, b: &O) -> Result<Self::Scalar, MetricError>;
}

impl<O: ?Sized, M: Metric<O>> Metric<O> for &M {
    type Scalar = M::Scalar;

    fn distance(&self, a: &O, b: &O) -> Result<Self::Scalar, MetricError> {
        (*self).distance(a, b)
    }
}

/// `‖a − b‖₂` on feature vectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Euclidean;

impl<T: Scalar> Metric<Vec<T>> for Euclidean {
    type Scalar = T;

    fn distance(&self, a: &Vec<T>, b: &Vec<T>) -> Result<T, MetricError> {
        if a.len() != b.len() {
            return Err(MetricError(format!(
                "dimension mismatch: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        Ok(squared_norm_diff(a, b).sqrt())
    }
}

fn squared_norm_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(T::zero(), |acc, v| acc + v)
}

/// Squares the wrapped distance. A strictly increasing transform, so K-NN
/// decisions are unchanged; `Squared(Euclidean)` is the squared Euclidean
/// distance computed without the intermediate square root.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Squared<M>(pub M);

impl<T: Scalar> Metric<Vec<T>> for Squared<Euclidean> {
    type Scalar = T;

    fn distance(&self, a: &Vec<T>, b: &Vec<T>) -> Result<T, MetricError> {
        if a.len() != b.len() {
            return Err(MetricError(format!(
                "dimension mismatch: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        Ok(squared_norm_diff(a, b))
    }
}

/// Lookup in a square table of distances between object ids `0..n`.
///
/// Objects are plain indices, so structured data (strings, graphs) can be used
/// once its pairwise distances have been computed elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct Precomputed<T> {
    n: usize,
    table: Vec<T>,
}

impl<T: Scalar> Precomputed<T> {
    /// `table` is row-major `n × n`.
    pub fn new(n: usize, table: Vec<T>) -> Result<Self, MetricError> {
        if table.len() != n * n {
            return Err(MetricError(format!(
                "table has {} entries, expected {}",
                table.len(),
                n * n
            )));
        }
        Ok(Self { n, table })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

impl<T: Scalar> Metric<usize> for Precomputed<T> {
    type Scalar = T;

    fn distance(&self, a: &usize, b: &usize) -> Result<T, MetricError> {
        if *a >= self.n || *b >= self.n {
            return Err(MetricError(format!(
                "object id out of range ({a}, {b}) for n = {}",
                self.n
            )));
        }
        Ok(self.table[a * self.n + b])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Violation {
    NonNegativity { a: usize, b: usize, distance: f64 },
    Identity { a: usize, distance: f64 },
    Symmetry { a: usize, b: usize, ab: f64, ba: f64 },
    Triangle { a: usize, b: usize, c: usize, ac: f64, ab_bc: f64 },
    Evaluation { a: usize, b: usize, message: String },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AxiomReport {
    pub trials: usize,
    pub violations: Vec<Violation>,
}

impl AxiomReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples `trials` random object triples and checks non-negativity,
/// `d(a, a) = 0`, symmetry and the triangle inequality.
///
/// The triangle check allows a relative slack of a few ulps so that rounding
/// on collinear points is not reported.
pub fn check_metric_axioms<O, M, R>(
    metric: &M,
    objects: &[O],
    trials: usize,
    rng: &mut R,
) -> AxiomReport
where
    M: Metric<O>,
    R: Rng + ?Sized,
{
    let mut report = AxiomReport {
        trials,
        violations: Vec::new(),
    };
    let n = objects.len();
    if n == 0 {
        return report;
    }
    let slack = M::Scalar::epsilon() * M::Scalar::of(8.0);
    for _ in 0..trials {
        let (a, b, c) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
        let eval = |i: usize, j: usize| metric.distance(&objects[i], &objects[j]);
        let (aa, ab, ba, bc, ac) = match (eval(a, a), eval(a, b), eval(b, a), eval(b, c), eval(a, c)) {
            (Ok(aa), Ok(ab), Ok(ba), Ok(bc), Ok(ac)) => (aa, ab, ba, bc, ac),
            (r1, r2, r3, r4, r5) => {
                let msg = [r1, r2, r3, r4, r5]
                    .into_iter()
                    .find_map(|r| r.err())
                    .map(|e| e.0)
                    .unwrap_or_default();
                report.violations.push(Violation::Evaluation { a, b, message: msg });
                continue;
            }
        };
        if ab < M::Scalar::zero() || ab.is_nan() {
            report.violations.push(Violation::NonNegativity {
                a,
                b,
                distance: ab.to_f64_lossy(),
            });
        }
        if aa != M::Scalar::zero() {
            report.violations.push(Violation::Identity {
                a,
                distance: aa.to_f64_lossy(),
            });
        }
        if ab != ba {
            report.violations.push(Violation::Symmetry {
                a,
                b,
                ab: ab.to_f64_lossy(),
                ba: ba.to_f64_lossy(),
            });
        }
        let sum = ab + bc;
        if ac > sum + slack * (sum.abs() + ac.abs()) {
            report.violations.push(Violation::Triangle {
                a,
                b,
                c,
                ac: ac.to_f64_lossy(),
                ab_bc: sum.to_f64_lossy(),
            });
        }
    }
    report
}
