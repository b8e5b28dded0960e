//! RBF kernel expansions and their vanishing-bandwidth limit.
//!
//! With `k_σ(o, o') = exp(−d²(o, o')/σ²)`, the classifier
//! `g_α(o) = sign(Σ α_i k_σ(o, o_i))` with ternary `α` becomes 1-NN on the
//! non-zero coefficients as `σ → 0`. The limit is evaluated symbolically by
//! [`softmin_predict`]; finite bandwidths go through [`KernelClassifier`].
//!
//! Finite-σ sums are shifted by the smallest squared distance among the
//! contributing points. The shift is a common positive factor, so the sign is
//! unchanged, and the nearest term is exactly one, so the sum never underflows
//! to zero as a whole.

use num_traits::{Float, Zero};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::distance::distance_column;
use crate::knn::{nearest_k, rank_cmp, Prediction};
use crate::metric::Metric;
use crate::probe::ProbeDomain;
use crate::{Error, Label, LabeledSample, Result, Scalar};

/// Gaussian RBF kernel on a distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RbfKernel<T> {
    sigma: T,
    /// `Some(n)`: scaled by `(πσ²)^{−n/2}` so it integrates to one over `R^n`.
    density_dim: Option<usize>,
}

impl<T: Scalar> RbfKernel<T> {
    /// The unnormalised kernel used for classification.
    pub fn new(sigma: T) -> Result<Self> {
        if !(sigma.is_finite() && sigma > T::zero()) {
            return Err(Error::domain("sigma", sigma.to_f64_lossy(), "(0, inf)"));
        }
        Ok(Self {
            sigma,
            density_dim: None,
        })
    }

    /// Unit-integral kernel on `R^dim`, for density estimation.
    pub fn normalised(sigma: T, dim: usize) -> Result<Self> {
        Ok(Self {
            density_dim: Some(dim),
            ..Self::new(sigma)?
        })
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn is_normalised(&self) -> bool {
        self.density_dim.is_some()
    }

    pub fn normaliser(&self) -> T {
        match self.density_dim {
            None => T::one(),
            Some(n) => (T::of(PI) * self.sigma * self.sigma).powf(T::of(-(n as f64) / 2.0)),
        }
    }

    /// Kernel value at distance `d`.
    pub fn value(&self, d: T) -> T {
        (-(d * d) / (self.sigma * self.sigma)).exp() * self.normaliser()
    }

    pub fn eval<O, M: Metric<O, Scalar = T>>(&self, a: &O, b: &O, metric: &M) -> Result<T> {
        let d = metric.distance(a, b).map_err(|e| Error::Metric {
            train: 0,
            query: 0,
            message: e.0,
        })?;
        Ok(self.value(d))
    }
}

/// Ternary expansion coefficients `α ∈ {−1, 0, +1}^m`, not all zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coefficients(Vec<i8>);

impl Coefficients {
    pub fn new(alpha: Vec<i8>) -> Result<Self> {
        if let Some(v) = alpha.iter().find(|v| !(-1..=1).contains(*v)) {
            return Err(Error::Config(format!("coefficient {v} is not in {{-1, 0, 1}}")));
        }
        if alpha.iter().all(|&v| v == 0) {
            return Err(Error::UndefinedHypothesis);
        }
        Ok(Self(alpha))
    }

    /// `α = y`, the 1-NN solution.
    pub fn from_labels(labels: &[Label]) -> Self {
        Self(labels.iter().map(|l| l.value() as i8).collect())
    }

    /// Copy with the given coefficients set to zero.
    pub fn zeroed(&self, indices: &[usize]) -> Result<Self> {
        let mut a = self.0.clone();
        for &i in indices {
            *a.get_mut(i)
                .ok_or_else(|| Error::InvalidSubset(format!("index {i} out of range")))? = 0;
        }
        Self::new(a)
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|v| -v).collect())
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of zero coefficients.
    pub fn sparsity(&self) -> usize {
        self.0.iter().filter(|&&v| v == 0).count()
    }
}

/// `sign(Σ w_i k_σ(d_i))` for real weights, with the nearest-term shift.
/// Exact zero yields [`Prediction::Abstain`].
pub fn kernel_sign<T: Scalar>(distances: &[T], weights: &[T], sigma: T) -> Prediction {
    let shift = distances
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w != T::zero())
        .map(|(&d, _)| d * d)
        .fold(T::infinity(), T::min);
    if shift.is_infinite() {
        return Prediction::Abstain;
    }
    let s2 = sigma * sigma;
    let (mut pos, mut neg) = (T::zero(), T::zero());
    for (&d, &w) in distances.iter().zip(weights) {
        if w == T::zero() {
            continue;
        }
        let t = (-(d * d - shift) / s2).exp();
        if w > T::zero() {
            pos = pos + w * t;
        } else {
            neg = neg - w * t;
        }
    }
    sign_of_difference(pos, neg)
}

fn sign_of_difference<T: Scalar>(a: T, b: T) -> Prediction {
    match a.partial_cmp(&b) {
        Some(std::cmp::Ordering::Greater) => Prediction::Positive,
        Some(std::cmp::Ordering::Less) => Prediction::Negative,
        _ => Prediction::Abstain,
    }
}

/// `g_α` at a finite bandwidth.
#[derive(Clone, Debug)]
pub struct KernelClassifier<O, M: Metric<O>> {
    sample: LabeledSample<O>,
    alpha: Coefficients,
    kernel: RbfKernel<M::Scalar>,
    metric: M,
}

impl<O, M: Metric<O>> KernelClassifier<O, M> {
    pub fn new(
        sample: LabeledSample<O>,
        alpha: Coefficients,
        kernel: RbfKernel<M::Scalar>,
        metric: M,
    ) -> Result<Self> {
        if alpha.len() != sample.len() {
            return Err(Error::LengthMismatch {
                objects: sample.len(),
                labels: alpha.len(),
            });
        }
        Ok(Self {
            sample,
            alpha,
            kernel,
            metric,
        })
    }

    /// The 1-NN expansion `α = y`.
    pub fn from_labels(sample: LabeledSample<O>, kernel: RbfKernel<M::Scalar>, metric: M) -> Self {
        let alpha = Coefficients::from_labels(sample.labels());
        Self {
            sample,
            alpha,
            kernel,
            metric,
        }
    }

    pub fn alpha(&self) -> &Coefficients {
        &self.alpha
    }

    pub fn predict(&self, query: &O) -> Result<Prediction> {
        let d = distances(&self.sample, query, &self.metric)?;
        Ok(predict_from_distances(&d, &self.alpha, self.kernel.sigma))
    }
}

/// `g_α` at bandwidth `sigma` from one distance column.
pub fn predict_from_distances<T: Scalar>(distances: &[T], alpha: &Coefficients, sigma: T) -> Prediction {
    let w: Vec<T> = alpha.as_slice().iter().map(|&a| T::of(a as f64)).collect();
    kernel_sign(distances, &w, sigma)
}

fn distances<O, M: Metric<O>>(sample: &LabeledSample<O>, query: &O, metric: &M) -> Result<Vec<M::Scalar>> {
    distance_column(sample.objects(), query, metric).map_err(|(i, message)| Error::Metric {
        train: i,
        query: 0,
        message,
    })
}

/// The `σ → 0` limit of `g_α` from one distance column: the sign of `α` at
/// the nearest point with non-zero coefficient. Among equidistant such points
/// the lowest index decides, matching the K-NN tie rule.
pub fn softmin_from_distances<T: Scalar>(distances: &[T], alpha: &Coefficients) -> Result<Prediction> {
    if distances.len() != alpha.len() {
        return Err(Error::LengthMismatch {
            objects: distances.len(),
            labels: alpha.len(),
        });
    }
    alpha
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &a)| a != 0)
        .map(|(i, _)| (i, distances[i]))
        .min_by(|&a, &b| rank_cmp(a, b))
        .map(|(i, _)| Prediction::from_sign(alpha.as_slice()[i] as i32))
        .ok_or(Error::UndefinedHypothesis)
}

pub fn softmin_predict<O, M: Metric<O>>(
    sample: &LabeledSample<O>,
    alpha: &Coefficients,
    query: &O,
    metric: &M,
) -> Result<Prediction> {
    softmin_from_distances(&distances(sample, query, metric)?, alpha)
}

/// Class-conditional Parzen window estimates with a unit-integral RBF kernel.
#[derive(Clone, Debug)]
pub struct ParzenEstimate<O, M: Metric<O>> {
    sample: LabeledSample<O>,
    kernel: RbfKernel<M::Scalar>,
    metric: M,
    m_pos: usize,
    m_neg: usize,
}

impl<O, M: Metric<O>> ParzenEstimate<O, M> {
    /// `dim` is the dimension of the feature space, used by the normaliser.
    pub fn new(sample: LabeledSample<O>, sigma: M::Scalar, dim: usize, metric: M) -> Result<Self> {
        let (m_pos, m_neg) = sample.class_counts();
        if m_pos == 0 || m_neg == 0 {
            return Err(Error::Config("Parzen classification needs both classes present".into()));
        }
        Ok(Self {
            sample,
            kernel: RbfKernel::normalised(sigma, dim)?,
            metric,
            m_pos,
            m_neg,
        })
    }

    pub fn class_counts(&self) -> (usize, usize) {
        (self.m_pos, self.m_neg)
    }

    /// `f̂(x | y) = (1/m_y) Σ_{i: y_i = y} k_σ(x, x_i)`.
    pub fn density(&self, class: Label, query: &O) -> Result<M::Scalar> {
        let d = distances(&self.sample, query, &self.metric)?;
        let total: M::Scalar = d
            .iter()
            .zip(self.sample.labels())
            .filter(|(_, &l)| l == class)
            .map(|(&d, _)| self.kernel.value(d))
            .sum();
        let count = if class == Label::Positive { self.m_pos } else { self.m_neg };
        Ok(total / M::Scalar::of_usize(count))
    }

    /// `ĥ_σ(x) = sign(f̂(x | +1) − f̂(x | −1))`.
    pub fn classify(&self, query: &O) -> Result<Prediction> {
        Ok(self.classify_distances(&distances(&self.sample, query, &self.metric)?))
    }

    pub fn classify_distances(&self, d: &[M::Scalar]) -> Prediction {
        type S<M, O> = <M as Metric<O>>::Scalar;
        let shift = d.iter().map(|&x| x * x).fold(S::<M, O>::infinity(), S::<M, O>::min);
        let s2 = self.kernel.sigma * self.kernel.sigma;
        let (mut pos, mut neg) = (S::<M, O>::zero(), S::<M, O>::zero());
        for (&x, &l) in d.iter().zip(self.sample.labels()) {
            let t = (-(x * x - shift) / s2).exp();
            match l {
                Label::Positive => pos = pos + t,
                Label::Negative => neg = neg + t,
            }
        }
        if self.m_pos == self.m_neg {
            sign_of_difference(pos, neg)
        } else {
            sign_of_difference(
                pos * S::<M, O>::of_usize(self.m_neg),
                neg * S::<M, O>::of_usize(self.m_pos),
            )
        }
    }
}

/// Agreement of `g_{α=y}` at one bandwidth with exact 1-NN.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub sigma: f64,
    /// `agree / compared`.
    pub agreement: f64,
    pub agree: usize,
    pub compared: usize,
    /// Probes on a 1-NN decision tie or where the kernel sum is exactly zero.
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceSweep {
    pub points: Vec<SweepPoint>,
    /// Agreement never drops as σ decreases. Reported, not enforced.
    pub monotone: bool,
}

/// Whether the nearest distance is shared by training points of both labels.
pub fn on_nn_decision_tie<T: Scalar>(distances: &[T], labels: &[Label]) -> bool {
    let min = distances.iter().copied().fold(T::infinity(), T::min);
    let mut seen = [false; 2];
    for (&d, &l) in distances.iter().zip(labels) {
        if d == min {
            seen[(l == Label::Positive) as usize] = true;
        }
    }
    seen[0] && seen[1]
}

/// Per-bandwidth agreement between `g_{α=y}` and 1-NN on the probes.
pub fn convergence_sweep<O, M>(
    sample: &LabeledSample<O>,
    sigmas: &[M::Scalar],
    probes: &ProbeDomain<O>,
    metric: &M,
) -> Result<ConvergenceSweep>
where
    O: Sync,
    M: Metric<O> + Sync,
{
    for &s in sigmas {
        RbfKernel::new(s)?;
    }
    let alpha = Coefficients::from_labels(sample.labels());
    let labels = sample.labels();
    // per probe: None if on a decision tie, else per-sigma Some(agrees) / None (abstain)
    let outcomes = probes
        .probes()
        .par_iter()
        .map(|q| {
            let d = distances(sample, q, metric)?;
            if on_nn_decision_tie(&d, labels) {
                return Ok(None);
            }
            let nn = nearest_k(&d, 1).vote(labels);
            Ok(Some(
                sigmas
                    .iter()
                    .map(|&s| match predict_from_distances(&d, &alpha, s) {
                        Prediction::Abstain => None,
                        p => Some(p.value() == nn),
                    })
                    .collect::<Vec<_>>(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let points: Vec<SweepPoint> = sigmas
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let (mut agree, mut compared, mut excluded) = (0, 0, 0);
            for o in &outcomes {
                match o.as_ref().and_then(|v| v[k]) {
                    Some(a) => {
                        compared += 1;
                        agree += a as usize;
                    }
                    None => excluded += 1,
                }
            }
            SweepPoint {
                sigma: s.to_f64_lossy(),
                agreement: if compared == 0 { 1.0 } else { agree as f64 / compared as f64 },
                agree,
                compared,
                excluded,
            }
        })
        .collect();

    let mut by_sigma: Vec<&SweepPoint> = points.iter().collect();
    by_sigma.sort_by(|a, b| b.sigma.total_cmp(&a.sigma));
    let monotone = by_sigma.windows(2).all(|w| w[1].agreement >= w[0].agreement);
    Ok(ConvergenceSweep { points, monotone })
}

/// The `m × m` kernel Gram matrix over `objects`.
pub fn gram_matrix<O, M: Metric<O>>(objects: &[O], kernel: &RbfKernel<M::Scalar>, metric: &M) -> Result<Vec<Vec<M::Scalar>>> {
    objects
        .iter()
        .enumerate()
        .map(|(i, a)| {
            objects
                .iter()
                .enumerate()
                .map(|(j, b)| {
                    metric
                        .distance(a, b)
                        .map(|d| kernel.value(d))
                        .map_err(|e| Error::Metric {
                            train: i,
                            query: j,
                            message: e.0,
                        })
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::{KnnModel, TiePolicy};
    use crate::metric::Euclidean;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pts(p: &[(f64, f64)], ys: &[i32]) -> LabeledSample<Vec<f64>> {
        LabeledSample::new(
            p.iter().map(|&(x, y)| vec![x, y]).collect(),
            ys.iter().map(|&y| Label::from_value(y).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rbf_values() {
        let k = RbfKernel::new(0.5f64).unwrap();
        assert_eq!(k.value(0.0), 1.0);
        assert_relative_eq!(k.value(0.5), (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(k.value(0.5), 0.367879441171442, max_relative = 1e-14);
        let wide = RbfKernel::new(1e6f64).unwrap();
        assert!(1.0 - wide.value(1.0) < 1e-11);
        assert!(RbfKernel::new(0.0f64).is_err());
        assert!(RbfKernel::new(-1.0f64).is_err());
    }

    #[test]
    fn normalised_kernel_integrates_to_one() {
        // 2-D midpoint rule over ±6σ
        let sigma = 0.3;
        let k = RbfKernel::normalised(sigma, 2).unwrap();
        let n = 400;
        let h = 12.0 * sigma / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = -6.0 * sigma + (i as f64 + 0.5) * h;
                let y = -6.0 * sigma + (j as f64 + 0.5) * h;
                total += k.value((x * x + y * y).sqrt()) * h * h;
            }
        }
        assert_relative_eq!(total, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn g_alpha_examples() {
        let s = pts(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], &[1, 1, -1]);
        // wide kernel: sign of class imbalance
        let wide = KernelClassifier::from_labels(s.clone(), RbfKernel::new(1e4).unwrap(), Euclidean);
        assert_eq!(wide.predict(&vec![50.0, -30.0]).unwrap(), Prediction::Positive);
        // single non-zero coefficient
        let single = KernelClassifier::new(
            s.clone(),
            Coefficients::new(vec![0, 0, 1]).unwrap(),
            RbfKernel::new(0.1).unwrap(),
            Euclidean,
        )
        .unwrap();
        for q in [vec![0.0, 0.0], vec![5.0, 5.0], vec![1.0, 0.0]] {
            assert_eq!(single.predict(&q).unwrap(), Prediction::Positive);
        }
        // tiny bandwidth: self term dominates at training points
        let narrow = KernelClassifier::from_labels(s.clone(), RbfKernel::new(1e-3).unwrap(), Euclidean);
        for (o, y) in s.iter() {
            assert_eq!(narrow.predict(o).unwrap(), Prediction::from(y));
        }
    }

    #[test]
    fn softmin_examples() {
        let s = pts(&[(0.0, 0.0), (2.0, 0.0), (4.0, 0.0)], &[1, -1, 1]);
        let y = Coefficients::from_labels(s.labels());
        let knn = KnnModel::new(s.clone(), Euclidean, 1, TiePolicy::Abstain).unwrap();
        for x in [-1.0, 0.9, 1.0, 1.1, 2.0, 3.0, 5.0] {
            let q = vec![x, 0.3];
            assert_eq!(softmin_predict(&s, &y, &q, &Euclidean).unwrap(), knn.predict(&q).unwrap());
        }
        // zero coefficient at the nearest point: the next one decides
        let a = Coefficients::new(vec![0, -1, 1]).unwrap();
        assert_eq!(softmin_predict(&s, &a, &vec![0.0, 0.0], &Euclidean).unwrap(), Prediction::Negative);
        // exact tie at x = 1 between indices 0 (+1) and 1 (-1): lower index wins
        assert_eq!(softmin_predict(&s, &y, &vec![1.0, 0.0], &Euclidean).unwrap(), Prediction::Positive);
        assert_eq!(knn.predict(&vec![1.0, 0.0]).unwrap(), Prediction::Positive);
        assert!(matches!(Coefficients::new(vec![0, 0, 0]), Err(Error::UndefinedHypothesis)));
    }

    #[test]
    fn parzen_examples() {
        let s = pts(&[(0.0, 0.0), (1.0, 0.0)], &[1, -1]);
        let p = ParzenEstimate::new(s.clone(), 0.1, 2, Euclidean).unwrap();
        assert_eq!(p.classify(&vec![0.0, 0.0]).unwrap(), Prediction::Positive);
        assert_eq!(p.classify(&vec![0.5, 0.0]).unwrap(), Prediction::Abstain);
        assert_eq!(p.classify(&vec![0.5, 7.0]).unwrap(), Prediction::Abstain);
        let one_class = pts(&[(0.0, 0.0), (1.0, 0.0)], &[1, 1]);
        assert!(ParzenEstimate::new(one_class, 0.1, 2, Euclidean).is_err());
        assert!(p.density(Label::Positive, &vec![0.3, 0.2]).unwrap() >= 0.0);
    }

    #[test]
    fn parzen_matches_g_alpha_when_balanced() {
        let s = pts(
            &[(-0.5, 0.1), (0.3, 0.4), (0.2, -0.6), (0.7, 0.7), (-0.2, -0.3), (0.9, -0.1)],
            &[1, -1, 1, -1, 1, -1],
        );
        for sigma in [5.0, 0.4, 0.05] {
            let p = ParzenEstimate::new(s.clone(), sigma, 2, Euclidean).unwrap();
            let g = KernelClassifier::from_labels(s.clone(), RbfKernel::new(sigma).unwrap(), Euclidean);
            let grid = ProbeDomain::cube(-1.0, 1.0, 60, 2).unwrap();
            for q in grid.probes() {
                assert_eq!(p.classify(q).unwrap(), g.predict(q).unwrap(), "sigma {sigma} at {q:?}");
            }
        }
    }

    #[test]
    fn parzen_density_integrates_to_one() {
        let s = pts(&[(0.0, 0.0), (0.2, 0.1), (0.5, -0.3)], &[1, 1, -1]);
        let sigma = 0.1;
        let p = ParzenEstimate::new(s, sigma, 2, Euclidean).unwrap();
        // box covering ±5σ around the data
        let (lo_x, hi_x, lo_y, hi_y) = (-0.5, 1.0, -0.8, 0.6);
        let n = 300;
        let (hx, hy) = ((hi_x - lo_x) / n as f64, (hi_y - lo_y) / n as f64);
        let (mut pos, mut neg) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let q = vec![lo_x + (i as f64 + 0.5) * hx, lo_y + (j as f64 + 0.5) * hy];
                let fp = p.density(Label::Positive, &q).unwrap();
                let fn_ = p.density(Label::Negative, &q).unwrap();
                assert!(fp >= 0.0 && fn_ >= 0.0);
                pos += fp * hx * hy;
                neg += fn_ * hx * hy;
            }
        }
        assert!((pos - 1.0).abs() < 0.02, "{pos}");
        assert!((neg - 1.0).abs() < 0.02, "{neg}");
    }

    #[test]
    fn sweep_single_point_always_agrees() {
        let s = pts(&[(0.2, 0.2)], &[-1]);
        let grid = ProbeDomain::cube(-1.0, 1.0, 20, 2).unwrap();
        let sweep = convergence_sweep(&s, &[5.0, 0.4, 0.02], &grid, &Euclidean).unwrap();
        assert!(sweep.points.iter().all(|p| p.agreement == 1.0 && p.excluded == 0));
    }

    #[test]
    fn sweep_tiny_sigma_agrees_fully() {
        let s = pts(
            &[(-0.5, 0.1), (0.3, 0.4), (0.2, -0.6), (0.7, 0.7), (-0.2, -0.3)],
            &[1, -1, 1, -1, -1],
        );
        let mut min_pair = f64::INFINITY;
        for i in 0..s.len() {
            for j in 0..i {
                min_pair = min_pair.min(Euclidean.distance(s.object(i), s.object(j)).unwrap());
            }
        }
        let grid = ProbeDomain::cube(-1.0, 1.0, 80, 2).unwrap();
        let sweep = convergence_sweep(&s, &[5.0, 0.4, 0.01 * min_pair], &grid, &Euclidean).unwrap();
        let last = &sweep.points[2];
        assert_eq!(last.agree, last.compared);
        assert!(sweep.points[0].agreement <= last.agreement);
    }

    #[test]
    fn gram_matrix_is_psd() {
        use nalgebra::DMatrix;
        let objects: Vec<Vec<f64>> = (0..25)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()])
            .collect();
        for sigma in [0.05, 0.5, 3.0] {
            let g = gram_matrix(&objects, &RbfKernel::new(sigma).unwrap(), &Euclidean).unwrap();
            let n = g.len();
            let m = DMatrix::from_fn(n, n, |i, j| g[i][j]);
            assert_eq!(m, m.transpose());
            let trace = m.trace();
            let min_eig = m.symmetric_eigenvalues().min();
            assert!(min_eig >= -1e-8 * trace, "sigma {sigma}: {min_eig}");
        }
    }

    #[test]
    fn softmin_limit_ratio() {
        // distance multiset with a unique minimum
        let ds = [0.3f64, 0.35, 0.8, 1.2, 0.31];
        let mut sigma = 1.0f64;
        let ratio = |s: f64| {
            // k(d)/k(d_min), representable for tiny σ
            let k = RbfKernel::new(s).unwrap();
            let terms: Vec<f64> = ds.iter().map(|&d| (k.value(d).ln() - k.value(0.3).ln()).exp()).collect();
            terms[0] / terms.iter().sum::<f64>()
        };
        let mut prev = ratio(sigma);
        while ratio(sigma) <= 1.0 - 1e-6 {
            sigma *= 0.7;
            let r = ratio(sigma);
            assert!(r >= prev - 1e-15);
            prev = r;
            assert!(sigma > 1e-6, "ratio did not converge");
        }
    }

    proptest! {
        #[test]
        fn positive_scaling_preserves_sign(
            d in prop::collection::vec(0.0f64..3.0, 1..10),
            w in prop::collection::vec(-2.0f64..2.0, 10),
            e in -20i32..20,
            sigma in 0.01f64..5.0,
        ) {
            let w = &w[..d.len()];
            let c = 2f64.powi(e);
            let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
            prop_assert_eq!(kernel_sign(&d, w, sigma), kernel_sign(&d, &scaled, sigma));
        }
    }
}
