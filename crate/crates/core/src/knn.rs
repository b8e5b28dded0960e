//! The K-nearest-neighbour rule.
//!
//! `N_K(o)` holds exactly K training indices: candidates are ordered by
//! distance and then by index, so in a distance tie at the K-th rank the
//! higher indices are dropped. Distances are compared exactly; no epsilon.
//! The decision is the sign of the label sum over `N_K(o)`, with 0 marking a
//! voting tie (only possible for even K).

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::distance::{distance_column, DistanceMatrix};
use crate::metric::Metric;
use crate::{Error, Label, LabeledSample, Result, Scalar};

/// A ternary decision: `-1`, `0` (abstain / exact tie) or `+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(into = "i32")]
pub enum Prediction {
    Negative,
    Abstain,
    Positive,
}

impl Prediction {
    pub fn from_sign(v: i32) -> Self {
        match v.signum() {
            -1 => Prediction::Negative,
            0 => Prediction::Abstain,
            _ => Prediction::Positive,
        }
    }

    pub fn value(self) -> i32 {
        match self {
            Prediction::Negative => -1,
            Prediction::Abstain => 0,
            Prediction::Positive => 1,
        }
    }

    pub fn label(self) -> Option<Label> {
        Label::from_value(self.value())
    }
}

impl From<Prediction> for i32 {
    fn from(p: Prediction) -> i32 {
        p.value()
    }
}

impl From<Label> for Prediction {
    fn from(l: Label) -> Self {
        Prediction::from_sign(l.value())
    }
}

/// Discrete margin `y · Σ_{i ∈ N_K} y_i`, in `{-K, -K+2, …, K}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Margin(pub i32);

impl Margin {
    pub fn value(self) -> i32 {
        self.0
    }
}

/// Outcome of the (K, L) rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KlPrediction {
    Label(Label),
    Reject,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TiePolicy {
    /// Even K allowed; voting ties yield [`Prediction::Abstain`].
    #[default]
    Abstain,
    /// Construction fails for even K.
    RequireOddK,
}

/// Cost of an abstention in the empirical risk.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AbstainCost {
    /// `0 ≠ ±1`, so an abstention is a full error.
    #[default]
    Error,
    Half,
}

/// The K training indices nearest to a query, ordered by (distance, index).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Neighbourhood(Vec<usize>);

impl Neighbourhood {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }

    /// `Σ_{i ∈ N_K} y_i`.
    pub fn vote(&self, labels: &[Label]) -> i32 {
        self.0.iter().map(|&i| labels[i].value()).sum()
    }
}

/// Total order on `(distance, index)` pairs. Distances must not be NaN.
pub(crate) fn rank_cmp<T: Scalar>(a: (usize, T), b: (usize, T)) -> Ordering {
    a.1.partial_cmp(&b.1)
        .expect("distances are never NaN")
        .then(a.0.cmp(&b.0))
}

/// The `k` nearest indices given the distances from one query to every
/// training object. Lower indices win distance ties.
pub fn nearest_k<T: Scalar>(distances: &[T], k: usize) -> Neighbourhood {
    let mut idx: Vec<usize> = (0..distances.len()).collect();
    let cmp = |a: &usize, b: &usize| rank_cmp((*a, distances[*a]), (*b, distances[*b]));
    let k = k.min(idx.len());
    if k < idx.len() && k > 0 {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    idx.truncate(k);
    Neighbourhood(idx)
}

/// Neighbourhood size and tie policy, independent of how distances are
/// obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KnnRule {
    k: usize,
    policy: TiePolicy,
}

impl KnnRule {
    pub fn new(k: usize, m: usize, policy: TiePolicy) -> Result<Self> {
        if k == 0 || k > m {
            return Err(Error::Config(format!("K = {k} must satisfy 1 <= K <= m = {m}")));
        }
        if policy == TiePolicy::RequireOddK && k.is_multiple_of(2) {
            return Err(Error::Config(format!("K = {k} is even but an odd K is required")));
        }
        Ok(Self { k, policy })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn policy(&self) -> TiePolicy {
        self.policy
    }

    /// Checks `L > K/2`.
    pub fn check_reject_level(&self, l: usize) -> Result<()> {
        if 2 * l <= self.k {
            return Err(Error::Config(format!(
                "reject level L = {l} must exceed K/2 = {}",
                self.k as f64 / 2.0
            )));
        }
        Ok(())
    }

    /// Vote over one distance column, e.g. a column of a precomputed matrix.
    pub fn vote<T: Scalar>(&self, distances: &[T], labels: &[Label]) -> i32 {
        nearest_k(distances, self.k).vote(labels)
    }
}

/// One row of a batch evaluation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchRow {
    pub query_index: usize,
    pub prediction: Prediction,
    pub vote: i32,
    pub margin: Option<i32>,
}

/// Predictions for every column of a precomputed training-to-query matrix.
pub fn predict_matrix<T: Scalar>(
    matrix: &DistanceMatrix<T>,
    labels: &[Label],
    rule: KnnRule,
) -> Result<Vec<BatchRow>> {
    if matrix.rows() != labels.len() {
        return Err(Error::LengthMismatch {
            objects: matrix.rows(),
            labels: labels.len(),
        });
    }
    Ok((0..matrix.cols())
        .into_par_iter()
        .map(|j| {
            let vote = rule.vote(matrix.column(j), labels);
            BatchRow {
                query_index: j,
                prediction: Prediction::from_sign(vote),
                vote,
                margin: None,
            }
        })
        .collect())
}

/// A training sample, a metric and the K-NN rule.
#[derive(Clone, Debug)]
pub struct KnnModel<O, M> {
    sample: LabeledSample<O>,
    metric: M,
    rule: KnnRule,
}

impl<O, M> KnnModel<O, M>
where
    M: Metric<O>,
{
    pub fn new(sample: LabeledSample<O>, metric: M, k: usize, policy: TiePolicy) -> Result<Self> {
        let rule = KnnRule::new(k, sample.len(), policy)?;
        Ok(Self { sample, metric, rule })
    }

    pub fn sample(&self) -> &LabeledSample<O> {
        &self.sample
    }

    pub fn metric(&self) -> &M {
        &self.metric
    }

    pub fn k(&self) -> usize {
        self.rule.k
    }

    pub fn rule(&self) -> KnnRule {
        self.rule
    }

    pub fn distances_to(&self, query: &O) -> Result<Vec<M::Scalar>> {
        distance_column(self.sample.objects(), query, &self.metric).map_err(|(i, message)| {
            Error::Metric {
                train: i,
                query: 0,
                message,
            }
        })
    }

    pub fn neighbourhood(&self, query: &O) -> Result<Neighbourhood> {
        Ok(nearest_k(&self.distances_to(query)?, self.rule.k))
    }

    /// `Σ_{i ∈ N_K(query)} y_i`.
    pub fn vote(&self, query: &O) -> Result<i32> {
        Ok(self.neighbourhood(query)?.vote(self.sample.labels()))
    }

    pub fn predict(&self, query: &O) -> Result<Prediction> {
        Ok(Prediction::from_sign(self.vote(query)?))
    }

    pub fn margin(&self, query: &O, truth: Label) -> Result<Margin> {
        Ok(Margin(truth.value() * self.vote(query)?))
    }

    /// Minimum margin over the training sample.
    pub fn training_margin(&self) -> Result<Margin> {
        self.sample
            .iter()
            .map(|(o, y)| self.margin(o, y))
            .try_fold(Margin(i32::MAX), |acc, m| m.map(|m| acc.min(m)))
    }

    /// Fraction of `eval` misclassified; abstentions cost according to `cost`.
    pub fn empirical_risk(&self, eval: &LabeledSample<O>, cost: AbstainCost) -> Result<f64> {
        let mut errors = 0.0;
        for (o, y) in eval.iter() {
            errors += match self.predict(o)? {
                Prediction::Abstain => match cost {
                    AbstainCost::Error => 1.0,
                    AbstainCost::Half => 0.5,
                },
                p if p.value() == y.value() => 0.0,
                _ => 1.0,
            };
        }
        Ok(errors / eval.len() as f64)
    }

    /// The (K, L) rule: predict only when `|vote| ≥ L`, with `L > K/2`.
    pub fn kl_predict(&self, query: &O, l: usize) -> Result<KlPrediction> {
        self.rule.check_reject_level(l)?;
        let vote = self.vote(query)?;
        Ok(kl_decision(vote, l))
    }

    /// Fraction of `queries` rejected by the (K, L) rule.
    pub fn rejection_rate(&self, l: usize, queries: &[O]) -> Result<f64> {
        self.rule.check_reject_level(l)?;
        if queries.is_empty() {
            return Err(Error::Config("rejection rate needs a non-empty test set".into()));
        }
        let mut rejected = 0usize;
        for q in queries {
            if kl_decision(self.vote(q)?, l) == KlPrediction::Reject {
                rejected += 1;
            }
        }
        Ok(rejected as f64 / queries.len() as f64)
    }
}

impl<O, M> KnnModel<O, M>
where
    O: Sync,
    M: Metric<O> + Sync,
{
    /// Predictions for many queries in parallel; margins when labels are given.
    pub fn predict_batch(&self, queries: &[O], labels: Option<&[Label]>) -> Result<Vec<BatchRow>> {
        if let Some(l) = labels {
            if l.len() != queries.len() {
                return Err(Error::LengthMismatch {
                    objects: queries.len(),
                    labels: l.len(),
                });
            }
        }
        queries
            .par_iter()
            .enumerate()
            .map(|(j, q)| {
                let vote = self.vote(q).map_err(|e| match e {
                    Error::Metric { train, message, .. } => Error::Metric {
                        train,
                        query: j,
                        message,
                    },
                    e => e,
                })?;
                Ok(BatchRow {
                    query_index: j,
                    prediction: Prediction::from_sign(vote),
                    vote,
                    margin: labels.map(|l| l[j].value() * vote),
                })
            })
            .collect()
    }
}

fn kl_decision(vote: i32, l: usize) -> KlPrediction {
    if vote.unsigned_abs() as usize >= l {
        KlPrediction::Label(Label::from_sign(vote).expect("|vote| >= L > 0"))
    } else {
        KlPrediction::Reject
    }
}
