//! Redundant training subsets.
//!
//! A subset `Z'` is redundant for K-NN when the classifier trained on `Z ∖ Z'`
//! makes the same ternary prediction as the one trained on `Z` at every probe.
//! The redundancy count `r` is the size of a redundant subset; zeroing the
//! coefficients of a 1-NN redundant subset in any of the `2^r` patterns leaves
//! the kernel expansion equivalent to `g_y`.
//!
//! All statements are relative to the probe domain, whose descriptor is stored
//! in every [`RedundancyReport`].

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::distance::{distances_to, DistanceMatrix};
use crate::kernel::Coefficients;
use crate::knn::{nearest_k, KnnRule, TiePolicy};
use crate::metric::Metric;
use crate::probe::{ProbeDescriptor, ProbeDomain};
use crate::{Error, Label, LabeledSample, Result, Scalar};

/// Default largest `m` for which exhaustive search is attempted.
pub const DEFAULT_EXHAUSTIVE_THRESHOLD: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exhaustive,
    Greedy,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CandidateOrder {
    /// Highest training margin first, ties by index.
    #[default]
    ByMarginDesc,
    ByIndex,
}

/// A certified redundant subset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RedundancyReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub r: usize,
    /// 0-based training indices, ascending.
    pub removed: Vec<usize>,
    pub probe: ProbeDescriptor,
    pub method: Method,
    /// Only exhaustive search certifies maximum cardinality.
    pub maximal_certified: bool,
}

impl RedundancyReport {
    pub fn to_json_line(&self) -> String {
        serde_json_line(self)
    }
}

fn serde_json_line(report: &RedundancyReport) -> String {
    // hand-written to keep the core free of a JSON dependency; field order fixed
    let removed = report.removed.iter().map(|i| i.to_string()).join(",");
    format!(
        "{{\"K\":{},\"r\":{},\"removed\":[{}],\"probe\":{{\"kind\":\"{}\",\"size\":{}}},\"method\":\"{}\",\"maximal_certified\":{}}}",
        report.k,
        report.r,
        removed,
        report.probe.kind,
        report.probe.size,
        match report.method {
            Method::Exhaustive => "exhaustive",
            Method::Greedy => "greedy",
        },
        report.maximal_certified
    )
}

/// `|G_{Z_1}| = 2^r`, a lower bound on the size of the equivalence class of
/// `g_y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EquivalenceCount {
    r: usize,
}

impl EquivalenceCount {
    pub fn log2(&self) -> f64 {
        self.r as f64
    }

    pub fn ln(&self) -> f64 {
        self.r as f64 * std::f64::consts::LN_2
    }

    /// `2^r` when it fits in a `u128`.
    pub fn exact(&self) -> Option<u128> {
        1u128.checked_shl(self.r as u32).filter(|_| self.r < 128)
    }
}

pub fn equivalence_count_lower_bound(r: usize) -> EquivalenceCount {
    EquivalenceCount { r }
}

/// Distances from every probe to the training sample, pre-ranked, with the
/// full model's predictions cached.
#[derive(Clone, Debug)]
pub struct RedundancyAnalysis {
    labels: Vec<Label>,
    k: usize,
    probe: ProbeDescriptor,
    /// `order[j]`: training indices sorted by (distance to probe j, index).
    order: Vec<Vec<u32>>,
    /// `rank[j][i]`: position of training index i in `order[j]`.
    rank: Vec<Vec<u32>>,
    full: Vec<i32>,
}

impl RedundancyAnalysis {
    pub fn new<O, M>(sample: &LabeledSample<O>, probes: &ProbeDomain<O>, metric: &M, k: usize) -> Result<Self>
    where
        O: Sync,
        M: Metric<O> + Sync,
    {
        let matrix = distances_to(sample.objects(), probes.probes(), metric)?;
        Self::from_matrix(&matrix, sample.labels(), k, probes.descriptor())
    }

    /// From a training-to-probe distance matrix.
    pub fn from_matrix<T: Scalar>(
        matrix: &DistanceMatrix<T>,
        labels: &[Label],
        k: usize,
        probe: ProbeDescriptor,
    ) -> Result<Self> {
        let m = labels.len();
        if matrix.rows() != m {
            return Err(Error::LengthMismatch {
                objects: matrix.rows(),
                labels: m,
            });
        }
        if m == 0 {
            return Err(Error::EmptySample);
        }
        if matrix.cols() == 0 {
            return Err(Error::EmptyProbes);
        }
        if k == 0 || k > m {
            return Err(Error::Config(format!("K = {k} must satisfy 1 <= K <= m = {m}")));
        }
        let order: Vec<Vec<u32>> = matrix
            .columns()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..m as u32).collect();
                idx.sort_unstable_by(|&a, &b| {
                    col[a as usize]
                        .partial_cmp(&col[b as usize])
                        .expect("distances are never NaN")
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        let rank = order
            .par_iter()
            .map(|o| {
                let mut r = vec![0u32; m];
                for (pos, &i) in o.iter().enumerate() {
                    r[i as usize] = pos as u32;
                }
                r
            })
            .collect();
        let mut analysis = Self {
            labels: labels.to_vec(),
            k,
            probe,
            order,
            rank,
            full: Vec::new(),
        };
        let none = vec![false; m];
        analysis.full = (0..analysis.order.len())
            .map(|j| analysis.reduced_vote(j, &none).0.signum())
            .collect();
        Ok(analysis)
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn probe_count(&self) -> usize {
        self.order.len()
    }

    pub fn probe(&self) -> &ProbeDescriptor {
        &self.probe
    }

    /// Full-sample predictions on the probes.
    pub fn full_predictions(&self) -> &[i32] {
        &self.full
    }

    /// Vote at probe `j` with `removed` points dropped, and the position in
    /// `order[j]` of the K-th retained point.
    fn reduced_vote(&self, j: usize, removed: &[bool]) -> (i32, usize) {
        let mut taken = 0;
        let mut vote = 0;
        for (pos, &i) in self.order[j].iter().enumerate() {
            let i = i as usize;
            if removed[i] {
                continue;
            }
            vote += self.labels[i].value();
            taken += 1;
            if taken == self.k {
                return (vote, pos);
            }
        }
        unreachable!("at least K points are retained")
    }

    /// Predictions of the model trained without `subset`.
    pub fn reduced_predictions(&self, subset: &[usize]) -> Result<Vec<i32>> {
        let mask = self.mask(subset)?;
        Ok((0..self.probe_count())
            .map(|j| self.reduced_vote(j, &mask).0.signum())
            .collect())
    }

    fn mask(&self, subset: &[usize]) -> Result<Vec<bool>> {
        let m = self.m();
        let mut mask = vec![false; m];
        for &i in subset {
            if i >= m {
                return Err(Error::InvalidSubset(format!("index {i} out of range for m = {m}")));
            }
            mask[i] = true;
        }
        let removed = mask.iter().filter(|&&b| b).count();
        if removed == m {
            return Err(Error::InvalidSubset("cannot remove the whole sample".into()));
        }
        if m - removed < self.k {
            return Err(Error::Config(format!(
                "K = {} exceeds the {} points left after removal",
                self.k,
                m - removed
            )));
        }
        Ok(mask)
    }

    fn mask_is_redundant(&self, mask: &[bool]) -> bool {
        (0..self.probe_count())
            .into_par_iter()
            .with_min_len(256)
            .all(|j| self.reduced_vote(j, mask).0.signum() == self.full[j])
    }

    /// Whether removing `subset` leaves every probe prediction unchanged,
    /// abstentions included.
    pub fn is_redundant(&self, subset: &[usize]) -> Result<bool> {
        Ok(self.mask_is_redundant(&self.mask(subset)?))
    }

    /// A maximum-cardinality redundant subset; the lexicographically smallest
    /// among equal-size maximisers.
    pub fn exhaustive(&self, threshold: usize) -> Result<RedundancyReport> {
        let m = self.m();
        if m > threshold {
            return Err(Error::ExhaustiveTooLarge { m, threshold });
        }
        let largest = (m - 1).min(m - self.k);
        for size in (1..=largest).rev() {
            let candidates: Vec<Vec<usize>> = (0..m).combinations(size).collect();
            let hit = candidates.par_iter().position_first(|c| {
                let mut mask = vec![false; m];
                for &i in c {
                    mask[i] = true;
                }
                self.mask_is_redundant(&mask)
            });
            if let Some(pos) = hit {
                return Ok(self.report(candidates[pos].clone(), Method::Exhaustive));
            }
        }
        Ok(self.report(Vec::new(), Method::Exhaustive))
    }

    /// Greedy accumulation: each candidate is kept iff the accumulated removal
    /// set stays redundant; passes repeat until nothing changes. The result is
    /// sound but possibly smaller than the maximum.
    pub fn greedy(&self, candidates: &[usize]) -> Result<RedundancyReport> {
        let m = self.m();
        if let Some(&bad) = candidates.iter().find(|&&c| c >= m) {
            return Err(Error::InvalidSubset(format!("candidate {bad} out of range for m = {m}")));
        }
        let mut mask = vec![false; m];
        let mut count = 0;
        // position of the K-th retained point per probe under the current mask
        let mut cut: Vec<usize> = (0..self.probe_count())
            .map(|j| self.reduced_vote(j, &mask).1)
            .collect();
        loop {
            let mut changed = false;
            for &c in candidates {
                if mask[c] || m - count - 1 < self.k {
                    continue;
                }
                mask[c] = true;
                let affected: Vec<usize> = (0..self.probe_count())
                    .filter(|&j| self.rank[j][c] as usize <= cut[j])
                    .collect();
                let ok = affected
                    .par_iter()
                    .with_min_len(256)
                    .all(|&j| self.reduced_vote(j, &mask).0.signum() == self.full[j]);
                if ok {
                    count += 1;
                    changed = true;
                    for j in affected {
                        cut[j] = self.reduced_vote(j, &mask).1;
                    }
                } else {
                    mask[c] = false;
                }
            }
            if !changed {
                break;
            }
        }
        let removed = (0..m).filter(|&i| mask[i]).collect();
        Ok(self.report(removed, Method::Greedy))
    }

    fn report(&self, removed: Vec<usize>, method: Method) -> RedundancyReport {
        RedundancyReport {
            k: self.k,
            r: removed.len(),
            removed,
            probe: self.probe.clone(),
            method,
            maximal_certified: method == Method::Exhaustive,
        }
    }

    /// Re-checks a report against this analysis.
    pub fn verify(&self, report: &RedundancyReport) -> Result<bool> {
        Ok(report.k == self.k
            && report.r == report.removed.len()
            && report.probe == self.probe
            && self.is_redundant(&report.removed)?)
    }

    /// Whether `g_α` and `g_y` agree at every probe in the `σ → 0` limit.
    pub fn hypothesis_equivalent(&self, alpha: &Coefficients) -> Result<bool> {
        if alpha.len() != self.m() {
            return Err(Error::LengthMismatch {
                objects: self.m(),
                labels: alpha.len(),
            });
        }
        let a = alpha.as_slice();
        Ok((0..self.probe_count()).into_par_iter().with_min_len(256).all(|j| {
            let order = &self.order[j];
            let reference = self.labels[order[0] as usize].value();
            let first = order.iter().map(|&i| a[i as usize]).find(|&v| v != 0);
            first.map(i32::from) == Some(reference)
        }))
    }
}

/// Candidate sequence for the greedy search.
pub fn candidate_order(order: CandidateOrder, margins: Option<&[i32]>, m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..m).collect();
    if let (CandidateOrder::ByMarginDesc, Some(g)) = (order, margins) {
        idx.sort_by(|&a, &b| g[b].cmp(&g[a]).then(a.cmp(&b)));
    }
    idx
}

/// Training margins `γ(o_i)` of the K-NN rule on its own sample.
pub fn training_margins<O, M>(sample: &LabeledSample<O>, metric: &M, k: usize) -> Result<Vec<i32>>
where
    O: Sync,
    M: Metric<O> + Sync,
{
    KnnRule::new(k, sample.len(), TiePolicy::Abstain)?;
    let matrix = distances_to(sample.objects(), sample.objects(), metric)?;
    Ok(sample
        .labels()
        .iter()
        .enumerate()
        .map(|(j, y)| y.value() * nearest_k(matrix.column(j), k).vote(sample.labels()))
        .collect())
}

pub fn is_redundant_subset<O, M>(
    sample: &LabeledSample<O>,
    subset: &[usize],
    k: usize,
    probes: &ProbeDomain<O>,
    metric: &M,
) -> Result<bool>
where
    O: Sync,
    M: Metric<O> + Sync,
{
    RedundancyAnalysis::new(sample, probes, metric, k)?.is_redundant(subset)
}

pub fn max_redundant_exhaustive<O, M>(
    sample: &LabeledSample<O>,
    k: usize,
    probes: &ProbeDomain<O>,
    metric: &M,
    threshold: usize,
) -> Result<RedundancyReport>
where
    O: Sync,
    M: Metric<O> + Sync,
{
    if sample.len() > threshold {
        return Err(Error::ExhaustiveTooLarge {
            m: sample.len(),
            threshold,
        });
    }
    RedundancyAnalysis::new(sample, probes, metric, k)?.exhaustive(threshold)
}

pub fn max_redundant_greedy<O, M>(
    sample: &LabeledSample<O>,
    k: usize,
    probes: &ProbeDomain<O>,
    metric: &M,
    order: CandidateOrder,
) -> Result<RedundancyReport>
where
    O: Sync,
    M: Metric<O> + Sync,
{
    let analysis = RedundancyAnalysis::new(sample, probes, metric, k)?;
    let margins = match order {
        CandidateOrder::ByMarginDesc => Some(training_margins(sample, metric, k)?),
        CandidateOrder::ByIndex => None,
    };
    analysis.greedy(&candidate_order(order, margins.as_deref(), sample.len()))
}

pub fn hypothesis_equivalent<O, M>(
    sample: &LabeledSample<O>,
    alpha: &Coefficients,
    probes: &ProbeDomain<O>,
    metric: &M,
) -> Result<bool>
where
    O: Sync,
    M: Metric<O> + Sync,
{
    RedundancyAnalysis::new(sample, probes, metric, 1)?.hypothesis_equivalent(alpha)
}
