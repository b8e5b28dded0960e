//! Command pipelines. Each returns its files and a stdout summary; nothing is
//! written until the whole pipeline has succeeded.

use nnbound_core::bounds::{optimize_sparsity, BoundQuery, Theorem};
use nnbound_core::distance::pairwise_distances;
use nnbound_core::kernel::{on_nn_decision_tie, predict_from_distances, Coefficients, ParzenEstimate};
use nnbound_core::knn::{nearest_k, AbstainCost, TiePolicy};
use nnbound_core::metric::MetricError;
use nnbound_core::redundancy::{candidate_order, training_margins, Method, RedundancyAnalysis, RedundancyReport};
use nnbound_core::{Euclidean, KnnModel, Metric, Prediction, Probes, Sample, Squared};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{MethodChoice, MetricId, ProbeSpec, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_num, row, Outputs};
use crate::synthetic::Generator;

pub const FIG1_SIGMAS: [f64; 3] = [5.0, 0.4, 0.02];
pub const FIG3_S: [f64; 4] = [0.0, 0.33, 0.9, 0.99];
pub const DEFAULT_S: f64 = 0.9;
pub const FIGURE_M: usize = 100;
/// Target size of the default redundancy probe grid.
pub const DEFAULT_PROBE_BUDGET: usize = 4096;
pub const CAVEAT: &str = "r is certified only on the listed probe domain, not on the whole object space; \
the bound is conditional on that redundancy count";

impl Metric<Vec<f64>> for MetricId {
    type Scalar = f64;

    fn distance(&self, a: &Vec<f64>, b: &Vec<f64>) -> Result<f64, MetricError> {
        match self {
            MetricId::Euclidean => Euclidean.distance(a, b),
            MetricId::SquaredEuclidean => Squared(Euclidean).distance(a, b),
        }
    }
}

#[derive(Debug, Default)]
pub struct Report {
    pub outputs: Outputs,
    pub stdout: String,
}

fn cost(cfg: &RunConfig) -> AbstainCost {
    if cfg.abstain_as_half {
        AbstainCost::Half
    } else {
        AbstainCost::Error
    }
}

fn prediction_str(p: Prediction) -> &'static str {
    match p {
        Prediction::Negative => "-1",
        Prediction::Abstain => "0",
        Prediction::Positive => "1",
    }
}

/// Default probes: a regular grid over `[−1, 1]^n` widened to the data's
/// bounding box, with about [`DEFAULT_PROBE_BUDGET`] points.
fn default_probe_spec(sample: &Sample) -> ProbeSpec {
    let dims = sample.dim();
    let (lo, hi) = sample
        .objects()
        .iter()
        .flatten()
        .fold((-1.0f64, 1.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let steps = ((DEFAULT_PROBE_BUDGET as f64).powf(1.0 / dims as f64).floor() as usize).max(2);
    ProbeSpec::Grid {
        min: lo,
        max: hi,
        steps,
        dims: Some(dims),
    }
}

fn probes_for(cfg: &RunConfig, sample: &Sample) -> CliResult<Probes> {
    cfg.probe.clone().unwrap_or_else(|| default_probe_spec(sample)).build(sample)
}

struct Classified {
    model: KnnModel<Vec<f64>, MetricId>,
    r_emp: f64,
    gamma: i32,
}

fn classify_training(cfg: &RunConfig, sample: &Sample) -> CliResult<Classified> {
    let model = KnnModel::new(sample.clone(), cfg.metric, cfg.k, TiePolicy::Abstain)?;
    if let Some(l) = cfg.l {
        model.rule().check_reject_level(l)?;
    }
    let r_emp = model.empirical_risk(sample, cost(cfg))?;
    let gamma = model.training_margin()?.value();
    Ok(Classified { model, r_emp, gamma })
}

pub fn classify(cfg: &RunConfig) -> CliResult<Report> {
    cfg.validate()?;
    let sample = cfg.load_sample()?;
    let test = cfg.load_test()?;
    let c = classify_training(cfg, &sample)?;
    let eval = test.as_ref().unwrap_or(&sample);

    let rows = c.model.predict_batch(eval.objects(), Some(eval.labels()))?;
    let mut csv = row(["query_index", "prediction", "vote", "margin"]);
    for r in &rows {
        csv += &row([
            r.query_index.to_string(),
            prediction_str(r.prediction).to_string(),
            r.vote.to_string(),
            r.margin.map_or(String::new(), |g| g.to_string()),
        ]);
    }

    let mut summary = format!(
        "m={}\nK={}\nR_emp={}\ngamma_Z={}\n",
        sample.len(),
        cfg.k,
        fmt_num(c.r_emp),
        c.gamma
    );
    if let Some(t) = &test {
        summary += &format!("test_m={}\nR_test={}\n", t.len(), fmt_num(c.model.empirical_risk(t, cost(cfg))?));
    }
    if let Some(l) = cfg.l {
        let rho = c.model.rejection_rate(l, eval.objects())?;
        summary += &format!("L={l}\nrho_L={}\n", fmt_num(rho));
    }

    let mut outputs = Outputs::new();
    outputs.add("predictions.csv", csv);
    outputs.add("classify_summary.txt", summary.clone());
    Ok(Report { outputs, stdout: summary })
}

/// Retrains K-NN without the removed points and compares every probe.
pub fn verify_by_retraining(sample: &Sample, report: &RedundancyReport, probes: &Probes, metric: MetricId) -> CliResult<bool> {
    if report.removed.is_empty() {
        return Ok(true);
    }
    let full = KnnModel::new(sample.clone(), metric, report.k, TiePolicy::Abstain)?;
    let reduced = KnnModel::new(sample.without(&report.removed)?, metric, report.k, TiePolicy::Abstain)?;
    let agree = probes
        .probes()
        .par_iter()
        .map(|q| Ok(full.predict(q)? == reduced.predict(q)?))
        .collect::<nnbound_core::Result<Vec<bool>>>()?;
    Ok(agree.into_iter().all(|a| a))
}

/// Finds and double-checks a redundant subset.
pub fn certify(cfg: &RunConfig, sample: &Sample, probes: &Probes) -> CliResult<RedundancyReport> {
    let analysis = RedundancyAnalysis::new(sample, probes, &cfg.metric, cfg.k)?;
    let exhaustive = match cfg.method {
        MethodChoice::Auto => sample.len() <= cfg.exhaustive_threshold,
        MethodChoice::Exhaustive => true,
        MethodChoice::Greedy => false,
    };
    let report = if exhaustive {
        analysis.exhaustive(cfg.exhaustive_threshold)?
    } else {
        let margins = match cfg.order {
            nnbound_core::redundancy::CandidateOrder::ByMarginDesc => Some(training_margins(sample, &cfg.metric, cfg.k)?),
            nnbound_core::redundancy::CandidateOrder::ByIndex => None,
        };
        analysis.greedy(&candidate_order(cfg.order, margins.as_deref(), sample.len()))?
    };
    if !analysis.verify(&report)? || !verify_by_retraining(sample, &report, probes, cfg.metric)? {
        return Err(CliError::Verification(format!(
            "removing {:?} changes a prediction on the probes",
            report.removed
        )));
    }
    Ok(report)
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Exhaustive => "exhaustive",
        Method::Greedy => "greedy",
    }
}

pub fn redundancy(cfg: &RunConfig) -> CliResult<Report> {
    cfg.validate()?;
    let sample = cfg.load_sample()?;
    let probes = probes_for(cfg, &sample)?;
    let report = certify(cfg, &sample, &probes)?;
    let stdout = format!(
        "r={} of m={} (K={}, {}{}) relative to probes: {} ({} points)\n",
        report.r,
        sample.len(),
        report.k,
        method_name(report.method),
        if report.maximal_certified { ", maximum certified" } else { ", lower bound" },
        probes.provenance(),
        probes.len()
    );
    let mut outputs = Outputs::new();
    outputs.add("redundancy.jsonl", report.to_json_line() + "\n");
    Ok(Report { outputs, stdout })
}

pub const BOUND_HEADER: [&str; 9] = ["theorem", "m", "r", "delta", "S", "R_emp", "bound", "raw", "clamped"];

fn uses_sparsity(t: Theorem) -> bool {
    matches!(t, Theorem::T4 | Theorem::T5)
}

fn uses_risk(t: Theorem) -> bool {
    matches!(t, Theorem::T2 | Theorem::T5)
}

pub fn bound(cfg: &RunConfig) -> CliResult<Report> {
    cfg.validate()?;
    let m = cfg.m.ok_or_else(|| CliError::Usage("missing required key `m`".into()))?;
    let mut csv = row(BOUND_HEADER);
    for &thm in &cfg.theorems {
        let s_values: Vec<Option<f64>> = if uses_sparsity(thm) {
            cfg.s_list
                .clone()
                .ok_or_else(|| CliError::Usage(format!("theorem {} needs `S`", thm.number())))?
                .into_iter()
                .map(Some)
                .collect()
        } else {
            vec![None]
        };
        for s in s_values {
            let q = BoundQuery::new(m, cfg.r, cfg.delta)
                .with_sparsity(s.unwrap_or(0.0))
                .with_empirical_risk(cfg.r_emp);
            let b = q.evaluate(thm)?;
            csv += &row([
                thm.to_string(),
                m.to_string(),
                cfg.r.to_string(),
                fmt_num(cfg.delta),
                s.map_or(String::new(), fmt_num),
                if uses_risk(thm) { fmt_num(cfg.r_emp) } else { String::new() },
                fmt_num(b.value),
                fmt_num(b.raw),
                (b.clamped() || b.radicand_clamped).to_string(),
            ]);
        }
    }
    let mut outputs = Outputs::new();
    outputs.add("bounds.csv", csv.clone());
    Ok(Report { outputs, stdout: csv })
}

/// The sparsity grid `i / steps`, `i < steps`.
pub fn s_grid(steps: usize) -> Vec<f64> {
    (0..steps).map(|i| i as f64 / steps as f64).collect()
}

pub fn fig2(cfg: &RunConfig) -> CliResult<Report> {
    cfg.validate()?;
    let m = cfg.m.unwrap_or(FIGURE_M);
    if let Some(&r) = cfg.r_list.iter().find(|&&r| r > m) {
        return Err(CliError::Usage(format!("r = {r} exceeds m = {m}")));
    }
    let grid = s_grid(cfg.s_steps);
    let columns: Vec<Vec<f64>> = cfg
        .r_list
        .par_iter()
        .map(|&r| {
            grid.iter()
                .map(|&s| Ok(BoundQuery::new(m, r, cfg.delta).with_sparsity(s).evaluate(Theorem::T4)?.value))
                .collect::<CliResult<Vec<f64>>>()
        })
        .collect::<CliResult<_>>()?;

    let mut csv = row(std::iter::once("S".to_string()).chain(cfg.r_list.iter().map(|r| format!("bound_r{r}"))));
    for (i, &s) in grid.iter().enumerate() {
        csv += &row(std::iter::once(fmt_num(s)).chain(columns.iter().map(|c| fmt_num(c[i]))));
    }

    let mut sopt = row(["r", "S_opt", "bound_at_opt", "r_over_m", "below_r_over_m"]);
    let mut stdout = String::new();
    for &r in &cfg.r_list {
        let opt = optimize_sparsity(&BoundQuery::new(m, r, cfg.delta), Theorem::T4, 1e-9)?;
        let ratio = r as f64 / m as f64;
        sopt += &row([
            r.to_string(),
            fmt_num(opt.s),
            fmt_num(opt.bound.value),
            fmt_num(ratio),
            (opt.s < ratio).to_string(),
        ]);
        stdout += &format!(
            "r={r}: S_opt={} bound={} (S_opt < r/m: {})\n",
            fmt_num(opt.s),
            fmt_num(opt.bound.value),
            opt.s < ratio
        );
    }
    let mut outputs = Outputs::new();
    outputs.add("fig2.csv", csv);
    outputs.add("fig2_sopt.csv", sopt);
    Ok(Report { outputs, stdout })
}

pub fn fig3(cfg: &RunConfig) -> CliResult<Report> {
    cfg.validate()?;
    let m = cfg.m.unwrap_or(FIGURE_M);
    let s_list = cfg.s_or(&FIG3_S);
    let mut csv = row(std::iter::once("r".to_string()).chain(s_list.iter().map(|s| format!("bound_S{}", fmt_num(*s)))));
    let mut below_half = vec![None; s_list.len()];
    for r in 0..=m {
        let mut fields = vec![r.to_string()];
        for (k, &s) in s_list.iter().enumerate() {
            let b = BoundQuery::new(m, r, cfg.delta).with_sparsity(s).evaluate(Theorem::T4)?;
            if b.value < 0.5 && below_half[k].is_none() {
                below_half[k] = Some(r);
            }
            fields.push(fmt_num(b.value));
        }
        csv += &row(fields);
    }
    let mut stdout = String::new();
    for (s, first) in s_list.iter().zip(&below_half) {
        stdout += &match first {
            Some(r) => format!("S={}: bound < 0.5 from r={r}\n", fmt_num(*s)),
            None => format!("S={}: bound never below 0.5\n", fmt_num(*s)),
        };
    }
    let mut outputs = Outputs::new();
    outputs.add("fig3.csv", csv);
    Ok(Report { outputs, stdout })
}

/// Agreement of one σ column with exact 1-NN.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Agreement {
    pub sigma: f64,
    pub agreement: f64,
    pub agree: usize,
    pub compared: usize,
    pub excluded: usize,
}

pub fn fig1(cfg: &RunConfig) -> CliResult<Report> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    if cfg.dataset.is_none() && cfg.generator.is_none() {
        cfg.generator = Some(Generator::TwoGaussians);
    }
    let sample = cfg.load_sample()?;
    if sample.dim() != 2 {
        return Err(CliError::Usage(format!("fig1 needs 2-D data, got {} dimensions", sample.dim())));
    }
    let probes = cfg
        .probe
        .clone()
        .unwrap_or(ProbeSpec::Grid {
            min: -1.0,
            max: 1.0,
            steps: 200,
            dims: Some(2),
        })
        .build(&sample)?;
    let sigmas = cfg.sigmas_or(&FIG1_SIGMAS);
    let labels = sample.labels();
    let (pos, neg) = sample.class_counts();
    let parzen: Option<Vec<ParzenEstimate<Vec<f64>, MetricId>>> = if pos > 0 && neg > 0 {
        Some(
            sigmas
                .iter()
                .map(|&s| ParzenEstimate::new(sample.clone(), s, 2, cfg.metric))
                .collect::<nnbound_core::Result<_>>()?,
        )
    } else {
        None
    };
    let alpha = Coefficients::from_labels(labels);
    let matrix = pairwise_distances(&sample, &probes, &cfg.metric)?;

    // per probe: (per-σ predictions, 1-NN prediction, on a 1-NN tie)
    let raster: Vec<(Vec<Prediction>, Prediction, bool)> = (0..probes.len())
        .into_par_iter()
        .map(|j| {
            let d = matrix.column(j);
            let preds = sigmas
                .iter()
                .enumerate()
                .map(|(k, &s)| match &parzen {
                    Some(p) => p[k].classify_distances(d),
                    None => predict_from_distances(d, &alpha, s),
                })
                .collect();
            let nn = Prediction::from_sign(nearest_k(d, 1).vote(labels));
            (preds, nn, on_nn_decision_tie(d, labels))
        })
        .collect();

    let mut csv = row(["x", "y"]
        .into_iter()
        .map(String::from)
        .chain(sigmas.iter().map(|s| format!("pred_sigma_{}", fmt_num(*s))))
        .chain(std::iter::once("pred_1nn".to_string())));
    for (p, (preds, nn, _)) in probes.probes().iter().zip(&raster) {
        csv += &row(
            [fmt_num(p[0]), fmt_num(p[1])]
                .into_iter()
                .chain(preds.iter().map(|&q| prediction_str(q).to_string()))
                .chain(std::iter::once(prediction_str(*nn).to_string())),
        );
    }

    let agreements: Vec<Agreement> = sigmas
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let (mut agree, mut compared, mut excluded) = (0, 0, 0);
            for (preds, nn, tie) in &raster {
                if *tie || preds[k] == Prediction::Abstain {
                    excluded += 1;
                } else {
                    compared += 1;
                    agree += (preds[k] == *nn) as usize;
                }
            }
            Agreement {
                sigma: s,
                agreement: if compared == 0 { 1.0 } else { agree as f64 / compared as f64 },
                agree,
                compared,
                excluded,
            }
        })
        .collect();
    let mut agreement_csv = row(["sigma", "agreement", "agree", "compared", "excluded"]);
    let mut stdout = String::new();
    for a in &agreements {
        agreement_csv += &row([
            fmt_num(a.sigma),
            fmt_num(a.agreement),
            a.agree.to_string(),
            a.compared.to_string(),
            a.excluded.to_string(),
        ]);
        stdout += &format!("sigma={}: agreement with 1-NN {}\n", fmt_num(a.sigma), fmt_num(a.agreement));
    }

    let mut data_csv = row(["x", "y", "label"]);
    for (x, y) in sample.iter() {
        data_csv += &row([fmt_num(x[0]), fmt_num(x[1]), y.to_string()]);
    }

    let mut outputs = Outputs::new();
    outputs.add("fig1_data.csv", data_csv);
    outputs.add("fig1_raster.csv", csv);
    outputs.add("fig1_agreement.csv", agreement_csv);
    Ok(Report { outputs, stdout })
}

#[derive(Debug, Serialize)]
struct ProbeInfo {
    kind: String,
    size: usize,
    provenance: String,
}

#[derive(Debug, Serialize)]
struct SelfBound {
    data: String,
    m: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "R_emp")]
    r_emp: f64,
    #[serde(rename = "gamma_Z")]
    gamma: i32,
    r: usize,
    removed: Vec<usize>,
    method: Method,
    maximal_certified: bool,
    probe: ProbeInfo,
    #[serde(rename = "S")]
    s: f64,
    delta: f64,
    theorem: Theorem,
    bound: f64,
    raw: f64,
    clamped: bool,
    caveat: &'static str,
}

/// Thm 4 needs a hypothesis consistent with the sample.
pub fn selfbound_theorem(k: usize, r_emp: f64) -> Theorem {
    if k == 1 && r_emp == 0.0 {
        Theorem::T4
    } else {
        Theorem::T5
    }
}

pub fn selfbound(cfg: &RunConfig) -> CliResult<Report> {
    cfg.validate()?;
    let sample = cfg.load_sample().map_err(|e| e.in_stage("classify"))?;
    let c = classify_training(cfg, &sample).map_err(|e| e.in_stage("classify"))?;

    let probes = probes_for(cfg, &sample).map_err(|e| e.in_stage("redundancy"))?;
    let report = certify(cfg, &sample, &probes).map_err(|e| e.in_stage("redundancy"))?;

    let s = cfg.s_or(&[DEFAULT_S])[0];
    let theorem = selfbound_theorem(cfg.k, c.r_emp);
    let b = BoundQuery::new(sample.len(), report.r, cfg.delta)
        .with_sparsity(s)
        .with_empirical_risk(c.r_emp)
        .evaluate(theorem)
        .map_err(|e| CliError::from(e).in_stage("bound"))?;

    let data = match (&cfg.dataset, cfg.synthetic_spec()) {
        (Some(path), _) => format!("file {}", path.display()),
        (None, Some(spec)) => format!(
            "{} per_class={} dims={} seed={}",
            spec.generator, spec.per_class, spec.dims, spec.seed
        ),
        (None, None) => unreachable!("load_sample succeeded"),
    };
    let out = SelfBound {
        data,
        m: sample.len(),
        k: cfg.k,
        r_emp: c.r_emp,
        gamma: c.gamma,
        r: report.r,
        removed: report.removed.clone(),
        method: report.method,
        maximal_certified: report.maximal_certified,
        probe: ProbeInfo {
            kind: report.probe.kind.clone(),
            size: report.probe.size,
            provenance: probes.provenance().to_string(),
        },
        s,
        delta: cfg.delta,
        theorem,
        bound: b.value,
        raw: b.raw,
        clamped: b.clamped() || b.radicand_clamped,
        caveat: CAVEAT,
    };
    let json = serde_json::to_string_pretty(&out).expect("plain data serialises") + "\n";
    let stdout = format!(
        "K={} R_emp={} r={} ({} probes: {}) S={} {}: bound={}\n",
        out.k,
        fmt_num(out.r_emp),
        out.r,
        out.probe.size,
        out.probe.provenance,
        fmt_num(s),
        theorem,
        fmt_num(out.bound)
    );
    let mut outputs = Outputs::new();
    outputs.add("selfbound.json", json);
    Ok(Report { outputs, stdout })
}
