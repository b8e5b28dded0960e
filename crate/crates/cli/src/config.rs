//! `key = value` run configuration.
//!
//! The same keys are accepted in a config file and as `--set key=value`
//! overrides; named flags map onto them. Unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use nnbound_core::bounds::Theorem;
use nnbound_core::data::{load_dataset, DatasetFormat};
use nnbound_core::probe::GridAxis;
use nnbound_core::redundancy::{CandidateOrder, DEFAULT_EXHAUSTIVE_THRESHOLD};
use nnbound_core::{Probes, Provenance, Sample};

use crate::error::{CliError, CliResult};
use crate::synthetic::{Generator, SyntheticSpec};

/// Largest probe domain a grid spec may expand to.
pub const MAX_PROBES: usize = 4_000_000;

pub const KEYS: &[&str] = &[
    "dataset",
    "header",
    "test",
    "generator",
    "per_class",
    "dims",
    "separation",
    "spread",
    "seed",
    "metric",
    "K",
    "L",
    "abstain_as_half",
    "sigma",
    "probe",
    "delta",
    "S",
    "thm",
    "m",
    "r",
    "R_emp",
    "r_list",
    "s_steps",
    "method",
    "order",
    "exhaustive_threshold",
    "out",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricId {
    Euclidean,
    SquaredEuclidean,
}

impl FromStr for MetricId {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "euclidean" => Ok(MetricId::Euclidean),
            "squared-euclidean" => Ok(MetricId::SquaredEuclidean),
            other => Err(CliError::Usage(format!(
                "unknown metric `{other}` (euclidean, squared-euclidean)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProbeSpec {
    /// `grid:min,max,steps[,dims]`; dims default to the data dimension.
    Grid {
        min: f64,
        max: f64,
        steps: usize,
        dims: Option<usize>,
    },
    /// `file:path`, one comma-separated point per line.
    File(PathBuf),
    /// The training objects.
    Dataset,
}

impl FromStr for ProbeSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let bad = || CliError::Usage(format!("probe `{s}` is not grid:min,max,steps[,dims] | file:path | dataset"));
        if s == "dataset" {
            return Ok(ProbeSpec::Dataset);
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(ProbeSpec::File(PathBuf::from(path)));
        }
        let body = s.strip_prefix("grid:").ok_or_else(bad)?;
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let min = parts[0].parse().map_err(|_| bad())?;
        let max = parts[1].parse().map_err(|_| bad())?;
        let steps = parts[2].parse().map_err(|_| bad())?;
        let dims = parts.get(3).map(|d| d.parse()).transpose().map_err(|_| bad())?;
        Ok(ProbeSpec::Grid { min, max, steps, dims })
    }
}

impl ProbeSpec {
    pub fn build(&self, sample: &Sample) -> CliResult<Probes> {
        match self {
            ProbeSpec::Grid { min, max, steps, dims } => {
                let dims = dims.unwrap_or(sample.dim());
                if dims != sample.dim() {
                    return Err(CliError::Usage(format!(
                        "probe grid has {dims} dimensions but the data has {}",
                        sample.dim()
                    )));
                }
                let total = (*steps as f64).powi(dims as i32);
                if total > MAX_PROBES as f64 {
                    return Err(CliError::Usage(format!(
                        "probe grid would hold {total} points (limit {MAX_PROBES}); use fewer steps"
                    )));
                }
                let axis = GridAxis::new(*min, *max, *steps)?;
                Ok(Probes::grid(&vec![axis; dims])?)
            }
            ProbeSpec::File(path) => {
                let points = load_points(path)?;
                if let Some(p) = points.iter().find(|p| p.len() != sample.dim()) {
                    return Err(CliError::Data(format!(
                        "probe file {} has a {}-dimensional point; data is {}-dimensional",
                        path.display(),
                        p.len(),
                        sample.dim()
                    )));
                }
                Ok(Probes::new(
                    points,
                    Provenance::UserFile {
                        path: path.display().to_string(),
                    },
                )?)
            }
            ProbeSpec::Dataset => Ok(Probes::from_objects(sample.objects())?),
        }
    }
}

/// Comma-separated coordinates, one point per line; `#` starts a comment.
pub fn load_points(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let p = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| CliError::Data(format!("{} line {}: not a list of numbers", path.display(), i + 1)))?;
        points.push(p);
    }
    if points.is_empty() {
        return Err(CliError::Data(format!("{}: no probe points", path.display())));
    }
    Ok(points)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MethodChoice {
    /// Exhaustive when `m` is within the threshold, greedy otherwise.
    #[default]
    Auto,
    Exhaustive,
    Greedy,
}

impl FromStr for MethodChoice {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "auto" => Ok(MethodChoice::Auto),
            "exhaustive" => Ok(MethodChoice::Exhaustive),
            "greedy" => Ok(MethodChoice::Greedy),
            other => Err(CliError::Usage(format!("unknown method `{other}` (auto, exhaustive, greedy)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub header: bool,
    pub test: Option<PathBuf>,
    pub generator: Option<Generator>,
    pub per_class: usize,
    pub dims: usize,
    pub separation: f64,
    pub spread: f64,
    pub seed: u64,
    pub metric: MetricId,
    pub k: usize,
    pub l: Option<usize>,
    pub abstain_as_half: bool,
    pub sigmas: Option<Vec<f64>>,
    pub probe: Option<ProbeSpec>,
    pub delta: f64,
    pub s_list: Option<Vec<f64>>,
    pub theorems: Vec<Theorem>,
    pub m: Option<usize>,
    pub r: usize,
    pub r_emp: f64,
    pub r_list: Vec<usize>,
    pub s_steps: usize,
    pub method: MethodChoice,
    pub order: CandidateOrder,
    pub exhaustive_threshold: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            header: false,
            test: None,
            generator: None,
            per_class: 50,
            dims: 2,
            separation: 0.7,
            spread: 0.35,
            seed: 0,
            metric: MetricId::Euclidean,
            k: 1,
            l: None,
            abstain_as_half: false,
            sigmas: None,
            probe: None,
            delta: 0.05,
            s_list: None,
            theorems: vec![Theorem::T4],
            m: None,
            r: 0,
            r_emp: 0.0,
            r_list: vec![60, 70, 80, 90],
            s_steps: 1000,
            method: MethodChoice::Auto,
            order: CandidateOrder::ByMarginDesc,
            exhaustive_threshold: DEFAULT_EXHAUSTIVE_THRESHOLD,
            out: PathBuf::from("out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> CliResult<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse(key, v))
        .collect::<CliResult<_>>()?;
    if items.is_empty() {
        return Err(CliError::Usage(format!("`{key}` needs at least one value")));
    }
    Ok(items)
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Usage(format!("`{key}`: expected true or false, got `{value}`"))),
    }
}

fn canonical_key(key: &str) -> Option<&'static str> {
    let key = match key {
        "k" => "K",
        "l" => "L",
        "s" => "S",
        "r_emp" => "R_emp",
        other => other,
    };
    KEYS.iter().copied().find(|k| *k == key)
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| e.in_stage(&format!("config line {}", i + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let key = canonical_key(key).ok_or_else(|| CliError::Usage(format!("unknown key `{key}`")))?;
        match key {
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "header" => self.header = parse_bool(key, value)?,
            "test" => self.test = Some(PathBuf::from(value)),
            "generator" => self.generator = Some(value.parse()?),
            "per_class" => self.per_class = parse(key, value)?,
            "dims" => self.dims = parse(key, value)?,
            "separation" => self.separation = parse(key, value)?,
            "spread" => self.spread = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "metric" => self.metric = value.parse()?,
            "K" => self.k = parse(key, value)?,
            "L" => self.l = Some(parse(key, value)?),
            "abstain_as_half" => self.abstain_as_half = parse_bool(key, value)?,
            "sigma" => self.sigmas = Some(parse_list(key, value)?),
            "probe" => self.probe = Some(value.parse()?),
            "delta" => self.delta = parse(key, value)?,
            "S" => self.s_list = Some(parse_list(key, value)?),
            "thm" => {
                self.theorems = parse_list::<u8>(key, value)?
                    .into_iter()
                    .map(|n| {
                        Theorem::from_number(n)
                            .ok_or_else(|| CliError::Usage(format!("`thm`: no theorem {n} (1 to 5)")))
                    })
                    .collect::<CliResult<_>>()?
            }
            "m" => self.m = Some(parse(key, value)?),
            "r" => self.r = parse(key, value)?,
            "R_emp" => self.r_emp = parse(key, value)?,
            "r_list" => self.r_list = parse_list(key, value)?,
            "s_steps" => self.s_steps = parse(key, value)?,
            "method" => self.method = value.parse()?,
            "order" => {
                self.order = match value {
                    "by-margin-desc" | "margin" => CandidateOrder::ByMarginDesc,
                    "by-index" | "index" => CandidateOrder::ByIndex,
                    other => {
                        return Err(CliError::Usage(format!("unknown order `{other}` (by-margin-desc, by-index)")))
                    }
                }
            }
            "exhaustive_threshold" => self.exhaustive_threshold = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            _ => unreachable!("every key in KEYS is handled"),
        }
        Ok(())
    }

    /// Range checks shared by every command.
    pub fn validate(&self) -> CliResult<()> {
        if self.dataset.is_some() && self.generator.is_some() {
            return Err(CliError::Usage("set either `dataset` or `generator`, not both".into()));
        }
        if self.k == 0 {
            return Err(CliError::Usage("K must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CliError::Usage(format!("delta = {} must satisfy δ ∈ (0,1)", self.delta)));
        }
        if let Some(s) = self.s_list.iter().flatten().find(|s| !(**s >= 0.0 && **s < 1.0)) {
            return Err(CliError::Usage(format!("S = {s} must satisfy S ∈ [0,1[")));
        }
        if let Some(s) = self.sigmas.iter().flatten().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(CliError::Usage(format!("sigma = {s} must be positive")));
        }
        if !(0.0..=1.0).contains(&self.r_emp) {
            return Err(CliError::Usage(format!("R_emp = {} must lie in [0,1]", self.r_emp)));
        }
        if self.s_steps < 2 {
            return Err(CliError::Usage("s_steps must be at least 2".into()));
        }
        Ok(())
    }

    pub fn synthetic_spec(&self) -> Option<SyntheticSpec> {
        self.generator.map(|g| SyntheticSpec {
            generator: g,
            per_class: self.per_class,
            dims: self.dims,
            separation: self.separation,
            spread: self.spread,
            seed: self.seed,
        })
    }

    /// The training sample from `dataset` or `generator`.
    pub fn load_sample(&self) -> CliResult<Sample> {
        if let Some(path) = &self.dataset {
            let format = if self.header { DatasetFormat::CSV_HEADER } else { DatasetFormat::CSV };
            return load_dataset(path, format).map_err(|e| CliError::Data(format!("{}: {e}", path.display())));
        }
        match self.synthetic_spec() {
            Some(spec) => spec.generate(),
            None => Err(CliError::Usage(
                "missing required key `dataset` (or set `generator` for synthetic data)".into(),
            )),
        }
    }

    pub fn load_test(&self) -> CliResult<Option<Sample>> {
        self.test
            .as_ref()
            .map(|path| {
                let format = if self.header { DatasetFormat::CSV_HEADER } else { DatasetFormat::CSV };
                load_dataset(path, format).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
            })
            .transpose()
    }

    pub fn s_or(&self, default: &[f64]) -> Vec<f64> {
        self.s_list.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn sigmas_or(&self, default: &[f64]) -> Vec<f64> {
        self.sigmas.clone().unwrap_or_else(|| default.to_vec())
    }
}
