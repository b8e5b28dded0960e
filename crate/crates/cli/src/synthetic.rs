//! Seeded synthetic datasets.
//!
//! The generator is SplitMix64 seeded with `seed ^ fnv1a(generator id)`, so
//! each generator draws from its own stream.

use std::fmt;
use std::str::FromStr;

use nnbound_core::{Label, Sample};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::SplitMix64;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    /// One isotropic Gaussian per class at `±separation/2 · (1, …, 1)`,
    /// resampled until inside `[−1, 1]^n`.
    TwoGaussians,
    /// Uniform in `[−1, 1]^n`; positives have `x_0 ≥ 0`, negatives `x_0 < 0`.
    UniformBox,
    /// Evenly spaced on the first axis of `[−1, 1]^n`; left half negative.
    Collinear,
}

impl Generator {
    pub fn id(self) -> &'static str {
        match self {
            Generator::TwoGaussians => "two-gaussians",
            Generator::UniformBox => "uniform-box",
            Generator::Collinear => "collinear",
        }
    }
}

impl FromStr for Generator {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "two-gaussians" => Ok(Generator::TwoGaussians),
            "uniform-box" => Ok(Generator::UniformBox),
            "collinear" => Ok(Generator::Collinear),
            other => Err(CliError::Usage(format!(
                "unknown generator `{other}` (two-gaussians, uniform-box, collinear)"
            ))),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub generator: Generator,
    pub per_class: usize,
    pub dims: usize,
    pub separation: f64,
    pub spread: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(generator: Generator, seed: u64) -> Self {
        Self {
            generator,
            per_class: 50,
            dims: 2,
            separation: 0.7,
            spread: 0.35,
            seed,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.per_class == 0 {
            return Err(CliError::Usage("per_class must be at least 1".into()));
        }
        if self.dims == 0 {
            return Err(CliError::Usage("dims must be at least 1".into()));
        }
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            return Err(CliError::Usage(format!("spread = {} must be positive", self.spread)));
        }
        if !(0.0..=2.0).contains(&self.separation) {
            return Err(CliError::Usage(format!("separation = {} must lie in [0, 2]", self.separation)));
        }
        Ok(())
    }

    /// Positives first, then negatives.
    pub fn generate(&self) -> CliResult<Sample> {
        self.validate()?;
        let mut rng = SplitMix64::seed_from_u64(self.seed ^ fnv1a(self.generator.id().as_bytes()));
        let n = self.per_class;
        let mut objects = Vec::with_capacity(2 * n);
        let mut labels = Vec::with_capacity(2 * n);
        for label in [Label::Positive, Label::Negative] {
            for i in 0..n {
                objects.push(self.point(label, i, &mut rng));
                labels.push(label);
            }
        }
        Ok(Sample::new(objects, labels)?)
    }

    fn point(&self, label: Label, i: usize, rng: &mut SplitMix64) -> Vec<f64> {
        let sign = f64::from(label.value());
        match self.generator {
            Generator::TwoGaussians => {
                let centre = sign * self.separation / 2.0;
                let normal = Normal::new(centre, self.spread).expect("validated spread");
                (0..self.dims)
                    .map(|_| loop {
                        let v: f64 = normal.sample(rng);
                        if (-1.0..=1.0).contains(&v) {
                            break v;
                        }
                    })
                    .collect()
            }
            Generator::UniformBox => (0..self.dims)
                .map(|d| {
                    if d == 0 {
                        match label {
                            Label::Positive => rng.random_range(0.0..=1.0),
                            Label::Negative => rng.random_range(-1.0..0.0),
                        }
                    } else {
                        rng.random_range(-1.0..=1.0)
                    }
                })
                .collect(),
            Generator::Collinear => {
                let total = 2 * self.per_class;
                // positives take the right half
                let slot = match label {
                    Label::Positive => self.per_class + i,
                    Label::Negative => i,
                };
                let x = if total == 1 { 0.0 } else { -1.0 + 2.0 * slot as f64 / (total - 1) as f64 };
                let mut p = vec![0.0; self.dims];
                p[0] = x;
                p
            }
        }
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
