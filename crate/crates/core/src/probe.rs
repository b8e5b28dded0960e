//! Finite probe domains.
//!
//! Statements of the form "for every object" (redundancy, hypothesis
//! equivalence) are checked on an explicit, finite list of query objects. The
//! provenance travels with every result derived from it, so a redundancy count
//! is always read as relative to its probes.

use std::fmt;

use serde::Serialize;

use crate::{Error, Result, Scalar};

/// One axis of a regular grid: `steps` equally spaced values from `min` to
/// `max` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min > max {
            return Err(Error::Config(format!("grid axis [{min}, {max}] is not an interval")));
        }
        if steps == 0 {
            return Err(Error::Config("grid axis needs at least one step".into()));
        }
        Ok(Self { min, max, steps })
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.steps == 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.steps).map(|i| self.value(i))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Grid { axes: Vec<GridAxis> },
    Dataset,
    UserFile { path: String },
}

impl Provenance {
    pub fn kind(&self) -> &'static str {
        match self {
            Provenance::Grid { .. } => "grid",
            Provenance::Dataset => "dataset",
            Provenance::UserFile { .. } => "user-file",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Grid { axes } => {
                write!(f, "grid")?;
                for a in axes {
                    write!(f, " [{},{}]x{}", a.min, a.max, a.steps)?;
                }
                Ok(())
            }
            Provenance::Dataset => write!(f, "dataset"),
            Provenance::UserFile { path } => write!(f, "user-file {path}"),
        }
    }
}

/// Short machine-readable description stored in reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeDescriptor {
    pub kind: String,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeDomain<O> {
    probes: Vec<O>,
    provenance: Provenance,
}

impl<O> ProbeDomain<O> {
    pub fn new(probes: Vec<O>, provenance: Provenance) -> Result<Self> {
        if probes.is_empty() {
            return Err(Error::EmptyProbes);
        }
        Ok(Self { probes, provenance })
    }

    pub fn probes(&self) -> &[O] {
        &self.probes
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn descriptor(&self) -> ProbeDescriptor {
        ProbeDescriptor {
            kind: self.provenance.kind().to_string(),
            size: self.probes.len(),
        }
    }
}

impl<O: Clone> ProbeDomain<O> {
    /// The training objects themselves.
    pub fn from_objects(objects: &[O]) -> Result<Self> {
        Self::new(objects.to_vec(), Provenance::Dataset)
    }
}

impl<T: Scalar> ProbeDomain<Vec<T>> {
    /// Cartesian product of the axes; the first axis varies slowest.
    pub fn grid(axes: &[GridAxis]) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Config("grid needs at least one axis".into()));
        }
        let total: usize = axes.iter().map(|a| a.steps).product();
        let mut probes = Vec::with_capacity(total);
        let mut idx = vec![0usize; axes.len()];
        for _ in 0..total {
            probes.push(
                idx.iter()
                    .zip(axes)
                    .map(|(&i, a)| T::of(a.value(i)))
                    .collect(),
            );
            for d in (0..axes.len()).rev() {
                idx[d] += 1;
                if idx[d] < axes[d].steps {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self::new(
            probes,
            Provenance::Grid {
                axes: axes.to_vec(),
            },
        )
    }

    /// Same axis repeated in every dimension.
    pub fn cube(min: f64, max: f64, steps: usize, dims: usize) -> Result<Self> {
        let axis = GridAxis::new(min, max, steps)?;
        Self::grid(&vec![axis; dims])
    }
}
