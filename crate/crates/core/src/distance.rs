//! Training-to-query distance matrices.
//!
//! File format: a first line `m p`, then `m` rows of `p` comma-separated
//! non-negative entries. Row `i` holds the distances from training object `i`
//! to each of the `p` queries.

use num_traits::Zero;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::metric::Metric;
use crate::probe::ProbeDomain;
use crate::{Error, LabeledSample, Result, Scalar};

/// An `m × p` matrix of distances (training rows, query columns).
///
/// Stored query-major so that all distances for one query are contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix<T> {
    rows: usize,
    cols: usize,
    by_query: Vec<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    /// Builds from per-query columns, each of length `rows`.
    pub fn from_columns(rows: usize, columns: Vec<Vec<T>>) -> Result<Self> {
        let cols = columns.len();
        let mut by_query = Vec::with_capacity(rows * cols);
        for (j, c) in columns.into_iter().enumerate() {
            if c.len() != rows {
                return Err(Error::Config(format!(
                    "query column {j} has {} entries, expected {rows}",
                    c.len()
                )));
            }
            by_query.extend(c);
        }
        Self::checked(rows, cols, by_query)
    }

    /// Builds from training-major rows, each of length `cols`.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let m = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::Config(format!("row {i} has {} entries, expected {p}", rows[i].len())));
        }
        let mut by_query = vec![T::zero(); m * p];
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                by_query[j * m + i] = v;
            }
        }
        Self::checked(m, p, by_query)
    }

    fn checked(rows: usize, cols: usize, by_query: Vec<T>) -> Result<Self> {
        if let Some(k) = by_query.iter().position(|v| !(v.is_finite() && *v >= T::zero())) {
            let (i, j) = (k % rows.max(1), k / rows.max(1));
            return Err(Error::Metric {
                train: i,
                query: j,
                message: format!("distance {} is not a finite non-negative number", by_query[k]),
            });
        }
        Ok(Self { rows, cols, by_query })
    }

    /// Number of training objects `m`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of queries `p`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, train: usize, query: usize) -> T {
        self.by_query[query * self.rows + train]
    }

    /// All distances from query `j` to the training objects.
    pub fn column(&self, query: usize) -> &[T] {
        &self.by_query[query * self.rows..(query + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.by_query.chunks(self.rows.max(1)).take(self.cols)
    }

    /// Square with zero diagonal and exact symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                self.get(i, i) == T::zero() && (0..i).all(|j| self.get(i, j) == self.get(j, i))
            })
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn load_distance_matrix<T: Scalar>(path: impl AsRef<Path>) -> Result<DistanceMatrix<T>> {
    parse_distance_matrix(File::open(path)?)
}

pub fn parse_distance_matrix<T: Scalar, R: Read>(reader: R) -> Result<DistanceMatrix<T>> {
    let mut lines = BufReader::new(reader)
        .lines()
        .enumerate()
        .map(|(i, l)| (i as u64 + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));

    let (line, header) = lines.next().ok_or(Error::EmptySample)?;
    let header = header?;
    let dims: Vec<usize> = split_fields(&header)
        .map(|f| f.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse {
            line,
            message: format!("header: {e}"),
        })?;
    let [m, p] = dims[..] else {
        return Err(Error::Parse {
            line,
            message: "header must be `m p`".into(),
        });
    };
    if m == 0 {
        return Err(Error::EmptySample);
    }

    let mut rows = Vec::with_capacity(m);
    for (line, text) in lines {
        let text = text?;
        let row = split_fields(&text)
            .map(|f| {
                f.parse::<T>().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{f}` is not a number"),
                })
            })
            .collect::<Result<Vec<T>>>()?;
        if row.len() != p {
            return Err(Error::Parse {
                line,
                message: format!("expected {p} entries, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    if rows.len() != m {
        return Err(Error::Parse {
            line: 0,
            message: format!("expected {m} rows, found {}", rows.len()),
        });
    }
    DistanceMatrix::from_rows(rows)
}

fn split_fields(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .map(str::trim)
        .filter(|f| !f.is_empty())
}

/// `matrix[i][j] = dist(o_i, probe_j)`, computed in parallel over probes.
pub fn pairwise_distances<O, M>(
    sample: &LabeledSample<O>,
    probes: &ProbeDomain<O>,
    metric: &M,
) -> Result<DistanceMatrix<M::Scalar>>
where
    O: Sync,
    M: Metric<O> + Sync,
{
    distances_to(sample.objects(), probes.probes(), metric)
}

pub(crate) fn distances_to<O, M>(
    train: &[O],
    queries: &[O],
    metric: &M,
) -> Result<DistanceMatrix<M::Scalar>>
where
    O: Sync,
    M: Metric<O> + Sync,
{
    let columns = queries
        .par_iter()
        .enumerate()
        .map(|(j, q)| distance_column(train, q, metric).map_err(|(i, msg)| Error::Metric {
            train: i,
            query: j,
            message: msg,
        }))
        .collect::<Result<Vec<_>>>()?;
    DistanceMatrix::from_columns(train.len(), columns)
}

/// Distances from `query` to each training object; NaN and negative values are
/// rejected since neighbourhoods need a total order.
pub(crate) fn distance_column<O, M>(
    train: &[O],
    query: &O,
    metric: &M,
) -> std::result::Result<Vec<M::Scalar>, (usize, String)>
where
    M: Metric<O>,
{
    train
        .iter()
        .enumerate()
        .map(|(i, o)| match metric.distance(o, query) {
            Ok(d) if d >= M::Scalar::zero() => Ok(d),
            Ok(d) => Err((i, format!("distance {d} is negative or NaN"))),
            Err(e) => Err((i, e.0)),
        })
        .collect()
}
