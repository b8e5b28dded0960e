//! Labels, labelled samples and the dataset CSV format.
//!
//! A dataset file has one example per row, `x1,...,xn,label`, with an optional
//! header line. Labels are `-1`, `1` or `+1`. Row order is preserved because
//! neighbourhood tie breaking depends on it.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// A binary class label, stored as `-1` or `+1` and nothing else.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i32", try_from = "i32")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn value(self) -> i32 {
        match self {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }

    pub fn from_value(v: i32) -> Option<Self> {
        match v {
            -1 => Some(Label::Negative),
            1 => Some(Label::Positive),
            _ => None,
        }
    }

    /// Label from the sign of a non-zero integer.
    pub fn from_sign(v: i32) -> Option<Self> {
        match v.signum() {
            -1 => Some(Label::Negative),
            1 => Some(Label::Positive),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

impl From<Label> for i32 {
    fn from(l: Label) -> i32 {
        l.value()
    }
}

impl TryFrom<i32> for Label {
    type Error = String;

    fn try_from(v: i32) -> std::result::Result<Self, String> {
        Label::from_value(v).ok_or_else(|| format!("label {v} is not -1 or +1"))
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "-1" => Ok(Label::Negative),
            "1" | "+1" => Ok(Label::Positive),
            other => Err(other.to_string()),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// The training sample: objects with their labels, in a fixed order.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample<O> {
    objects: Vec<O>,
    labels: Vec<Label>,
}

impl<O> LabeledSample<O> {
    pub fn new(objects: Vec<O>, labels: Vec<Label>) -> Result<Self> {
        if objects.len() != labels.len() {
            return Err(Error::LengthMismatch {
                objects: objects.len(),
                labels: labels.len(),
            });
        }
        if objects.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Self { objects, labels })
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn objects(&self) -> &[O] {
        &self.objects
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn object(&self, i: usize) -> &O {
        &self.objects[i]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&O, Label)> + '_ {
        self.objects.iter().zip(self.labels.iter().copied())
    }

    /// Number of `(+1, -1)` examples.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == Label::Positive).count();
        (pos, self.labels.len() - pos)
    }

    pub fn into_parts(self) -> (Vec<O>, Vec<Label>) {
        (self.objects, self.labels)
    }
}

impl<O: Clone> LabeledSample<O> {
    /// The sample with the given indices removed; relative order is kept.
    pub fn without(&self, removed: &[usize]) -> Result<Self> {
        let mut drop = vec![false; self.len()];
        for &i in removed {
            if i >= self.len() {
                return Err(Error::InvalidSubset(format!(
                    "index {i} out of range for m = {}",
                    self.len()
                )));
            }
            drop[i] = true;
        }
        let (objects, labels) = self
            .iter()
            .zip(&drop)
            .filter(|(_, &d)| !d)
            .map(|((o, l), _)| (o.clone(), l))
            .unzip();
        Self::new(objects, labels)
    }
}

impl<T> LabeledSample<Vec<T>> {
    /// Dimension of the feature vectors.
    pub fn dim(&self) -> usize {
        self.objects[0].len()
    }
}

/// How a dataset file is laid out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DatasetFormat {
    pub has_header: bool,
}

impl DatasetFormat {
    pub const CSV: Self = Self { has_header: false };
    pub const CSV_HEADER: Self = Self { has_header: true };
}

pub fn load_dataset<T: Scalar>(
    path: impl AsRef<Path>,
    format: DatasetFormat,
) -> Result<LabeledSample<Vec<T>>> {
    let file = File::open(path)?;
    parse_dataset(BufReader::new(file), format)
}

pub fn parse_dataset<T: Scalar, R: Read>(
    reader: R,
    format: DatasetFormat,
) -> Result<LabeledSample<Vec<T>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(format.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let mut objects = Vec::new();
    let mut labels = Vec::new();
    let mut dim = None;
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() < 2 {
            return Err(Error::Parse {
                line,
                message: "expected at least one feature and a label".into(),
            });
        }
        let n = record.len() - 1;
        match dim {
            None => dim = Some(n),
            Some(d) if d != n => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {d} features, found {n}"),
                })
            }
            _ => {}
        }
        let x = record
            .iter()
            .take(n)
            .map(|field| {
                field
                    .parse::<T>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: format!("`{field}` is not a finite number"),
                    })
            })
            .collect::<Result<Vec<T>>>()?;
        let raw = &record[n];
        let label = raw.parse::<Label>().map_err(|_| Error::InvalidLabel {
            line,
            value: raw.to_string(),
        })?;
        objects.push(x);
        labels.push(label);
    }
    LabeledSample::new(objects, labels)
}

/// Writes `x1,...,xn,label` rows without a header. Values use the shortest
/// representation that parses back to the same number.
pub fn write_dataset<T: Scalar, W: Write>(writer: W, sample: &LabeledSample<Vec<T>>) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().from_writer(writer);
    for (x, y) in sample.iter() {
        let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        row.push(y.to_string());
        wtr.write_record(&row).map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

/// One label per line, used alongside precomputed distance matrices.
pub fn parse_labels<R: Read>(reader: R) -> Result<Vec<Label>> {
    let mut text = String::new();
    BufReader::new(reader).read_to_string(&mut text)?;
    let labels = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.parse::<Label>().map_err(|v| Error::InvalidLabel {
                line: i as u64 + 1,
                value: v,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if labels.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(labels)
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<LabeledSample<Vec<f64>>> {
        parse_dataset(text.as_bytes(), DatasetFormat::CSV)
    }

    #[test]
    fn parses_two_points() {
        let s = parse("0,0,+1\n1,0,-1\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.dim(), 2);
        assert_eq!(s.object(1), &vec![1.0, 0.0]);
        assert_eq!(s.labels(), &[Label::Positive, Label::Negative]);
    }

    #[test]
    fn bad_label_names_its_line() {
        match parse("0,0,1\n1,1,2\n") {
            Err(Error::InvalidLabel { line, value }) => {
                assert_eq!(line, 2);
                assert_eq!(value, "2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn preserves_row_order() {
        let s = parse("3,1\n1,-1\n2,+1\n").unwrap();
        let xs: Vec<f64> = s.objects().iter().map(|x| x[0]).collect();
        assert_eq!(xs, vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn header_and_crlf() {
        let s: LabeledSample<Vec<f64>> =
            parse_dataset("x,y,label\r\n0.5,1,1\r\n".as_bytes(), DatasetFormat::CSV_HEADER).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.object(0), &vec![0.5, 1.0]);
    }

    #[test]
    fn empty_and_malformed() {
        assert!(matches!(parse(""), Err(Error::EmptySample)));
        assert!(matches!(parse("0,abc,1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("0,1\n0,0,1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("1\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn without_keeps_order() {
        let s = parse("0,1\n1,-1\n2,1\n3,-1\n").unwrap();
        let t = s.without(&[0, 2]).unwrap();
        assert_eq!(t.objects(), &[vec![1.0], vec![3.0]]);
        assert!(matches!(s.without(&[0, 1, 2, 3]), Err(Error::EmptySample)));
        assert!(s.without(&[9]).is_err());
    }

    #[test]
    fn labels_file() {
        let l = parse_labels("1\n-1\n+1\n".as_bytes()).unwrap();
        assert_eq!(l, vec![Label::Positive, Label::Negative, Label::Positive]);
        assert!(parse_labels("0\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in prop::collection::vec(
            (prop::collection::vec(-1e6f64..1e6, 3), any::<bool>()), 1..30)) {
            let (objects, labels): (Vec<_>, Vec<_>) = rows
                .into_iter()
                .map(|(x, p)| (x, if p { Label::Positive } else { Label::Negative }))
                .unzip();
            let sample = LabeledSample::new(objects, labels).unwrap();
            let mut buf = Vec::new();
            write_dataset(&mut buf, &sample).unwrap();
            let back = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(back, sample);
        }
    }
}
