//! Grouped tabular data: CSV loading, joint centering, scaling, and the
//! width normalization the MW solver relies on.

use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::GroupStats;
use crate::spectra::eig_sym;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleMode {
    #[default]
    None,
    /// Multiply every value by 1/255 before centering.
    Pixel,
    /// Divide each column by its standard deviation after centering.
    UnitVariance,
}

impl FromStr for ScaleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ScaleMode::None),
            "pixel" => Ok(ScaleMode::Pixel),
            "unit-variance" => Ok(ScaleMode::UnitVariance),
            other => Err(Error::usage(format!(
                "unknown scale mode {other:?} (expected none, pixel or unit-variance)"
            ))),
        }
    }
}

/// Everything applied to the raw columns, in order:
/// `((x * pre_factor) - center) * column_factors * width_factor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRecord<S> {
    pub mode: ScaleMode,
    pub pre_factor: S,
    pub column_factors: Vec<S>,
    /// Columns left unscaled under `unit-variance` because they are constant.
    pub zero_variance_columns: Vec<usize>,
    /// Global factor from [`enforce_width`]; 1 when not applied.
    pub width_factor: S,
}

/// Centered, scaled data matrix with per-row group labels.
#[derive(Debug, Clone)]
pub struct GroupedDataset<S> {
    pub rows: Array2<S>,
    pub group_of_row: Vec<usize>,
    pub group_labels: Vec<String>,
    pub columns: Vec<String>,
    pub center_vector: Array1<S>,
    pub scale_record: ScaleRecord<S>,
}

impl<S: Scalar> GroupedDataset<S> {
    /// Builds a dataset from raw rows and per-row labels. Groups are ordered
    /// by first appearance.
    pub fn from_labeled_rows(
        raw: Array2<S>,
        labels: &[String],
        columns: Vec<String>,
        mode: ScaleMode,
    ) -> Result<Self> {
        if raw.nrows() != labels.len() {
            return Err(Error::usage(format!(
                "{} rows but {} labels",
                raw.nrows(),
                labels.len()
            )));
        }
        if columns.len() != raw.ncols() {
            return Err(Error::usage(format!(
                "{} column names for {} columns",
                columns.len(),
                raw.ncols()
            )));
        }
        if raw.ncols() == 0 {
            return Err(Error::data("no numeric columns"));
        }
        if raw.nrows() == 0 {
            return Err(Error::data("no data rows"));
        }
        let mut group_labels: Vec<String> = Vec::new();
        let mut group_of_row = Vec::with_capacity(labels.len());
        for (row, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(Error::Data {
                    row: Some(row + 1),
                    column: None,
                    message: "empty group label".into(),
                });
            }
            let idx = match group_labels.iter().position(|l| l == label) {
                Some(i) => i,
                None => {
                    group_labels.push(label.clone());
                    group_labels.len() - 1
                }
            };
            group_of_row.push(idx);
        }
        let (rows, center_vector, scale_record) = preprocess(raw, mode);
        Ok(Self {
            rows,
            group_of_row,
            group_labels,
            columns,
            center_vector,
            scale_record,
        })
    }

    /// Number of groups `k`.
    pub fn k(&self) -> usize {
        self.group_labels.len()
    }

    /// Feature count `n`.
    pub fn n(&self) -> usize {
        self.rows.ncols()
    }

    pub fn m(&self) -> usize {
        self.rows.nrows()
    }

    /// Rows of group `i` as a fresh matrix.
    pub fn group_rows(&self, group: usize) -> Array2<S> {
        let idx: Vec<usize> = self
            .group_of_row
            .iter()
            .enumerate()
            .filter_map(|(r, &g)| (g == group).then_some(r))
            .collect();
        self.rows.select(Axis(0), &idx)
    }

    pub fn group_stats(&self) -> Result<Vec<GroupStats<S>>> {
        (0..self.k())
            .map(|i| GroupStats::from_rows(self.group_labels[i].clone(), self.group_rows(i).view()))
            .collect()
    }

    /// Applies the stored centering and column scaling to new raw rows.
    ///
    /// The width factor is deliberately left out: it is a solver-side
    /// normalization and embeddings are reported in preprocessed units.
    pub fn preprocess_rows(&self, raw: ArrayView2<S>) -> Result<Array2<S>> {
        apply_record(raw, &self.center_vector, &self.scale_record)
    }

    pub(crate) fn require_groups(&self, min: usize) -> Result<()> {
        if self.k() < min {
            return Err(Error::usage(format!(
                "fairness needs at least {min} groups, dataset has {}",
                self.k()
            )));
        }
        Ok(())
    }
}

/// Applies a stored center and scale record to raw rows.
pub fn apply_record<S: Scalar>(
    raw: ArrayView2<S>,
    center: &Array1<S>,
    record: &ScaleRecord<S>,
) -> Result<Array2<S>> {
    if raw.ncols() != center.len() {
        return Err(Error::data(format!(
            "input has {} columns, expected {}",
            raw.ncols(),
            center.len()
        )));
    }
    let mut out = raw.mapv(|x| x * record.pre_factor);
    for mut row in out.rows_mut() {
        for ((x, &c), &f) in row.iter_mut().zip(center.iter()).zip(&record.column_factors) {
            *x = (*x - c) * f;
        }
    }
    Ok(out)
}

fn preprocess<S: Scalar>(mut raw: Array2<S>, mode: ScaleMode) -> (Array2<S>, Array1<S>, ScaleRecord<S>) {
    let n = raw.ncols();
    let pre_factor = match mode {
        ScaleMode::Pixel => S::one() / S::lit(255.0),
        _ => S::one(),
    };
    if pre_factor != S::one() {
        raw.mapv_inplace(|x| x * pre_factor);
    }
    let center = column_means(&raw);
    for mut row in raw.rows_mut() {
        row -= &center;
    }
    let mut column_factors = vec![S::one(); n];
    let mut zero_variance_columns = Vec::new();
    if mode == ScaleMode::UnitVariance {
        let m = S::from_usize(raw.nrows()).expect("row count representable");
        for (j, col) in raw.axis_iter(Axis(1)).enumerate() {
            let var = col.iter().map(|&x| x * x).sum::<S>() / m;
            let scale = col.iter().fold(S::zero(), |a, &x| a.max(x.abs())) + S::one();
            if var.sqrt() <= S::tol(1e-12) * scale {
                zero_variance_columns.push(j);
            } else {
                column_factors[j] = S::one() / var.sqrt();
            }
        }
        for mut row in raw.rows_mut() {
            for (x, &f) in row.iter_mut().zip(&column_factors) {
                *x *= f;
            }
        }
    }
    let record = ScaleRecord {
        mode,
        pre_factor,
        column_factors,
        zero_variance_columns,
        width_factor: S::one(),
    };
    (raw, center, record)
}

fn column_means<S: Scalar>(a: &Array2<S>) -> Array1<S> {
    let m = S::from_usize(a.nrows().max(1)).expect("row count representable");
    a.sum_axis(Axis(0)).mapv(|x| x / m)
}

/// Recenters a dataset's rows at the origin again; a no-op on centered data
/// up to roundoff.
pub fn recenter<S: Scalar>(dataset: &GroupedDataset<S>) -> GroupedDataset<S> {
    let mut out = dataset.clone();
    let mean = column_means(&out.rows);
    for mut row in out.rows.rows_mut() {
        row -= &mean;
    }
    out
}

/// Loads a CSV with a header row. `group_column` may be anywhere; every
/// other column must parse as a real number.
pub fn load_csv<S: Scalar>(
    path: impl AsRef<Path>,
    group_column: &str,
    mode: ScaleMode,
) -> Result<GroupedDataset<S>> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, group_column, mode)
}

pub fn read_csv<S: Scalar, R: Read>(
    reader: R,
    group_column: &str,
    mode: ScaleMode,
) -> Result<GroupedDataset<S>> {
    let (columns, labels, raw) = read_table(reader, Some(group_column))?;
    GroupedDataset::from_labeled_rows(raw, &labels.unwrap_or_default(), columns, mode)
}

type Table<S> = (Vec<String>, Option<Vec<String>>, Array2<S>);

/// Parses a numeric CSV, optionally splitting off a label column.
pub fn read_table<S: Scalar, R: Read>(reader: R, label_column: Option<&str>) -> Result<Table<S>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let label_idx = match label_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| Error::Data {
            row: None,
            column: Some(name.to_string()),
            message: "group column not found in header".into(),
        })?),
        None => None,
    };
    let columns: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    let n = columns.len();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut count = 0;
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = row + 2;
        if record.len() != headers.len() {
            return Err(Error::Data {
                row: Some(line),
                column: None,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (i, field) in record.iter().enumerate() {
            if Some(i) == label_idx {
                labels.push(field.trim().to_string());
                continue;
            }
            let value: f64 = field.trim().parse().map_err(|_| Error::Data {
                row: Some(line),
                column: Some(headers[i].to_string()),
                message: format!("cannot parse {field:?} as a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Data {
                    row: Some(line),
                    column: Some(headers[i].to_string()),
                    message: format!("non-finite value {field:?}"),
                });
            }
            values.push(S::lit(value));
        }
        count += 1;
    }
    let raw = Array2::from_shape_vec((count, n), values)
        .map_err(|e| Error::Internal(format!("table shape: {e}")))?;
    Ok((columns, label_idx.map(|_| labels), raw))
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line() as usize);
    Error::Data {
        row,
        column: None,
        message: e.to_string(),
    }
}

/// Top eigenvalue of `A_i^T A_i / m_i` for each group.
pub fn group_widths<S: Scalar>(dataset: &GroupedDataset<S>) -> Result<Vec<S>> {
    dataset
        .group_stats()?
        .iter()
        .map(|g| {
            let cov = g.gram.mapv(|x| x / g.count());
            Ok(eig_sym(cov.view())?.eigenvalues[0])
        })
        .collect()
}

/// Scales all rows by one factor `s <= 1` so that every group's
/// `A_i^T A_i / m_i` has top eigenvalue at most 1. The factor is multiplied
/// into `scale_record.width_factor`.
pub fn enforce_width<S: Scalar>(dataset: &GroupedDataset<S>) -> Result<GroupedDataset<S>> {
    let widest = group_widths(dataset)?
        .into_iter()
        .fold(S::zero(), S::max);
    let mut out = dataset.clone();
    if widest > S::one() {
        let s = S::one() / widest.sqrt();
        out.rows.mapv_inplace(|x| x * s);
        out.scale_record.width_factor *= s;
    }
    Ok(out)
}
