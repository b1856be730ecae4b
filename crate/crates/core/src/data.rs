//! Labelled datasets, file loaders, standardization and stratified fold plans.
//!
//! Samples are stored densely as an `n x p` row-major matrix. Labels are always
//! `-1` or `+1`; loaders map the two observed label values onto that pair.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary classification data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Array2<f64>,
    labels: Vec<i8>,
    feature_names: Option<Vec<String>>,
    source_id: String,
}

impl Dataset {
    /// Builds a dataset, checking labels are `±1`, lengths agree and entries are finite.
    pub fn new(samples: Array2<f64>, labels: Vec<i8>, source_id: impl Into<String>) -> Result<Self> {
        if samples.nrows() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} rows but {} labels",
                samples.nrows(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(Error::InvalidDataset(format!("label {bad} is not -1 or +1")));
        }
        if let Some(((i, j), v)) = samples.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value {v} at row {i}, column {j}"
            )));
        }
        Ok(Self {
            samples,
            labels,
            feature_names: None,
            source_id: source_id.into(),
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.samples.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.samples.row(i)
    }

    /// Number of samples with label `+1` and `-1`, in that order.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        (pos, self.labels.len() - pos)
    }

    /// Rows selected by `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: self.samples.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            source_id: self.source_id.clone(),
        }
    }

    /// Replaces the labels, keeping samples and metadata.
    pub fn with_labels(&self, labels: Vec<i8>) -> Result<Dataset> {
        let mut d = Dataset::new(self.samples.clone(), labels, self.source_id.clone())?;
        d.feature_names = self.feature_names.clone();
        Ok(d)
    }

    /// Replaces the samples, keeping labels and metadata.
    pub fn with_samples(&self, samples: Array2<f64>) -> Result<Dataset> {
        let mut d = Dataset::new(samples, self.labels.clone(), self.source_id.clone())?;
        if d.n_features() == self.n_features() {
            d.feature_names = self.feature_names.clone();
        }
        Ok(d)
    }

    /// Appends rows with their labels.
    pub fn append(&self, samples: &Array2<f64>, labels: &[i8]) -> Result<Dataset> {
        if samples.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: samples.ncols(),
            });
        }
        let joined = ndarray::concatenate(Axis(0), &[self.samples.view(), samples.view()])
            .expect("column counts checked");
        let mut all = self.labels.clone();
        all.extend_from_slice(labels);
        let mut d = Dataset::new(joined, all, self.source_id.clone())?;
        d.feature_names = self.feature_names.clone();
        Ok(d)
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }
}

/// Selects the label column of a CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Integers select by index, anything else by header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

/// Loads a comma-separated file with one header row.
///
/// `positive_label` names the raw label mapped to `+1`. When it is `None` the
/// label pair must be `{0, 1}` or `{-1, 1}` and `1` becomes the positive class.
pub fn load_csv(path: &Path, label_column: &LabelColumn, positive_label: Option<&str>) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let label_idx = match label_column {
        LabelColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingLabelColumn(name.clone()))?,
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Index(i) => return Err(Error::MissingLabelColumn(i.to_string())),
    };
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let p = feature_names.len();

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: format!("{} fields", record.len()),
                detail: format!("expected {} fields", headers.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                raw_labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: headers[j].clone(),
                detail: if cell.is_empty() {
                    "blank cell".to_string()
                } else {
                    format!("not a number: {cell:?}")
                },
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: headers[j].clone(),
                    detail: format!("non-finite value {cell:?}"),
                });
            }
            values.push(v);
        }
    }
    if raw_labels.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let labels = map_labels(&raw_labels, positive_label)?;
    let samples = Array2::from_shape_vec((labels.len(), p), values).expect("row lengths checked");
    Dataset::new(samples, labels, path.display().to_string())?.with_feature_names(feature_names)
}

fn map_labels(raw: &[String], positive: Option<&str>) -> Result<Vec<i8>> {
    let distinct: BTreeSet<&str> = raw.iter().map(String::as_str).collect();
    if distinct.len() > 2 {
        return Err(Error::TooManyClasses(distinct.iter().map(|s| s.to_string()).collect()));
    }
    if distinct.len() < 2 {
        return Err(Error::SingleClass(distinct.iter().map(|s| s.to_string()).collect()));
    }
    let positive = match positive {
        Some(p) => {
            if !distinct.contains(p) {
                return Err(Error::UnknownPositiveLabel(p.to_string()));
            }
            p.to_string()
        }
        None => {
            let numeric: BTreeSet<i64> = distinct
                .iter()
                .filter_map(|s| s.parse::<f64>().ok())
                .filter(|v| v.fract() == 0.0)
                .map(|v| v as i64)
                .collect();
            if numeric.len() == 2 && (numeric.contains(&0) || numeric.contains(&-1)) && numeric.contains(&1) {
                distinct
                    .iter()
                    .find(|s| s.parse::<f64>().ok() == Some(1.0))
                    .map(|s| s.to_string())
                    .expect("contains 1")
            } else {
                return Err(Error::InvalidParameter(format!(
                    "labels {distinct:?} are not {{0,1}} or {{-1,1}}; a positive label must be given"
                )));
            }
        }
    };
    Ok(raw.iter().map(|s| if *s == positive { 1 } else { -1 }).collect())
}

/// Loads a file in `label idx:val ...` format with 1-based ascending indices.
///
/// The feature count is the largest index seen; absent entries are zero.
/// Labels `{0, 1}` are mapped to `{-1, +1}`.
pub fn load_libsvm(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    let mut p = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line");
        let label: f64 = label_tok
            .parse()
            .ok()
            .filter(|v: &f64| *v == 1.0 || *v == -1.0 || *v == 0.0)
            .ok_or_else(|| Error::BadLabel {
                line: line_no,
                label: label_tok.to_string(),
            })?;
        let mut entries = Vec::new();
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                row: line_no,
                column: tok.to_string(),
                detail: "expected idx:val".to_string(),
            })?;
            let idx: usize = idx.parse().ok().filter(|&i| i >= 1).ok_or_else(|| Error::Parse {
                row: line_no,
                column: idx.to_string(),
                detail: "feature index must be a positive integer".to_string(),
            })?;
            let val: f64 = val.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::Parse {
                row: line_no,
                column: idx.to_string(),
                detail: format!("not a finite number: {val:?}"),
            })?;
            if idx <= prev {
                return Err(Error::IndicesNotAscending {
                    line: line_no,
                    prev,
                    next: idx,
                });
            }
            prev = idx;
            p = p.max(idx);
            entries.push((idx, val));
        }
        rows.push((label, entries));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let has_zero = rows.iter().any(|(l, _)| *l == 0.0);
    let has_neg = rows.iter().any(|(l, _)| *l == -1.0);
    if has_zero && has_neg {
        return Err(Error::TooManyClasses(vec!["-1".into(), "0".into(), "1".into()]));
    }
    let mut samples = Array2::zeros((rows.len(), p));
    let mut labels = Vec::with_capacity(rows.len());
    for (i, (label, entries)) in rows.into_iter().enumerate() {
        labels.push(if label == 1.0 { 1 } else { -1 });
        for (idx, val) in entries {
            samples[[i, idx - 1]] = val;
        }
    }
    Dataset::new(samples, labels, path.display().to_string())
}

/// Formats a dataset in libsvm text format with 17 significant digits.
///
/// Zero entries are omitted except in the last column, which is always written
/// so the feature count survives a reload.
pub fn to_libsvm_string(d: &Dataset) -> String {
    let mut out = String::new();
    let p = d.n_features();
    for (i, &y) in d.labels().iter().enumerate() {
        out.push_str(if y > 0 { "+1" } else { "-1" });
        for (j, &v) in d.row(i).iter().enumerate() {
            if v != 0.0 || j + 1 == p {
                write!(out, " {}:{:.16e}", j + 1, v).expect("write to string");
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_libsvm(d: &Dataset, path: &Path) -> Result<()> {
    fs::write(path, to_libsvm_string(d)).map_err(|e| Error::io(path, e))
}

/// Writes a dataset as CSV with feature columns followed by a `label` column.
pub fn write_csv(d: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = match d.feature_names() {
        Some(names) => names.to_vec(),
        None => (1..=d.n_features()).map(|j| format!("x{j}")).collect(),
    };
    header.push("label".to_string());
    w.write_record(&header)?;
    for (i, &y) in d.labels().iter().enumerate() {
        let mut rec: Vec<String> = d.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        rec.push(y.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-feature centring and scaling fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub means: Vec<f64>,
    /// Sample standard deviations (`n - 1` denominator). Zero marks a constant
    /// feature, which is passed through untouched.
    pub stddevs: Vec<f64>,
}

impl ScalerParams {
    pub fn identity(p: usize) -> Self {
        Self {
            means: vec![0.0; p],
            stddevs: vec![1.0; p],
        }
    }

    /// Fits means and sample standard deviations column by column.
    pub fn fit(samples: &Array2<f64>) -> Self {
        let n = samples.nrows();
        let mut means = Vec::with_capacity(samples.ncols());
        let mut stddevs = Vec::with_capacity(samples.ncols());
        for col in samples.columns() {
            let first = col.first().copied().unwrap_or(0.0);
            if n < 2 || col.iter().all(|&v| v == first) {
                means.push(if n == 0 { 0.0 } else { first });
                stddevs.push(0.0);
                continue;
            }
            let mean = col.sum() / n as f64;
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            means.push(mean);
            stddevs.push((ss / (n - 1) as f64).sqrt());
        }
        Self { means, stddevs }
    }

    pub fn transform(&self, samples: &Array2<f64>) -> Result<Array2<f64>> {
        if samples.ncols() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                got: samples.ncols(),
            });
        }
        let mut out = samples.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.means[j], self.stddevs[j]);
            if s > 0.0 {
                col.mapv_inplace(|v| (v - m) / s);
            }
        }
        Ok(out)
    }
}

/// Standardizes every non-constant feature to mean 0 and sample standard deviation 1.
pub fn standardize(d: &Dataset) -> (Dataset, ScalerParams) {
    let params = ScalerParams::fit(d.samples());
    let scaled = apply_scaler(d, &params).expect("scaler fitted on the same columns");
    (scaled, params)
}

pub fn apply_scaler(d: &Dataset, s: &ScalerParams) -> Result<Dataset> {
    d.with_samples(s.transform(d.samples())?)
}

/// Assignment of samples to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }
}

/// Stratified `k`-fold assignment.
///
/// Each class is shuffled with a seeded generator and dealt round-robin; the
/// dealing position carries over between classes so fold sizes stay balanced.
pub fn stratified_kfold(d: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("fold count k = {k} must be at least 2")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0usize; d.len()];
    let mut position = 0usize;
    for class in [-1i8, 1] {
        let mut members: Vec<usize> = (0..d.len()).filter(|&i| d.labels()[i] == class).collect();
        if members.len() < k {
            return Err(Error::ClassTooSmall {
                label: class,
                count: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        for i in members {
            assignments[i] = position % k;
            position += 1;
        }
    }
    Ok(FoldPlan { k, assignments, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_maps_positive_label_in_row_order() {
        let f = write_tmp("x1,x2,y\n1,2,a\n3,4,a\n5,6,b\n7,8,b\n");
        let d = load_csv(f.path(), &LabelColumn::Name("y".into()), Some("a")).unwrap();
        assert_eq!(d.labels(), &[1, 1, -1, -1]);
        assert_eq!(d.samples(), &array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]]);
        assert_eq!(d.feature_names().unwrap(), &["x1".to_string(), "x2".to_string()]);
    }

    #[test]
    fn csv_label_by_index_and_auto_binary() {
        let f = write_tmp("y,x\n0,1.5\n1,2.5\n");
        let d = load_csv(f.path(), &LabelColumn::Index(0), None).unwrap();
        assert_eq!(d.labels(), &[-1, 1]);
        assert_eq!(d.samples(), &array![[1.5], [2.5]]);
    }

    #[test]
    fn csv_third_class_is_rejected() {
        let f = write_tmp("x,y\n1,a\n2,b\n3,c\n");
        let err = load_csv(f.path(), &LabelColumn::Name("y".into()), Some("a")).unwrap_err();
        assert!(matches!(err, Error::TooManyClasses(_)));
        assert!(err.to_string().contains("more than two classes"));
    }

    #[test]
    fn csv_blank_cell_names_row_and_column() {
        let f = write_tmp("x1,x2,y\n1,2,a\n3,,b\n");
        let err = load_csv(f.path(), &LabelColumn::Name("y".into()), Some("a")).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "x2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_distinct_errors() {
        let missing = load_csv(Path::new("/nonexistent/file.csv"), &LabelColumn::Index(0), None);
        assert!(matches!(missing, Err(Error::Io { .. })));
        let empty = write_tmp("");
        assert!(matches!(
            load_csv(empty.path(), &LabelColumn::Index(0), None),
            Err(Error::EmptyFile(_))
        ));
        let text = write_tmp("x,y\nfoo,a\n1,b\n");
        assert!(matches!(
            load_csv(text.path(), &LabelColumn::Name("y".into()), Some("a")),
            Err(Error::Parse { .. })
        ));
        let nolabel = write_tmp("x,y\n1,a\n2,b\n");
        assert!(matches!(
            load_csv(nolabel.path(), &LabelColumn::Name("z".into()), Some("a")),
            Err(Error::MissingLabelColumn(_))
        ));
        let ambiguous = write_tmp("x,y\n1,a\n2,b\n");
        assert!(matches!(
            load_csv(ambiguous.path(), &LabelColumn::Name("y".into()), None),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn libsvm_densifies_with_zero_fill() {
        let f = write_tmp("1 1:2.0 3:1.0\n-1 2:4\n");
        let d = load_libsvm(f.path()).unwrap();
        assert_eq!(d.samples(), &array![[2.0, 0.0, 1.0], [0.0, 4.0, 0.0]]);
        assert_eq!(d.labels(), &[1, -1]);
    }

    #[test]
    fn libsvm_zero_one_labels() {
        let f = write_tmp("0 1:1\n1 1:2\n0 1:3\n");
        assert_eq!(load_libsvm(f.path()).unwrap().labels(), &[-1, 1, -1]);
    }

    #[test]
    fn libsvm_rejects_descending_indices() {
        let f = write_tmp("1 3:1 2:1\n");
        let err = load_libsvm(f.path()).unwrap_err();
        assert!(matches!(err, Error::IndicesNotAscending { line: 1, prev: 3, next: 2 }));
        assert!(err.to_string().contains("indices not ascending"));
    }

    #[test]
    fn libsvm_rejects_bad_label() {
        let f = write_tmp("2 1:1\n");
        assert!(matches!(load_libsvm(f.path()), Err(Error::BadLabel { line: 1, .. })));
        let g = write_tmp("cat 1:1\n");
        assert!(matches!(load_libsvm(g.path()), Err(Error::BadLabel { .. })));
    }

    #[test]
    fn standardize_uses_sample_stddev() {
        let d = Dataset::new(array![[1.0], [3.0]], vec![1, -1], "t").unwrap();
        let (s, params) = standardize(&d);
        assert_eq!(params.means, vec![2.0]);
        assert!((params.stddevs[0] - 2f64.sqrt()).abs() < 1e-15);
        let h = 1.0 / 2f64.sqrt();
        assert!((s.samples()[[0, 0]] + h).abs() < 1e-15);
        assert!((s.samples()[[1, 0]] - h).abs() < 1e-15);
    }

    #[test]
    fn constant_column_passes_through() {
        let d = Dataset::new(array![[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]], vec![1, -1, 1], "t").unwrap();
        let (s, params) = standardize(&d);
        assert_eq!(params.stddevs[0], 0.0);
        assert_eq!(s.samples().column(0).to_vec(), vec![5.0, 5.0, 5.0]);
        let col = s.samples().column(1);
        let mean = col.sum() / 3.0;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
        assert!(mean.abs() < 1e-12 && (sd - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_scaler_is_noop() {
        let d = Dataset::new(array![[1.0, -2.0], [0.5, 3.0]], vec![1, -1], "t").unwrap();
        let out = apply_scaler(&d, &ScalerParams::identity(2)).unwrap();
        assert_eq!(out, d);
    }

    #[test]
    fn scaler_dimension_mismatch() {
        let d = Dataset::new(array![[1.0, -2.0]], vec![1], "t").unwrap();
        assert!(matches!(
            apply_scaler(&d, &ScalerParams::identity(3)),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    fn balanced(n_per_class: usize) -> Dataset {
        let n = 2 * n_per_class;
        let samples = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        let labels = (0..n).map(|i| if i < n_per_class { 1 } else { -1 }).collect();
        Dataset::new(samples, labels, "t").unwrap()
    }

    #[test]
    fn kfold_exact_divisibility() {
        let d = balanced(5);
        let plan = stratified_kfold(&d, 5, 7).unwrap();
        for f in 0..5 {
            let test = plan.test_indices(f);
            let pos = test.iter().filter(|&&i| d.labels()[i] == 1).count();
            assert_eq!((pos, test.len() - pos), (1, 1));
        }
        assert_eq!(plan, stratified_kfold(&d, 5, 7).unwrap());
    }

    #[test]
    fn kfold_small_class_errors() {
        let samples = Array2::zeros((8, 1));
        let labels = vec![1, 1, 1, -1, -1, -1, -1, -1];
        let d = Dataset::new(samples, labels, "t").unwrap();
        assert!(matches!(
            stratified_kfold(&d, 5, 0),
            Err(Error::ClassTooSmall { label: 1, count: 3, k: 5 })
        ));
        assert!(stratified_kfold(&d, 1, 0).is_err());
    }

    #[test]
    fn dataset_rejects_bad_input() {
        assert!(Dataset::new(array![[1.0]], vec![0], "t").is_err());
        assert!(Dataset::new(array![[f64::NAN]], vec![1], "t").is_err());
        assert!(Dataset::new(array![[1.0], [2.0]], vec![1], "t").is_err());
    }
}
