//! Dataset loading, ±1 label encoding and seeded pool/test splits.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A labeled feature matrix.
///
/// `labels[i]` is the position of row `i`'s class in `class_list`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: DMatrix<f64>,
    labels: Vec<usize>,
    class_list: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from raw label tokens. Classes are ordered numerically
    /// when every token parses as a number, lexicographically otherwise.
    pub fn new(
        name: impl Into<String>,
        features: DMatrix<f64>,
        raw_labels: &[String],
    ) -> Result<Self> {
        if raw_labels.len() != features.nrows() {
            return Err(Error::Shape(format!(
                "{} labels for {} feature rows",
                raw_labels.len(),
                features.nrows()
            )));
        }
        let class_list = sorted_classes(raw_labels);
        let labels = raw_labels
            .iter()
            .map(|l| class_list.iter().position(|c| c == l).unwrap())
            .collect();
        Self::from_parts(name, features, labels, class_list)
    }

    /// Builds a dataset from class positions and an explicit class list.
    pub fn from_parts(
        name: impl Into<String>,
        features: DMatrix<f64>,
        labels: Vec<usize>,
        class_list: Vec<String>,
    ) -> Result<Self> {
        let n = features.nrows();
        let c = class_list.len();
        if labels.len() != n {
            return Err(Error::Shape(format!(
                "{} labels for {n} rows",
                labels.len()
            )));
        }
        if features.ncols() == 0 {
            return Err(Error::Validation("dataset has no feature columns".into()));
        }
        if c < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 distinct classes, found {c}"
            )));
        }
        if n < c {
            return Err(Error::Validation(format!("{n} rows for {c} classes")));
        }
        if sorted_classes(&class_list) != class_list {
            return Err(Error::Validation(
                "class list must be sorted and duplicate-free".into(),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::Validation(format!(
                "label position {bad} out of range"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite feature value".into()));
        }
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            class_list,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    /// Class positions, one per row.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_list(&self) -> &[String] {
        &self.class_list
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_list.len()
    }

    /// Rows of the feature matrix at `indices`, in order.
    pub fn rows(&self, indices: &[usize]) -> DMatrix<f64> {
        self.features.select_rows(indices)
    }

    /// Copy with every feature column min-max rescaled to [0, 1].
    /// Constant columns map to 0.
    pub fn rescaled_min_max(&self) -> Dataset {
        let mut features = self.features.clone();
        for mut col in features.column_iter_mut() {
            let lo = col.min();
            let hi = col.max();
            let span = hi - lo;
            for v in col.iter_mut() {
                *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
            }
        }
        Dataset {
            features,
            ..self.clone()
        }
    }
}

fn compare_tokens(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}

fn sorted_classes(raw: &[String]) -> Vec<String> {
    let mut classes: Vec<String> = raw.to_vec();
    let all_numeric = classes.iter().all(|c| c.parse::<f64>().is_ok());
    if all_numeric {
        classes.sort_by(|a, b| compare_tokens(a, b));
    } else {
        classes.sort();
    }
    classes.dedup();
    classes
}

/// Loads a comma-separated file: feature columns first, label last. A first
/// row whose feature fields are not all numeric is treated as a header.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, &path.display().to_string())
}

/// [`load_csv`] over any reader; `source_name` labels errors and the dataset.
pub fn parse_csv<R: Read>(reader: R, source_name: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let parse_err = |line: u64, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };

    let mut width: Option<usize> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();

    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() < 2 {
            return Err(parse_err(
                line,
                "expected at least one feature and a label".into(),
            ));
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(parse_err(
                line,
                format!("expected {expected} fields, found {}", record.len()),
            ));
        }
        let n_feat = expected - 1;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().take(n_feat).map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => {
                values.extend(row);
                raw_labels.push(record[n_feat].to_string());
            }
            Err(_) if raw_labels.is_empty() && i == 0 => continue, // header
            Err(_) => {
                let (col, field) = record
                    .iter()
                    .take(n_feat)
                    .enumerate()
                    .find(|(_, f)| f.parse::<f64>().is_err())
                    .unwrap();
                return Err(parse_err(
                    line,
                    format!("non-numeric feature {:?} in column {}", field, col + 1),
                ));
            }
        }
    }

    if raw_labels.len() < 2 {
        return Err(Error::Validation(format!(
            "{source_name}: need at least 2 data rows, found {}",
            raw_labels.len()
        )));
    }
    let n = raw_labels.len();
    let d = width.unwrap() - 1;
    let features = DMatrix::from_row_slice(n, d, &values);
    Dataset::new(dataset_name(source_name), features, &raw_labels)
}

/// Loads the sparse `label idx:val ...` format with 1-based, strictly
/// increasing indices. Missing entries are zero; `d` is the largest index seen.
pub fn load_sparse(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_sparse(BufReader::new(file), &path.display().to_string())
}

/// [`load_sparse`] over any buffered reader.
pub fn parse_sparse<R: BufRead>(reader: R, source_name: &str) -> Result<Dataset> {
    let parse_err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line: line as u64,
        message,
    };

    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut raw_labels = Vec::new();
    let mut d = 0usize;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let mut tokens = line.split_whitespace();
        let Some(label) = tokens.next() else {
            continue;
        };
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected idx:val, found {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad index {idx:?}")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad value {val:?}")))?;
            if idx < 1 {
                return Err(parse_err(lineno, "indices are 1-based".into()));
            }
            if idx <= last {
                return Err(parse_err(
                    lineno,
                    format!("index {idx} does not increase after {last}"),
                ));
            }
            last = idx;
            row.push((idx - 1, val));
        }
        d = d.max(last);
        raw_labels.push(label.to_string());
        rows.push(row);
    }

    if raw_labels.len() < 2 {
        return Err(Error::Validation(format!(
            "{source_name}: need at least 2 data rows, found {}",
            raw_labels.len()
        )));
    }
    let mut features = DMatrix::zeros(rows.len(), d);
    for (r, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            features[(r, j)] = v;
        }
    }
    Dataset::new(dataset_name(source_name), features, &raw_labels)
}

fn dataset_name(source_name: &str) -> String {
    Path::new(source_name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| source_name.to_string())
}

/// An m×c matrix of ±1 entries with exactly one +1 per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix(DMatrix<f64>);

impl LabelMatrix {
    /// Encodes class positions (each `< n_classes`).
    pub fn from_positions(positions: &[usize], n_classes: usize) -> Result<Self> {
        if let Some(&bad) = positions.iter().find(|&&p| p >= n_classes) {
            return Err(Error::Validation(format!(
                "class position {bad} outside 0..{n_classes}"
            )));
        }
        Ok(LabelMatrix(DMatrix::from_fn(
            positions.len(),
            n_classes,
            |i, k| if positions[i] == k { 1.0 } else { -1.0 },
        )))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n_rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.0.ncols()
    }

    /// Position of the +1 entry in each row.
    pub fn decode(&self) -> Vec<usize> {
        self.0
            .row_iter()
            .map(|row| row.iter().position(|&v| v > 0.0).unwrap())
            .collect()
    }
}

/// Encodes labels against `class_list`; unknown labels are an error.
pub fn encode_labels<T: PartialEq + std::fmt::Debug>(
    labels: &[T],
    class_list: &[T],
) -> Result<LabelMatrix> {
    let positions = labels
        .iter()
        .map(|l| {
            class_list
                .iter()
                .position(|c| c == l)
                .ok_or_else(|| Error::Validation(format!("label {l:?} not in class list")))
        })
        .collect::<Result<Vec<_>>>()?;
    LabelMatrix::from_positions(&positions, class_list.len())
}

/// Parameters of a pool/test split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub pool_fraction: f64,
    pub seed: u64,
    pub init_per_class: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            pool_fraction: 0.6,
            seed: 0,
            init_per_class: 0,
        }
    }
}

/// Dataset row indices of a split. `initial_labeled` is a subset of `pool`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub pool: Vec<usize>,
    pub test: Vec<usize>,
    pub initial_labeled: Vec<usize>,
}

const MAX_SPLIT_RETRIES: u64 = 100;

/// splitmix64 finalizer; decorrelates retry seeds from the per-run `seed + r`.
fn derive_seed(seed: u64, attempt: u64) -> u64 {
    if attempt == 0 {
        return seed;
    }
    let mut z = seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded uniform pool/test partition; `|pool| = floor(pool_fraction * n)`.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<Split> {
    if !(spec.pool_fraction > 0.0 && spec.pool_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "pool fraction {} outside (0, 1)",
            spec.pool_fraction
        )));
    }
    let n = dataset.n_samples();
    let c = dataset.n_classes();
    let pool_size = (spec.pool_fraction * n as f64).floor() as usize;
    if pool_size == 0 {
        return Err(Error::Validation("pool would be empty".into()));
    }
    let k = spec.init_per_class;
    if pool_size < k * c {
        return Err(Error::Validation(format!(
            "pool of {pool_size} cannot hold {k} initial labels for each of {c} classes"
        )));
    }

    for attempt in 0..=MAX_SPLIT_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, attempt));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let test = perm.split_off(pool_size);
        let pool = perm;

        let mut initial = Vec::with_capacity(k * c);
        let mut complete = true;
        for class in 0..c {
            let members: Vec<usize> = pool
                .iter()
                .copied()
                .filter(|&i| dataset.labels()[i] == class)
                .take(k)
                .collect();
            if members.len() < k {
                complete = false;
                break;
            }
            initial.extend(members);
        }
        if complete {
            return Ok(Split {
                pool,
                test,
                initial_labeled: initial,
            });
        }
    }
    Err(Error::Validation(format!(
        "no split with {k} pool samples per class after {MAX_SPLIT_RETRIES} retries"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(n: usize, c: usize) -> Dataset {
        let features = DMatrix::from_fn(n, 2, |i, j| (i * 2 + j) as f64);
        let labels = (0..n).map(|i| (i % c).to_string()).collect::<Vec<_>>();
        Dataset::new("toy", features, &labels).unwrap()
    }

    #[test]
    fn csv_with_header_and_crlf() {
        let text = "a,b,class\r\n1.0,2.0,x\r\n3,4,y\r\n5,6,x\r\n";
        let ds = parse_csv(text.as_bytes(), "t.csv").unwrap();
        assert_eq!(ds.n_samples(), 3);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.class_list(), ["x", "y"]);
        assert_eq!(ds.labels(), [0, 1, 0]);
        assert_eq!(ds.name(), "t");
    }

    #[test]
    fn csv_numeric_classes_sort_numerically() {
        let text = "0,10\n1,2\n2,9\n";
        let ds = parse_csv(text.as_bytes(), "t").unwrap();
        assert_eq!(ds.class_list(), ["2", "9", "10"]);
        assert_eq!(ds.labels(), [2, 0, 1]);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let err = parse_csv("1,2,a\n3,b\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_csv("1,2,a\n3,x,b\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn csv_single_class_is_rejected() {
        let err = parse_csv("1,2,a\n3,4,a\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn csv_needs_two_rows() {
        assert!(parse_csv("1,2,a\n".as_bytes(), "t").is_err());
    }

    #[test]
    fn sparse_densifies() {
        let ds = parse_sparse("1 1:0.5\n2 2:1.0\n".as_bytes(), "s").unwrap();
        assert_eq!(ds.n_samples(), 2);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(
            ds.features(),
            &DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0])
        );
    }

    #[test]
    fn sparse_rejects_unordered_and_zero_indices() {
        let err = parse_sparse("1 3:2.0 2:1.0\n2 1:1\n".as_bytes(), "s").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_sparse("1 1:1\n2 0:1\n".as_bytes(), "s").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn sparse_empty_row_is_zeros() {
        let ds = parse_sparse("1\n2 2:3\n".as_bytes(), "s").unwrap();
        assert_eq!(ds.features().row(0).iter().sum::<f64>(), 0.0);
        assert_eq!(ds.features()[(1, 1)], 3.0);
    }

    #[test]
    fn encode_examples() {
        let y = encode_labels(&["b"], &["a", "b", "c"]).unwrap();
        assert_eq!(
            y.as_matrix().row(0).iter().copied().collect::<Vec<_>>(),
            [-1.0, 1.0, -1.0]
        );
        let y = encode_labels(&[1], &[1, 2]).unwrap();
        assert_eq!(
            y.as_matrix().row(0).iter().copied().collect::<Vec<_>>(),
            [1.0, -1.0]
        );
        assert!(encode_labels(&[7], &[1, 2]).is_err());
    }

    #[test]
    fn split_sizes() {
        let ds = toy(625, 3);
        let s = split(&ds, &SplitSpec::default()).unwrap();
        assert_eq!((s.pool.len(), s.test.len()), (375, 250));
        let ds = toy(150, 3);
        let s = split(&ds, &SplitSpec::default()).unwrap();
        assert_eq!((s.pool.len(), s.test.len()), (90, 60));
    }

    #[test]
    fn split_is_deterministic() {
        let ds = toy(100, 4);
        let spec = SplitSpec {
            seed: 42,
            init_per_class: 2,
            ..Default::default()
        };
        assert_eq!(split(&ds, &spec).unwrap(), split(&ds, &spec).unwrap());
    }

    #[test]
    fn split_retries_then_fails() {
        // One class has a single member; with k = 1 some seeds put it in the test set.
        let mut labels: Vec<String> = (0..20).map(|_| "a".to_string()).collect();
        labels[7] = "b".into();
        let ds = Dataset::new("r", DMatrix::zeros(20, 1), &labels).unwrap();
        let spec = SplitSpec {
            init_per_class: 1,
            ..Default::default()
        };
        for seed in 0..20 {
            let s = split(&ds, &SplitSpec { seed, ..spec }).unwrap();
            assert!(s.pool.contains(&7));
        }
        let spec2 = SplitSpec {
            init_per_class: 2,
            ..Default::default()
        };
        assert!(split(&ds, &spec2).is_err());
    }

    #[test]
    fn rescale_maps_to_unit_interval() {
        let f = DMatrix::from_row_slice(3, 2, &[0.0, 5.0, 5.0, 5.0, 10.0, 5.0]);
        let ds = Dataset::new("m", f, &["a".into(), "b".into(), "a".into()]).unwrap();
        let r = ds.rescaled_min_max();
        assert_eq!(
            r.features().column(0).iter().copied().collect::<Vec<_>>(),
            [0.0, 0.5, 1.0]
        );
        assert!(r.features().column(1).iter().all(|&v| v == 0.0));
    }

    proptest! {
        #[test]
        fn split_partitions(seed in any::<u64>(), n in 4usize..200, k in 0usize..2) {
            let ds = toy(n, 2);
            let s = split(&ds, &SplitSpec { pool_fraction: 0.6, seed, init_per_class: k }).unwrap();
            let mut all: Vec<usize> = s.pool.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            for class in 0..2 {
                let count = s.initial_labeled.iter().filter(|&&i| ds.labels()[i] == class).count();
                prop_assert_eq!(count, k);
            }
            prop_assert!(s.initial_labeled.iter().all(|i| s.pool.contains(i)));
        }

        #[test]
        fn encode_decode_identity(positions in proptest::collection::vec(0usize..5, 1..40)) {
            let y = LabelMatrix::from_positions(&positions, 5).unwrap();
            prop_assert_eq!(y.decode(), positions);
        }
    }
}
