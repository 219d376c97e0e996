//! Tabular classification datasets: loading, validation, stratified
//! splitting, column projection and synthetic generation.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::error::{Error, Result};

/// An immutable instance-by-feature matrix with integer class labels.
///
/// Labels are always encoded `0..n_classes` in first-appearance order, so a
/// loaded dataset round-trips through [`write_csv`]/[`load_csv`] with labels
/// intact. `column_ids` track where each column came from in the originating
/// dataset; projections compose them, letting masks over a shrunk view be
/// mapped back to original feature indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>, // row-major, n_instances x n_features
    labels: Vec<u32>,
    n_instances: usize,
    n_features: usize,
    n_classes: usize,
    column_ids: Vec<usize>,
}

/// A seeded stratified train/test partition of a dataset.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
    /// Row indices (into the source dataset) of the train partition, ascending.
    pub train_indices: Vec<usize>,
    /// Row indices of the test partition, ascending.
    pub test_indices: Vec<usize>,
}

/// Which column of a CSV file holds the class label.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum LabelColumn {
    /// The last column (the default).
    #[default]
    Last,
    /// A 0-based column index.
    Index(usize),
    /// A header name; requires `header: true`.
    Name(String),
}

/// Policy for non-finite feature cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum NanPolicy {
    /// Reject the file, reporting the offending cell (the default).
    #[default]
    Reject,
    /// Replace non-finite cells with the column mean of the finite cells.
    ImputeMean,
}

/// Options for [`load_csv`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub header: bool,
    pub delimiter: u8,
    /// Min-max normalize each feature column to `[0,1]` at load time. Turn this
    /// off when a train/test split follows: normalization parameters must then
    /// be fitted on the train partition only (see [`SplitPair::normalize`]).
    pub normalize: bool,
    pub nan_policy: NanPolicy,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            label_column: LabelColumn::Last,
            header: true,
            delimiter: b',',
            normalize: true,
            nan_policy: NanPolicy::Reject,
        }
    }
}

impl Dataset {
    /// Builds a dataset from parts, enforcing the structural invariants:
    /// consistent shapes, at least two classes, at least two instances per
    /// class, finite values, unique column ids.
    pub fn from_parts(
        features: Vec<f64>,
        labels: Vec<u32>,
        n_features: usize,
        column_ids: Vec<usize>,
    ) -> Result<Self> {
        let n_instances = labels.len();
        if n_features == 0 {
            return Err(Error::InvalidDataset("dataset has no feature columns".into()));
        }
        if features.len() != n_instances * n_features {
            return Err(Error::InvalidDataset(format!(
                "feature matrix has {} values, expected {} x {}",
                features.len(),
                n_instances,
                n_features
            )));
        }
        if column_ids.len() != n_features {
            return Err(Error::InvalidDataset("column_ids length mismatch".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &id in &column_ids {
            if !seen.insert(id) {
                return Err(Error::InvalidDataset(format!("duplicate column id {id}")));
            }
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column {}",
                pos / n_features,
                pos % n_features
            )));
        }
        let mut class_counts: HashMap<u32, usize> = HashMap::new();
        for &l in &labels {
            *class_counts.entry(l).or_default() += 1;
        }
        if class_counts.len() < 2 {
            return Err(Error::InvalidDataset("fewer than 2 classes".into()));
        }
        let n_classes = class_counts.len();
        for c in 0..n_classes as u32 {
            match class_counts.get(&c) {
                None => {
                    return Err(Error::InvalidDataset(format!(
                        "labels are not contiguous: class {c} missing"
                    )))
                }
                Some(&count) if count < 2 => {
                    return Err(Error::InvalidDataset(format!(
                        "class {c} has fewer than 2 instances"
                    )))
                }
                _ => {}
            }
        }
        Ok(Dataset {
            features,
            labels,
            n_instances,
            n_features,
            n_classes,
            column_ids,
        })
    }

    pub fn n_instances(&self) -> usize {
        self.n_instances
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn column_ids(&self) -> &[usize] {
        &self.column_ids
    }

    /// One instance's feature values.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.features[row * self.n_features + col]
    }

    /// One feature column, copied out.
    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_instances).map(|i| self.value(i, col)).collect()
    }

    /// Keeps the given columns, in the given order. Column ids compose
    /// through the projection, so a projection of a projection still points
    /// at the original dataset's columns.
    pub fn project_columns(&self, indices: &[usize]) -> Result<Dataset> {
        let mut seen = std::collections::HashSet::new();
        for &c in indices {
            if c >= self.n_features {
                return Err(Error::InvalidArgument(format!(
                    "column {c} out of range (dataset has {} features)",
                    self.n_features
                )));
            }
            if !seen.insert(c) {
                return Err(Error::InvalidArgument(format!("duplicate column index {c}")));
            }
        }
        if indices.is_empty() {
            return Err(Error::InvalidArgument("projection onto zero columns".into()));
        }
        let mut features = Vec::with_capacity(self.n_instances * indices.len());
        for i in 0..self.n_instances {
            let row = self.row(i);
            features.extend(indices.iter().map(|&c| row[c]));
        }
        Ok(Dataset {
            features,
            labels: self.labels.clone(),
            n_instances: self.n_instances,
            n_features: indices.len(),
            n_classes: self.n_classes,
            column_ids: indices.iter().map(|&c| self.column_ids[c]).collect(),
        })
    }

    /// Rows at the given indices, as a new dataset over the same columns.
    fn take_rows(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.n_features);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
        }
        Dataset {
            features,
            labels,
            n_instances: rows.len(),
            n_features: self.n_features,
            n_classes: self.n_classes,
            column_ids: self.column_ids.clone(),
        }
    }

    /// Per-column (min, max) over this dataset's rows.
    pub fn fit_min_max(&self) -> Vec<(f64, f64)> {
        (0..self.n_features)
            .map(|c| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for i in 0..self.n_instances {
                    let v = self.value(i, c);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                (lo, hi)
            })
            .collect()
    }

    /// Applies min-max parameters in place. Constant columns (max == min)
    /// map to 0.
    pub fn apply_min_max(&mut self, params: &[(f64, f64)]) {
        assert_eq!(params.len(), self.n_features);
        for i in 0..self.n_instances {
            for (c, &(lo, hi)) in params.iter().enumerate() {
                let v = &mut self.features[i * self.n_features + c];
                *v = if hi > lo { (*v - lo) / (hi - lo) } else { 0.0 };
            }
        }
    }
}

impl SplitPair {
    /// Min-max normalizes both partitions with parameters fitted on the
    /// train partition only, so no test information leaks into distances.
    pub fn normalize(&mut self) {
        let params = self.train.fit_min_max();
        self.train.apply_min_max(&params);
        self.test.apply_min_max(&params);
    }
}

/// Loads and validates a CSV classification dataset.
///
/// Labels are re-encoded to `0..n_classes` in first-appearance order.
/// Feature cells must parse as numbers; every structural or numeric problem
/// is reported with its row/column location.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    load_csv_reader(file, options)
}

/// [`load_csv`] over any reader (handy for tests and in-memory data).
pub fn load_csv_reader(reader: impl std::io::Read, options: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(options.header)
        .delimiter(options.delimiter)
        .flexible(true)
        .from_reader(reader);

    let headers: Option<Vec<String>> = if options.header {
        Some(rdr.headers()?.iter().map(|h| h.to_string()).collect())
    } else {
        None
    };

    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    if records.len() < 2 {
        return Err(Error::InvalidDataset(format!(
            "need at least 2 data rows, found {}",
            records.len()
        )));
    }

    let width = records[0].len();
    let label_idx = match &options.label_column {
        LabelColumn::Last => width - 1,
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => {
            let headers = headers.as_ref().ok_or_else(|| {
                Error::InvalidConfig("label column by name requires a header row".into())
            })?;
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::InvalidConfig(format!("no column named {name:?}")))?
        }
    };
    if label_idx >= width {
        return Err(Error::InvalidConfig(format!(
            "label column {label_idx} out of range for {width}-column file"
        )));
    }
    let n_features = width - 1;
    if n_features == 0 {
        return Err(Error::InvalidDataset("file has no feature columns".into()));
    }

    let mut features = Vec::with_capacity(records.len() * n_features);
    let mut raw_labels = Vec::with_capacity(records.len());
    // Cells that need imputation, as (flat feature index, column).
    let mut missing: Vec<(usize, usize)> = Vec::new();

    for (r, record) in records.iter().enumerate() {
        let row_no = r + 1 + options.header as usize; // 1-based file row
        if record.len() != width {
            return Err(Error::cell(
                row_no,
                record.len(),
                format!("ragged row: expected {width} cells, found {}", record.len()),
            ));
        }
        let mut col_out = 0usize;
        for (c, cell) in record.iter().enumerate() {
            if c == label_idx {
                raw_labels.push(cell.trim().to_string());
                continue;
            }
            let trimmed = cell.trim();
            let parsed: Option<f64> = if trimmed.is_empty() {
                None
            } else {
                match trimmed.parse::<f64>() {
                    Ok(v) if v.is_finite() => Some(v),
                    Ok(_) => None,
                    Err(_) => {
                        return Err(Error::cell(
                            row_no,
                            c,
                            format!("non-numeric feature cell {trimmed:?}"),
                        ))
                    }
                }
            };
            match parsed {
                Some(v) => features.push(v),
                None => match options.nan_policy {
                    NanPolicy::Reject => {
                        return Err(Error::cell(row_no, c, "missing or non-finite value"))
                    }
                    NanPolicy::ImputeMean => {
                        missing.push((features.len(), col_out));
                        features.push(f64::NAN);
                    }
                },
            }
            col_out += 1;
        }
    }

    if !missing.is_empty() {
        impute_column_means(&mut features, n_features, &missing)?;
    }

    // First-appearance label encoding.
    let mut label_map: HashMap<String, u32> = HashMap::new();
    let mut labels = Vec::with_capacity(raw_labels.len());
    for raw in &raw_labels {
        let next = label_map.len() as u32;
        labels.push(*label_map.entry(raw.clone()).or_insert(next));
    }
    if label_map.len() < 2 {
        return Err(Error::InvalidDataset("fewer than 2 classes".into()));
    }

    let n = labels.len();
    let column_ids = (0..n_features).collect();
    let mut dataset = Dataset::from_parts(features, labels, n_features, column_ids)?;
    debug_assert_eq!(dataset.n_instances, n);
    if options.normalize {
        let params = dataset.fit_min_max();
        dataset.apply_min_max(&params);
    }
    Ok(dataset)
}

fn impute_column_means(
    features: &mut [f64],
    n_features: usize,
    missing: &[(usize, usize)],
) -> Result<()> {
    let n = features.len() / n_features;
    let mut sums = vec![0.0; n_features];
    let mut counts = vec![0usize; n_features];
    for i in 0..n {
        for c in 0..n_features {
            let v = features[i * n_features + c];
            if v.is_finite() {
                sums[c] += v;
                counts[c] += 1;
            }
        }
    }
    for &(flat, col) in missing {
        if counts[col] == 0 {
            return Err(Error::InvalidDataset(format!(
                "column {col} has no finite values to impute from"
            )));
        }
        features[flat] = sums[col] / counts[col] as f64;
    }
    Ok(())
}

/// Writes a dataset in the same shape [`load_csv`] reads: feature columns
/// then the label column last, with a header when requested.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>, options: &CsvOptions) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    let delim = options.delimiter as char;
    if options.header {
        for id in dataset.column_ids() {
            write!(file, "f{id}{delim}")?;
        }
        writeln!(file, "label")?;
    }
    for i in 0..dataset.n_instances() {
        for v in dataset.row(i) {
            // RFC 3339-ish shortest float formatting keeps round-trips exact.
            write!(file, "{v}{delim}")?;
        }
        writeln!(file, "{}", dataset.labels()[i])?;
    }
    file.flush()?;
    Ok(())
}

/// Stratified split: shuffles each class with the seed, then takes a
/// per-class share of rows into the train partition.
///
/// Per-class train counts use floor-then-largest-remainder rounding against
/// the global target, with a guarantee that both partitions keep at least one
/// instance of every class.
pub fn stratified_split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must be in (0,1), got {train_fraction}"
        )));
    }
    let n_classes = dataset.n_classes();
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in dataset.labels().iter().enumerate() {
        per_class[l as usize].push(i);
    }
    for (c, rows) in per_class.iter().enumerate() {
        if rows.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "class {c} has only {} instance(s); need at least 2 to split",
                rows.len()
            )));
        }
    }

    let counts = per_class_train_counts(
        &per_class.iter().map(Vec::len).collect::<Vec<_>>(),
        train_fraction,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for (rows, &take) in per_class.iter().zip(&counts) {
        let picked = sample(&mut rng, rows.len(), take).into_vec();
        let mut chosen = vec![false; rows.len()];
        for p in picked {
            chosen[p] = true;
        }
        for (j, &row) in rows.iter().enumerate() {
            if chosen[j] {
                train_rows.push(row);
            } else {
                test_rows.push(row);
            }
        }
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();

    Ok(SplitPair {
        train: dataset.take_rows(&train_rows),
        test: dataset.take_rows(&test_rows),
        seed,
        train_indices: train_rows,
        test_indices: test_rows,
    })
}

/// Floor each class's exact share, then hand out the remaining seats (up to
/// the rounded global target) to the largest fractional parts, never leaving
/// a class empty on either side.
fn per_class_train_counts(class_sizes: &[usize], fraction: f64) -> Vec<usize> {
    let total: usize = class_sizes.iter().sum();
    let target = (fraction * total as f64).round() as usize;
    let mut counts: Vec<usize> = Vec::with_capacity(class_sizes.len());
    let mut fracs: Vec<(usize, f64)> = Vec::with_capacity(class_sizes.len());
    for (c, &size) in class_sizes.iter().enumerate() {
        let exact = fraction * size as f64;
        let mut base = exact.floor() as usize;
        base = base.clamp(1, size - 1); // keep both sides non-empty
        counts.push(base);
        fracs.push((c, exact - exact.floor()));
    }
    let mut assigned: usize = counts.iter().sum();
    // Largest fractional part first; ties by class index for determinism.
    fracs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for &(c, _) in &fracs {
        if assigned >= target {
            break;
        }
        if counts[c] < class_sizes[c] - 1 {
            counts[c] += 1;
            assigned += 1;
        }
    }
    counts
}

/// Generates a synthetic classification dataset with known relevant columns.
///
/// The label is a thresholded random linear combination of the informative
/// columns. Informative columns share a latent factor, so each one carries an
/// individually detectable association with the label; the remaining columns
/// are independent uniform noise. Returns the dataset and the informative
/// column indices (sorted).
pub fn generate_synthetic(
    n_instances: usize,
    n_features: usize,
    n_informative: usize,
    seed: u64,
) -> Result<(Dataset, Vec<usize>)> {
    if n_informative == 0 || n_informative >= n_features {
        return Err(Error::InvalidArgument(format!(
            "n_informative must be in 1..n_features, got {n_informative} of {n_features}"
        )));
    }
    if n_instances < 40 {
        return Err(Error::InvalidArgument(format!(
            "need at least 40 instances, got {n_instances}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut informative = sample(&mut rng, n_features, n_informative).into_vec();
    informative.sort_unstable();

    // Blend weight between the shared latent factor and per-column noise.
    const LATENT: f64 = 0.55;

    let latent: Vec<f64> = (0..n_instances).map(|_| rng.random::<f64>()).collect();
    let weights: Vec<f64> = (0..n_informative)
        .map(|_| rng.random_range(0.5..1.5))
        .collect();

    let mut features = vec![0.0; n_instances * n_features];
    for i in 0..n_instances {
        for c in 0..n_features {
            features[i * n_features + c] = rng.random::<f64>();
        }
    }
    for &c in &informative {
        for i in 0..n_instances {
            let v = &mut features[i * n_features + c];
            *v = (1.0 - LATENT) * *v + LATENT * latent[i];
        }
    }

    let scores: Vec<f64> = (0..n_instances)
        .map(|i| {
            informative
                .iter()
                .zip(&weights)
                .map(|(&c, &w)| w * features[i * n_features + c])
                .sum()
        })
        .collect();
    let mut sorted = scores.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let threshold = (sorted[n_instances / 2 - 1] + sorted[n_instances / 2]) / 2.0;

    let raw: Vec<u32> = scores.iter().map(|&s| (s > threshold) as u32).collect();
    // Canonicalize to first-appearance order so write/load round-trips.
    let first = raw[0];
    let labels: Vec<u32> = raw.iter().map(|&l| l ^ first).collect();

    let dataset = Dataset::from_parts(features, labels, n_features, (0..n_features).collect())?;
    Ok((dataset, informative))
}
