//! Dataset loading: delimited text for tabular sets, IDX for MNIST, and a
//! Gaussian-blob generator for tests.
//!
//! Loaders only read bytes that are already on disk. `scripts/fetch_data.sh`
//! populates the data directory.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::tensor::Tensor;

/// Environment variable naming the dataset root directory.
pub const DATA_DIR_ENV: &str = "LNN_DATA_DIR";

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
pub const MNIST_SIDE: usize = 28;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("line {line}, column {column}: cannot parse {value:?} as a number")]
    Parse { line: u64, column: usize, value: String },
    #[error("line {line}, column {column}: missing value")]
    Missing { line: u64, column: usize },
    #[error("line {line}: expected {expected} columns, found {got}")]
    Columns { line: u64, expected: usize, got: usize },
    #[error("line {line}: unknown class label {label:?}")]
    UnknownClass { line: u64, label: String },
    #[error("{dataset}: expected {expected} {what}, found {got}")]
    Shape { dataset: String, what: &'static str, expected: usize, got: usize },
    #[error("{path}: bad IDX magic {got:#010x}, expected {expected:#010x}")]
    Magic { path: PathBuf, expected: u32, got: u32 },
    #[error("{path}: unexpected IDX dimensions {dims:?}")]
    Dimensions { path: PathBuf, dims: Vec<usize> },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("sample {index}: label {label} outside [0, {classes})")]
    Label { index: usize, label: usize, classes: usize },
    #[error("sample {index}: non-finite feature value")]
    NonFinite { index: usize },
    #[error("unknown dataset {0:?} (expected iris, wine or wdbc)")]
    UnknownDataset(String),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// A labelled collection of samples with a fixed per-sample shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// Per-sample shape, `[n_features]` for tabular data, `[1, 28, 28]` for
    /// MNIST (channel-first).
    pub sample_shape: Vec<usize>,
    /// Row-major samples, `n_samples × product(sample_shape)`.
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    /// Class names in label order.
    pub classes: Vec<String>,
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset and checks its invariants.
    pub fn new(
        name: impl Into<String>,
        sample_shape: Vec<usize>,
        features: Vec<f64>,
        labels: Vec<usize>,
        classes: Vec<String>,
    ) -> Result<Self> {
        let ds = Self { name: name.into(), sample_shape, features, labels, classes, feature_names: None };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let width = self.sample_len();
        if self.features.len() != width * self.labels.len() {
            return Err(DataError::Shape {
                dataset: self.name.clone(),
                what: "feature values",
                expected: width * self.labels.len(),
                got: self.features.len(),
            });
        }
        for (index, &label) in self.labels.iter().enumerate() {
            if label >= self.classes.len() {
                return Err(DataError::Label { index, label, classes: self.classes.len() });
            }
        }
        if let Some(pos) = self.features.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { index: pos / width.max(1) });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn sample_len(&self) -> usize {
        self.sample_shape.iter().product()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let w = self.sample_len();
        &self.features[i * w..(i + 1) * w]
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.sample_len());
        for &i in indices {
            features.extend_from_slice(self.sample(i));
        }
        Dataset {
            name: self.name.clone(),
            sample_shape: self.sample_shape.clone(),
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Batch tensor `[indices.len(), sample_shape…]`.
    pub fn batch(&self, indices: &[usize]) -> Tensor {
        let mut shape = vec![indices.len()];
        shape.extend(&self.sample_shape);
        let mut data = Vec::with_capacity(indices.len() * self.sample_len());
        for &i in indices {
            data.extend_from_slice(self.sample(i));
        }
        Tensor::new(shape, data).expect("dataset shape is consistent")
    }

    /// Samples per class, indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Layout of a delimited tabular file.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularSchema {
    pub name: String,
    pub delimiter: u8,
    pub has_header: bool,
    /// Total number of columns per row.
    pub columns: usize,
    pub label_column: usize,
    /// Columns ignored on load, such as record ids.
    pub drop_columns: Vec<usize>,
    /// Accepted class names. Labels are assigned in lexicographic order of
    /// these names whatever order they are listed in. `None` accepts any
    /// label and derives the classes from the file.
    pub classes: Option<Vec<String>>,
    pub expected_rows: Option<usize>,
}

impl TabularSchema {
    pub fn iris() -> Self {
        Self {
            name: "iris".into(),
            delimiter: b',',
            has_header: false,
            columns: 5,
            label_column: 4,
            drop_columns: vec![],
            classes: Some(strings(&["Iris-setosa", "Iris-versicolor", "Iris-virginica"])),
            expected_rows: Some(150),
        }
    }

    pub fn wine() -> Self {
        Self {
            name: "wine".into(),
            delimiter: b',',
            has_header: false,
            columns: 14,
            label_column: 0,
            drop_columns: vec![],
            classes: Some(strings(&["1", "2", "3"])),
            expected_rows: Some(178),
        }
    }

    /// Wisconsin diagnostic breast cancer: id, diagnosis (B/M), 30 features.
    pub fn wdbc() -> Self {
        Self {
            name: "wdbc".into(),
            delimiter: b',',
            has_header: false,
            columns: 32,
            label_column: 1,
            drop_columns: vec![0],
            classes: Some(strings(&["B", "M"])),
            expected_rows: Some(569),
        }
    }

    /// Built-in schema by dataset name. `wbc` is accepted for `wdbc`.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "iris" => Ok(Self::iris()),
            "wine" => Ok(Self::wine()),
            "wdbc" | "wbc" => Ok(Self::wdbc()),
            other => Err(DataError::UnknownDataset(other.to_string())),
        }
    }

    /// Canonical file name inside the data directory.
    pub fn file_name(&self) -> String {
        format!("{}.data", self.name)
    }

    pub fn n_features(&self) -> usize {
        self.columns - 1 - self.drop_columns.len()
    }

    fn is_feature(&self, col: usize) -> bool {
        col != self.label_column && !self.drop_columns.contains(&col)
    }
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Dataset root: `$LNN_DATA_DIR`, else `./data`.
pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("data"))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })
}

pub fn load_tabular_csv(path: impl AsRef<Path>, schema: &TabularSchema) -> Result<Dataset> {
    read_tabular(BufReader::new(open(path.as_ref())?), schema)
}

/// Loads a built-in tabular dataset from `root`.
pub fn load_named(name: &str, root: impl AsRef<Path>) -> Result<Dataset> {
    let schema = TabularSchema::named(name)?;
    load_tabular_csv(root.as_ref().join(schema.file_name()), &schema)
}

pub fn read_tabular<R: Read>(input: R, schema: &TabularSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let feature_names = if schema.has_header {
        let header = reader.headers().map_err(|e| csv_error(&e))?;
        Some(header.iter().enumerate().filter(|(c, _)| schema.is_feature(*c)).map(|(_, h)| h.to_string()).collect())
    } else {
        None
    };

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != schema.columns {
            return Err(DataError::Columns { line, expected: schema.columns, got: record.len() });
        }
        for (column, field) in record.iter().enumerate() {
            if field.is_empty() || field == "?" {
                return Err(DataError::Missing { line, column });
            }
            if schema.is_feature(column) {
                let v: f64 = field
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| DataError::Parse { line, column, value: field.to_string() })?;
                features.push(v);
            }
        }
        raw_labels.push((line, record[schema.label_column].to_string()));
    }

    let mut classes = match &schema.classes {
        Some(c) => c.clone(),
        None => raw_labels.iter().map(|(_, l)| l.clone()).collect(),
    };
    classes.sort();
    classes.dedup();
    let labels = raw_labels
        .into_iter()
        .map(|(line, l)| classes.binary_search(&l).map_err(|_| DataError::UnknownClass { line, label: l }))
        .collect::<Result<Vec<_>>>()?;

    if let Some(expected) = schema.expected_rows {
        if labels.len() != expected {
            return Err(DataError::Shape { dataset: schema.name.clone(), what: "rows", expected, got: labels.len() });
        }
    }
    let mut ds = Dataset::new(schema.name.clone(), vec![schema.n_features()], features, labels, classes)?;
    ds.feature_names = feature_names;
    Ok(ds)
}

fn csv_error(e: &csv::Error) -> DataError {
    DataError::Csv { line: e.position().map_or(0, |p| p.line()), message: e.to_string() }
}

/// Writes `ds` in the layout of `schema`. Dropped columns receive the row
/// index. Values use the shortest representation that parses back to the
/// same `f64`.
pub fn write_tabular<W: Write>(ds: &Dataset, schema: &TabularSchema, out: W) -> io::Result<()> {
    let mut writer = csv::WriterBuilder::new().delimiter(schema.delimiter).from_writer(out);
    if schema.has_header {
        let names = ds.feature_names.clone().unwrap_or_else(|| {
            (0..ds.sample_len()).map(|i| format!("f{i}")).collect()
        });
        let mut names = names.into_iter();
        let header: Vec<String> = (0..schema.columns)
            .map(|c| {
                if c == schema.label_column {
                    "label".to_string()
                } else if schema.drop_columns.contains(&c) {
                    format!("drop{c}")
                } else {
                    names.next().unwrap_or_default()
                }
            })
            .collect();
        writer.write_record(&header)?;
    }
    for i in 0..ds.len() {
        let mut values = ds.sample(i).iter();
        let row: Vec<String> = (0..schema.columns)
            .map(|c| {
                if c == schema.label_column {
                    ds.classes[ds.labels[i]].clone()
                } else if schema.drop_columns.contains(&c) {
                    i.to_string()
                } else {
                    values.next().expect("sample width matches schema").to_string()
                }
            })
            .collect();
        writer.write_record(&row)?;
    }
    writer.flush()
}

fn read_u32_be<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_be_bytes(buf))
}

fn read_idx(path: &Path, magic: u32) -> Result<(Vec<usize>, Vec<u8>)> {
    let io_err = |source| DataError::Io { path: path.to_path_buf(), source };
    let mut r = BufReader::new(open(path)?);
    let got = read_u32_be(&mut r).map_err(io_err)?;
    if got != magic {
        return Err(DataError::Magic { path: path.to_path_buf(), expected: magic, got });
    }
    let ndim = (magic & 0xff) as usize;
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        dims.push(read_u32_be(&mut r).map_err(io_err)? as usize);
    }
    let mut bytes = Vec::with_capacity(dims.iter().product());
    r.read_to_end(&mut bytes).map_err(io_err)?;
    if bytes.len() != dims.iter().product::<usize>() {
        return Err(DataError::Dimensions { path: path.to_path_buf(), dims });
    }
    Ok((dims, bytes))
}

/// Loads an IDX image/label pair. Pixels are scaled from `[0, 255]` to
/// `[0, 1]`; samples have shape `[1, 28, 28]`.
pub fn load_mnist_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images_path = images_path.as_ref();
    let (dims, pixels) = read_idx(images_path, IDX_IMAGES_MAGIC)?;
    if dims[1] != MNIST_SIDE || dims[2] != MNIST_SIDE {
        return Err(DataError::Dimensions { path: images_path.to_path_buf(), dims });
    }
    let (label_dims, raw_labels) = read_idx(labels_path.as_ref(), IDX_LABELS_MAGIC)?;
    if dims[0] != label_dims[0] {
        return Err(DataError::CountMismatch { images: dims[0], labels: label_dims[0] });
    }
    let labels: Vec<usize> = raw_labels.into_iter().map(usize::from).collect();
    let classes = (0..10).map(|d| d.to_string()).collect();
    let features = pixels.into_iter().map(|p| f64::from(p) / 255.0).collect();
    Dataset::new("mnist", vec![1, MNIST_SIDE, MNIST_SIDE], features, labels, classes)
}

/// Train and test splits from `root` under the canonical MNIST file names.
pub fn load_mnist(root: impl AsRef<Path>) -> Result<(Dataset, Dataset)> {
    let root = root.as_ref();
    let train = load_mnist_idx(root.join("train-images-idx3-ubyte"), root.join("train-labels-idx1-ubyte"))?;
    let test = load_mnist_idx(root.join("t10k-images-idx3-ubyte"), root.join("t10k-labels-idx1-ubyte"))?;
    Ok((train, test))
}

/// Writes an IDX image/label pair. Pixels are rounded to the nearest
/// `k/255`.
pub fn write_mnist_idx(ds: &Dataset, images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> io::Result<()> {
    let (rows, cols) = match ds.sample_shape.as_slice() {
        [1, r, c] | [r, c] => (*r, *c),
        _ => return Err(io::Error::new(io::ErrorKind::InvalidInput, "dataset is not single-channel images")),
    };
    let mut img = BufWriter::new(File::create(images_path)?);
    img.write_all(&IDX_IMAGES_MAGIC.to_be_bytes())?;
    for d in [ds.len(), rows, cols] {
        img.write_all(&(d as u32).to_be_bytes())?;
    }
    let bytes: Vec<u8> = ds.features.iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect();
    img.write_all(&bytes)?;
    img.flush()?;

    let mut lab = BufWriter::new(File::create(labels_path)?);
    lab.write_all(&IDX_LABELS_MAGIC.to_be_bytes())?;
    lab.write_all(&(ds.len() as u32).to_be_bytes())?;
    let labels: Vec<u8> = ds.labels.iter().map(|&l| l as u8).collect();
    lab.write_all(&labels)?;
    lab.flush()
}

/// Two-feature Gaussian blobs with unit variance. Class centers sit on a
/// circle of radius `separation`; labels cycle through the classes so counts
/// differ by at most one.
pub fn make_synthetic_blobs(n: usize, classes: usize, separation: f64, seed: u64) -> Dataset {
    assert!(classes >= 1 && n >= classes, "need at least one sample per class");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        let angle = std::f64::consts::TAU * c as f64 / classes as f64;
        for center in [separation * angle.cos(), separation * angle.sin()] {
            let noise: f64 = StandardNormal.sample(&mut rng);
            features.push(center + noise);
        }
        labels.push(c);
    }
    let names = (0..classes).map(|c| format!("class{c}")).collect();
    Dataset::new("blobs", vec![2], features, labels, names).expect("generated data is valid")
}
