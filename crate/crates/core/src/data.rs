//! Labeled point clouds: CSV and CIFAR-100 ingestion plus the synthetic
//! overlapping-Gaussians generator.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bytes per CIFAR-100 binary record: coarse label, fine label, 3×32×32 pixels.
pub const CIFAR_RECORD_LEN: usize = 2 + CIFAR_PIXELS;
pub const CIFAR_PIXELS: usize = 3 * 32 * 32;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("empty dataset")]
    Empty,
    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    NonNumeric { row: usize, column: usize, value: String },
    #[error("dataset needs at least one feature column")]
    NoFeatures,
    #[error("CIFAR file has {0} bytes, not a multiple of {CIFAR_RECORD_LEN}")]
    CifarFormat(usize),
    #[error("CIFAR class count must be in 1..=100, got {0}")]
    CifarClasses(usize),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

/// Points `x_i ∈ R^d` with class ids `0..n_classes`, each point carrying unit
/// mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
    /// Original label of each class id, in first-appearance order.
    class_names: Vec<String>,
}

impl LabeledDataset {
    /// Row-major `features` of length `labels.len() * dim`.
    pub fn new(
        dim: usize,
        features: Vec<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, DataError> {
        if labels.is_empty() {
            return Err(DataError::Empty);
        }
        if dim == 0 {
            return Err(DataError::NoFeatures);
        }
        if features.len() != labels.len() * dim {
            return Err(DataError::Invalid(format!(
                "{} feature values for {} points of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(DataError::Invalid(format!("label {bad} outside 0..{}", class_names.len())));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Invalid("non-finite feature value".into()));
        }
        Ok(Self { dim, features, labels, class_names })
    }

    /// Builds a dataset from point rows and class ids; classes are named by
    /// their id.
    pub fn from_points(points: &[Vec<f64>], labels: &[usize]) -> Result<Self, DataError> {
        let dim = points.first().map(|p| p.len()).ok_or(DataError::Empty)?;
        if points.len() != labels.len() {
            return Err(DataError::Invalid("points and labels differ in length".into()));
        }
        let mut features = Vec::with_capacity(points.len() * dim);
        for (row, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(DataError::RaggedRow { row, expected: dim, found: p.len() });
            }
            features.extend_from_slice(p);
        }
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let names = (0..k).map(|c| c.to_string()).collect();
        Self::new(dim, features, labels.to_vec(), names)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Size of the largest class.
    pub fn max_class_count(&self) -> usize {
        self.class_counts().into_iter().max().unwrap_or(0)
    }

    /// Point indices grouped by class id.
    pub fn members_by_class(&self) -> Vec<Vec<u32>> {
        let mut by_class = vec![Vec::new(); self.n_classes()];
        for (i, &l) in self.labels.iter().enumerate() {
            by_class[l].push(i as u32);
        }
        by_class
    }

    /// Writes `label,x1,...,xd` with the original class names.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["label".to_string()];
        header.extend((1..=self.dim).map(|k| format!("x{k}")));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = Vec::with_capacity(self.dim + 1);
            rec.push(self.class_names[self.labels[i]].clone());
            rec.extend(self.point(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| DataError::Io { path: "<csv>".into(), source: e })?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io { path: path.display().to_string(), source }
}

/// Reads `label,x1,...,xd` (header row required). Labels are remapped to
/// contiguous ids in order of first appearance.
pub fn load_csv(path: impl AsRef<Path>) -> Result<LabeledDataset, DataError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    read_csv(file)
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<LabeledDataset, DataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(input);
    let header_len = reader.headers()?.len();
    let mut dim: Option<usize> = if header_len > 1 { Some(header_len - 1) } else { None };
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut lookup = std::collections::HashMap::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let d = *dim.get_or_insert(rec.len().saturating_sub(1));
        if rec.len() != d + 1 {
            return Err(DataError::RaggedRow { row: row + 1, expected: d + 1, found: rec.len() });
        }
        if d == 0 {
            return Err(DataError::NoFeatures);
        }
        let name = rec[0].to_string();
        let id = *lookup.entry(name.clone()).or_insert_with(|| {
            class_names.push(name);
            class_names.len() - 1
        });
        labels.push(id);
        for (column, field) in rec.iter().enumerate().skip(1) {
            let v: f64 =
                field.parse().map_err(|_| DataError::NonNumeric { row: row + 1, column, value: field.to_string() })?;
            features.push(v);
        }
    }
    if labels.is_empty() {
        return Err(DataError::Empty);
    }
    LabeledDataset::new(dim.unwrap(), features, labels, class_names)
}

/// Loads the CIFAR-100 binary test split, keeping records whose fine label
/// is below `n_classes_keep`. Pixels are scaled to `[0, 1]`.
pub fn load_cifar100_test(path: impl AsRef<Path>, n_classes_keep: usize) -> Result<LabeledDataset, DataError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    parse_cifar100(&bytes, n_classes_keep)
}

pub fn parse_cifar100(bytes: &[u8], n_classes_keep: usize) -> Result<LabeledDataset, DataError> {
    if !(1..=100).contains(&n_classes_keep) {
        return Err(DataError::CifarClasses(n_classes_keep));
    }
    if bytes.is_empty() || !bytes.len().is_multiple_of(CIFAR_RECORD_LEN) {
        return Err(DataError::CifarFormat(bytes.len()));
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in bytes.chunks_exact(CIFAR_RECORD_LEN) {
        let fine = record[1] as usize;
        if fine >= 100 {
            return Err(DataError::Invalid(format!("fine label {fine} out of range")));
        }
        if fine < n_classes_keep {
            labels.push(fine);
            features.extend(record[2..].iter().map(|&b| b as f64 / 255.0));
        }
    }
    if labels.is_empty() {
        return Err(DataError::Empty);
    }
    let names = (0..n_classes_keep).map(|c| c.to_string()).collect();
    LabeledDataset::new(CIFAR_PIXELS, features, labels, names)
}

/// Parameters of the overlapping-Gaussians generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub n_points: usize,
    /// Side of the square `[0, center_box]²` class centers are drawn from.
    pub center_box: f64,
    /// Per-coordinate standard deviation around each center.
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { n_classes: 10, n_points: 1000, center_box: 5.0, sigma: 0.7, seed: 0 }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.n_classes < 2 {
            return Err(DataError::InvalidSpec("need at least two classes".into()));
        }
        if self.n_points < self.n_classes {
            return Err(DataError::InvalidSpec("need at least as many points as classes".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(DataError::InvalidSpec("sigma must be positive".into()));
        }
        if !(self.center_box >= 0.0 && self.center_box.is_finite()) {
            return Err(DataError::InvalidSpec("center box must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Two-dimensional Gaussian clusters: uniform centers in the box, uniform
/// class of each point, isotropic noise. Deterministic in `spec.seed`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset, DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers: Vec<[f64; 2]> = (0..spec.n_classes)
        .map(|_| [rng.random::<f64>() * spec.center_box, rng.random::<f64>() * spec.center_box])
        .collect();
    let noise = Normal::new(0.0, spec.sigma).map_err(|e| DataError::InvalidSpec(e.to_string()))?;
    let mut features = Vec::with_capacity(2 * spec.n_points);
    let mut labels = Vec::with_capacity(spec.n_points);
    for _ in 0..spec.n_points {
        let class = rng.random_range(0..spec.n_classes);
        labels.push(class);
        features.push(centers[class][0] + noise.sample(&mut rng));
        features.push(centers[class][1] + noise.sample(&mut rng));
    }
    let names = (1..=spec.n_classes).map(|c| c.to_string()).collect();
    LabeledDataset::new(2, features, labels, names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_two_rows() {
        let ds = read_csv("label,x1,x2\na,0.5,1\nb,2,3\n".as_bytes()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.point(1), &[2.0, 3.0]);
    }

    #[test]
    fn csv_remaps_labels_in_first_appearance_order() {
        let ds = read_csv("label,x1\n3,0\n3,1\n7,2\n".as_bytes()).unwrap();
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(ds.class_counts(), vec![2, 1]);
        assert_eq!(ds.class_names(), &["3".to_string(), "7".to_string()]);
        assert_eq!(ds.labels(), &[0, 0, 1]);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(read_csv("label,x1,x2\na,0,1\nb,2\n".as_bytes()), Err(DataError::RaggedRow { row: 2, .. })));
        assert!(matches!(read_csv("label,x1\na,zero\n".as_bytes()), Err(DataError::NonNumeric { .. })));
        assert!(matches!(read_csv("label,x1\n".as_bytes()), Err(DataError::Empty)));
        assert!(matches!(read_csv("".as_bytes()), Err(DataError::Empty)));
    }

    fn cifar_bytes(fine_labels: &[u8]) -> Vec<u8> {
        let mut bytes = Vec::new();
        for (k, &f) in fine_labels.iter().enumerate() {
            bytes.push(0);
            bytes.push(f);
            bytes.extend((0..CIFAR_PIXELS).map(|p| ((p + k) % 256) as u8));
        }
        bytes
    }

    #[test]
    fn cifar_parsing() {
        let bytes = cifar_bytes(&[0, 5, 1, 99, 2]);
        let ds = parse_cifar100(&bytes, 3).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 3072);
        assert_eq!(ds.labels(), &[0, 1, 2]);
        assert_eq!(ds.point(0)[0], 0.0);
        assert_eq!(ds.point(0)[255], 1.0);
        assert_eq!(parse_cifar100(&bytes, 100).unwrap().len(), 5);
    }

    #[test]
    fn cifar_errors() {
        let bytes = cifar_bytes(&[0, 1]);
        assert!(matches!(parse_cifar100(&bytes[..bytes.len() - 1], 10), Err(DataError::CifarFormat(_))));
        assert!(matches!(parse_cifar100(&bytes, 0), Err(DataError::CifarClasses(0))));
        assert!(matches!(parse_cifar100(&bytes, 101), Err(DataError::CifarClasses(101))));
    }

    #[test]
    fn synthetic_shape_and_determinism() {
        let spec = SyntheticSpec { seed: 7, ..Default::default() };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1000);
        assert_eq!(a.n_classes(), 10);
        let counts = a.class_counts();
        assert_eq!(counts.iter().sum::<usize>(), 1000);
        assert!(counts.iter().all(|&c| (50..150).contains(&c)), "{counts:?}");
        assert!(counts.iter().min() != counts.iter().max());

        let tiny = generate_synthetic(&SyntheticSpec { n_classes: 2, n_points: 2, ..spec }).unwrap();
        assert_eq!(tiny.len(), 2);
        assert_eq!(tiny.class_counts().iter().sum::<usize>(), 2);
    }

    #[test]
    fn synthetic_spec_validation() {
        let bad = SyntheticSpec { n_classes: 1, ..Default::default() };
        assert!(generate_synthetic(&bad).is_err());
        let bad = SyntheticSpec { n_points: 3, n_classes: 4, ..Default::default() };
        assert!(generate_synthetic(&bad).is_err());
        let bad = SyntheticSpec { sigma: 0.0, ..Default::default() };
        assert!(generate_synthetic(&bad).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(seed in 0u64..1000, n in 2usize..40, k in 2usize..5) {
            let spec = SyntheticSpec { n_classes: k, n_points: n.max(k), seed, ..Default::default() };
            let ds = generate_synthetic(&spec).unwrap();
            let mut buf = Vec::new();
            ds.write_csv(&mut buf).unwrap();
            let back = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), ds.len());
            for i in 0..ds.len() {
                prop_assert_eq!(back.point(i), ds.point(i));
                prop_assert_eq!(&back.class_names()[back.label(i)], &ds.class_names()[ds.label(i)]);
            }
            prop_assert_eq!(back.class_counts().iter().sum::<usize>(), ds.len());
        }
    }
}
