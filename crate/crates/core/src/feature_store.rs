//! Feature files, task streams and the synthetic Gaussian-mixture generator.
//!
//! On-disk layout of a feature file (all integers little-endian):
//!
//! ```text
//! "FEAT" | version: u8 | N: u32 | d: u32 | C: u32 | N·d f32 (row-major) | N u32 labels
//! ```
//!
//! A feature directory holds `train.feat`, `test.feat` and a `manifest.json`
//! sidecar carrying class names, dataset and source-model names, and the
//! SHA-256 checksum of each feature file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"FEAT";
pub const FEATURE_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 4 * 3;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAIN_FILE: &str = "train.feat";
pub const TEST_FILE: &str = "test.feat";

/// Labeled feature vectors: `N` rows of dimension `d`, stored as `f32`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureDataset {
    dim: usize,
    num_classes: u32,
    features: Vec<f32>,
    labels: Vec<u32>,
    pub class_names: Option<Vec<String>>,
}

impl FeatureDataset {
    pub fn new(features: Vec<f32>, labels: Vec<u32>, dim: usize, num_classes: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDataset("feature dimension must be positive".into()));
        }
        if labels.is_empty() {
            return Err(Error::InvalidDataset("dataset has no samples".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::InvalidDataset(format!(
                "{} feature values do not form {} rows of dimension {}",
                features.len(),
                labels.len(),
                dim
            )));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::LabelOutOfRange { label, num_classes });
        }
        Ok(Self {
            dim,
            num_classes,
            features,
            labels,
            class_names: None,
        })
    }

    /// Builds a dataset from a 64-bit matrix, narrowing to `f32`.
    pub fn from_matrix(x: &DMatrix<f64>, labels: Vec<u32>, num_classes: u32) -> Result<Self> {
        let mut features = Vec::with_capacity(x.len());
        for row in x.row_iter() {
            features.extend(row.iter().map(|&v| v as f32));
        }
        Self::new(features, labels, x.ncols(), num_classes)
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

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Features widened to `f64`, one sample per row.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(
            self.len(),
            self.dim,
            self.features.iter().map(|&v| f64::from(v)),
        )
    }

    /// Rows whose label is in `classes`, in original order. May be empty,
    /// unlike a dataset built through [`FeatureDataset::new`].
    pub fn select_classes(&self, classes: &[u32]) -> FeatureDataset {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| classes.contains(&self.labels[i]))
            .collect();
        self.select_rows(&keep)
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureDataset {
        let mut features = Vec::with_capacity(rows.len() * self.dim);
        let mut labels = Vec::with_capacity(rows.len());
        for &i in rows {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        FeatureDataset {
            dim: self.dim,
            num_classes: self.num_classes,
            features,
            labels,
            class_names: self.class_names.clone(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.features.len() * 4 + self.labels.len() * 4);
        out.extend_from_slice(FEATURE_MAGIC);
        out.push(FEATURE_VERSION);
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&self.num_classes.to_le_bytes());
        for v in &self.features {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for l in &self.labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() >= 4 && &bytes[..4] != FEATURE_MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::TruncatedFile {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        if bytes[4] != FEATURE_VERSION {
            return Err(Error::UnsupportedVersion(bytes[4]));
        }
        let read_u32 = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let n = read_u32(5) as usize;
        let dim = read_u32(9) as usize;
        let num_classes = read_u32(13);
        let expected = HEADER_LEN + n * dim * 4 + n * 4;
        if bytes.len() < expected {
            return Err(Error::TruncatedFile {
                expected,
                found: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(Error::TrailingBytes(bytes.len() - expected));
        }
        let payload = &bytes[HEADER_LEN..];
        let (feat_bytes, label_bytes) = payload.split_at(n * dim * 4);
        let features = feat_bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let labels = label_bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(features, labels, dim, num_classes)
    }
}

pub fn save_feature_file(path: impl AsRef<Path>, data: &FeatureDataset) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, data.encode()).map_err(|e| Error::io(path, e))
}

pub fn load_feature_file(path: impl AsRef<Path>) -> Result<FeatureDataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    FeatureDataset::decode(&bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub samples: u32,
    pub dim: u32,
    pub sha256: String,
}

/// Sidecar JSON describing a feature directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset: String,
    pub source_model: String,
    pub class_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocessing: Option<String>,
    /// Keyed by split name (`train`, `test`).
    pub files: BTreeMap<String, ManifestFile>,
}

/// Writes `train.feat`, `test.feat` and `manifest.json` into `dir`.
pub fn write_feature_dir(
    dir: impl AsRef<Path>,
    train: &FeatureDataset,
    test: &FeatureDataset,
    dataset: &str,
    source_model: &str,
) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let class_names = train
        .class_names
        .clone()
        .unwrap_or_else(|| (0..train.num_classes()).map(|c| format!("class_{c}")).collect());
    let mut files = BTreeMap::new();
    for (split, data, name) in [("train", train, TRAIN_FILE), ("test", test, TEST_FILE)] {
        let bytes = data.encode();
        let path = dir.join(name);
        fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        files.insert(
            split.to_string(),
            ManifestFile {
                path: name.to_string(),
                samples: data.len() as u32,
                dim: data.dim() as u32,
                sha256: sha256_hex(&bytes),
            },
        );
    }
    let manifest = Manifest {
        dataset: dataset.to_string(),
        source_model: source_model.to_string(),
        class_names,
        preprocessing: None,
        files,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path, source })
}

/// Loads one split of a feature directory, verifying its checksum and
/// attaching class names from the manifest.
pub fn load_split(dir: impl AsRef<Path>, manifest: &Manifest, split: &str) -> Result<FeatureDataset> {
    let entry = manifest
        .files
        .get(split)
        .ok_or_else(|| Error::Manifest(format!("manifest has no '{split}' split")))?;
    let path: PathBuf = dir.as_ref().join(&entry.path);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let digest = sha256_hex(&bytes);
    if digest != entry.sha256 {
        return Err(Error::Manifest(format!(
            "checksum mismatch for {}: manifest {}, file {}",
            path.display(),
            entry.sha256,
            digest
        )));
    }
    let mut data = FeatureDataset::decode(&bytes)?;
    if data.num_classes() as usize != manifest.class_names.len() {
        return Err(Error::Manifest(format!(
            "{} declares {} classes but manifest lists {} names",
            path.display(),
            data.num_classes(),
            manifest.class_names.len()
        )));
    }
    data.class_names = Some(manifest.class_names.clone());
    Ok(data)
}

pub fn load_feature_dir(dir: impl AsRef<Path>) -> Result<(FeatureDataset, FeatureDataset, Manifest)> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let train = load_split(dir, &manifest, "train")?;
    let test = load_split(dir, &manifest, "test")?;
    if train.dim() != test.dim() || train.num_classes() != test.num_classes() {
        return Err(Error::Manifest("train and test splits disagree on shape".into()));
    }
    Ok((train, test, manifest))
}

/// One step of a class-incremental stream.
#[derive(Clone, Debug, PartialEq)]
pub struct Task {
    pub classes: Vec<u32>,
    pub train: FeatureDataset,
    pub test: FeatureDataset,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskStream {
    pub tasks: Vec<Task>,
    pub seed: u64,
}

impl TaskStream {
    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn dim(&self) -> usize {
        self.tasks[0].train.dim()
    }

    pub fn all_classes(&self) -> Vec<u32> {
        let mut all: Vec<u32> = self.tasks.iter().flat_map(|t| t.classes.iter().copied()).collect();
        all.sort_unstable();
        all
    }
}

/// Seeded class-to-task assignment: shuffle classes, then cut into
/// `num_tasks` contiguous groups of `C / num_tasks`; leftover classes go to
/// the last task.
pub fn class_partition(num_classes: usize, num_tasks: usize, seed: u64) -> Result<Vec<Vec<u32>>> {
    if num_tasks == 0 || num_tasks > num_classes {
        return Err(Error::TooManyTasks {
            tasks: num_tasks,
            classes: num_classes,
        });
    }
    let mut order: Vec<u32> = (0..num_classes as u32).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let per_task = num_classes / num_tasks;
    let mut groups: Vec<Vec<u32>> = (0..num_tasks)
        .map(|t| order[t * per_task..(t + 1) * per_task].to_vec())
        .collect();
    groups
        .last_mut()
        .unwrap()
        .extend_from_slice(&order[num_tasks * per_task..]);
    Ok(groups)
}

pub fn make_task_stream(
    train: &FeatureDataset,
    test: &FeatureDataset,
    num_tasks: usize,
    seed: u64,
) -> Result<TaskStream> {
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            found: test.dim(),
        });
    }
    let groups = class_partition(train.num_classes() as usize, num_tasks, seed)?;
    let tasks = groups
        .into_iter()
        .map(|classes| Task {
            train: train.select_classes(&classes),
            test: test.select_classes(&classes),
            classes,
        })
        .collect();
    Ok(TaskStream { tasks, seed })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CovarianceKind {
    Identity,
    /// `QΛQᵀ` with log-uniform eigenvalues spanning a condition number of
    /// `condition`, rescaled to unit mean eigenvalue.
    RandomSpd { condition: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MeanLayout {
    /// Independent class means with expected norm `mean_scale`.
    Isotropic,
    /// Class `c` sits near cluster center `c % clusters`; offsets from the
    /// center have expected norm `spread`.
    Clustered { clusters: usize, spread: f64 },
}

/// Parameters of the synthetic Gaussian-mixture benchmark.
///
/// Noise has unit average variance, so `mean_scale` reads as mean norm in
/// noise standard deviations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub dim: usize,
    pub num_classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub mean_scale: f64,
    pub covariance: CovarianceKind,
    pub layout: MeanLayout,
    pub seed: u64,
}

/// The desk-scale benchmark: 20 classes in 64 dimensions with anisotropic
/// noise of condition number 10.
impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            dim: 64,
            num_classes: 20,
            train_per_class: 100,
            test_per_class: 100,
            mean_scale: 4.0,
            covariance: CovarianceKind::RandomSpd { condition: 10.0 },
            layout: MeanLayout::Isotropic,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.dim < 2 {
            return bad("dimension must be at least 2");
        }
        if self.num_classes < 2 {
            return bad("need at least 2 classes");
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return bad("samples per class must be at least 1");
        }
        if !(self.mean_scale.is_finite() && self.mean_scale >= 0.0) {
            return bad("mean_scale must be a non-negative number");
        }
        if let CovarianceKind::RandomSpd { condition } = self.covariance {
            if !(condition.is_finite() && condition >= 1.0) {
                return bad("condition bound must be at least 1");
            }
        }
        if let MeanLayout::Clustered { clusters, spread } = self.layout {
            if clusters == 0 || !(spread.is_finite() && spread >= 0.0) {
                return bad("clustered layout needs clusters >= 1 and spread >= 0");
            }
        }
        Ok(())
    }
}

/// Generating parameters, for Bayes-rule oracles in tests.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    /// Row `c` is the mean of class `c`.
    pub means: DMatrix<f64>,
    pub cov: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub train: FeatureDataset,
    pub test: FeatureDataset,
    pub truth: GroundTruth,
}

fn gaussian_vector(rng: &mut ChaCha20Rng, dim: usize) -> DVector<f64> {
    DVector::from_iterator(dim, (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

fn random_spd(rng: &mut ChaCha20Rng, dim: usize, condition: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let log_k = condition.ln();
    let mut eig: Vec<f64> = (0..dim).map(|_| (rng.random::<f64>() * log_k).exp()).collect();
    if dim >= 2 && condition > 1.0 {
        // pin the extremes so the condition number is exactly the bound
        eig[0] = 1.0;
        eig[1] = condition;
    }
    let mean = eig.iter().sum::<f64>() / dim as f64;
    let lambda = DVector::from_iterator(dim, eig.iter().map(|v| v / mean));
    let cov = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
    (&cov + cov.transpose()) * 0.5
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let d = spec.dim;
    let c = spec.num_classes;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let norm = (d as f64).sqrt();

    let mut means = DMatrix::zeros(c, d);
    match spec.layout {
        MeanLayout::Isotropic => {
            for k in 0..c {
                let v = gaussian_vector(&mut rng, d) * (spec.mean_scale / norm);
                means.row_mut(k).copy_from(&v.transpose());
            }
        }
        MeanLayout::Clustered { clusters, spread } => {
            let centers: Vec<DVector<f64>> = (0..clusters)
                .map(|_| gaussian_vector(&mut rng, d) * (spec.mean_scale / norm))
                .collect();
            for k in 0..c {
                let v = &centers[k % clusters] + gaussian_vector(&mut rng, d) * (spread / norm);
                means.row_mut(k).copy_from(&v.transpose());
            }
        }
    }

    let cov = match spec.covariance {
        CovarianceKind::Identity => DMatrix::identity(d, d),
        CovarianceKind::RandomSpd { condition } => random_spd(&mut rng, d, condition),
    };
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidSpec("covariance is not positive definite".into()))?
        .l();

    let draw = |per_class: usize, rng: &mut ChaCha20Rng| -> Result<FeatureDataset> {
        let mut x = DMatrix::zeros(c * per_class, d);
        let mut labels = Vec::with_capacity(c * per_class);
        for k in 0..c {
            for s in 0..per_class {
                let z = gaussian_vector(rng, d);
                let v = means.row(k).transpose() + &chol * z;
                x.row_mut(k * per_class + s).copy_from(&v.transpose());
                labels.push(k as u32);
            }
        }
        FeatureDataset::from_matrix(&x, labels, c as u32)
    };
    let train = draw(spec.train_per_class, &mut rng)?;
    let test = draw(spec.test_per_class, &mut rng)?;
    Ok(SyntheticData {
        train,
        test,
        truth: GroundTruth { means, cov },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FeatureDataset {
        FeatureDataset::new(
            (0..12).map(|v| v as f32 * 0.5 - 1.0).collect(),
            vec![0, 2, 1],
            4,
            3,
        )
        .unwrap()
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.feat");
        let data = small();
        save_feature_file(&path, &data).unwrap();
        let back = load_feature_file(&path).unwrap();
        assert_eq!(back, data);
        assert_eq!(fs::read(&path).unwrap(), back.encode());
    }

    #[test]
    fn altered_magic_is_rejected() {
        let mut bytes = small().encode();
        bytes[0] = b'X';
        assert!(matches!(FeatureDataset::decode(&bytes), Err(Error::BadMagic)));
    }

    #[test]
    fn short_payload_is_truncated() {
        let data = FeatureDataset::new(vec![0.0; 100 * 2], vec![0; 100], 2, 1).unwrap();
        let mut bytes = data.encode();
        bytes.truncate(HEADER_LEN + 50 * 2 * 4);
        assert!(matches!(
            FeatureDataset::decode(&bytes),
            Err(Error::TruncatedFile { .. })
        ));
        assert!(matches!(
            FeatureDataset::decode(&bytes[..7]),
            Err(Error::TruncatedFile { .. })
        ));
    }

    #[test]
    fn label_out_of_range() {
        let mut bytes = small().encode();
        let last = bytes.len() - 4;
        bytes[last..].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(
            FeatureDataset::decode(&bytes),
            Err(Error::LabelOutOfRange { label: 7, num_classes: 3 })
        ));
    }

    #[test]
    fn hundred_classes_ten_tasks() {
        let groups = class_partition(100, 10, 3).unwrap();
        assert_eq!(groups.len(), 10);
        assert!(groups.iter().all(|g| g.len() == 10));
        let mut all: Vec<u32> = groups.concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn remainder_classes_join_last_task() {
        let groups = class_partition(23, 5, 1).unwrap();
        let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![4, 4, 4, 4, 7]);
    }

    #[test]
    fn single_task_holds_everything() {
        let groups = class_partition(7, 1, 9).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].len(), 7);
    }

    #[test]
    fn too_many_tasks() {
        assert!(matches!(
            class_partition(4, 5, 0),
            Err(Error::TooManyTasks { tasks: 5, classes: 4 })
        ));
    }

    #[test]
    fn stream_is_seed_deterministic() {
        let spec = SynthSpec {
            dim: 4,
            num_classes: 6,
            train_per_class: 3,
            test_per_class: 2,
            ..SynthSpec::default()
        };
        let data = generate_synthetic(&spec).unwrap();
        let a = make_task_stream(&data.train, &data.test, 3, 11).unwrap();
        let b = make_task_stream(&data.train, &data.test, 3, 11).unwrap();
        assert_eq!(a, b);
        for task in &a.tasks {
            assert!(task.train.labels().iter().all(|l| task.classes.contains(l)));
            assert_eq!(task.train.len(), task.classes.len() * 3);
            assert_eq!(task.test.len(), task.classes.len() * 2);
        }
    }

    #[test]
    fn invalid_spec_rejected() {
        let spec = SynthSpec {
            dim: 0,
            ..SynthSpec::default()
        };
        assert!(matches!(generate_synthetic(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn random_spd_respects_condition_bound() {
        let spec = SynthSpec {
            dim: 8,
            covariance: CovarianceKind::RandomSpd { condition: 50.0 },
            ..SynthSpec::default()
        };
        let data = generate_synthetic(&spec).unwrap();
        let eig = data.truth.cov.clone().symmetric_eigen().eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        assert!(lo > 0.0);
        assert!((hi / lo - 50.0).abs() < 1e-6, "condition {}", hi / lo);
    }

    #[test]
    fn feature_dir_checksum_verified() {
        let dir = tempfile::tempdir().unwrap();
        let data = small();
        write_feature_dir(dir.path(), &data, &data, "toy", "none").unwrap();
        let (train, _, manifest) = load_feature_dir(dir.path()).unwrap();
        assert_eq!(train.features(), data.features());
        assert_eq!(manifest.class_names.len(), 3);

        let mut bytes = fs::read(dir.path().join(TEST_FILE)).unwrap();
        let at = HEADER_LEN;
        bytes[at] ^= 0x01;
        fs::write(dir.path().join(TEST_FILE), bytes).unwrap();
        assert!(matches!(load_feature_dir(dir.path()), Err(Error::Manifest(_))));
    }
}
