//! Incremental class means, counts and the shared within-class covariance,
//! plus the whitening transform built from it.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Eigenvalues of the regularized covariance are clamped to at least this
/// before taking square roots.
pub const EIGEN_FLOOR: f64 = 1e-12;

pub const DEFAULT_EPS_SCALE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct ClassEntry {
    pub sum: DVector<f64>,
    pub count: u64,
}

impl ClassEntry {
    pub fn mean(&self) -> DVector<f64> {
        &self.sum / self.count as f64
    }
}

/// Running per-class sums/counts and the pooled within-class covariance
/// (population normalization, `1/N`).
#[derive(Clone, Debug, PartialEq)]
pub struct ClassStats {
    dim: usize,
    classes: BTreeMap<u32, ClassEntry>,
    shared_cov: DMatrix<f64>,
    total_count: u64,
}

impl ClassStats {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            classes: BTreeMap::new(),
            shared_cov: DMatrix::zeros(dim, dim),
            total_count: 0,
        }
    }

    /// Reassembles statistics from stored parts (checkpoint restore).
    pub fn from_parts(
        dim: usize,
        classes: BTreeMap<u32, ClassEntry>,
        shared_cov: DMatrix<f64>,
    ) -> Result<Self> {
        if shared_cov.nrows() != dim || shared_cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: shared_cov.nrows(),
            });
        }
        if let Some(e) = classes.values().find(|e| e.sum.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: e.sum.len(),
            });
        }
        let total_count = classes.values().map(|e| e.count).sum();
        Ok(Self {
            dim,
            classes,
            shared_cov,
            total_count,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    pub fn shared_cov(&self) -> &DMatrix<f64> {
        &self.shared_cov
    }

    pub fn entries(&self) -> &BTreeMap<u32, ClassEntry> {
        &self.classes
    }

    /// Seen class ids in ascending order.
    pub fn class_ids(&self) -> Vec<u32> {
        self.classes.keys().copied().collect()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn contains(&self, class: u32) -> bool {
        self.classes.contains_key(&class)
    }

    pub fn count(&self, class: u32) -> Option<u64> {
        self.classes.get(&class).map(|e| e.count)
    }

    pub fn mean(&self, class: u32) -> Option<DVector<f64>> {
        self.classes.get(&class).map(ClassEntry::mean)
    }

    /// Class means as columns (`d × C`), ascending class id.
    pub fn means_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.classes.len());
        for (k, entry) in self.classes.values().enumerate() {
            m.set_column(k, &entry.mean());
        }
        m
    }

    /// Folds one task's samples (rows of `x`) into the statistics.
    ///
    /// The covariance follows
    /// `Σ_t = (N_{t-1}/N_t)·Σ_{t-1} + (1/N_t)·Σ_c Σ_{i∈c} (x_i − μ_c)(x_i − μ_c)ᵀ`
    /// with `μ_c` the mean of class `c` within this task. A class seen before
    /// also contributes the pooled-scatter correction
    /// `n_old·n_new/(n_old+n_new)·(μ_old − μ_c)(μ_old − μ_c)ᵀ`, so any split
    /// of the data reproduces the one-shot within-class covariance.
    pub fn update(&mut self, x: &DMatrix<f64>, labels: &[u32]) -> Result<()> {
        if x.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.ncols(),
            });
        }
        if x.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                found: labels.len(),
            });
        }
        if labels.is_empty() {
            return Ok(());
        }
        let task_classes = linalg::distinct_labels(labels);
        let sums = linalg::class_row_sums(x, labels, &task_classes);

        let mut centered = x.clone();
        let task_means: BTreeMap<u32, DVector<f64>> = sums
            .iter()
            .map(|(c, sum, n)| (*c, sum / *n as f64))
            .collect();
        for (i, y) in labels.iter().enumerate() {
            let mu = &task_means[y];
            let mut row = centered.row_mut(i);
            row -= mu.transpose();
        }
        let mut scatter = centered.tr_mul(&centered);

        for (c, sum, n) in &sums {
            if let Some(old) = self.classes.get(c) {
                let (n_old, n_new) = (old.count as f64, *n as f64);
                let diff = old.mean() - &task_means[c];
                scatter += (&diff * diff.transpose()) * (n_old * n_new / (n_old + n_new));
            }
            let entry = self.classes.entry(*c).or_insert_with(|| ClassEntry {
                sum: DVector::zeros(self.dim),
                count: 0,
            });
            entry.sum += sum;
            entry.count += n;
        }

        let prev = self.total_count as f64;
        self.total_count += labels.len() as u64;
        let now = self.total_count as f64;
        let mut cov = &self.shared_cov * (prev / now) + scatter / now;
        cov = (&cov + cov.transpose()) * 0.5;
        self.shared_cov = cov;
        Ok(())
    }

    /// Absolute shrinkage `eps_scale · trace(Σ)/d`.
    pub fn shrinkage(&self, eps_scale: f64) -> f64 {
        eps_scale * self.shared_cov.trace() / self.dim as f64
    }
}

/// `Σ^{-1/2}` and `Σ^{1/2}` of the regularized shared covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct WhitenTransform {
    pub forward: DMatrix<f64>,
    pub backward: DMatrix<f64>,
    pub eps: f64,
}

impl WhitenTransform {
    /// Builds the transform for `cov + εI`, `ε = eps_scale·trace(cov)/d`.
    pub fn from_covariance(cov: &DMatrix<f64>, eps_scale: f64) -> Result<Self> {
        let d = cov.nrows();
        let eps = eps_scale * cov.trace() / d as f64;
        let reg = cov + DMatrix::identity(d, d) * eps;
        let eig = linalg::sym_eigen(&reg)?;
        let forward = linalg::eig_reconstruct(&eig, |l| l.max(EIGEN_FLOOR).powf(-0.5));
        let backward = linalg::eig_reconstruct(&eig, |l| l.max(EIGEN_FLOOR).sqrt());
        Ok(Self {
            forward,
            backward,
            eps,
        })
    }

    /// Whitens column vectors.
    pub fn whiten(&self, columns: &DMatrix<f64>) -> DMatrix<f64> {
        &self.forward * columns
    }

    pub fn dewhiten(&self, columns: &DMatrix<f64>) -> DMatrix<f64> {
        &self.backward * columns
    }
}

pub fn make_whitener(stats: &ClassStats, eps_scale: f64) -> Result<WhitenTransform> {
    if stats.total_count() == 0 {
        return Err(Error::NotFitted);
    }
    WhitenTransform::from_covariance(stats.shared_cov(), eps_scale)
}
