//! Final-stage classifiers over CP outputs: nearest target prototype, and
//! an ELM rebuilt after every task from Gaussian pseudo-replay.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, RPMatrix};
use crate::cp_layer::CPState;
use crate::error::{Error, Result};
use crate::linalg;
use crate::repulsion::TargetPrototypes;
use crate::stats::{ClassStats, EIGEN_FLOOR};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NcmMetric {
    #[default]
    Euclidean,
    Cosine,
}

/// Row-wise argmax over `scores` (columns aligned with ascending `classes`),
/// optionally restricted to `allowed`. The first maximum wins, so exact ties
/// resolve to the lowest class id.
pub fn argmax_classes(scores: &DMatrix<f64>, classes: &[u32], allowed: Option<&[u32]>) -> Result<Vec<u32>> {
    let columns: Vec<usize> = match allowed {
        None => (0..classes.len()).collect(),
        Some(set) => {
            let mut cols = Vec::with_capacity(set.len());
            for c in set {
                cols.push(classes.binary_search(c).map_err(|_| Error::UnknownClass(*c))?);
            }
            cols.sort_unstable();
            cols
        }
    };
    if columns.is_empty() {
        return Err(Error::NotFitted);
    }
    Ok((0..scores.nrows())
        .map(|i| {
            let mut best = columns[0];
            for &k in &columns[1..] {
                if scores[(i, k)] > scores[(i, best)] {
                    best = k;
                }
            }
            classes[best]
        })
        .collect())
}

/// Similarity of each row of `u` to each prototype: negative squared
/// Euclidean distance, or cosine similarity.
pub fn ncm_scores(u: &DMatrix<f64>, prototypes: &TargetPrototypes, metric: NcmMetric) -> Result<DMatrix<f64>> {
    let p = &prototypes.prototypes;
    if u.ncols() != p.ncols() {
        return Err(Error::DimensionMismatch {
            expected: p.ncols(),
            found: u.ncols(),
        });
    }
    let mut scores = DMatrix::zeros(u.nrows(), p.nrows());
    for i in 0..u.nrows() {
        let row = u.row(i);
        for k in 0..p.nrows() {
            let proto = p.row(k);
            scores[(i, k)] = match metric {
                NcmMetric::Euclidean => -(row - proto).norm_squared(),
                NcmMetric::Cosine => {
                    let denom = row.norm() * proto.norm();
                    if denom > 0.0 {
                        row.dot(&proto) / denom
                    } else {
                        0.0
                    }
                }
            };
        }
    }
    Ok(scores)
}

/// Nearest target prototype per row; ties go to the lowest class id.
pub fn ncm_classify(u: &DMatrix<f64>, prototypes: &TargetPrototypes, metric: NcmMetric) -> Result<Vec<u32>> {
    let scores = ncm_scores(u, prototypes, metric)?;
    argmax_classes(&scores, &prototypes.classes, None)
}

/// Draws `x = μ_c + L·z` from the shared-covariance class Gaussians.
#[derive(Clone, Debug)]
pub struct ReplaySampler {
    means: BTreeMap<u32, DVector<f64>>,
    /// `L·Lᵀ = Σ + εI`.
    factor: DMatrix<f64>,
    pub per_class: usize,
    pub seed: u64,
}

impl ReplaySampler {
    pub fn new(stats: &ClassStats, eps_scale: f64, per_class: usize, seed: u64) -> Result<Self> {
        let d = stats.dim();
        let eps = stats.shrinkage(eps_scale);
        let reg = stats.shared_cov() + DMatrix::identity(d, d) * eps;
        let factor = match reg.clone().cholesky() {
            Some(chol) => chol.l(),
            // singular Σ (e.g. one sample per class): symmetric square root
            // with clamped eigenvalues
            None => {
                let eig = linalg::sym_eigen(&reg)?;
                linalg::eig_reconstruct(&eig, |l| l.max(EIGEN_FLOOR).sqrt())
            }
        };
        let means = stats.entries().iter().map(|(&c, e)| (c, e.mean())).collect();
        Ok(Self {
            means,
            factor,
            per_class,
            seed,
        })
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// `per_class` samples for each class in `classes`, grouped by class in
    /// the given order.
    pub fn sample(&self, classes: &[u32]) -> Result<(DMatrix<f64>, Vec<u32>)> {
        let d = self.factor.nrows();
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        let mut x = DMatrix::zeros(classes.len() * self.per_class, d);
        let mut labels = Vec::with_capacity(classes.len() * self.per_class);
        for (k, c) in classes.iter().enumerate() {
            let mu = self.means.get(c).ok_or(Error::UnknownClass(*c))?;
            for s in 0..self.per_class {
                let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let v = mu + &self.factor * z;
                x.row_mut(k * self.per_class + s).copy_from(&v.transpose());
                labels.push(*c);
            }
        }
        Ok((x, labels))
    }
}

/// Ridge classifier on random features of its input.
#[derive(Clone, Debug, PartialEq)]
pub struct ElmClassifier {
    pub rp: RPMatrix,
    /// `D × C`, columns in ascending class order.
    pub weights: DMatrix<f64>,
    pub classes: Vec<u32>,
    pub lambda: f64,
}

impl ElmClassifier {
    /// Fits on rows of `u` with one-hot targets over `classes`.
    pub fn fit(rp: RPMatrix, u: &DMatrix<f64>, labels: &[u32], classes: &[u32], lambda: f64) -> Result<Self> {
        let mut classes = classes.to_vec();
        classes.sort_unstable();
        classes.dedup();
        let z = analytic::project(&rp, u)?;
        let targets = analytic::one_hot(labels, &classes)?;
        let weights = analytic::ridge_solve(&z.tr_mul(&z), &z.tr_mul(&targets), lambda)?;
        Ok(Self {
            rp,
            weights,
            classes,
            lambda,
        })
    }

    pub fn scores(&self, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(analytic::project(&self.rp, u)? * &self.weights)
    }
}

pub fn elm_classify(elm: &ElmClassifier, u: &DMatrix<f64>) -> Result<Vec<u32>> {
    if elm.classes.is_empty() {
        return Err(Error::NotFitted);
    }
    let scores = elm.scores(u)?;
    argmax_classes(&scores, &elm.classes, None)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElmParams {
    pub replay_per_class: usize,
    pub lambda: f64,
    pub rp_dim: usize,
    pub rp_seed: u64,
    pub sample_seed: u64,
    pub eps_scale: f64,
}

/// Regenerates `R` pseudo-samples for every seen class, pushes them through
/// the current CP layer and fits a fresh ELM on the result. Nothing is
/// carried over from earlier classifiers.
pub fn rebuild_elm(cp: &CPState, stats: &ClassStats, params: &ElmParams) -> Result<ElmClassifier> {
    if !cp.is_fitted() {
        return Err(Error::NotFitted);
    }
    let classes = stats.class_ids();
    let sampler = ReplaySampler::new(stats, params.eps_scale, params.replay_per_class, params.sample_seed)?;
    let (generated, labels) = sampler.sample(&classes)?;
    let u = cp.transform(&generated)?;
    let rp = analytic::random_projection(cp.input_dim(), params.rp_dim, params.rp_seed);
    ElmClassifier::fit(rp, &u, &labels, &classes, params.lambda)
}
