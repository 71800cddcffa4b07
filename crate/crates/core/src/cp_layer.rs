//! Contrastive projection layer.
//!
//! Each head owns a random projection `R_h`, the Gram matrix of its random
//! features and the per-class sums of those features. After every task the
//! cross matrix is rebuilt as `H_h = (M·N)_h · P̃` from the sums and the
//! current target prototypes, and the projection `W_h = (G_h + λI)⁻¹·H_h`
//! is re-solved. The Gram matrices and sums only ever grow by exact
//! addition; data from earlier tasks is never revisited.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::analytic::{self, RPMatrix};
use crate::error::{Error, Result};
use crate::linalg;
use crate::repulsion::{self, TargetPrototypes};
use crate::stats::{self, ClassStats};

/// Rows pushed through a head at once, bounding peak memory at `CHUNK × D`.
const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct CPHead {
    pub rp: RPMatrix,
    pub gram: DMatrix<f64>,
    /// Per-class sums of random features, `m_c · n_c`.
    pub proto_sums: BTreeMap<u32, DVector<f64>>,
    /// `D × d`, present once the head has been solved.
    pub weights: Option<DMatrix<f64>>,
}

impl CPHead {
    pub fn new(input_dim: usize, rp_dim: usize, seed: u64) -> Self {
        Self {
            rp: analytic::random_projection(input_dim, rp_dim, seed),
            gram: DMatrix::zeros(rp_dim, rp_dim),
            proto_sums: BTreeMap::new(),
            weights: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.rp.seed
    }

    /// `M·N` with columns in ascending class order.
    pub fn sums_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rp.output_dim(), self.proto_sums.len());
        for (k, sum) in self.proto_sums.values().enumerate() {
            m.set_column(k, sum);
        }
        m
    }

    /// Random-space prototype `m_c`.
    pub fn prototype(&self, class: u32, count: u64) -> Option<DVector<f64>> {
        self.proto_sums.get(&class).map(|s| s / count as f64)
    }

    fn project_rows(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let w = self.weights.as_ref().ok_or(Error::NotFitted)?;
        let mut out = DMatrix::zeros(x.nrows(), w.ncols());
        for start in (0..x.nrows()).step_by(CHUNK) {
            let rows = CHUNK.min(x.nrows() - start);
            let z = analytic::project(&self.rp, &x.rows(start, rows).into_owned())?;
            out.rows_mut(start, rows).copy_from(&(z * w));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CPConfig {
    pub rp_dim: usize,
    pub heads: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub eps_scale: f64,
    pub use_repulsion: bool,
    /// Head `h` uses seed `base_seed + h`.
    pub base_seed: u64,
}

impl Default for CPConfig {
    fn default() -> Self {
        Self {
            rp_dim: 5000,
            heads: 3,
            lambda: analytic::DEFAULT_LAMBDA,
            alpha: 1.0,
            eps_scale: stats::DEFAULT_EPS_SCALE,
            use_repulsion: true,
            base_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CPState {
    pub heads: Vec<CPHead>,
    pub lambda: f64,
    pub alpha: f64,
    pub eps_scale: f64,
    pub use_repulsion: bool,
    /// Shared by every head; rebuilt from the class statistics each task.
    pub prototypes: Option<TargetPrototypes>,
}

impl CPState {
    pub fn new(input_dim: usize, config: &CPConfig) -> Result<Self> {
        if config.heads == 0 || config.rp_dim == 0 || input_dim == 0 {
            return Err(Error::InvalidConfig(
                "CP layer needs at least one head and positive dimensions".into(),
            ));
        }
        let heads = (0..config.heads)
            .map(|h| CPHead::new(input_dim, config.rp_dim, config.base_seed + h as u64))
            .collect();
        Ok(Self {
            heads,
            lambda: config.lambda,
            alpha: config.alpha,
            eps_scale: config.eps_scale,
            use_repulsion: config.use_repulsion,
            prototypes: None,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.heads[0].rp.input_dim()
    }

    pub fn rp_dim(&self) -> usize {
        self.heads[0].rp.output_dim()
    }

    pub fn is_fitted(&self) -> bool {
        self.heads.iter().all(|h| h.weights.is_some()) && self.prototypes.is_some()
    }

    /// Target prototypes for the current class statistics.
    pub fn target_prototypes(&self, stats: &ClassStats) -> Result<TargetPrototypes> {
        let whitener = stats::make_whitener(stats, self.eps_scale)?;
        if self.use_repulsion && stats.num_classes() >= 2 {
            repulsion::separate_prototypes(stats, &whitener, self.alpha)
        } else {
            repulsion::unseparated_prototypes(stats, &whitener)
        }
    }

    /// Folds one task into every head and re-solves all projections.
    ///
    /// `stats` must already include this task. On error the state is left
    /// exactly as it was.
    pub fn update(&mut self, x: &DMatrix<f64>, labels: &[u32], stats: &ClassStats) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        if x.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                found: labels.len(),
            });
        }
        let task_classes = linalg::distinct_labels(labels);
        if let Some(&c) = task_classes.iter().find(|&&c| !stats.contains(c)) {
            return Err(Error::StatsOutOfSync(c));
        }
        let prototypes = self.target_prototypes(stats)?;
        let lambda = self.lambda;

        let updated: Vec<(DMatrix<f64>, BTreeMap<u32, DVector<f64>>, DMatrix<f64>)> = self
            .heads
            .par_iter()
            .map(|head| {
                let mut gram = head.gram.clone();
                let mut sums = head.proto_sums.clone();
                for start in (0..x.nrows()).step_by(CHUNK) {
                    let rows = CHUNK.min(x.nrows() - start);
                    let z = analytic::project(&head.rp, &x.rows(start, rows).into_owned())?;
                    gram += z.tr_mul(&z);
                    let chunk_labels = &labels[start..start + rows];
                    for (c, sum, _) in linalg::class_row_sums(&z, chunk_labels, &task_classes) {
                        *sums.entry(c).or_insert_with(|| DVector::zeros(z.ncols())) += sum;
                    }
                }
                let cross = prototype_cross(&sums, &prototypes)?;
                let weights = analytic::ridge_solve(&gram, &cross, lambda)?;
                Ok((gram, sums, weights))
            })
            .collect::<Result<_>>()?;

        for (head, (gram, sums, weights)) in self.heads.iter_mut().zip(updated) {
            head.gram = gram;
            head.proto_sums = sums;
            head.weights = Some(weights);
        }
        self.prototypes = Some(prototypes);
        Ok(())
    }

    /// Head-averaged projection `(1/H)·Σ_h GELU(X·R_h)·W_h`, one row per
    /// input row, in the `d`-dimensional prototype space.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if !self.is_fitted() {
            return Err(Error::NotFitted);
        }
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        let outputs: Vec<DMatrix<f64>> = self
            .heads
            .par_iter()
            .map(|h| h.project_rows(x))
            .collect::<Result<_>>()?;
        let mut mean = DMatrix::zeros(x.nrows(), self.input_dim());
        for u in &outputs {
            mean += u;
        }
        Ok(mean / self.heads.len() as f64)
    }
}

/// `H = (M·N)·P̃` restricted to the classes this head has seen.
fn prototype_cross(sums: &BTreeMap<u32, DVector<f64>>, prototypes: &TargetPrototypes) -> Result<DMatrix<f64>> {
    let dim = sums.values().next().map_or(0, |s| s.len());
    let mut cross = DMatrix::zeros(dim, prototypes.dim());
    for (&c, sum) in sums {
        let row = prototypes.index_of(c).ok_or(Error::StatsOutOfSync(c))?;
        cross += sum * prototypes.prototypes.row(row);
    }
    Ok(cross)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::StandardNormal;

    fn config(heads: usize, lambda: f64) -> CPConfig {
        CPConfig {
            rp_dim: 40,
            heads,
            lambda,
            alpha: 1.0,
            eps_scale: 1e-4,
            use_repulsion: true,
            base_seed: 5,
        }
    }

    fn blobs(rng: &mut ChaCha20Rng, classes: &[u32], per_class: usize, d: usize) -> (DMatrix<f64>, Vec<u32>) {
        let mut x = DMatrix::zeros(classes.len() * per_class, d);
        let mut y = Vec::new();
        for (k, &c) in classes.iter().enumerate() {
            let center: Vec<f64> = (0..d).map(|j| ((c as usize * 7 + j * 3) % 5) as f64 - 2.0).collect();
            for s in 0..per_class {
                for j in 0..d {
                    x[(k * per_class + s, j)] = center[j] + 0.3 * rng.sample::<f64, _>(StandardNormal);
                }
                y.push(c);
            }
        }
        (x, y)
    }

    fn fit(tasks: &[(DMatrix<f64>, Vec<u32>)], cfg: &CPConfig, d: usize) -> (CPState, ClassStats) {
        let mut stats = ClassStats::new(d);
        let mut cp = CPState::new(d, cfg).unwrap();
        for (x, y) in tasks {
            stats.update(x, y).unwrap();
            cp.update(x, y, &stats).unwrap();
        }
        (cp, stats)
    }

    #[test]
    fn single_class_maps_onto_its_prototype() {
        let d = 3;
        let v = [0.5, -1.0, 2.0];
        let x = DMatrix::from_fn(20, d, |_, j| v[j]);
        let y = vec![0u32; 20];
        let (cp, _) = fit(&[(x, y)], &config(1, 1e-8), d);
        let u = cp.transform(&DMatrix::from_row_slice(1, d, &v)).unwrap();
        let target = cp.prototypes.as_ref().unwrap().prototypes.row(0).into_owned();
        assert!((u.row(0) - &target).norm() < 1e-5, "{} vs {}", u.row(0), target);

        // with a strong ridge the output shrinks towards zero instead
        let x = DMatrix::from_fn(20, d, |_, j| v[j]);
        let (cp, _) = fit(&[(x, vec![0u32; 20])], &config(1, 1e6), d);
        let u = cp.transform(&DMatrix::from_row_slice(1, d, &v)).unwrap();
        assert!(u.row(0).norm() < target.norm());
    }

    #[test]
    fn sequential_tasks_match_concatenation() {
        let d = 4;
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let t1 = blobs(&mut rng, &[0, 1], 15, d);
        let t2 = blobs(&mut rng, &[2, 3, 4], 10, d);
        let (seq, _) = fit(&[t1.clone(), t2.clone()], &config(2, 1.0), d);

        let x = DMatrix::from_fn(60, d, |i, j| if i < 30 { t1.0[(i, j)] } else { t2.0[(i - 30, j)] });
        let y: Vec<u32> = t1.1.iter().chain(&t2.1).copied().collect();
        let (joint, _) = fit(&[(x, y)], &config(2, 1.0), d);

        for (a, b) in seq.heads.iter().zip(&joint.heads) {
            assert!(linalg::frobenius_rel_diff(&a.gram, &b.gram) < 1e-10);
            assert!(linalg::frobenius_rel_diff(&a.sums_matrix(), &b.sums_matrix()) < 1e-10);
            let (wa, wb) = (a.weights.as_ref().unwrap(), b.weights.as_ref().unwrap());
            assert!(linalg::frobenius_rel_diff(wa, wb) < 1e-8);
        }
    }

    #[test]
    fn heads_differ_but_share_targets() {
        let d = 4;
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (cp, _) = fit(&[blobs(&mut rng, &[0, 1, 2], 10, d)], &config(3, 1.0), d);
        let w: Vec<_> = cp.heads.iter().map(|h| h.weights.clone().unwrap()).collect();
        assert_ne!(w[0], w[1]);
        assert_ne!(w[1], w[2]);
        assert!(w.iter().all(|m| m.shape() == (40, d)));
        let seeds: Vec<u64> = cp.heads.iter().map(CPHead::seed).collect();
        assert_eq!(seeds, vec![5, 6, 7]);
    }

    #[test]
    fn one_head_transform_is_that_head() {
        let d = 3;
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (x, y) = blobs(&mut rng, &[0, 1], 8, d);
        let (cp, _) = fit(&[(x.clone(), y)], &config(1, 1.0), d);
        let head = &cp.heads[0];
        let direct = analytic::project(&head.rp, &x).unwrap() * head.weights.as_ref().unwrap();
        assert!((cp.transform(&x).unwrap() - direct).amax() < 1e-12);
    }

    #[test]
    fn transform_is_row_wise() {
        let d = 3;
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let (x, y) = blobs(&mut rng, &[0, 1], 8, d);
        let (cp, _) = fit(&[(x.clone(), y)], &config(2, 1.0), d);
        let dup = DMatrix::from_fn(2, d, |_, j| x[(3, j)]);
        let u = cp.transform(&dup).unwrap();
        assert_eq!(u.row(0), u.row(1));
    }

    #[test]
    fn class_outputs_land_nearest_their_prototype() {
        let d = 6;
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let classes = [0, 1, 2, 3];
        let (x, y) = blobs(&mut rng, &classes, 30, d);
        let (cp, _) = fit(&[(x.clone(), y.clone())], &config(2, 1e-2), d);
        let protos = &cp.prototypes.as_ref().unwrap().prototypes;
        let u = cp.transform(&x).unwrap();
        for (k, &c) in classes.iter().enumerate() {
            let rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
            let mut mean = DVector::zeros(d);
            for &i in &rows {
                mean += u.row(i).transpose();
            }
            mean /= rows.len() as f64;
            let nearest = (0..protos.nrows())
                .min_by(|&a, &b| {
                    let da = (protos.row(a).transpose() - &mean).norm();
                    let db = (protos.row(b).transpose() - &mean).norm();
                    da.total_cmp(&db)
                })
                .unwrap();
            assert_eq!(nearest, k);
        }
    }

    #[test]
    fn earlier_class_sums_are_untouched() {
        let d = 4;
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let t1 = blobs(&mut rng, &[0, 1], 10, d);
        let t2 = blobs(&mut rng, &[2], 10, d);
        let mut stats = ClassStats::new(d);
        let mut cp = CPState::new(d, &config(2, 1.0)).unwrap();
        stats.update(&t1.0, &t1.1).unwrap();
        cp.update(&t1.0, &t1.1, &stats).unwrap();
        let snapshot: Vec<_> = cp.heads.iter().map(|h| h.proto_sums.clone()).collect();
        stats.update(&t2.0, &t2.1).unwrap();
        cp.update(&t2.0, &t2.1, &stats).unwrap();
        for (head, old) in cp.heads.iter().zip(&snapshot) {
            for (c, sum) in old {
                assert_eq!(&head.proto_sums[c], sum);
            }
        }
    }

    #[test]
    fn factorized_cross_matches_per_sample_targets() {
        let d = 3;
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let (x, y) = blobs(&mut rng, &[0, 1, 2], 6, d);
        let (cp, _) = fit(&[(x.clone(), y.clone())], &config(1, 1.0), d);
        let head = &cp.heads[0];
        let protos = cp.prototypes.as_ref().unwrap();
        let z = analytic::project(&head.rp, &x).unwrap();
        let t = DMatrix::from_fn(y.len(), d, |i, j| protos.prototypes[(protos.index_of(y[i]).unwrap(), j)]);
        let direct = z.tr_mul(&t);
        let factored = prototype_cross(&head.proto_sums, protos).unwrap();
        assert!(linalg::frobenius_rel_diff(&direct, &factored) < 1e-12);
    }

    #[test]
    fn update_requires_synced_stats() {
        let d = 2;
        let stats = ClassStats::new(d);
        let mut cp = CPState::new(d, &config(1, 1.0)).unwrap();
        let before = cp.clone();
        let x = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert!(matches!(cp.update(&x, &[3], &stats), Err(Error::StatsOutOfSync(3))));
        assert_eq!(cp, before);
        assert!(matches!(cp.transform(&x), Err(Error::NotFitted)));
    }
}
