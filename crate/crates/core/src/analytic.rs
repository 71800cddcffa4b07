//! Closed-form building blocks: ridge solves, incremental Gram/cross
//! accumulation and the seeded random projection with GELU.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;

/// Identifies the generator behind every seeded matrix. Stored in
/// checkpoints; a mismatch on load means the seeds no longer reproduce the
/// same matrices.
pub const PRNG_ID: &str = "chacha20/rand_chacha-0.9/standard-normal-ziggurat/row-major/v1";

pub const DEFAULT_LAMBDA: f64 = 100.0;

/// Solves `(G + λI)·W = H` without forming an inverse.
///
/// Uses a Cholesky factorization; if that fails on a numerically
/// indefinite Gram matrix, falls back to a symmetric eigendecomposition.
pub fn ridge_solve(gram: &DMatrix<f64>, cross: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let n = gram.nrows();
    if gram.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: gram.ncols(),
        });
    }
    if cross.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cross.nrows(),
        });
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("ridge strength must be >= 0, got {lambda}")));
    }
    let mut system = (gram + gram.transpose()) * 0.5;
    for i in 0..n {
        system[(i, i)] += lambda;
    }

    if lambda == 0.0 {
        let eig = linalg::sym_eigen(&system)?;
        let max = eig.eigenvalues.amax();
        let tol = n as f64 * f64::EPSILON * max.max(f64::MIN_POSITIVE);
        if eig.eigenvalues.min() <= tol {
            return Err(Error::SingularSystem);
        }
    }

    if let Some(chol) = system.clone().cholesky() {
        return Ok(chol.solve(cross));
    }
    log::debug!("cholesky failed on {n}x{n} system, using eigendecomposition");
    let eig = linalg::sym_eigen(&system)?;
    let max = eig.eigenvalues.amax();
    let tol = n as f64 * f64::EPSILON * max.max(f64::MIN_POSITIVE);
    if eig.eigenvalues.iter().any(|&v| v <= tol) {
        return Err(Error::SingularSystem);
    }
    let v = &eig.eigenvectors;
    let mut projected = v.tr_mul(cross);
    for (i, mut row) in projected.row_iter_mut().enumerate() {
        row /= eig.eigenvalues[i];
    }
    Ok(v * projected)
}

/// Running `G = Σ ZᵀZ` and `H = Σ ZᵀT`, with `H` zero-padded on the right
/// whenever the target width grows.
#[derive(Clone, Debug, PartialEq)]
pub struct GramAccumulator {
    pub gram: DMatrix<f64>,
    pub cross: DMatrix<f64>,
    pub lambda: f64,
}

impl GramAccumulator {
    pub fn new(dim: usize, lambda: f64) -> Self {
        Self {
            gram: DMatrix::zeros(dim, dim),
            cross: DMatrix::zeros(dim, 0),
            lambda,
        }
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn width(&self) -> usize {
        self.cross.ncols()
    }

    pub fn accumulate(&mut self, z: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<()> {
        if z.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: z.ncols(),
            });
        }
        if targets.nrows() != z.nrows() {
            return Err(Error::DimensionMismatch {
                expected: z.nrows(),
                found: targets.nrows(),
            });
        }
        if targets.ncols() < self.width() {
            return Err(Error::ShrinkingTargets {
                current: self.width(),
                requested: targets.ncols(),
            });
        }
        self.pad_to(targets.ncols());
        self.gram += z.tr_mul(z);
        self.cross += z.tr_mul(targets);
        Ok(())
    }

    /// Grows `H` to `width` columns; new columns are zero.
    pub fn pad_to(&mut self, width: usize) {
        if width > self.width() {
            let cross = std::mem::replace(&mut self.cross, DMatrix::zeros(0, 0));
            self.cross = cross.resize_horizontally(width, 0.0);
        }
    }

    pub fn solve(&self) -> Result<DMatrix<f64>> {
        ridge_solve(&self.gram, &self.cross, self.lambda)
    }
}

/// Fixed `d × D` matrix of i.i.d. standard normal entries.
#[derive(Clone, Debug, PartialEq)]
pub struct RPMatrix {
    pub weights: DMatrix<f64>,
    pub seed: u64,
}

impl RPMatrix {
    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.ncols()
    }
}

pub fn random_projection(input_dim: usize, output_dim: usize, seed: u64) -> RPMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let weights = DMatrix::from_row_iterator(
        input_dim,
        output_dim,
        (0..input_dim * output_dim).map(|_| rng.sample::<f64, _>(StandardNormal)),
    );
    RPMatrix { weights, seed }
}

/// Exact GELU, `x·Φ(x)`.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2))
}

/// `GELU(X·R)`.
pub fn project(rp: &RPMatrix, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != rp.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: rp.input_dim(),
            found: x.ncols(),
        });
    }
    let mut z = linalg::row_blocked_mul(x, &rp.weights);
    z.apply(|v| *v = gelu(*v));
    Ok(z)
}

/// One-hot targets; column `k` corresponds to `classes[k]`.
pub fn one_hot(labels: &[u32], classes: &[u32]) -> Result<DMatrix<f64>> {
    let mut t = DMatrix::zeros(labels.len(), classes.len());
    for (i, y) in labels.iter().enumerate() {
        let k = classes
            .iter()
            .position(|c| c == y)
            .ok_or(Error::UnknownClass(*y))?;
        t[(i, k)] = 1.0;
    }
    Ok(t)
}
