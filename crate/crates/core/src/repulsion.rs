//! Negative repulsion: push whitened class means apart by perturbing the
//! singular values of the mean matrix, then map back to input geometry.
//!
//! With whitened means `Ĉ = Σ^{-1/2}·C = U·S·Vᵀ`, let `w_i` be column `i` of
//! `S·Vᵀ` and `e_i` column `i` of `Vᵀ`. For each `i`,
//!
//! ```text
//! g_i = Σ_{j≠i} (1/‖w_j‖)·[ s_ij·⟨e_i,w_j⟩·‖w_i‖² − ⟨e_i,w_i⟩·|⟨w_i,w_j⟩| ]
//! s_ij = 2·1{⟨w_i,w_j⟩ ≥ 0} − 1
//! ```
//!
//! is `‖w_i‖³` times the slope of `f_i(α) = Σ_{j≠i} |cos(w_i + α·e_i, w_j)|`
//! at zero, and `δ_i = −sign(g_i)` moves `w_i` along `e_i` in the direction
//! that lowers its summed absolute cosine to the other means. The target
//! prototypes are `Σ^{1/2}·U·(S + α·diag(δ))·Vᵀ`, transposed to one row per
//! class.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::stats::{ClassStats, WhitenTransform};

/// Relative size below which a slope is treated as exactly zero.
const SLOPE_TOL: f64 = 1e-10;
const ORTHONORMAL_TOL: f64 = 1e-8;

/// Repulsion-separated class means, one row per class (ascending class id).
#[derive(Clone, Debug, PartialEq)]
pub struct TargetPrototypes {
    pub classes: Vec<u32>,
    pub prototypes: DMatrix<f64>,
    pub alpha: f64,
    /// One entry per class column; entries past the SVD rank are zero.
    pub deltas: Vec<i8>,
    /// Summed pairwise |cosine| of the whitened means before and after the
    /// singular-value shift.
    pub cos_sum_before: f64,
    pub cos_sum_after: f64,
}

impl TargetPrototypes {
    /// Counts of `δ = −1, 0, +1`.
    pub fn delta_histogram(&self) -> [usize; 3] {
        let mut h = [0; 3];
        for &d in &self.deltas {
            h[(d + 1) as usize] += 1;
        }
        h
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn dim(&self) -> usize {
        self.prototypes.ncols()
    }

    /// Row index of `class`.
    pub fn index_of(&self, class: u32) -> Option<usize> {
        self.classes.binary_search(&class).ok()
    }
}

/// `Σ_i Σ_{j≠i} |cos(v_i, v_j)|` over the columns of `vectors`; every
/// unordered pair is counted twice.
pub fn cosine_sum(vectors: &DMatrix<f64>) -> Result<f64> {
    if let Some(k) = (0..vectors.ncols()).find(|&k| vectors.column(k).norm() == 0.0) {
        return Err(Error::ZeroVector(k));
    }
    Ok(cosine_sum_nonzero(vectors))
}

/// Like [`cosine_sum`] but silently skips zero columns.
fn cosine_sum_nonzero(vectors: &DMatrix<f64>) -> f64 {
    let cols: Vec<_> = vectors
        .column_iter()
        .filter_map(|c| {
            let n = c.norm();
            (n > 0.0).then(|| c / n)
        })
        .collect();
    let mut total = 0.0;
    for (i, a) in cols.iter().enumerate() {
        for (j, b) in cols.iter().enumerate() {
            if i != j {
                total += a.dot(b).abs();
            }
        }
    }
    total
}

/// Scaled slopes `g_i` for the first `active` columns. Columns of `w`
/// with zero norm take no part in the sums and get a zero slope.
fn repulsion_slopes(w: &DMatrix<f64>, e: &DMatrix<f64>, active: usize) -> Vec<(f64, f64)> {
    let k = w.ncols();
    let norms: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    (0..k)
        .map(|i| {
            if i >= active || norms[i] == 0.0 {
                return (0.0, 0.0);
            }
            let wi = w.column(i);
            let ei = e.column(i);
            let wi_sq = norms[i] * norms[i];
            let ei_wi = ei.dot(&wi);
            let mut g = 0.0;
            let mut inv_norm_sum = 0.0;
            for j in (0..k).filter(|&j| j != i && norms[j] > 0.0) {
                let wj = w.column(j);
                let inner = wi.dot(&wj);
                let sign = if inner >= 0.0 { 1.0 } else { -1.0 };
                g += (sign * ei.dot(&wj) * wi_sq - ei_wi * inner.abs()) / norms[j];
                inv_norm_sum += 1.0 / norms[j];
            }
            (g, SLOPE_TOL * wi_sq * inv_norm_sum)
        })
        .collect()
}

fn signs_from_slopes(slopes: &[(f64, f64)]) -> Vec<i8> {
    slopes
        .iter()
        .map(|&(g, tol)| {
            if g.abs() <= tol {
                0
            } else if g < 0.0 {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// Direction signs `δ_i ∈ {−1, 0, +1}` for vectors `w` (columns) and an
/// orthonormal basis `e` (columns).
pub fn delta_signs(w: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<Vec<i8>> {
    if e.ncols() != w.ncols() {
        return Err(Error::DimensionMismatch {
            expected: w.ncols(),
            found: e.ncols(),
        });
    }
    if e.nrows() != w.nrows() {
        return Err(Error::DimensionMismatch {
            expected: w.nrows(),
            found: e.nrows(),
        });
    }
    if let Some(k) = (0..w.ncols()).find(|&k| w.column(k).norm() == 0.0) {
        return Err(Error::ZeroVector(k));
    }
    let gram = e.tr_mul(e);
    let deviation = (gram - DMatrix::<f64>::identity(e.ncols(), e.ncols())).amax();
    if deviation > ORTHONORMAL_TOL {
        return Err(Error::NonOrthonormalBasis(deviation));
    }
    Ok(signs_from_slopes(&repulsion_slopes(w, e, w.ncols())))
}

/// Target prototypes equal to the class means (repulsion disabled). The
/// cosine diagnostics are still reported on the whitened means.
pub fn unseparated_prototypes(stats: &ClassStats, whitener: &WhitenTransform) -> Result<TargetPrototypes> {
    let means = stats.means_matrix();
    let cos = cosine_sum_nonzero(&whitener.whiten(&means));
    Ok(TargetPrototypes {
        classes: stats.class_ids(),
        prototypes: means.transpose(),
        alpha: 0.0,
        deltas: vec![0; stats.num_classes()],
        cos_sum_before: cos,
        cos_sum_after: cos,
    })
}

pub fn separate_prototypes(
    stats: &ClassStats,
    whitener: &WhitenTransform,
    alpha: f64,
) -> Result<TargetPrototypes> {
    let num_classes = stats.num_classes();
    if num_classes < 2 {
        return Err(Error::TooFewClasses(num_classes));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidConfig(format!("alpha must be >= 0, got {alpha}")));
    }
    let whitened = whitener.whiten(&stats.means_matrix());
    let svd = whitened.clone().svd(true, true);
    let u = svd.u.ok_or(Error::EigDecompositionFailure)?;
    let v_t = svd.v_t.ok_or(Error::EigDecompositionFailure)?;
    let singular = svd.singular_values;
    let rank = singular.len();

    // w_i = columns of S·Vᵀ, e_i = columns of Vᵀ. When C > d only the first
    // `rank` classes have a basis direction of their own.
    let mut w = v_t.clone();
    for (k, mut row) in w.row_iter_mut().enumerate() {
        row *= singular[k];
    }
    let deltas = signs_from_slopes(&repulsion_slopes(&w, &v_t, rank));

    let mut shifted = singular.clone();
    for k in 0..rank {
        shifted[k] = (singular[k] + alpha * f64::from(deltas[k])).max(0.0);
    }
    let mut us = u;
    for (k, mut col) in us.column_iter_mut().enumerate() {
        col *= shifted[k];
    }
    let separated = us * &v_t;
    let prototypes = whitener.dewhiten(&separated).transpose();

    Ok(TargetPrototypes {
        classes: stats.class_ids(),
        prototypes,
        alpha,
        deltas,
        cos_sum_before: cosine_sum_nonzero(&whitened),
        cos_sum_after: cosine_sum_nonzero(&separated),
    })
}
