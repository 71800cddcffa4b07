//! Small dense helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Rows processed per block by [`row_blocked_mul`]. Fixed so that sequential
/// and parallel execution perform the same arithmetic per row.
pub(crate) const ROW_BLOCK: usize = 64;

/// Symmetric eigendecomposition of `(m + mᵀ)/2`.
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let sym = (m + m.transpose()) * 0.5;
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigDecompositionFailure);
    }
    SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(Error::EigDecompositionFailure)
}

/// `V · diag(f(λ)) · Vᵀ` for a symmetric eigendecomposition.
pub(crate) fn eig_reconstruct(
    eig: &SymmetricEigen<f64, nalgebra::Dyn>,
    f: impl Fn(f64) -> f64,
) -> DMatrix<f64> {
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let s = f(*lambda);
        scaled.column_mut(j).scale_mut(s);
    }
    let out = scaled * v.transpose();
    (&out + out.transpose()) * 0.5
}

#[cfg(test)]
pub(crate) fn frobenius_rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}

/// `x · r`, computed in fixed blocks of rows on the rayon pool.
///
/// Every row is produced by the same block-sized product whatever the
/// thread count, so results are bitwise reproducible.
pub(crate) fn row_blocked_mul(x: &DMatrix<f64>, r: &DMatrix<f64>) -> DMatrix<f64> {
    use rayon::prelude::*;

    let n = x.nrows();
    let out_cols = r.ncols();
    let starts: Vec<usize> = (0..n).step_by(ROW_BLOCK).collect();
    let blocks: Vec<DMatrix<f64>> = starts
        .par_iter()
        .map(|&start| {
            let rows = ROW_BLOCK.min(n - start);
            x.rows(start, rows) * r
        })
        .collect();
    let mut out = DMatrix::zeros(n, out_cols);
    for (start, block) in starts.iter().zip(blocks) {
        out.rows_mut(*start, block.nrows()).copy_from(&block);
    }
    out
}

/// Per-class column sums of `z` (rows grouped by `labels`), returned in the
/// order of `classes` together with the per-class row count.
pub(crate) fn class_row_sums(
    z: &DMatrix<f64>,
    labels: &[u32],
    classes: &[u32],
) -> Vec<(u32, DVector<f64>, u64)> {
    let slot: std::collections::HashMap<u32, usize> =
        classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut sums = DMatrix::<f64>::zeros(z.ncols(), classes.len());
    let mut counts = vec![0u64; classes.len()];
    for (i, y) in labels.iter().enumerate() {
        if let Some(&k) = slot.get(y) {
            let mut col = sums.column_mut(k);
            col += z.row(i).transpose();
            counts[k] += 1;
        }
    }
    classes
        .iter()
        .enumerate()
        .map(|(k, &c)| (c, sums.column(k).into_owned(), counts[k]))
        .collect()
}

/// Sorted, de-duplicated label set.
pub(crate) fn distinct_labels(labels: &[u32]) -> Vec<u32> {
    let mut out = labels.to_vec();
    out.sort_unstable();
    out.dedup();
    out
}
