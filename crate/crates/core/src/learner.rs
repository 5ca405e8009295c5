//! One-vs-rest kernel regularized least squares with argmax decoding.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::dataset::LabelMatrix;
use crate::error::{Error, Result};
use crate::kernel::class_scores;

pub(crate) const JITTER: f64 = 1e-10;

/// Cholesky of `build(jitter)`, retrying once with [`JITTER`] when the
/// unjittered matrix is not numerically positive definite.
pub(crate) fn cholesky_with_jitter(
    what: &str,
    build: impl Fn(f64) -> DMatrix<f64>,
) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(build(0.0))
        .or_else(|| Cholesky::new(build(JITTER)))
        .ok_or_else(|| Error::Singular(format!("{what} is not positive definite")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub theta: DMatrix<f64>,
    pub labeled_indices: Vec<usize>,
    pub lambda: f64,
}

/// Solves `(K_LL + λI) θ = Y` for all classes with one factorization.
pub fn fit(
    k_ll: &DMatrix<f64>,
    y: &LabelMatrix,
    lambda: f64,
    labeled_indices: &[usize],
) -> Result<FittedModel> {
    let l = k_ll.nrows();
    if l == 0 {
        return Err(Error::Validation("cannot fit without labeled data".into()));
    }
    if !k_ll.is_square() || y.n_rows() != l || labeled_indices.len() != l {
        return Err(Error::Shape(format!(
            "kernel {:?}, {} label rows, {} indices",
            k_ll.shape(),
            y.n_rows(),
            labeled_indices.len()
        )));
    }
    let chol = cholesky_with_jitter("K_LL + lambda I", |jitter| {
        let mut m = k_ll.clone();
        for i in 0..l {
            m[(i, i)] += lambda + jitter;
        }
        m
    })?;
    let theta = chol.solve(y.as_matrix());
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("non-finite least-squares solution".into()));
    }
    Ok(FittedModel {
        theta,
        labeled_indices: labeled_indices.to_vec(),
        lambda,
    })
}

/// Argmax class position per column of `θᵀ K_Lx`; ties go to the smaller position.
pub fn predict(model: &FittedModel, k_lx: &DMatrix<f64>) -> Result<Vec<usize>> {
    let scores = class_scores(&model.theta, k_lx)?;
    Ok(scores.column_iter().map(|col| argmax(col.iter())).collect())
}

pub(crate) fn argmax<'a>(values: impl IntoIterator<Item = &'a f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in values.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(Error::Shape(format!(
            "accuracy over {} predictions and {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}
