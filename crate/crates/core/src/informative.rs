//! Informativeness as worst-case squared-loss risk over adversarial ±1
//! pseudo-labels of a candidate.

use nalgebra::{DMatrix, DVector};

use crate::dataset::LabelMatrix;
use crate::error::{Error, Result};
use crate::kernel::{class_scores, GramCache};
use crate::representative::{build_mmd_qp, Alpha};
use crate::state::ActiveState;

/// Regularization weight, informative/representative trade-off and ADMM penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub lambda: f64,
    pub beta: f64,
    pub rho: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            lambda: 0.1,
            beta: 100.0,
            rho: 1.0,
        }
    }
}

impl HyperParams {
    pub fn new(lambda: f64, beta: f64, rho: f64) -> Result<Self> {
        let hp = HyperParams { lambda, beta, rho };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("beta", self.beta),
            ("rho", self.rho),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Kernel-expansion coefficients, one column per class (l×c).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCoefficients {
    theta: DMatrix<f64>,
}

impl ModelCoefficients {
    pub fn new(theta: DMatrix<f64>) -> Result<Self> {
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite model coefficient".into()));
        }
        Ok(ModelCoefficients { theta })
    }

    pub fn zeros(l: usize, c: usize) -> Self {
        ModelCoefficients {
            theta: DMatrix::zeros(l, c),
        }
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.theta
    }
}

/// `-sign(f_k)` per class, with `sign(0) = +1`. This label vector maximizes
/// `Σ_k (ŷ_k - f_k)²` over `{-1, +1}^c`.
pub fn worst_case_pseudo_label(scores: &[f64]) -> Vec<f64> {
    scores
        .iter()
        .map(|&f| if f >= 0.0 { -1.0 } else { 1.0 })
        .collect()
}

/// `|f|₂² + 2|f|₁` of a score vector.
pub fn penalty_from_scores<'a>(scores: impl IntoIterator<Item = &'a f64>) -> f64 {
    scores.into_iter().map(|&f| f * f + 2.0 * f.abs()).sum()
}

/// Worst-case risk of candidate `x_i` beyond the constant `c`, where `k_s`
/// is the kernel column between the labeled points and the candidate.
pub fn informative_penalty(theta: &DMatrix<f64>, k_s: &DVector<f64>) -> Result<f64> {
    if theta.nrows() != k_s.len() {
        return Err(Error::Shape(format!(
            "theta has {} rows, kernel column has {}",
            theta.nrows(),
            k_s.len()
        )));
    }
    let scores = theta.tr_mul(k_s);
    Ok(penalty_from_scores(scores.iter()))
}

/// [`informative_penalty`] for every column of `k_lu` (one per candidate).
pub fn informative_penalties(theta: &DMatrix<f64>, k_lu: &DMatrix<f64>) -> Result<DVector<f64>> {
    let scores = class_scores(theta, k_lu)?;
    Ok(DVector::from_iterator(
        scores.ncols(),
        scores
            .column_iter()
            .map(|col| penalty_from_scores(col.iter())),
    ))
}

/// Labeled squared loss plus RKHS regularizer:
/// `|Y - K θ|_F² + λ Σ_k θ_kᵀ K θ_k`.
pub fn labeled_risk(
    theta: &DMatrix<f64>,
    k_ll: &DMatrix<f64>,
    y: &LabelMatrix,
    lambda: f64,
) -> Result<f64> {
    let (l, c) = theta.shape();
    if k_ll.shape() != (l, l) || y.as_matrix().shape() != (l, c) {
        return Err(Error::Shape(format!(
            "theta {l}x{c}, kernel {:?}, labels {:?}",
            k_ll.shape(),
            y.as_matrix().shape()
        )));
    }
    let fitted = k_ll * theta;
    let loss = (y.as_matrix() - &fitted).norm_squared();
    let reg = theta.component_mul(&fitted).sum();
    Ok(loss + lambda * reg)
}

/// The hybrid objective at a relaxed indicator: labeled risk, α-weighted
/// candidate penalties, and the β-weighted MMD quadratic form.
pub fn combined_objective(
    theta: &DMatrix<f64>,
    alpha: &Alpha,
    state: &ActiveState,
    gram: &GramCache,
    hp: &HyperParams,
) -> Result<f64> {
    let l = state.n_labeled();
    if theta.shape() != (l, state.n_classes()) {
        return Err(Error::Shape(format!(
            "theta is {:?}, expected {l}x{}",
            theta.shape(),
            state.n_classes()
        )));
    }
    if alpha.len() != state.n_unlabeled() {
        return Err(Error::Shape(format!(
            "alpha has {} entries for {} candidates",
            alpha.len(),
            state.n_unlabeled()
        )));
    }
    let k_ll = gram.block(state.labeled(), state.labeled());
    let risk = labeled_risk(theta, &k_ll, &state.label_matrix(), hp.lambda)?;
    let informative = if l == 0 {
        0.0
    } else {
        let k_lu = gram.block(state.labeled(), state.unlabeled());
        informative_penalties(theta, &k_lu)?.dot(alpha.values())
    };
    let qp = build_mmd_qp(state, gram)?;
    Ok(risk + informative + hp.beta * qp.objective(alpha.values()))
}
