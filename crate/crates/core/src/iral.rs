//! Hybrid informative/representative query selection (IR-AL).
//!
//! Selection alternates two steps until the rounded candidate stops changing:
//!
//! * **α-step**: with θ fixed, minimize `(β/2) αᵀ K_UU α + (β q_mmd + K₃)ᵀ α`
//!   over the simplex and round to a candidate `s` (see [`Rounding`]).
//! * **θ-step**: with `x_s` fixed, minimize
//!   `|Y - K_LL θ|² + |a|² + 2|a|₁ + λ Σ_k θ_kᵀ K_LL θ_k` subject to
//!   `a = θᵀ k_s` by ADMM. With an identity label-incidence matrix every
//!   class decouples and shares the system matrix
//!   `B = K_LL² + (ρ/2) k_s k_sᵀ + λ K_LL`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::informative::{
    informative_penalties, labeled_risk, penalty_from_scores, HyperParams, ModelCoefficients,
};
use crate::kernel::GramCache;
use crate::learner::{fit, JITTER};
use crate::representative::{
    best_vertex, build_mmd_qp, round_alpha, solve_simplex_qp, Alpha, QpOptions, QpProblem,
    QpSolution,
};
use crate::state::ActiveState;

/// `sign(v) * max(|v| - omega, 0)`.
#[inline]
pub fn shrink(v: f64, omega: f64) -> f64 {
    v.signum() * (v.abs() - omega).max(0.0)
}

/// Elementwise [`shrink`].
pub fn soft_threshold(v: &[f64], omega: f64) -> Vec<f64> {
    v.iter().map(|&x| shrink(x, omega)).collect()
}

/// Starting point of the θ-step ADMM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdmmInit {
    /// θ from the labeled-only least-squares fit, `a = θᵀ k_s`, `ξ = 0`.
    #[default]
    WarmStart,
    /// θ = 0, a = 0, ξ = 0.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub init: AdmmInit,
    /// Record the split objective at every iterate.
    pub record_trace: bool,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        AdmmOptions {
            tol: 1e-6,
            max_iter: 200,
            init: AdmmInit::WarmStart,
            record_trace: false,
        }
    }
}

/// Iterate of the θ-step ADMM. `a` and the scaled dual `xi` hold one entry per class.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub theta: DMatrix<f64>,
    pub a: DVector<f64>,
    pub xi: DVector<f64>,
    pub rho: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmOutcome {
    pub state: AdmmState,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Split objective at `(θ^k, a^k)`, when requested.
    pub trace: Vec<f64>,
}

impl AdmmOutcome {
    pub fn theta(&self) -> &DMatrix<f64> {
        &self.state.theta
    }
}

/// θ-step objective with the auxiliary variable split out:
/// `|Y - Kθ|² + |a|² + 2|a|₁ + λ Σ θ_kᵀ K θ_k`.
pub fn split_objective(
    theta: &DMatrix<f64>,
    a: &DVector<f64>,
    k_ll: &DMatrix<f64>,
    state: &ActiveState,
    lambda: f64,
) -> Result<f64> {
    Ok(labeled_risk(theta, k_ll, &state.label_matrix(), lambda)? + penalty_from_scores(a.iter()))
}

/// θ-step objective at the constraint `a = θᵀ k_s` for the `candidate`-th
/// unlabeled point.
pub fn theta_objective(
    theta: &DMatrix<f64>,
    state: &ActiveState,
    candidate: usize,
    gram: &GramCache,
    lambda: f64,
) -> Result<f64> {
    let k_ll = gram.block(state.labeled(), state.labeled());
    let k_s = candidate_column(state, candidate, gram)?;
    if theta.nrows() != k_s.len() {
        return Err(Error::Shape(format!(
            "theta has {} rows for {} labeled points",
            theta.nrows(),
            k_s.len()
        )));
    }
    split_objective(theta, &theta.tr_mul(&k_s), &k_ll, state, lambda)
}

fn candidate_column(
    state: &ActiveState,
    candidate: usize,
    gram: &GramCache,
) -> Result<DVector<f64>> {
    let &pool_index = state.unlabeled().get(candidate).ok_or_else(|| {
        Error::Validation(format!(
            "candidate {candidate} outside {} unlabeled",
            state.n_unlabeled()
        ))
    })?;
    Ok(gram.column(state.labeled(), pool_index))
}

/// Solves the θ-step for the `candidate`-th unlabeled point by ADMM.
///
/// The θ-update solves `B θ_k = K Y_k + (ξ_k/2 + ρ a_k/2) k_s`. `B` is
/// factored once; since only the scalar coefficient of `k_s` changes between
/// iterations, each iteration costs O(c) after two back-substitutions.
pub fn admm_solve_theta(
    state: &ActiveState,
    candidate: usize,
    gram: &GramCache,
    hp: &HyperParams,
    opts: &AdmmOptions,
) -> Result<AdmmOutcome> {
    let l = state.n_labeled();
    if l == 0 {
        return Err(Error::Validation("theta-step needs labeled data".into()));
    }
    let c = state.n_classes();
    let rho = hp.rho;
    let lambda = hp.lambda;
    let k_s = candidate_column(state, candidate, gram)?;
    let k_ll = gram.block(state.labeled(), state.labeled());
    let y = state.label_matrix();

    let system = |k: &DMatrix<f64>| {
        let mut b = k * k + k * lambda;
        b.ger(rho / 2.0, &k_s, &k_s, 1.0);
        b
    };
    let (k_used, chol) = match Cholesky::new(system(&k_ll)) {
        Some(chol) => (k_ll.clone(), chol),
        None => {
            let k = &k_ll + DMatrix::identity(l, l) * JITTER;
            let chol = Cholesky::new(system(&k)).ok_or_else(|| {
                Error::Singular("ADMM system matrix is not positive definite".into())
            })?;
            (k, chol)
        }
    };

    let base = chol.solve(&(&k_used * y.as_matrix()));
    let w = chol.solve(&k_s);
    let t_base: DVector<f64> = base.tr_mul(&k_s);
    let t_w = w.dot(&k_s);

    let (mut a, mut xi) = match opts.init {
        AdmmInit::WarmStart => {
            let theta0 = fit(&k_ll, &y, lambda, state.labeled())?.theta;
            (theta0.tr_mul(&k_s), DVector::zeros(c))
        }
        AdmmInit::Zero => (DVector::zeros(c), DVector::zeros(c)),
    };

    let omega = 2.0 / (rho + 2.0);
    let mut coef = DVector::zeros(c);
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut iteration = 0;
    let mut converged = false;
    let mut trace = Vec::new();

    while iteration < opts.max_iter {
        iteration += 1;
        for k in 0..c {
            coef[k] = 0.5 * xi[k] + 0.5 * rho * a[k];
        }
        let t = &t_base + &coef * t_w;
        let mut a_next = DVector::zeros(c);
        for k in 0..c {
            a_next[k] = shrink((rho * t[k] - xi[k]) / (rho + 2.0), omega);
            xi[k] += rho * (a_next[k] - t[k]);
        }
        primal = (&a_next - &t).norm();
        dual = rho * (&a_next - &a).norm();
        a = a_next;
        if opts.record_trace {
            let theta = theta_from(&base, &w, &coef);
            trace.push(split_objective(&theta, &a, &k_ll, state, lambda)?);
        }
        if primal < opts.tol && dual < opts.tol {
            converged = true;
            break;
        }
    }

    let theta = theta_from(&base, &w, &coef);
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(
            "ADMM produced non-finite coefficients".into(),
        ));
    }
    Ok(AdmmOutcome {
        state: AdmmState {
            theta,
            a,
            xi,
            rho,
            iteration,
        },
        converged,
        primal_residual: primal,
        dual_residual: dual,
        trace,
    })
}

fn theta_from(base: &DMatrix<f64>, w: &DVector<f64>, coef: &DVector<f64>) -> DMatrix<f64> {
    let mut theta = base.clone();
    theta.ger(1.0, w, coef, 1.0);
    theta
}

/// α-step: the hybrid selection QP at fixed θ.
pub fn alpha_problem(
    state: &ActiveState,
    theta: &DMatrix<f64>,
    gram: &GramCache,
    hp: &HyperParams,
) -> Result<QpProblem> {
    let mmd = build_mmd_qp(state, gram)?;
    let penalties = if state.n_labeled() == 0 {
        DVector::zeros(state.n_unlabeled())
    } else {
        let k_lu = gram.block(state.labeled(), state.unlabeled());
        informative_penalties(theta, &k_lu)?
    };
    QpProblem::new(mmd.quad * hp.beta, mmd.linear * hp.beta + penalties)
}

/// Solves the relaxed α-step.
pub fn solve_alpha(
    state: &ActiveState,
    theta: &DMatrix<f64>,
    gram: &GramCache,
    hp: &HyperParams,
    qp: QpOptions,
) -> Result<QpSolution> {
    solve_simplex_qp(&alpha_problem(state, theta, gram, hp)?, qp)
}

/// How the relaxed α-step solution becomes a single candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rounding {
    /// The one-hot α with the smallest α-step objective. With no labels the
    /// relaxed MMD optimum is the uniform vector, so the largest entry
    /// carries no information there.
    #[default]
    BestVertex,
    /// The largest entry of the relaxed solution ([`round_alpha`]).
    LargestEntry,
}

impl Rounding {
    pub fn apply(self, problem: &QpProblem, solution: &QpSolution) -> usize {
        match self {
            Rounding::BestVertex => best_vertex(problem),
            Rounding::LargestEntry => round_alpha(&solution.alpha),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IralOptions {
    /// Maximum number of θ-steps in the alternation.
    pub loop_cap: usize,
    pub rounding: Rounding,
    pub admm: AdmmOptions,
    pub qp: QpOptions,
}

impl Default for IralOptions {
    fn default() -> Self {
        IralOptions {
            loop_cap: 10,
            rounding: Rounding::default(),
            admm: AdmmOptions::default(),
            qp: QpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Position of the selected point in the unlabeled list.
    pub pool_relative_index: usize,
    pub alpha: Alpha,
    pub theta: ModelCoefficients,
    pub alternations: usize,
    pub converged: bool,
}

/// Representative-only selection: round the relaxed MMD QP. Works for any
/// labeled-set size; [`cold_start_select`] is the `l = 0` case.
pub fn select_representative(
    state: &ActiveState,
    gram: &GramCache,
    opts: &IralOptions,
) -> Result<SelectionResult> {
    let u = state.n_unlabeled();
    let theta = ModelCoefficients::zeros(0, state.n_classes());
    match u {
        0 => Err(Error::Validation("no unlabeled candidates".into())),
        1 => Ok(SelectionResult {
            pool_relative_index: 0,
            alpha: Alpha::one_hot(1, 0),
            theta,
            alternations: 0,
            converged: true,
        }),
        _ => {
            let problem = build_mmd_qp(state, gram)?;
            let sol = solve_simplex_qp(&problem, opts.qp)?;
            Ok(SelectionResult {
                pool_relative_index: opts.rounding.apply(&problem, &sol),
                alpha: sol.alpha,
                theta,
                alternations: 0,
                converged: sol.converged,
            })
        }
    }
}

/// Selection before any label exists, where only the MMD term is defined.
pub fn cold_start_select(
    state: &ActiveState,
    gram: &GramCache,
    opts: &IralOptions,
) -> Result<SelectionResult> {
    if state.n_labeled() != 0 {
        return Err(Error::Validation(format!(
            "cold start with {} labeled points",
            state.n_labeled()
        )));
    }
    select_representative(state, gram, opts)
}

/// Full IR-AL query selection.
pub fn select_query_iral(
    state: &ActiveState,
    gram: &GramCache,
    hp: &HyperParams,
    opts: &IralOptions,
) -> Result<SelectionResult> {
    let u = state.n_unlabeled();
    if u == 0 {
        return Err(Error::Validation("no unlabeled candidates".into()));
    }
    if state.n_labeled() == 0 {
        return cold_start_select(state, gram, opts);
    }
    let k_ll = gram.block(state.labeled(), state.labeled());
    let mut theta = fit(&k_ll, &state.label_matrix(), hp.lambda, state.labeled())?.theta;
    if u == 1 {
        return Ok(SelectionResult {
            pool_relative_index: 0,
            alpha: Alpha::one_hot(1, 0),
            theta: ModelCoefficients::new(theta)?,
            alternations: 0,
            converged: true,
        });
    }

    let mut previous = None;
    let mut alternations = 0;
    let (alpha, candidate, converged) = loop {
        let problem = alpha_problem(state, &theta, gram, hp)?;
        let sol = solve_simplex_qp(&problem, opts.qp)?;
        let s = opts.rounding.apply(&problem, &sol);
        if previous == Some(s) {
            break (sol.alpha, s, true);
        }
        if alternations >= opts.loop_cap {
            break (sol.alpha, s, false);
        }
        theta = admm_solve_theta(state, s, gram, hp, &opts.admm)?
            .state
            .theta;
        previous = Some(s);
        alternations += 1;
    };

    Ok(SelectionResult {
        pool_relative_index: candidate,
        alpha,
        theta: ModelCoefficients::new(theta)?,
        alternations,
        converged,
    })
}
