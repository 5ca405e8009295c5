//! Representativeness through maximum mean discrepancy (MMD).
//!
//! Querying candidate `s` moves it from the unlabeled set to the labeled set.
//! The squared MMD between `L ∪ {s}` and `U \ {s}` is an increasing affine
//! function of the quadratic form `½ e_sᵀ K_UU e_s + q_s` with
//!
//! ```text
//! q_s = (u-1)/(l+u) · Σ_{i∈L} K(i,s)  -  (l+1)/(l+u) · Σ_{j∈U} K(j,s)
//! ```
//!
//! so the most representative query is the argmin of a QP over one-hot
//! indicators. The QP is relaxed to the probability simplex, solved by
//! accelerated projected gradient, and rounded back to the largest entry.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::GramCache;
use crate::state::ActiveState;

/// Relaxed selection indicator: entries in [0, 1] summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Alpha(DVector<f64>);

impl Alpha {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("empty indicator".into()));
        }
        if values.iter().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
            return Err(Error::Validation("indicator entry outside [0, 1]".into()));
        }
        if (values.sum() - 1.0).abs() > 1e-8 {
            return Err(Error::Validation(format!(
                "indicator sums to {}, not 1",
                values.sum()
            )));
        }
        Ok(Alpha(values))
    }

    pub fn one_hot(len: usize, index: usize) -> Self {
        let mut v = DVector::zeros(len);
        v[index] = 1.0;
        Alpha(v)
    }

    pub fn uniform(len: usize) -> Self {
        Alpha(DVector::from_element(len, 1.0 / len as f64))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `min ½ αᵀQα + qᵀα` over the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub quad: DMatrix<f64>,
    pub linear: DVector<f64>,
}

impl QpProblem {
    pub fn new(quad: DMatrix<f64>, linear: DVector<f64>) -> Result<Self> {
        if !quad.is_square() || quad.nrows() != linear.len() {
            return Err(Error::Shape(format!(
                "QP with {}x{} quadratic and {} linear terms",
                quad.nrows(),
                quad.ncols(),
                linear.len()
            )));
        }
        Ok(QpProblem { quad, linear })
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, alpha: &DVector<f64>) -> f64 {
        0.5 * alpha.dot(&(&self.quad * alpha)) + self.linear.dot(alpha)
    }

    /// Objective at the indicator `e_index`.
    pub fn vertex_objective(&self, index: usize) -> f64 {
        0.5 * self.quad[(index, index)] + self.linear[index]
    }

    fn gradient(&self, alpha: &DVector<f64>) -> DVector<f64> {
        &self.quad * alpha + &self.linear
    }

    fn check_symmetric(&self) -> Result<()> {
        let scale = 1.0 + self.quad.amax();
        let n = self.dim();
        for i in 0..n {
            for j in (i + 1)..n {
                if (self.quad[(i, j)] - self.quad[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Validation(format!(
                        "QP quadratic term is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Squared RKHS distance between the kernel mean embeddings of two pool
/// index sets.
pub fn mmd_direct(s1: &[usize], s2: &[usize], gram: &GramCache) -> Result<f64> {
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::Validation("MMD needs two nonempty sets".into()));
    }
    let block_sum = |a: &[usize], b: &[usize]| -> f64 {
        a.iter()
            .map(|&i| b.iter().map(|&j| gram.entry(i, j)).sum::<f64>())
            .sum()
    };
    let n1 = s1.len() as f64;
    let n2 = s2.len() as f64;
    Ok(
        block_sum(s1, s1) / (n1 * n1) + block_sum(s2, s2) / (n2 * n2)
            - 2.0 * block_sum(s1, s2) / (n1 * n2),
    )
}

/// MMD after querying the `position`-th unlabeled point.
pub fn query_mmd(state: &ActiveState, gram: &GramCache, position: usize) -> Result<f64> {
    let u = state.unlabeled();
    if position >= u.len() {
        return Err(Error::Validation(format!(
            "candidate {position} outside {} unlabeled",
            u.len()
        )));
    }
    let mut s1 = state.labeled().to_vec();
    s1.push(u[position]);
    let s2: Vec<usize> = u
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != position)
        .map(|(_, &i)| i)
        .collect();
    mmd_direct(&s1, &s2, gram)
}

/// The MMD selection QP over the current unlabeled set.
pub fn build_mmd_qp(state: &ActiveState, gram: &GramCache) -> Result<QpProblem> {
    let l = state.n_labeled();
    let u = state.n_unlabeled();
    if u < 2 {
        return Err(Error::Validation(format!(
            "MMD selection needs at least 2 unlabeled candidates, have {u}"
        )));
    }
    let k_uu = gram.block(state.unlabeled(), state.unlabeled());
    let cross_weight = (u as f64 - 1.0) / (l + u) as f64;
    let pool_weight = (l as f64 + 1.0) / (l + u) as f64;
    let labeled_sums: DVector<f64> = if l == 0 {
        DVector::zeros(u)
    } else {
        gram.block(state.labeled(), state.unlabeled())
            .row_sum()
            .transpose()
    };
    let unlabeled_sums: DVector<f64> = k_uu.row_sum().transpose();
    let linear = labeled_sums * cross_weight - unlabeled_sums * pool_weight;
    QpProblem::new(k_uu, linear)
}

/// Euclidean projection onto `{x : x >= 0, Σx = 1}` (sort-based).
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    v.map(|x| (x - tau).max(0.0))
}

/// Solver settings for [`solve_simplex_qp`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    /// Bound on the projected-gradient residual `|α - P(α - ∇f(α))|`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions {
            tol: 1e-8,
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub alpha: Alpha,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Projected-gradient residual of `alpha` for problem `p`.
pub fn kkt_residual(p: &QpProblem, alpha: &DVector<f64>) -> f64 {
    let g = p.gradient(alpha);
    (alpha - project_simplex(&(alpha - g))).norm()
}

/// Minimizes a convex QP over the probability simplex.
///
/// Accelerated projected gradient with backtracking on the local Lipschitz
/// estimate and gradient-based restarts. The sufficient-decrease test uses
/// the exact curvature `½ dᵀQd` of the step rather than differences of
/// objective values, which lose all precision near the optimum. Stops once
/// the projected-gradient residual is at most `opts.tol`; otherwise returns
/// the iterate with the smallest residual and `converged = false`.
pub fn solve_simplex_qp(p: &QpProblem, opts: QpOptions) -> Result<QpSolution> {
    p.check_symmetric()?;
    let n = p.dim();
    if n == 0 {
        return Err(Error::Validation("QP over an empty simplex".into()));
    }

    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut y = x.clone();
    let mut momentum: f64 = 1.0;
    let mut lipschitz = p.quad.diagonal().amax().max(1e-12);

    let mut best = x.clone();
    let mut best_residual = f64::INFINITY;
    let mut iterations = 0;

    loop {
        let residual = kkt_residual(p, &x);
        if residual < best_residual {
            best_residual = residual;
            best.copy_from(&x);
        }
        if residual <= opts.tol || iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let gy = p.gradient(&y);
        let z = loop {
            let z = project_simplex(&(&y - &gy / lipschitz));
            let d = &z - &y;
            let curvature = d.dot(&(&p.quad * &d));
            if curvature <= lipschitz * d.norm_squared() * (1.0 + 1e-12) || lipschitz > 1e300 {
                break z;
            }
            lipschitz *= 2.0;
        };

        // restart when the momentum direction opposes the gradient step
        if (&y - &z).dot(&(&z - &x)) > 0.0 {
            momentum = 1.0;
            y = z.clone();
        } else {
            let next_momentum = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
            y = &z + (&z - &x) * ((momentum - 1.0) / next_momentum);
            momentum = next_momentum;
        }
        x = z;
        lipschitz *= 0.9;
    }

    let converged = best_residual <= opts.tol;
    let mut out = best;
    out.apply(|v| *v = v.clamp(0.0, 1.0));
    let total = out.sum();
    out /= total;
    let objective = p.objective(&out);
    let kkt = kkt_residual(p, &out);
    Ok(QpSolution {
        alpha: Alpha::new(out)?,
        objective,
        kkt_residual: kkt,
        iterations,
        converged,
    })
}

/// Index of the largest entry; ties go to the smallest index.
pub fn round_alpha(alpha: &Alpha) -> usize {
    let mut best = 0;
    for (i, &v) in alpha.values().iter().enumerate() {
        if v > alpha.values()[best] {
            best = i;
        }
    }
    best
}

/// One-hot vertex with the smallest objective; ties go to the smallest index.
pub fn best_vertex(p: &QpProblem) -> usize {
    let mut best = 0;
    let mut best_v = f64::INFINITY;
    for i in 0..p.dim() {
        let v = p.vertex_objective(i);
        if v < best_v {
            best = i;
            best_v = v;
        }
    }
    best
}
