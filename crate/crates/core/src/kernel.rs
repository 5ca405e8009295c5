//! RBF kernel, Gram blocks and per-class kernel-expansion scores.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::par::Execution;

/// RBF bandwidth `gamma` in `exp(-gamma * |x - y|^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    gamma: f64,
}

impl KernelParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Validation(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        Ok(KernelParams { gamma })
    }

    /// The default bandwidth `1 / d`.
    pub fn for_dim(d: usize) -> Result<Self> {
        Self::new(1.0 / d as f64)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

#[inline]
fn rbf_unchecked(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * sq).exp()
}

/// `exp(-gamma * |x - y|^2)`.
pub fn rbf(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "rbf on vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(rbf_unchecked(x, y, gamma))
}

fn row_major(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Gram matrix between the rows of `a` (m×d) and `b` (p×d).
pub fn gram(a: &DMatrix<f64>, b: &DMatrix<f64>, gamma: f64) -> Result<DMatrix<f64>> {
    gram_with(a, b, gamma, Execution::default())
}

/// [`gram`] with an explicit execution policy. Both policies give identical bits.
pub fn gram_with(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    gamma: f64,
    exec: Execution,
) -> Result<DMatrix<f64>> {
    if a.ncols() != b.ncols() {
        return Err(Error::Shape(format!(
            "gram between {}-dim and {}-dim points",
            a.ncols(),
            b.ncols()
        )));
    }
    let ra = row_major(a);
    let rb = row_major(b);
    let rows = exec.map_range(ra.len(), |i| {
        rb.iter()
            .map(|y| rbf_unchecked(&ra[i], y, gamma))
            .collect::<Vec<f64>>()
    });
    Ok(DMatrix::from_fn(ra.len(), rb.len(), |i, j| rows[i][j]))
}

/// Gram matrix over every pool point, computed once per run. Blocks for the
/// current labeled/unlabeled partition are sliced out on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct GramCache {
    k_pool: DMatrix<f64>,
}

impl GramCache {
    pub fn new(pool: &DMatrix<f64>, params: KernelParams, exec: Execution) -> Result<Self> {
        let k_pool = gram_with(pool, pool, params.gamma(), exec)?;
        Ok(GramCache { k_pool })
    }

    /// Wraps a precomputed kernel matrix. It must be square and symmetric.
    pub fn from_matrix(k_pool: DMatrix<f64>) -> Result<Self> {
        if !k_pool.is_square() {
            return Err(Error::Shape(format!(
                "kernel matrix is {}x{}",
                k_pool.nrows(),
                k_pool.ncols()
            )));
        }
        let n = k_pool.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if k_pool[(i, j)] != k_pool[(j, i)] {
                    return Err(Error::Validation("kernel matrix is not symmetric".into()));
                }
            }
        }
        Ok(GramCache { k_pool })
    }

    pub fn size(&self) -> usize {
        self.k_pool.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k_pool
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.k_pool[(i, j)]
    }

    /// Sub-block `K[rows, cols]` over pool indices.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            self.k_pool[(rows[i], cols[j])]
        })
    }

    /// Column `K[rows, col]`.
    pub fn column(&self, rows: &[usize], col: usize) -> DVector<f64> {
        DVector::from_iterator(rows.len(), rows.iter().map(|&r| self.k_pool[(r, col)]))
    }
}

/// Per-class scores `f_k(x_j) = theta_k^T K_Lx[:, j]`, returned as c×m.
///
/// With an identity label-incidence matrix the Kronecker form
/// `vec(theta)^T (I_c ⊗ K_Lx)` is block diagonal, so this is just `theta^T K_Lx`.
pub fn class_scores(theta: &DMatrix<f64>, k_lx: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if theta.nrows() != k_lx.nrows() {
        return Err(Error::Shape(format!(
            "theta has {} rows, kernel block has {}",
            theta.nrows(),
            k_lx.nrows()
        )));
    }
    Ok(theta.tr_mul(k_lx))
}
