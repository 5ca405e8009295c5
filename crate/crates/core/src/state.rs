//! Labeled/unlabeled partition of the pool and the simulated labeling oracle.

use crate::dataset::LabelMatrix;
use crate::error::{Error, Result};

/// Dataset-backed oracle over pool positions. A label is only handed out
/// through [`PoolOracle::reveal`], and every reveal is recorded.
#[derive(Debug, Clone)]
pub struct PoolOracle {
    labels: Vec<usize>,
    revealed: Vec<bool>,
}

impl PoolOracle {
    pub fn new(pool_labels: Vec<usize>) -> Self {
        let revealed = vec![false; pool_labels.len()];
        PoolOracle {
            labels: pool_labels,
            revealed,
        }
    }

    pub fn pool_size(&self) -> usize {
        self.labels.len()
    }

    fn reveal(&mut self, pool_index: usize) -> usize {
        self.revealed[pool_index] = true;
        self.labels[pool_index]
    }

    /// Pool positions whose label has been revealed, ascending.
    pub fn revealed_indices(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.revealed[i])
            .collect()
    }
}

/// The active-learning partition. Labels exist only for labeled positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveState {
    labeled: Vec<usize>,
    unlabeled: Vec<usize>,
    revealed_labels: Vec<usize>,
    n_classes: usize,
}

impl ActiveState {
    /// Starts from `initial` labeled pool positions, querying the oracle for each.
    pub fn new(oracle: &mut PoolOracle, initial: &[usize], n_classes: usize) -> Result<Self> {
        let p = oracle.pool_size();
        let mut is_labeled = vec![false; p];
        for &i in initial {
            if i >= p || is_labeled[i] {
                return Err(Error::Validation(format!("bad initial pool index {i}")));
            }
            is_labeled[i] = true;
        }
        let labeled = initial.to_vec();
        let revealed_labels = labeled.iter().map(|&i| oracle.reveal(i)).collect();
        let unlabeled = (0..p).filter(|&i| !is_labeled[i]).collect();
        Ok(ActiveState {
            labeled,
            unlabeled,
            revealed_labels,
            n_classes,
        })
    }

    /// Builds a state directly from a partition and its known labels.
    pub fn from_parts(
        labeled: Vec<usize>,
        unlabeled: Vec<usize>,
        revealed_labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if labeled.len() != revealed_labels.len() {
            return Err(Error::Shape(format!(
                "{} labeled indices but {} labels",
                labeled.len(),
                revealed_labels.len()
            )));
        }
        if labeled.iter().any(|i| unlabeled.contains(i)) {
            return Err(Error::Validation(
                "labeled and unlabeled sets overlap".into(),
            ));
        }
        if revealed_labels.iter().any(|&y| y >= n_classes) {
            return Err(Error::Validation("label outside class range".into()));
        }
        Ok(ActiveState {
            labeled,
            unlabeled,
            revealed_labels,
            n_classes,
        })
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }

    pub fn revealed_labels(&self) -> &[usize] {
        &self.revealed_labels
    }

    pub fn n_labeled(&self) -> usize {
        self.labeled.len()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.unlabeled.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// ±1 label matrix of the labeled set (l×c).
    pub fn label_matrix(&self) -> LabelMatrix {
        LabelMatrix::from_positions(&self.revealed_labels, self.n_classes)
            .expect("revealed labels are validated on entry")
    }

    /// Moves the `position`-th unlabeled point into the labeled set and
    /// returns its pool index.
    pub fn query(&mut self, position: usize, oracle: &mut PoolOracle) -> Result<usize> {
        if position >= self.unlabeled.len() {
            return Err(Error::Validation(format!(
                "query position {position} outside {} unlabeled",
                self.unlabeled.len()
            )));
        }
        let pool_index = self.unlabeled.remove(position);
        let label = oracle.reveal(pool_index);
        self.labeled.push(pool_index);
        self.revealed_labels.push(label);
        Ok(pool_index)
    }
}
