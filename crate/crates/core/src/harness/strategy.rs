//! Query strategies: IR-AL and the random, margin and MMD-only baselines.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::informative::HyperParams;
use crate::iral::{select_query_iral, select_representative, IralOptions};
use crate::kernel::{class_scores, GramCache};
use crate::learner::fit;
use crate::state::ActiveState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Iral,
    Random,
    Margin,
    Mmd,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Iral,
        Strategy::Random,
        Strategy::Margin,
        Strategy::Mmd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Iral => "iral",
            Strategy::Random => "random",
            Strategy::Margin => "margin",
            Strategy::Mmd => "mmd",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown strategy {s:?} (expected one of iral, random, margin, mmd)"
                ))
            })
    }
}

/// Gap between the largest and second-largest class score of every column.
pub fn margin_gaps(scores: &DMatrix<f64>) -> Vec<f64> {
    scores
        .column_iter()
        .map(|col| {
            let mut top = f64::NEG_INFINITY;
            let mut second = f64::NEG_INFINITY;
            for &v in col.iter() {
                if v > top {
                    second = top;
                    top = v;
                } else if v > second {
                    second = v;
                }
            }
            top - second
        })
        .collect()
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Picks the next query as a position in `state.unlabeled()`.
///
/// `margin` needs a fitted model and falls back to `random` while nothing
/// is labeled.
pub fn select_query(
    strategy: Strategy,
    state: &ActiveState,
    gram: &GramCache,
    hp: &HyperParams,
    opts: &IralOptions,
    rng: &mut ChaCha8Rng,
) -> Result<usize> {
    let u = state.n_unlabeled();
    if u == 0 {
        return Err(Error::Validation("no unlabeled candidates".into()));
    }
    match strategy {
        Strategy::Random => Ok(rng.random_range(0..u)),
        Strategy::Margin if state.n_labeled() == 0 => Ok(rng.random_range(0..u)),
        Strategy::Margin => {
            let k_ll = gram.block(state.labeled(), state.labeled());
            let model = fit(&k_ll, &state.label_matrix(), hp.lambda, state.labeled())?;
            let k_lu = gram.block(state.labeled(), state.unlabeled());
            let scores = class_scores(&model.theta, &k_lu)?;
            Ok(argmin(&margin_gaps(&scores)))
        }
        Strategy::Mmd => Ok(select_representative(state, gram, opts)?.pool_relative_index),
        Strategy::Iral => Ok(select_query_iral(state, gram, hp, opts)?.pool_relative_index),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!(matches!("quire".parse::<Strategy>(), Err(Error::Config(_))));
    }

    #[test]
    fn margin_gap_values() {
        let scores = DMatrix::from_column_slice(3, 2, &[0.9, -0.9, 0.1, 0.2, 0.2, -1.0]);
        let gaps = margin_gaps(&scores);
        assert!((gaps[0] - 0.8).abs() < 1e-15);
        assert_eq!(gaps[1], 0.0);
    }

    #[test]
    fn random_is_reproducible() {
        let st = ActiveState::from_parts(vec![], (0..50).collect(), vec![], 2).unwrap();
        let gram = GramCache::from_matrix(DMatrix::identity(50, 50)).unwrap();
        let hp = HyperParams::default();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10)
                .map(|_| {
                    select_query(
                        Strategy::Random,
                        &st,
                        &gram,
                        &hp,
                        &IralOptions::default(),
                        &mut rng,
                    )
                    .unwrap()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }

    #[test]
    fn margin_picks_the_ambiguous_candidate() {
        // Labeled points 0 (class 0) and 1 (class 1) on a line; candidate 3
        // sits exactly halfway, the others sit on top of the labeled points.
        let pts = DMatrix::from_row_slice(5, 1, &[-1.0, 1.0, -1.0, 0.0, 1.0]);
        let gram = GramCache::new(
            &pts,
            crate::kernel::KernelParams::new(1.0).unwrap(),
            crate::par::Execution::Sequential,
        )
        .unwrap();
        let st = ActiveState::from_parts(vec![0, 1], vec![2, 3, 4], vec![0, 1], 2).unwrap();
        let hp = HyperParams::default();
        let k_ll = gram.block(st.labeled(), st.labeled());
        let model = fit(&k_ll, &st.label_matrix(), hp.lambda, st.labeled()).unwrap();
        let scores = class_scores(&model.theta, &gram.block(st.labeled(), st.unlabeled())).unwrap();
        let gaps = margin_gaps(&scores);
        assert!(gaps[1].abs() < 1e-12);
        assert!(gaps[0] >= 0.5 && gaps[2] >= 0.5, "{gaps:?}");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pick = select_query(
            Strategy::Margin,
            &st,
            &gram,
            &hp,
            &IralOptions::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(pick, 1);
    }

    #[test]
    fn mmd_follows_direct_enumeration_every_round() {
        use crate::representative::query_mmd;
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = DMatrix::from_fn(12, 2, |_, _| rng.random_range(-2.0..2.0));
        let gram = GramCache::new(
            &pts,
            crate::kernel::KernelParams::new(0.5).unwrap(),
            crate::par::Execution::Sequential,
        )
        .unwrap();
        let mut oracle = crate::state::PoolOracle::new((0..12).map(|i| i % 3).collect());
        let mut st = ActiveState::new(&mut oracle, &[], 3).unwrap();
        let hp = HyperParams::default();
        let opts = IralOptions::default();
        while st.n_unlabeled() >= 2 {
            let pick = select_query(Strategy::Mmd, &st, &gram, &hp, &opts, &mut rng).unwrap();
            let direct: Vec<f64> = (0..st.n_unlabeled())
                .map(|i| query_mmd(&st, &gram, i).unwrap())
                .collect();
            let best = argmin(&direct);
            assert_eq!(pick, best, "{direct:?}");
            if st.n_labeled() == 0 {
                assert_eq!(
                    pick,
                    crate::iral::cold_start_select(&st, &gram, &opts)
                        .unwrap()
                        .pool_relative_index
                );
            }
            st.query(pick, &mut oracle).unwrap();
        }
    }
}
