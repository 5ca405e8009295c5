//! The active-learning query loop and multi-run aggregation.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{load_csv, load_sparse, split, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::iral::IralOptions;
use crate::kernel::{gram_with, GramCache, KernelParams};
use crate::learner::{accuracy, fit, predict};
use crate::state::{ActiveState, PoolOracle};

use super::config::{DataFormat, RunConfig};
use super::stats::{paired_t_test, Outcome};
use super::strategy::select_query;

/// One point of a learning curve. `selected_pool_index` is `None` for the
/// initial point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub query_index: usize,
    pub n_labeled: usize,
    pub selected_pool_index: Option<usize>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub strategy: String,
    pub run: usize,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub strategy: String,
    pub query_index: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TTestRow {
    pub strategy_a: String,
    pub strategy_b: String,
    pub query_index: usize,
    pub t_stat: f64,
    pub p_value: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub curves: Vec<LearningCurve>,
    pub summaries: Vec<SummaryRow>,
    pub tests: Vec<TTestRow>,
}

pub fn load_dataset(config: &RunConfig) -> Result<Dataset> {
    let ds = match config.format {
        DataFormat::Csv => load_csv(&config.data)?,
        DataFormat::Sparse => load_sparse(&config.data)?,
    };
    Ok(if config.rescale {
        ds.rescaled_min_max()
    } else {
        ds
    })
}

/// Loads the configured dataset and runs every strategy arm.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    run_on_dataset(&dataset, config)
}

/// Runs every arm of `config` on an already loaded dataset. Runs execute
/// according to `config.execution`; results do not depend on it.
pub fn run_on_dataset(dataset: &Dataset, config: &RunConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let pool_size = (config.pool_fraction * dataset.n_samples() as f64).floor() as usize;
    let initial = config.init_per_class * dataset.n_classes();
    if config.budget + initial > pool_size {
        return Err(Error::Config(format!(
            "budget {} plus {initial} initial labels exceeds the pool of {pool_size}",
            config.budget
        )));
    }
    let params = match config.gamma {
        Some(g) => KernelParams::new(g)?,
        None => KernelParams::for_dim(dataset.n_features())?,
    };

    let per_run = config
        .execution
        .map_range(config.runs, |run| run_once(dataset, config, params, run));
    let mut curves = Vec::new();
    for r in per_run {
        curves.extend(r?);
    }
    curves.sort_by(|a, b| (&a.strategy, a.run).cmp(&(&b.strategy, b.run)));

    let summaries = summarize(&curves);
    let labels: Vec<String> = config.arms().into_iter().map(|a| a.0).collect();
    let mut tests = Vec::new();
    if config.runs >= 2 {
        for other in labels.iter().skip(1) {
            tests.extend(compare(&curves, &labels[0], other)?);
        }
    }
    Ok(ExperimentOutput {
        curves,
        summaries,
        tests,
    })
}

fn run_once(
    dataset: &Dataset,
    config: &RunConfig,
    params: KernelParams,
    run: usize,
) -> Result<Vec<LearningCurve>> {
    let seed = config.seed.wrapping_add(run as u64);
    let parts = split(
        dataset,
        &SplitSpec {
            pool_fraction: config.pool_fraction,
            seed,
            init_per_class: config.init_per_class,
        },
    )?;
    let pool_x = dataset.rows(&parts.pool);
    let test_x = dataset.rows(&parts.test);
    let test_y: Vec<usize> = parts.test.iter().map(|&i| dataset.labels()[i]).collect();
    let pool_y: Vec<usize> = parts.pool.iter().map(|&i| dataset.labels()[i]).collect();
    let mut pool_pos = vec![usize::MAX; dataset.n_samples()];
    for (p, &i) in parts.pool.iter().enumerate() {
        pool_pos[i] = p;
    }
    let initial: Vec<usize> = parts.initial_labeled.iter().map(|&i| pool_pos[i]).collect();

    // runs are the unit of parallelism; everything inside is sequential
    let exec = crate::par::Execution::Sequential;
    let gram = GramCache::new(&pool_x, params, exec)?;
    let k_pool_test = gram_with(&pool_x, &test_x, params.gamma(), exec)?;

    let mut curves = Vec::new();
    for (label, strategy, hp) in config.arms() {
        let mut oracle = PoolOracle::new(pool_y.clone());
        let mut state = ActiveState::new(&mut oracle, &initial, dataset.n_classes())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let opts = IralOptions::default();

        let mut points = Vec::with_capacity(config.budget + 1);
        points.push(CurvePoint {
            query_index: 0,
            n_labeled: state.n_labeled(),
            selected_pool_index: None,
            accuracy: evaluate(&state, &gram, &k_pool_test, &test_y, hp.lambda)?,
        });
        for q in 1..=config.budget {
            let position = select_query(strategy, &state, &gram, &hp, &opts, &mut rng)?;
            let pool_index = state.query(position, &mut oracle)?;
            points.push(CurvePoint {
                query_index: q,
                n_labeled: state.n_labeled(),
                selected_pool_index: Some(pool_index),
                accuracy: evaluate(&state, &gram, &k_pool_test, &test_y, hp.lambda)?,
            });
        }
        debug_assert_eq!(oracle.revealed_indices().len(), state.n_labeled());
        curves.push(LearningCurve {
            strategy: label,
            run,
            points,
        });
    }
    Ok(curves)
}

/// Test accuracy of the learner fit on the labeled set; `1/c` (uniform
/// guessing) when nothing is labeled.
fn evaluate(
    state: &ActiveState,
    gram: &GramCache,
    k_pool_test: &DMatrix<f64>,
    test_y: &[usize],
    lambda: f64,
) -> Result<f64> {
    if state.n_labeled() == 0 {
        return Ok(1.0 / state.n_classes() as f64);
    }
    let k_ll = gram.block(state.labeled(), state.labeled());
    let model = fit(&k_ll, &state.label_matrix(), lambda, state.labeled())?;
    let k_lt = k_pool_test.select_rows(state.labeled());
    accuracy(&predict(&model, &k_lt)?, test_y)
}

/// Per-strategy, per-query mean and sample standard deviation across runs
/// (standard deviation 0 for a single run or identical accuracies).
pub fn summarize(curves: &[LearningCurve]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&str, usize), Vec<f64>> = BTreeMap::new();
    for curve in curves {
        for p in &curve.points {
            groups
                .entry((curve.strategy.as_str(), p.query_index))
                .or_default()
                .push(p.accuracy);
        }
    }
    groups
        .into_iter()
        .map(|((strategy, query_index), acc)| {
            let n = acc.len() as f64;
            let mean = acc.iter().sum::<f64>() / n;
            let std = if acc.len() > 1 && acc.iter().any(|&a| a != acc[0]) {
                (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                strategy: strategy.to_string(),
                query_index,
                mean_accuracy: mean,
                std_accuracy: std,
            }
        })
        .collect()
}

/// Paired t-tests of strategy `a` against `b` at every query index, pairing
/// accuracies by run.
pub fn compare(curves: &[LearningCurve], a: &str, b: &str) -> Result<Vec<TTestRow>> {
    let by_run = |name: &str| -> BTreeMap<usize, &LearningCurve> {
        curves
            .iter()
            .filter(|c| c.strategy == name)
            .map(|c| (c.run, c))
            .collect()
    };
    let ca = by_run(a);
    let cb = by_run(b);
    if ca.is_empty() || cb.is_empty() {
        let missing = if ca.is_empty() { a } else { b };
        return Err(Error::Config(format!("no curves for strategy {missing:?}")));
    }
    if ca.keys().ne(cb.keys()) {
        return Err(Error::Validation(format!(
            "strategies {a:?} and {b:?} cover different runs"
        )));
    }
    let queries = ca.values().map(|c| c.points.len()).min().unwrap_or(0);
    let mut rows = Vec::with_capacity(queries);
    for q in 0..queries {
        let xs: Vec<f64> = ca.values().map(|c| c.points[q].accuracy).collect();
        let ys: Vec<f64> = cb
            .values()
            .map(|c| c.points.get(q).map(|p| p.accuracy))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Validation(format!("{b:?} curves are shorter than {a:?}")))?;
        let r = paired_t_test(&xs, &ys, 0.95)?;
        rows.push(TTestRow {
            strategy_a: a.to_string(),
            strategy_b: b.to_string(),
            query_index: ca.values().next().unwrap().points[q].query_index,
            t_stat: r.t,
            p_value: r.p,
            outcome: r.outcome,
        });
    }
    Ok(rows)
}
