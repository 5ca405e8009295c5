//! Two-tailed paired Student t-test with a win/tie/loss verdict.

use std::fmt;

use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Win,
    Tie,
    Loss,
}

impl Outcome {
    pub fn flipped(self) -> Self {
        match self {
            Outcome::Win => Outcome::Loss,
            Outcome::Tie => Outcome::Tie,
            Outcome::Loss => Outcome::Win,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Win => "win",
            Outcome::Tie => "tie",
            Outcome::Loss => "loss",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub outcome: Outcome,
}

/// Two-sided p value of a t statistic with `df` degrees of freedom,
/// `I_{df/(df+t²)}(df/2, 1/2)`.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t))
}

/// Paired test of `a` against `b` at confidence `level` (0.95 for 95%).
///
/// Identical samples are a tie with `t = 0, p = 1`. Constant nonzero
/// differences have zero variance and are reported with infinite `t` and
/// `p = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64], level: f64) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "paired samples of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Validation(
            "paired t-test needs at least 2 pairs".into(),
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Validation(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n;

    let (t, p) = if diffs.iter().all(|&d| d == diffs[0]) {
        if diffs[0] == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(diffs[0]), 0.0)
        }
    } else {
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let t = mean / (var.sqrt() / n.sqrt());
        (t, two_sided_p(t, n - 1.0))
    };

    let outcome = if p < 1.0 - level && t > 0.0 {
        Outcome::Win
    } else if p < 1.0 - level && t < 0.0 {
        Outcome::Loss
    } else {
        Outcome::Tie
    };
    Ok(TTest { t, p, outcome })
}
