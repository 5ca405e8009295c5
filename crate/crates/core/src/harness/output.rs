//! CSV emission for curves, summaries and t-tests, and reading curves back.
//!
//! Files are UTF-8, comma-separated, LF-terminated, with floats rendered to
//! nine significant digits.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::experiment::{CurvePoint, LearningCurve, SummaryRow, TTestRow};

pub const CURVES_FILE: &str = "curves.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TTEST_FILE: &str = "ttest.csv";

const CURVES_HEADER: &str = "strategy,run,query_index,n_labeled,selected_pool_index,accuracy";
const SUMMARY_HEADER: &str = "strategy,query_index,mean_accuracy,std_accuracy";
const TTEST_HEADER: &str = "strategy_a,strategy_b,query_index,t_stat,p_value,outcome";

/// `%.9g`-style rendering: nine significant digits, trailing zeros trimmed,
/// scientific notation outside `1e-5 <= |x| < 1e9`.
pub fn fmt_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn sorted_curves(curves: &[LearningCurve]) -> Vec<&LearningCurve> {
    let mut v: Vec<&LearningCurve> = curves.iter().collect();
    v.sort_by(|a, b| (&a.strategy, a.run).cmp(&(&b.strategy, b.run)));
    v
}

pub fn render_curves(curves: &[LearningCurve]) -> String {
    let mut out = String::from(CURVES_HEADER);
    out.push('\n');
    for c in sorted_curves(curves) {
        let mut points: Vec<&CurvePoint> = c.points.iter().collect();
        points.sort_by_key(|p| p.query_index);
        for p in points {
            let selected = p
                .selected_pool_index
                .map_or_else(|| "-1".to_string(), |i| i.to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.strategy,
                c.run,
                p.query_index,
                p.n_labeled,
                selected,
                fmt_sig9(p.accuracy)
            ));
        }
    }
    out
}

pub fn render_summary(rows: &[SummaryRow]) -> String {
    let mut rows: Vec<&SummaryRow> = rows.iter().collect();
    rows.sort_by(|a, b| (&a.strategy, a.query_index).cmp(&(&b.strategy, b.query_index)));
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.strategy,
            r.query_index,
            fmt_sig9(r.mean_accuracy),
            fmt_sig9(r.std_accuracy)
        ));
    }
    out
}

pub fn render_ttests(rows: &[TTestRow]) -> String {
    let mut rows: Vec<&TTestRow> = rows.iter().collect();
    rows.sort_by(|a, b| {
        (&a.strategy_a, &a.strategy_b, a.query_index).cmp(&(
            &b.strategy_a,
            &b.strategy_b,
            b.query_index,
        ))
    });
    let mut out = String::from(TTEST_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.strategy_a,
            r.strategy_b,
            r.query_index,
            fmt_sig9(r.t_stat),
            fmt_sig9(r.p_value),
            r.outcome
        ));
    }
    out
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `curves.csv`, `summary.csv` and `ttest.csv` into `dir`, creating it
/// if needed.
pub fn write_outputs(
    dir: impl AsRef<Path>,
    curves: &[LearningCurve],
    summaries: &[SummaryRow],
    tests: &[TTestRow],
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(dir, CURVES_FILE, &render_curves(curves))?;
    write_file(dir, SUMMARY_FILE, &render_summary(summaries))?;
    write_file(dir, TTEST_FILE, &render_ttests(tests))
}

/// Writes only `ttest.csv`.
pub fn write_ttests(dir: impl AsRef<Path>, tests: &[TTestRow]) -> Result<()> {
    write_file(dir.as_ref(), TTEST_FILE, &render_ttests(tests))
}

/// Parses a `curves.csv` written by [`write_outputs`].
pub fn read_curves(path: impl AsRef<Path>) -> Result<Vec<LearningCurve>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curves(&text, &path.display().to_string())
}

pub fn parse_curves(text: &str, source_name: &str) -> Result<Vec<LearningCurve>> {
    let err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line: line as u64,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == CURVES_HEADER => {}
        _ => return Err(err(1, "missing curves header".into())),
    }
    let mut curves: Vec<LearningCurve> = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 6 {
            return Err(err(
                lineno,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let num = |k: usize| -> Result<usize> {
            fields[k]
                .parse()
                .map_err(|_| err(lineno, format!("bad integer {:?}", fields[k])))
        };
        let selected: i64 = fields[4]
            .parse()
            .map_err(|_| err(lineno, format!("bad index {:?}", fields[4])))?;
        let accuracy: f64 = fields[5]
            .parse()
            .map_err(|_| err(lineno, format!("bad accuracy {:?}", fields[5])))?;
        let point = CurvePoint {
            query_index: num(2)?,
            n_labeled: num(3)?,
            selected_pool_index: usize::try_from(selected).ok(),
            accuracy,
        };
        let run = num(1)?;
        match curves.last_mut() {
            Some(c) if c.strategy == fields[0] && c.run == run => c.points.push(point),
            _ => curves.push(LearningCurve {
                strategy: fields[0].to_string(),
                run,
                points: vec![point],
            }),
        }
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::stats::Outcome;

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(1.0), "1");
        assert_eq!(fmt_sig9(0.75), "0.75");
        assert_eq!(fmt_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig9(2.0 / 3.0), "0.666666667");
        assert_eq!(fmt_sig9(-12.5), "-12.5");
        assert_eq!(fmt_sig9(9.9999999999), "10");
        assert_eq!(fmt_sig9(1.5e-7), "1.5e-7");
        assert_eq!(fmt_sig9(123456789012.0), "1.23456789e11");
        assert_eq!(fmt_sig9(f64::INFINITY), "inf");
    }

    fn curve(strategy: &str, run: usize, budget: usize) -> LearningCurve {
        LearningCurve {
            strategy: strategy.into(),
            run,
            points: (0..=budget)
                .map(|q| CurvePoint {
                    query_index: q,
                    n_labeled: q,
                    selected_pool_index: if q == 0 { None } else { Some(q * 3) },
                    accuracy: 0.5 + q as f64 / 10.0,
                })
                .collect(),
        }
    }

    #[test]
    fn curve_rows_and_round_trip() {
        let curves = vec![curve("iral", 1, 3), curve("iral", 0, 3)];
        let text = render_curves(&curves);
        assert_eq!(text.lines().count(), 1 + 2 * 4);
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("iral,0,0,0,-1,0.5"));
        let back = parse_curves(&text, "c").unwrap();
        assert_eq!(back[0], curves[1]);
        assert_eq!(back[1], curves[0]);
    }

    #[test]
    fn empty_ttests_is_header_only() {
        assert_eq!(render_ttests(&[]), format!("{TTEST_HEADER}\n"));
    }

    #[test]
    fn ttest_rows_render() {
        let row = TTestRow {
            strategy_a: "iral".into(),
            strategy_b: "random".into(),
            query_index: 4,
            t_stat: 3.25,
            p_value: 0.0123,
            outcome: Outcome::Win,
        };
        assert_eq!(
            render_ttests(&[row]).lines().nth(1).unwrap(),
            "iral,random,4,3.25,0.0123,win"
        );
    }

    #[test]
    fn writes_into_directory() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("nested");
        write_outputs(&out, &[curve("mmd", 0, 2)], &[], &[]).unwrap();
        let back = read_curves(out.join(CURVES_FILE)).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(
            fs::read_to_string(out.join(SUMMARY_FILE)).unwrap(),
            format!("{SUMMARY_HEADER}\n")
        );
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse_curves("nope\n", "c").is_err());
        let text = format!("{CURVES_HEADER}\niral,0,x,0,-1,0.5\n");
        assert!(matches!(
            parse_curves(&text, "c"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
