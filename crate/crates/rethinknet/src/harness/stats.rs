//! Aggregation helpers and the paired t-test used for method comparisons.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Standard error of the mean: sample std over sqrt(n).
pub fn standard_error(values: &[f64]) -> f64 {
    sample_std(values) / (values.len() as f64).sqrt()
}

/// Pearson correlation of two equal-length samples; 0 when either sample has
/// no variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx.sqrt() * vy.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The first sample is significantly larger at the 95% level.
    Win,
    Tie,
    /// The first sample is significantly smaller at the 95% level.
    Loss,
}

/// Paired two-sided t-test outcome at the 95% confidence level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub mean_difference: f64,
    pub verdict: Verdict,
}

/// Two-sided paired t-test on per-run differences `a[i] - b[i]`.
///
/// The verdict is `Tie` whenever p >= 0.05, otherwise the sign of the mean
/// difference decides. Degenerate cases: identical samples tie with p = 1;
/// zero-variance differences with a nonzero mean are treated as p = 0.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::dimension("paired_ttest", a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::Size("paired t-test needs at least 2 pairs".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len() as f64;
    let mean_difference = mean(&diffs);
    let sd = sample_std(&diffs);

    let (statistic, p_value) = if sd == 0.0 {
        if mean_difference == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY * mean_difference.signum(), 0.0)
        }
    } else {
        let t = mean_difference / (sd / n.sqrt());
        let dist = StudentsT::new(0.0, 1.0, n - 1.0)
            .map_err(|e| Error::Config(format!("t distribution: {e}")))?;
        let p = 2.0 * (1.0 - dist.cdf(t.abs()));
        (t, p)
    };

    let verdict = if p_value >= 0.05 {
        Verdict::Tie
    } else if mean_difference > 0.0 {
        Verdict::Win
    } else {
        Verdict::Loss
    };
    Ok(TTestResult {
        statistic,
        p_value,
        mean_difference,
        verdict,
    })
}

/// Win/tie/loss counts over a set of test results.
pub fn tally_verdicts(results: &[TTestResult]) -> (usize, usize, usize) {
    let mut tally = (0, 0, 0);
    for r in results {
        match r.verdict {
            Verdict::Win => tally.0 += 1,
            Verdict::Tie => tally.1 += 1,
            Verdict::Loss => tally.2 += 1,
        }
    }
    tally
}
