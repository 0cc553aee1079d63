use std::collections::{BTreeMap, BTreeSet};

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    /// Mean of `a - b` over paired queries.
    pub mean_diff: f64,
    pub t_statistic: f64,
    /// Two-tailed.
    pub p_value: f64,
    /// `p < alpha` and A is worse than B.
    pub significant_worse: bool,
}

/// Two-tailed paired t-test on per-query values of system A against B.
///
/// Uses the sample standard deviation of the differences and Student's t with
/// `n - 1` degrees of freedom. All-zero differences give `t = 0, p = 1`;
/// identical non-zero differences give an infinite `t` and `p = 0`.
pub fn paired_t_test(
    a: &BTreeMap<String, f64>,
    b: &BTreeMap<String, f64>,
    alpha: f64,
) -> Result<TTestResult> {
    let ka: BTreeSet<String> = a.keys().cloned().collect();
    let kb: BTreeSet<String> = b.keys().cloned().collect();
    if ka != kb {
        return Err(Error::QuerySetMismatch {
            only_a: ka.difference(&kb).cloned().collect(),
            only_b: kb.difference(&ka).cloned().collect(),
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must be in [0, 1], got {alpha}")));
    }
    let diffs: Vec<f64> = a.iter().map(|(q, va)| va - b[q]).collect();
    let n = diffs.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("paired t-test needs at least 2 queries, got {n}")));
    }
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();

    let (t, p) = if diffs.iter().all(|d| *d == 0.0) {
        (0.0, 1.0)
    } else if sd == 0.0 {
        (mean.signum() * f64::INFINITY, 0.0)
    } else {
        let t = mean / (sd / nf.sqrt());
        let dist = StudentsT::new(0.0, 1.0, nf - 1.0).expect("valid degrees of freedom");
        let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
        (t, p)
    };
    Ok(TTestResult {
        mean_diff: mean,
        t_statistic: t,
        p_value: p,
        significant_worse: p < alpha && mean < 0.0,
    })
}
